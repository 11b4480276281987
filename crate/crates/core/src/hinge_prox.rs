//! Proximal operator of the scalar hinge loss.
//!
//! `hinge_gamma(a, b)` minimizes `max(0, 1 - a z) + (gamma / 2) (z - b)^2`
//! over z. The minimizer has a four-case closed form; cases are evaluated in
//! order, so exact boundary points take the first matching branch (all
//! branches agree there).

use crate::error::{Error, Result};

/// Closed-form minimizer of `max(0, 1 - a z) + (gamma / 2) (z - b)^2`.
pub fn hinge_scalar(a: f64, b: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    Ok(hinge_scalar_unchecked(a, b, gamma))
}

#[inline]
pub(crate) fn hinge_scalar_unchecked(a: f64, b: f64, gamma: f64) -> f64 {
    if a == 0.0 {
        return b;
    }
    let ab = a * b;
    if ab <= 1.0 - a * a / gamma {
        b + a / gamma
    } else if ab < 1.0 {
        1.0 / a
    } else {
        b
    }
}

/// Componentwise hinge prox: entry i is `hinge_scalar(y[i], z[i], gamma)`.
pub fn hinge_vector(y: &[f64], z: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if y.len() != z.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), actual: z.len() });
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    Ok(y.iter().zip(z).map(|(&a, &b)| hinge_scalar_unchecked(a, b, gamma)).collect())
}
