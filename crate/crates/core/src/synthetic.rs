//! Synthetic 2-D toy data: uniform samples on [0,1]^2 labeled by a nonlinear
//! decision boundary, with three label-noise topologies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// The decision boundary `h(t) = ((1 - 2t)_+^5 (32t^2 + 10t + 1) + 1) / 2`
/// on [0, 1]. Continuous, non-increasing, and constant 1/2 for t >= 1/2.
pub fn bayes_h(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("bayes_h expects t in [0,1], got {t}")));
    }
    let z = (1.0 - 2.0 * t).max(0.0);
    Ok((z.powi(5) * (32.0 * t * t + 10.0 * t + 1.0) + 1.0) / 2.0)
}

/// The noise-free label at a point: +1 on or above the boundary.
pub fn bayes_label(x: &[f64]) -> f64 {
    let h = bayes_h(x[0].clamp(0.0, 1.0)).expect("clamped");
    if x[1] >= h {
        1.0
    } else {
        -1.0
    }
}

/// Where label flips are applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// Flip only samples within vertical distance `width` of the boundary.
    BandNearBayes { width: f64 },
    /// Flip only samples farther than `width` from the boundary.
    FarFromBayes { width: f64 },
    /// Flip samples anywhere.
    GlobalUniform,
}

/// Label-noise specification: a flip region and the flip ratio within it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Fraction of the eligible region to flip, in [0, 1].
    pub ratio: f64,
}

impl NoiseSpec {
    pub fn clean() -> Self {
        Self { kind: NoiseKind::GlobalUniform, ratio: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ratio) {
            return Err(Error::InvalidParameter(format!(
                "noise ratio must be in [0,1], got {}",
                self.ratio
            )));
        }
        match self.kind {
            NoiseKind::BandNearBayes { width } | NoiseKind::FarFromBayes { width } => {
                if !(width > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "band width must be positive, got {width}"
                    )));
                }
            }
            NoiseKind::GlobalUniform => {}
        }
        Ok(())
    }
}

/// How many labels were flipped and where.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipSummary {
    /// Number of flipped labels: `floor(region_size * ratio)`.
    pub flipped: usize,
    /// Number of samples in the eligible flip region.
    pub region_size: usize,
}

impl FlipSummary {
    /// Flipped count over the full sample size; for band noise this is the
    /// effective global noise level as opposed to the in-region ratio.
    pub fn effective_fraction(&self, m: usize) -> f64 {
        self.flipped as f64 / m as f64
    }
}

/// Draws m points uniformly from [0,1]^2, labels them by the boundary, and
/// flips `floor(|region| * ratio)` labels inside the noise region
/// (chosen uniformly without replacement). Distance to the boundary is
/// vertical: `|x_2 - h(x_1)|`.
pub fn generate_toy(m: usize, noise: &NoiseSpec, seed: u64) -> Result<(Dataset, FlipSummary)> {
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(2 * m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let x1: f64 = rng.gen_range(0.0..1.0);
        let x2: f64 = rng.gen_range(0.0..1.0);
        features.push(x1);
        features.push(x2);
        labels.push(if x2 >= bayes_h(x1)? { 1.0 } else { -1.0 });
    }

    let region: Vec<usize> = match noise.kind {
        NoiseKind::GlobalUniform => (0..m).collect(),
        NoiseKind::BandNearBayes { width } => (0..m)
            .filter(|&i| (features[2 * i + 1] - bayes_h(features[2 * i]).unwrap()).abs() <= width)
            .collect(),
        NoiseKind::FarFromBayes { width } => (0..m)
            .filter(|&i| (features[2 * i + 1] - bayes_h(features[2 * i]).unwrap()).abs() > width)
            .collect(),
    };
    let flip_count = ((region.len() as f64) * noise.ratio).floor() as usize;
    if flip_count > 0 {
        let picks = rand::seq::index::sample(&mut rng, region.len(), flip_count);
        for p in picks.iter() {
            let i = region[p];
            labels[i] = -labels[i];
        }
    }
    let summary = FlipSummary { flipped: flip_count, region_size: region.len() };
    Ok((Dataset::new(features, labels, 2)?, summary))
}

/// Noise-free samples from the same distribution, for test sets.
pub fn generate_test(m: usize, seed: u64) -> Result<Dataset> {
    Ok(generate_toy(m, &NoiseSpec::clean(), seed)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn boundary_values() {
        assert_eq!(bayes_h(0.5).unwrap(), 0.5);
        assert_eq!(bayes_h(0.0).unwrap(), 1.0);
        // (1 - 0.5)^5 * (32/16 + 10/4 + 1) = 0.03125 * 5.5 = 0.171875
        assert_eq!(bayes_h(0.25).unwrap(), 0.5859375);
        assert!(bayes_h(-0.1).is_err());
        assert!(bayes_h(1.1).is_err());
    }

    #[test]
    fn boundary_is_nonincreasing_and_flat_past_half() {
        let mut prev = f64::INFINITY;
        for k in 0..=1000 {
            let t = k as f64 / 1000.0;
            let v = bayes_h(t).unwrap();
            assert!(v <= prev + 1e-15, "h increased at t={t}");
            if t >= 0.5 {
                assert_eq!(v, 0.5);
            }
            prev = v;
        }
    }

    #[test]
    fn zero_ratio_keeps_clean_labels() {
        let (data, summary) = generate_toy(500, &NoiseSpec::clean(), 3).unwrap();
        assert_eq!(summary.flipped, 0);
        for (i, row) in data.rows().enumerate() {
            assert_eq!(data.labels()[i], bayes_label(row));
        }
    }

    #[test]
    fn global_noise_flips_exactly_floor() {
        let spec = NoiseSpec { kind: NoiseKind::GlobalUniform, ratio: 0.10 };
        let (data, summary) = generate_toy(1000, &spec, 7).unwrap();
        assert_eq!(summary.flipped, 100);
        assert_eq!(summary.region_size, 1000);
        let wrong = data
            .rows()
            .zip(data.labels())
            .filter(|(row, &y)| y != bayes_label(row))
            .count();
        assert_eq!(wrong, 100);
    }

    #[test]
    fn band_noise_flips_only_in_band() {
        let spec = NoiseSpec { kind: NoiseKind::BandNearBayes { width: 0.05 }, ratio: 0.5 };
        let (data, summary) = generate_toy(2000, &spec, 11).unwrap();
        assert_eq!(summary.flipped, summary.region_size / 2);
        for (row, &y) in data.rows().zip(data.labels()) {
            if y != bayes_label(row) {
                let dist = (row[1] - bayes_h(row[0]).unwrap()).abs();
                assert!(dist <= 0.05, "flipped sample outside band: dist={dist}");
            }
        }
    }

    #[test]
    fn far_noise_flips_only_outside_band() {
        let spec = NoiseSpec { kind: NoiseKind::FarFromBayes { width: 0.1 }, ratio: 0.3 };
        let (data, summary) = generate_toy(2000, &spec, 13).unwrap();
        assert_eq!(
            summary.flipped,
            ((summary.region_size as f64) * 0.3).floor() as usize
        );
        for (row, &y) in data.rows().zip(data.labels()) {
            if y != bayes_label(row) {
                let dist = (row[1] - bayes_h(row[0]).unwrap()).abs();
                assert!(dist > 0.1, "flipped sample inside protected band: dist={dist}");
            }
        }
    }

    #[test]
    fn generation_is_deterministic_under_seed() {
        let spec = NoiseSpec { kind: NoiseKind::GlobalUniform, ratio: 0.2 };
        let (a, _) = generate_toy(300, &spec, 42).unwrap();
        let (b, _) = generate_toy(300, &spec, 42).unwrap();
        assert_eq!(a, b);
        let (c, _) = generate_toy(300, &spec, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn test_split_is_clean_and_balanced() {
        let data = generate_test(40_000, 5).unwrap();
        for (row, &y) in data.rows().zip(data.labels()) {
            assert_eq!(y, bayes_label(row));
        }
        // P(+1) = 1 - integral of h over [0,1] = 5/12 exactly; allow a
        // 3-sigma binomial band.
        let p = 5.0 / 12.0;
        let mean = 40_000.0 * p;
        let sigma = (40_000.0 * p * (1.0 - p)).sqrt();
        let positives = data.labels().iter().filter(|&&y| y == 1.0).count() as f64;
        assert!(
            (positives - mean).abs() <= 3.0 * sigma,
            "positive count {positives} outside 3 sigma of {mean}"
        );
    }

    #[test]
    fn quadrature_cross_checks_class_balance() {
        // Simpson's rule on 1 - h over [0,1] reproduces the closed-form
        // positive-class probability 5/12.
        let n = 10_000;
        let f = |t: f64| 1.0 - bayes_h(t).unwrap();
        let mut acc = f(0.0) + f(1.0);
        for k in 1..n {
            let t = k as f64 / n as f64;
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(t);
        }
        let integral = acc / (3.0 * n as f64);
        assert_relative_eq!(integral, 5.0 / 12.0, epsilon = 1e-10);
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(generate_toy(0, &NoiseSpec::clean(), 1).is_err());
        assert!(generate_toy(10, &NoiseSpec { kind: NoiseKind::GlobalUniform, ratio: 1.5 }, 1)
            .is_err());
        assert!(generate_toy(
            10,
            &NoiseSpec { kind: NoiseKind::BandNearBayes { width: 0.0 }, ratio: 0.5 },
            1
        )
        .is_err());
    }
}
