//! Polynomial kernel evaluation, center generation and design-matrix
//! construction.
//!
//! The kernel is `K_s(x, x') = (1 + x . x')^s`. A set of centers
//! `{eta_j}` spans the feature space through the sections
//! `x -> (1 + eta_j . x)^s`; the design matrix collects those sections over
//! the training rows and caches an SPD factorization of
//! `beta * A^T A + alpha * I` used by every solver iteration.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Polynomial degree `s >= 1` of the kernel `(1 + x . x')^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KernelDegree(u32);

impl KernelDegree {
    pub fn new(s: u32) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidParameter("kernel degree must be >= 1".into()));
        }
        Ok(Self(s))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl std::fmt::Display for KernelDegree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dimension of the space of d-variate polynomials of degree at most s,
/// i.e. the binomial coefficient C(s + d, d).
///
/// Computed with the multiplicative formula over 128-bit intermediates;
/// overflow is reported rather than wrapped.
pub fn feature_dim(s: KernelDegree, d: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::InvalidParameter("input dimension must be >= 1".into()));
    }
    let s_u = s.get() as u128;
    let d_u = d as u128;
    // C(s+d, k) with k the smaller of s and d keeps the loop short.
    let k = s_u.min(d_u);
    let n_total = s_u
        .checked_add(d_u)
        .ok_or(Error::FeatureDimOverflow { s: s.get(), d })?;
    let mut result: u128 = 1;
    for i in 1..=k {
        result = result
            .checked_mul(n_total - k + i)
            .ok_or(Error::FeatureDimOverflow { s: s.get(), d })?
            / i;
    }
    usize::try_from(result).map_err(|_| Error::FeatureDimOverflow { s: s.get(), d })
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        acc += x[i] * y[i];
    }
    acc
}

#[inline]
pub(crate) fn kernel_eval_unchecked(x: &[f64], x2: &[f64], s: KernelDegree) -> f64 {
    (1.0 + dot(x, x2)).powi(s.get() as i32)
}

/// Evaluates the polynomial kernel `(1 + x . x2)^s`.
///
/// The dot product is accumulated left to right, so the value is
/// bit-for-bit symmetric in its arguments.
pub fn kernel_eval(x: &[f64], x2: &[f64], s: KernelDegree) -> Result<f64> {
    if x.len() != x2.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: x2.len() });
    }
    Ok(kernel_eval_unchecked(x, x2, s))
}

/// How kernel centers are chosen from the training inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterScheme {
    /// I.i.d. uniform draws from the bounding box of the inputs.
    UniformRandom,
    /// The first n training inputs, in row order.
    FirstN,
    /// n training inputs drawn without replacement.
    RandomSubsample,
}

impl std::fmt::Display for CenterScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CenterScheme::UniformRandom => write!(f, "uniform-random"),
            CenterScheme::FirstN => write!(f, "first-n"),
            CenterScheme::RandomSubsample => write!(f, "random-subsample"),
        }
    }
}

/// Relative singular-value threshold below which a center Gram matrix is
/// reported as numerically rank deficient.
pub const GRAM_RANK_TOL: f64 = 1e-10;

/// Largest center count for which the Gram rank diagnostic is computed.
pub const GRAM_CHECK_MAX_N: usize = 2000;

const REDRAW_ATTEMPTS: usize = 3;

/// A set of kernel centers together with the scheme that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    centers: Vec<f64>, // row-major, n * d
    d: usize,
    scheme: CenterScheme,
    gram_ratio: Option<f64>,
}

impl CenterSet {
    /// Builds a center set from explicit points (used by model loading).
    pub fn from_points(centers: Vec<f64>, d: usize, scheme: CenterScheme) -> Result<Self> {
        if d == 0 || centers.is_empty() || centers.len() % d != 0 {
            return Err(Error::InvalidParameter(format!(
                "center buffer of len {} is not a multiple of d = {d}",
                centers.len()
            )));
        }
        Ok(Self { centers, d, scheme, gram_ratio: None })
    }

    pub fn len(&self) -> usize {
        self.centers.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn scheme(&self) -> CenterScheme {
        self.scheme
    }

    pub fn center(&self, j: usize) -> &[f64] {
        &self.centers[j * self.d..(j + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.centers.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.centers
    }

    /// Smallest-to-largest singular value ratio of the center Gram matrix,
    /// if it was computed at generation time.
    pub fn gram_ratio(&self) -> Option<f64> {
        self.gram_ratio
    }

    /// Gram matrix `(K_s(eta_i, eta_j))_{i,j}`.
    pub fn gram(&self, s: KernelDegree) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| kernel_eval_unchecked(self.center(i), self.center(j), s))
    }
}

/// Ratio of the smallest to largest singular value of the Gram matrix.
pub fn gram_singular_ratio(centers: &CenterSet, s: KernelDegree) -> f64 {
    let sv = centers.gram(s).singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

fn collect_distinct<'a>(
    candidates: impl Iterator<Item = &'a [f64]>,
    n: usize,
    d: usize,
) -> (Vec<f64>, usize) {
    let mut out: Vec<f64> = Vec::with_capacity(n * d);
    let mut kept = 0usize;
    let mut dropped = 0usize;
    'outer: for point in candidates {
        for q in 0..kept {
            if &out[q * d..(q + 1) * d] == point {
                dropped += 1;
                continue 'outer;
            }
        }
        out.extend_from_slice(point);
        kept += 1;
        if kept == n {
            break;
        }
    }
    (out, dropped)
}

fn draw_centers(data: &Dataset, n: usize, scheme: CenterScheme, seed: u64) -> CenterSet {
    let d = data.dim();
    let m = data.len();
    let (points, dropped) = match scheme {
        CenterScheme::FirstN => collect_distinct(data.rows(), n, d),
        CenterScheme::RandomSubsample => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let order = rand::seq::index::sample(&mut rng, m, m).into_vec();
            collect_distinct(order.iter().map(|&i| data.row(i)), n, d)
        }
        CenterScheme::UniformRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (lo, hi) = data.bounding_box();
            let mut draws: Vec<f64> = Vec::with_capacity(8 * n * d);
            for _ in 0..8 * n {
                for j in 0..d {
                    draws.push(if hi[j] > lo[j] { rng.gen_range(lo[j]..hi[j]) } else { lo[j] });
                }
            }
            collect_distinct(draws.chunks_exact(d), n, d)
        }
    };
    if dropped > 0 {
        log::warn!("dropped {dropped} duplicate candidate centers ({scheme})");
    }
    CenterSet { centers: points, d, scheme, gram_ratio: None }
}

/// Chooses `min(C(s+d, d), m)` centers from the data by the given scheme.
///
/// Duplicate points are skipped so the returned centers are pairwise
/// distinct. When the center count allows it, the Gram matrix is checked for
/// numerical rank; random schemes are redrawn a few times if it fails, and a
/// persistent failure is logged but tolerated because the proximal term
/// keeps the downstream solve well posed.
pub fn generate_centers(
    data: &Dataset,
    s: KernelDegree,
    scheme: CenterScheme,
    seed: u64,
) -> Result<CenterSet> {
    let n = feature_dim(s, data.dim())?.min(data.len());
    generate_centers_with_count(data, s, n, scheme, seed)
}

/// Same as [`generate_centers`] but with an explicit center count
/// (capped at m), for callers that tune n directly.
pub fn generate_centers_with_count(
    data: &Dataset,
    s: KernelDegree,
    n: usize,
    scheme: CenterScheme,
    seed: u64,
) -> Result<CenterSet> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if n == 0 {
        return Err(Error::InvalidParameter("center count must be >= 1".into()));
    }
    let n = n.min(data.len());

    let mut set = draw_centers(data, n, scheme, seed);
    if set.len() <= GRAM_CHECK_MAX_N {
        let mut ratio = gram_singular_ratio(&set, s);
        if ratio < GRAM_RANK_TOL && scheme != CenterScheme::FirstN {
            for attempt in 1..=REDRAW_ATTEMPTS as u64 {
                let reseed = seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let candidate = draw_centers(data, n, scheme, reseed);
                let candidate_ratio = gram_singular_ratio(&candidate, s);
                if candidate_ratio > ratio {
                    set = candidate;
                    ratio = candidate_ratio;
                }
                if ratio >= GRAM_RANK_TOL {
                    break;
                }
            }
        }
        if ratio < GRAM_RANK_TOL {
            log::warn!(
                "center Gram matrix is numerically rank deficient \
                 (sigma_min/sigma_max = {ratio:.3e} at s = {s}, n = {}); proceeding",
                set.len()
            );
        }
        set.gram_ratio = Some(ratio);
    }
    Ok(set)
}

enum NormalFactor {
    /// Cholesky factor L with L L^T = beta A^T A + alpha I.
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    /// Upper-triangular R from a QR of [sqrt(beta) A; sqrt(alpha) I], so
    /// R^T R = beta A^T A + alpha I. Slower to build but backward stable
    /// when the normal matrix is nearly indefinite in floating point.
    QrStacked(DMatrix<f64>),
}

/// Row-block size for the normal-matrix accumulation; keeps peak memory at
/// O(n^2 + block * n) beyond the design matrix itself.
const ATA_BLOCK_ROWS: usize = 4096;

/// Threshold on the factor-reconstruction probe that triggers the stable
/// QR fallback.
const FACTOR_PROBE_TOL: f64 = 1e-8;

/// Largest m for which the QR fallback is attempted; above it the stacked
/// copy would dominate memory.
const QR_FALLBACK_MAX_M: usize = 200_000;

/// A dense design matrix `A_ij = (1 + x_i . eta_j)^s` with a cached SPD
/// factorization of `beta A^T A + alpha I`.
pub struct DesignMatrix {
    a: DMatrix<f64>,
    factor: NormalFactor,
    alpha: f64,
    beta: f64,
}

impl DesignMatrix {
    /// Populates A and factorizes the normal matrix once.
    ///
    /// A's columns are filled in parallel (deterministically: each entry is
    /// computed exactly once, in a fixed order per column), and `A^T A` is
    /// accumulated over row blocks in a fixed order.
    pub fn build(
        data: &Dataset,
        centers: &CenterSet,
        s: KernelDegree,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha and beta must be positive, got alpha = {alpha}, beta = {beta}"
            )));
        }
        if data.dim() != centers.dim() {
            return Err(Error::DimensionMismatch {
                expected: centers.dim(),
                actual: data.dim(),
            });
        }
        let m = data.len();
        let n = centers.len();

        // Column-major fill matches DMatrix storage, one contiguous chunk
        // per center.
        let mut buf = vec![0.0f64; m * n];
        buf.par_chunks_mut(m).enumerate().for_each(|(j, col)| {
            let eta = centers.center(j);
            for (i, row) in data.rows().enumerate() {
                col[i] = kernel_eval_unchecked(row, eta, s);
            }
        });
        let a = DMatrix::from_vec(m, n, buf);

        let normal = Self::normal_matrix(&a, alpha, beta);
        let factor = Self::factorize(&a, normal, alpha, beta)?;
        Ok(Self { a, factor, alpha, beta })
    }

    /// Wraps an explicit matrix (synthetic instances, tests, oracles) with
    /// the same cached factorization as [`DesignMatrix::build`].
    pub fn from_matrix(a: DMatrix<f64>, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha and beta must be positive, got alpha = {alpha}, beta = {beta}"
            )));
        }
        if a.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let normal = Self::normal_matrix(&a, alpha, beta);
        let factor = Self::factorize(&a, normal, alpha, beta)?;
        Ok(Self { a, factor, alpha, beta })
    }

    fn normal_matrix(a: &DMatrix<f64>, alpha: f64, beta: f64) -> DMatrix<f64> {
        let (m, n) = a.shape();
        let mut ata = DMatrix::<f64>::zeros(n, n);
        let mut start = 0;
        while start < m {
            let len = ATA_BLOCK_ROWS.min(m - start);
            let block = a.rows(start, len);
            ata.gemm_tr(1.0, &block, &block, 1.0);
            start += len;
        }
        let mut normal = ata * beta;
        for i in 0..n {
            normal[(i, i)] += alpha;
        }
        normal
    }

    fn factorize(
        a: &DMatrix<f64>,
        normal: DMatrix<f64>,
        alpha: f64,
        beta: f64,
    ) -> Result<NormalFactor> {
        let (m, n) = a.shape();
        if let Some(chol) = nalgebra::Cholesky::new(normal.clone()) {
            if factor_probe_ok(&chol, &normal) {
                return Ok(NormalFactor::Cholesky(chol));
            }
        }
        if m > QR_FALLBACK_MAX_M {
            return Err(Error::FactorizationFailure);
        }
        log::warn!(
            "Cholesky of the normal matrix broke down (alpha = {alpha:.3e}); \
             falling back to a QR of the stacked system"
        );
        let mut stacked = DMatrix::<f64>::zeros(m + n, n);
        stacked.view_mut((0, 0), (m, n)).copy_from(a);
        stacked.view_mut((0, 0), (m, n)).scale_mut(beta.sqrt());
        let sqrt_alpha = alpha.sqrt();
        for i in 0..n {
            stacked[(m + i, i)] = sqrt_alpha;
        }
        let r = nalgebra::QR::new(stacked).unpack_r();
        for i in 0..n {
            if r[(i, i)] == 0.0 {
                return Err(Error::FactorizationFailure);
            }
        }
        Ok(NormalFactor::QrStacked(r))
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// `A u`.
    pub fn mul_a(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.a * u
    }

    /// `A^T x`.
    pub fn mul_at(&self, x: &DVector<f64>) -> DVector<f64> {
        self.a.tr_mul(x)
    }

    /// `(beta A^T A + alpha I) z` computed from A directly (not the factor).
    pub fn apply_normal(&self, z: &DVector<f64>) -> DVector<f64> {
        let az = &self.a * z;
        let mut out = self.a.tr_mul(&az) * self.beta;
        out.axpy(self.alpha, z, 1.0);
        out
    }

    /// `(beta A^T A + alpha I) z` computed through the cached factorization.
    pub fn apply_factor(&self, z: &DVector<f64>) -> DVector<f64> {
        match &self.factor {
            NormalFactor::Cholesky(chol) => {
                let l = chol.l_dirty();
                let lt_z = lower_tr_mul_tr(l, z);
                lower_mul(l, &lt_z)
            }
            NormalFactor::QrStacked(r) => {
                let rz = upper_mul(r, z);
                upper_mul_tr(r, &rz)
            }
        }
    }

    /// Solves `(beta A^T A + alpha I) u = rhs` via the cached factorization.
    pub fn solve_normal(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut out = rhs.clone();
        self.solve_normal_in_place(&mut out);
        out
    }

    /// In-place variant of [`DesignMatrix::solve_normal`].
    pub fn solve_normal_in_place(&self, rhs: &mut DVector<f64>) {
        match &self.factor {
            NormalFactor::Cholesky(chol) => chol.solve_mut(rhs),
            NormalFactor::QrStacked(r) => {
                solve_upper_transposed_in_place(r, rhs);
                solve_upper_in_place(r, rhs);
            }
        }
    }

    /// Whether the stable QR fallback ended up being used.
    pub fn used_qr_fallback(&self) -> bool {
        matches!(self.factor, NormalFactor::QrStacked(_))
    }
}

fn factor_probe_ok(chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>, normal: &DMatrix<f64>) -> bool {
    let n = normal.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_fac7);
    for _ in 0..3 {
        let z = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let direct = normal * &z;
        let l = chol.l_dirty();
        let via_factor = lower_mul(l, &lower_tr_mul_tr(l, &z));
        let err = (&via_factor - &direct).norm();
        if err > FACTOR_PROBE_TOL * direct.norm().max(f64::MIN_POSITIVE) {
            return false;
        }
    }
    true
}

// Small triangular kernels. `l_dirty` leaves garbage above the diagonal and
// nalgebra's triangular helpers are not defined for every storage mix, so
// these loops only touch the valid triangle.

fn lower_mul(l: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    DVector::from_fn(n, |i, _| {
        let mut acc = 0.0;
        for j in 0..=i {
            acc += l[(i, j)] * x[j];
        }
        acc
    })
}

fn lower_tr_mul_tr(l: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    // L^T x
    let n = l.nrows();
    DVector::from_fn(n, |i, _| {
        let mut acc = 0.0;
        for j in i..n {
            acc += l[(j, i)] * x[j];
        }
        acc
    })
}

fn upper_mul(r: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let n = r.nrows();
    DVector::from_fn(n, |i, _| {
        let mut acc = 0.0;
        for j in i..n {
            acc += r[(i, j)] * x[j];
        }
        acc
    })
}

fn upper_mul_tr(r: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    // R^T x
    let n = r.nrows();
    DVector::from_fn(n, |i, _| {
        let mut acc = 0.0;
        for j in 0..=i {
            acc += r[(j, i)] * x[j];
        }
        acc
    })
}

fn solve_upper_in_place(r: &DMatrix<f64>, x: &mut DVector<f64>) {
    let n = r.nrows();
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
    }
}

fn solve_upper_transposed_in_place(r: &DMatrix<f64>, y: &mut DVector<f64>) {
    // R^T y = b, forward substitution.
    let n = r.nrows();
    for i in 0..n {
        let mut acc = y[i];
        for j in 0..i {
            acc -= r[(j, i)] * y[j];
        }
        y[i] = acc / r[(i, i)];
    }
}
