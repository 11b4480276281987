//! Proximal ADMM for the hinge-loss problem
//! `min_u (1/m) sum_i (1 - y_i (A u)_i)_+`.
//!
//! The constrained form introduces v = A u and a multiplier w. One iteration
//! is
//!
//! ```text
//! u <- (beta A^T A + alpha I)^-1 (alpha u + beta A^T v - A^T w)
//! v <- Hinge_{m beta}(y, A u + w / beta)
//! w <- w + beta (A u - v)
//! ```
//!
//! and the solver stops when the weighted step
//! `||p_{k+1} - p_k||_H^2 = alpha ||du||^2 + beta ||dv||^2 + (1/beta) ||dw||^2`
//! falls below `tol`, or after `max_iters` iterations, whichever happens
//! first. The step sequence is non-increasing from the first iteration on,
//! which is what makes it usable as a stopping metric.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hinge_prox::hinge_scalar_unchecked;
use crate::poly_features::DesignMatrix;

/// Solver parameters.
///
/// `alpha` weighs the proximal term on u, `beta` the augmented Lagrangian.
/// Any positive values converge; both default to 1. `tol` bounds the squared
/// H-norm step and `max_iters` caps the iteration count; both conditions are
/// always active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmParams {
    pub alpha: f64,
    pub beta: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Divide the squared step by the iterate length (2m + n) before the
    /// tolerance comparison. Off by default; the default `tol` is an
    /// absolute threshold.
    pub normalized_tol: bool,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0, tol: 5e-4, max_iters: 5, normalized_tol: false }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha and beta must be positive, got alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// The stacked iterate p = (u, v, w).
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub w: DVector<f64>,
    pub k: usize,
}

impl AdmmState {
    /// The default initialization (0, y, 0).
    pub fn cold_start(y: &[f64], n: usize) -> Self {
        Self {
            u: DVector::zeros(n),
            v: DVector::from_column_slice(y),
            w: DVector::zeros(y.len()),
            k: 0,
        }
    }
}

/// Which stopping condition ended a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    Tolerance,
    MaxIters,
}

/// One iteration's diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iter: usize,
    /// Hinge objective `(1/m) sum (1 - y_i (A u)_i)_+` at the fresh u.
    pub objective: f64,
    /// Squared H-norm of the step from the previous iterate.
    pub h_step_sq: f64,
    /// `||A u - v||_2` at the fresh iterate.
    pub primal_residual: f64,
}

/// Per-iteration history of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map(|r| r.objective).unwrap_or(f64::NAN)
    }

    pub fn final_primal_residual(&self) -> f64 {
        self.records.last().map(|r| r.primal_residual).unwrap_or(f64::NAN)
    }

    /// Writes `iter,objective,h_step_sq,primal_residual` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iter,objective,h_step_sq,primal_residual")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e}",
                r.iter, r.objective, r.h_step_sq, r.primal_residual
            )?;
        }
        Ok(())
    }
}

/// `(1/m) sum_i (1 - y_i t_i)_+` for margins t = A u.
pub fn hinge_objective(y: &[f64], au: &DVector<f64>) -> f64 {
    let m = y.len();
    let mut acc = 0.0;
    for i in 0..m {
        acc += (1.0 - y[i] * au[i]).max(0.0);
    }
    acc / m as f64
}

/// The u-update: solves `(beta A^T A + alpha I) u = alpha u_k + A^T (beta v_k - w_k)`
/// through the design matrix's cached factorization.
pub fn update_u(state: &AdmmState, dm: &DesignMatrix, params: &AdmmParams) -> DVector<f64> {
    let t = &state.v * params.beta - &state.w;
    let mut rhs = dm.mul_at(&t);
    rhs.axpy(params.alpha, &state.u, 1.0);
    dm.solve_normal(&rhs)
}

/// The v-update: componentwise hinge prox with weight `m * beta` at
/// `A u + w / beta`.
pub fn update_v(
    y: &[f64],
    au: &DVector<f64>,
    w: &DVector<f64>,
    params: &AdmmParams,
) -> DVector<f64> {
    let m = y.len();
    let gamma = m as f64 * params.beta;
    let inv_beta = 1.0 / params.beta;
    DVector::from_fn(m, |i, _| hinge_scalar_unchecked(y[i], au[i] + inv_beta * w[i], gamma))
}

/// The w-update: `w + beta (A u - v)`.
pub fn update_w(
    w: &DVector<f64>,
    au: &DVector<f64>,
    v: &DVector<f64>,
    params: &AdmmParams,
) -> DVector<f64> {
    let mut out = w.clone();
    out.zip_zip_apply(au, v, |wi, aui, vi| *wi += params.beta * (aui - vi));
    out
}

/// Squared H-norm of the difference of two iterates:
/// `alpha ||du||^2 + beta ||dv||^2 + (1/beta) ||dw||^2`.
pub fn h_step_norm_sq(prev: &AdmmState, next: &AdmmState, params: &AdmmParams) -> f64 {
    let du = (&next.u - &prev.u).norm_squared();
    let dv = (&next.v - &prev.v).norm_squared();
    let dw = (&next.w - &prev.w).norm_squared();
    params.alpha * du + params.beta * dv + dw / params.beta
}

/// Runs the ADMM iteration until the H-norm step drops below `tol` or
/// `max_iters` is reached. Returns the final coefficients and the full
/// iteration trace.
pub fn solve(
    dm: &DesignMatrix,
    y: &[f64],
    params: &AdmmParams,
    init: Option<AdmmState>,
) -> Result<(DVector<f64>, IterationTrace)> {
    params.validate()?;
    if (params.alpha - dm.alpha()).abs() > 0.0 || (params.beta - dm.beta()).abs() > 0.0 {
        return Err(Error::InvalidParameter(format!(
            "design matrix was factorized for (alpha, beta) = ({}, {}), solver got ({}, {})",
            dm.alpha(),
            dm.beta(),
            params.alpha,
            params.beta
        )));
    }
    let m = dm.m();
    let n = dm.n();
    if y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: y.len() });
    }
    let state = init.unwrap_or_else(|| AdmmState::cold_start(y, n));
    if state.u.len() != n || state.v.len() != m || state.w.len() != m {
        return Err(Error::DimensionMismatch { expected: n + 2 * m, actual: state.u.len() + state.v.len() + state.w.len() });
    }

    let mut u = state.u;
    let mut v = state.v;
    let mut w = state.w;

    let gamma = m as f64 * params.beta;
    let inv_beta = 1.0 / params.beta;
    let inv_m = 1.0 / m as f64;
    let scale = if params.normalized_tol { 1.0 / (n + 2 * m) as f64 } else { 1.0 };

    let mut rhs = DVector::<f64>::zeros(n);
    let mut au = DVector::<f64>::zeros(m);
    let mut t = DVector::<f64>::zeros(m);
    let mut u_new = DVector::<f64>::zeros(n);
    let mut v_new = DVector::<f64>::zeros(m);
    let mut w_new = DVector::<f64>::zeros(m);

    let mut records = Vec::with_capacity(params.max_iters.min(1 << 16));
    let mut stop = StopReason::MaxIters;

    for k in 0..params.max_iters {
        // u-update
        t.copy_from(&v);
        t *= params.beta;
        t -= &w;
        rhs.gemv_tr(1.0, dm.a(), &t, 0.0);
        rhs.axpy(params.alpha, &u, 1.0);
        u_new.copy_from(&rhs);
        dm.solve_normal_in_place(&mut u_new);

        au.gemv(1.0, dm.a(), &u_new, 0.0);

        // v-update and w-update
        let mut objective = 0.0;
        let mut primal_sq = 0.0;
        let mut dv_sq = 0.0;
        let mut dw_sq = 0.0;
        for i in 0..m {
            let vi = hinge_scalar_unchecked(y[i], au[i] + inv_beta * w[i], gamma);
            let res = au[i] - vi;
            let wi = w[i] + params.beta * res;
            objective += (1.0 - y[i] * au[i]).max(0.0);
            primal_sq += res * res;
            let dv = vi - v[i];
            let dw = wi - w[i];
            dv_sq += dv * dv;
            dw_sq += dw * dw;
            v_new[i] = vi;
            w_new[i] = wi;
        }
        objective *= inv_m;
        let du_sq = (&u_new - &u).norm_squared();
        let h_step_sq = params.alpha * du_sq + params.beta * dv_sq + inv_beta * dw_sq;

        if !h_step_sq.is_finite() || !objective.is_finite() {
            return Err(Error::NonFiniteIterate {
                iter: k + 1,
                detail: format!(
                    "|u|_inf = {:e}, |v|_inf = {:e}, |w|_inf = {:e}",
                    u_new.amax(),
                    v_new.amax(),
                    w_new.amax()
                ),
            });
        }

        std::mem::swap(&mut u, &mut u_new);
        std::mem::swap(&mut v, &mut v_new);
        std::mem::swap(&mut w, &mut w_new);

        records.push(IterationRecord {
            iter: k + 1,
            objective,
            h_step_sq,
            primal_residual: primal_sq.sqrt(),
        });

        if h_step_sq * scale < params.tol {
            stop = StopReason::Tolerance;
            break;
        }
    }

    Ok((u, IterationTrace { records, stop }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_features::DesignMatrix;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(alpha: f64, beta: f64, tol: f64, max_iters: usize) -> AdmmParams {
        AdmmParams { alpha, beta, tol, max_iters, normalized_tol: false }
    }

    fn random_instance(m: usize, n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-2.0..2.0));
        let y = (0..m).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        (a, y)
    }

    #[test]
    fn update_u_with_identity_halves() {
        let a = DMatrix::<f64>::identity(4, 4);
        let dm = DesignMatrix::from_matrix(a, 1.0, 1.0).unwrap();
        let p = params(1.0, 1.0, 1e-8, 10);
        let state = AdmmState {
            u: DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]),
            v: DVector::from_vec(vec![0.5, 0.5, 0.5, 0.5]),
            w: DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]),
            k: 0,
        };
        let u1 = update_u(&state, &dm, &p);
        for i in 0..4 {
            assert_relative_eq!(u1[i], (state.u[i] + state.v[i] - state.w[i]) / 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn update_u_zero_state_stays_zero() {
        let (a, _) = random_instance(6, 3, 1);
        let dm = DesignMatrix::from_matrix(a, 1.0, 1.0).unwrap();
        let p = params(1.0, 1.0, 1e-8, 10);
        let state = AdmmState::cold_start(&vec![0.0; 6], 3);
        let state = AdmmState { v: DVector::zeros(6), ..state };
        let u1 = update_u(&state, &dm, &p);
        assert_eq!(u1, DVector::zeros(3));
    }

    #[test]
    fn update_u_solves_normal_equations() {
        let (a, _) = random_instance(30, 8, 2);
        let dm = DesignMatrix::from_matrix(a.clone(), 0.8, 1.7).unwrap();
        let p = params(0.8, 1.7, 1e-8, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let state = AdmmState {
            u: DVector::from_fn(8, |_, _| rng.gen_range(-1.0..1.0)),
            v: DVector::from_fn(30, |_, _| rng.gen_range(-1.0..1.0)),
            w: DVector::from_fn(30, |_, _| rng.gen_range(-1.0..1.0)),
            k: 0,
        };
        let u1 = update_u(&state, &dm, &p);
        let rhs = a.tr_mul(&(&state.v * 1.7 - &state.w)) + &state.u * 0.8;
        let residual = dm.apply_normal(&u1) - &rhs;
        assert!(residual.norm() <= 1e-10 * rhs.norm());
    }

    #[test]
    fn update_v_keeps_points_outside_margin() {
        let y = vec![1.0, -1.0, 1.0];
        let au = DVector::from_vec(vec![1.5, -2.0, 1.0]); // all y_i (au)_i >= 1
        let w = DVector::zeros(3);
        let v = update_v(&y, &au, &w, &params(1.0, 1.0, 1e-8, 1));
        assert_eq!(v, au);
    }

    #[test]
    fn update_v_single_sample_middle_case() {
        // m = 1, beta = 1 so gamma = 1; a = 1, b = -1 gives b + a/gamma = 0.
        let v = update_v(&[1.0], &DVector::from_vec(vec![-1.0]), &DVector::zeros(1), &params(1.0, 1.0, 1e-8, 1));
        assert_eq!(v[0], 0.0);
    }

    #[test]
    fn update_v_matches_scalar_prox() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = 50;
        let y: Vec<f64> = (0..m).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let au = DVector::from_fn(m, |_, _| rng.gen_range(-3.0..3.0));
        let w = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
        let p = params(1.0, 2.0, 1e-8, 1);
        let v = update_v(&y, &au, &w, &p);
        for i in 0..m {
            let b = au[i] + w[i] / 2.0;
            let expected =
                crate::hinge_prox::hinge_scalar(y[i], b, m as f64 * 2.0).unwrap();
            assert_eq!(v[i], expected);
        }
    }

    #[test]
    fn update_w_zero_residual_is_identity() {
        let au = DVector::from_vec(vec![1.0, 2.0]);
        let w = DVector::from_vec(vec![0.3, -0.4]);
        let w1 = update_w(&w, &au, &au.clone(), &params(1.0, 1.0, 1e-8, 1));
        assert_eq!(w1, w);
    }

    #[test]
    fn update_w_accumulates_residual() {
        let au = DVector::from_vec(vec![1.0, -1.0]);
        let v = DVector::from_vec(vec![0.5, 0.5]);
        let w1 = update_w(&DVector::zeros(2), &au, &v, &params(1.0, 1.0, 1e-8, 1));
        assert_eq!(w1, DVector::from_vec(vec![0.5, -1.5]));
    }

    #[test]
    fn h_step_of_identical_states_is_zero() {
        let s = AdmmState::cold_start(&[1.0, -1.0], 3);
        assert_eq!(h_step_norm_sq(&s, &s.clone(), &params(2.0, 0.5, 1e-8, 1)), 0.0);
    }

    #[test]
    fn h_step_unit_vectors() {
        let prev = AdmmState {
            u: DVector::zeros(3),
            v: DVector::zeros(2),
            w: DVector::zeros(2),
            k: 0,
        };
        let next = AdmmState {
            u: DVector::from_vec(vec![1.0, 0.0, 0.0]),
            v: DVector::from_vec(vec![1.0, 0.0]),
            w: DVector::from_vec(vec![1.0, 0.0]),
            k: 1,
        };
        assert_eq!(h_step_norm_sq(&prev, &next, &params(1.0, 1.0, 1e-8, 1)), 3.0);
        assert_eq!(h_step_norm_sq(&prev, &next, &params(4.0, 0.25, 1e-8, 1)), 8.25);
    }

    #[test]
    fn solve_records_stop_reason_and_monotone_steps() {
        let (a, y) = random_instance(60, 6, 10);
        let dm = DesignMatrix::from_matrix(a, 1.0, 1.0).unwrap();
        let p = params(1.0, 1.0, 1e-9, 400);
        let (_, trace) = solve(&dm, &y, &p, None).unwrap();
        assert!(trace.iterations() >= 2);
        for pair in trace.records.windows(2) {
            assert!(
                pair[1].h_step_sq <= pair[0].h_step_sq + 1e-12,
                "step increased: {} -> {}",
                pair[0].h_step_sq,
                pair[1].h_step_sq
            );
        }
        match trace.stop {
            StopReason::Tolerance => {
                assert!(trace.records.last().unwrap().h_step_sq < 1e-9)
            }
            StopReason::MaxIters => assert_eq!(trace.iterations(), 400),
        }
    }

    #[test]
    fn solve_matches_manual_updates() {
        let (a, y) = random_instance(25, 4, 20);
        let dm = DesignMatrix::from_matrix(a, 1.0, 1.0).unwrap();
        let p = params(1.0, 1.0, 1e-30, 3);
        let (u_solver, trace) = solve(&dm, &y, &p, None).unwrap();
        assert_eq!(trace.iterations(), 3);
        assert_eq!(trace.stop, StopReason::MaxIters);

        let mut state = AdmmState::cold_start(&y, 4);
        for k in 0..3 {
            let u1 = update_u(&state, &dm, &p);
            let au = dm.mul_a(&u1);
            let v1 = update_v(&y, &au, &state.w, &p);
            let w1 = update_w(&state.w, &au, &v1, &p);
            state = AdmmState { u: u1, v: v1, w: w1, k: k + 1 };
        }
        assert_eq!(state.u, u_solver);
    }

    #[test]
    fn solve_honors_explicit_init() {
        let (a, y) = random_instance(15, 3, 30);
        let dm = DesignMatrix::from_matrix(a, 1.0, 1.0).unwrap();
        let p = params(1.0, 1.0, 1e-30, 1);
        let init = AdmmState {
            u: DVector::from_element(3, 0.5),
            v: DVector::zeros(15),
            w: DVector::from_element(15, 0.1),
            k: 0,
        };
        let (u_a, _) = solve(&dm, &y, &p, Some(init.clone())).unwrap();
        let u_b = update_u(&init, &dm, &p);
        assert_eq!(u_a, u_b);
    }

    #[test]
    fn solve_rejects_mismatched_factorization() {
        let (a, y) = random_instance(10, 2, 40);
        let dm = DesignMatrix::from_matrix(a, 1.0, 1.0).unwrap();
        let p = params(2.0, 1.0, 1e-4, 5);
        assert!(solve(&dm, &y, &p, None).is_err());
    }

    #[test]
    fn trace_csv_round_trips_by_line_count() {
        let (a, y) = random_instance(12, 3, 50);
        let dm = DesignMatrix::from_matrix(a, 1.0, 1.0).unwrap();
        let (_, trace) = solve(&dm, &y, &params(1.0, 1.0, 1e-30, 4), None).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "iter,objective,h_step_sq,primal_residual");
        assert_eq!(lines.count(), 4);
    }
}
