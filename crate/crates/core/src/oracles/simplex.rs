//! A small dense two-phase simplex solver for equality-form LPs:
//! `min c^T x  s.t.  A x = b, x >= 0`.
//!
//! Written for validation use on small instances; correctness over speed.
//! Dantzig pricing with a switch to Bland's rule after a run of degenerate
//! pivots guards against cycling.

use crate::error::{Error, Result};

/// Optimal point and value of an equality-form LP.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

const EPS: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_SWITCH: usize = 200;

struct Tableau {
    /// (nc + 1) x (ncols + 1), row-major; last row is the cost row, last
    /// column the right-hand side.
    t: Vec<f64>,
    nc: usize,
    ncols: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.ncols + 1) + j
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.t[self.idx(i, j)]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.get(i, self.ncols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let width = self.ncols + 1;
        let pivot = self.t[pr * width + pc];
        let inv = 1.0 / pivot;
        for j in 0..width {
            self.t[pr * width + j] *= inv;
        }
        for i in 0..=self.nc {
            if i == pr {
                continue;
            }
            let factor = self.t[i * width + pc];
            if factor != 0.0 {
                for j in 0..width {
                    self.t[i * width + j] -= factor * self.t[pr * width + j];
                }
                self.t[i * width + pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs the simplex loop on the current cost row; columns with index
    /// >= `col_limit` never enter (used to fence off artificials).
    fn run(&mut self, col_limit: usize, max_pivots: usize) -> Result<()> {
        let mut bland = false;
        let mut degenerate_run = 0usize;
        for _ in 0..max_pivots {
            let cost_row = self.nc;
            let mut entering: Option<usize> = None;
            if bland {
                for j in 0..col_limit {
                    if self.get(cost_row, j) < -EPS {
                        entering = Some(j);
                        break;
                    }
                }
            } else {
                let mut best = -EPS;
                for j in 0..col_limit {
                    let r = self.get(cost_row, j);
                    if r < best {
                        best = r;
                        entering = Some(j);
                    }
                }
            }
            let Some(pc) = entering else {
                return Ok(());
            };

            let mut pr: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.nc {
                let coeff = self.get(i, pc);
                if coeff > EPS {
                    let ratio = self.rhs(i) / coeff;
                    let better = ratio < best_ratio - EPS
                        || (ratio < best_ratio + EPS
                            && pr.is_some_and(|p| self.basis[i] < self.basis[p]));
                    if better {
                        best_ratio = ratio;
                        pr = Some(i);
                    }
                }
            }
            let Some(pr) = pr else {
                return Err(Error::LpNumerical("unbounded pivot column".into()));
            };

            if best_ratio <= EPS {
                degenerate_run += 1;
                if degenerate_run >= DEGENERATE_SWITCH {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
        }
        Err(Error::LpNumerical("pivot limit exceeded".into()))
    }
}

/// Solves `min c^T x  s.t.  a x = b, x >= 0` with a two-phase dense simplex.
pub fn solve_lp(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let nv = c.len();
    let nc = a.len();
    if b.len() != nc {
        return Err(Error::DimensionMismatch { expected: nc, actual: b.len() });
    }
    for (i, row) in a.iter().enumerate() {
        if row.len() != nv {
            return Err(Error::DimensionMismatch { expected: nv, actual: row.len() });
        }
        if i >= nc {
            break;
        }
    }

    // Row equilibration, then sign-normalize so rhs >= 0.
    let mut rows: Vec<Vec<f64>> = a.to_vec();
    let mut rhs: Vec<f64> = b.to_vec();
    for i in 0..nc {
        let scale = rows[i].iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        if scale > 0.0 {
            let inv = 1.0 / scale;
            for v in rows[i].iter_mut() {
                *v *= inv;
            }
            rhs[i] *= inv;
        }
        if rhs[i] < 0.0 {
            for v in rows[i].iter_mut() {
                *v = -*v;
            }
            rhs[i] = -rhs[i];
        }
    }

    // Phase 1 tableau: original variables then one artificial per row.
    let ncols = nv + nc;
    let width = ncols + 1;
    let mut t = vec![0.0f64; (nc + 1) * width];
    for i in 0..nc {
        for j in 0..nv {
            t[i * width + j] = rows[i][j];
        }
        t[i * width + nv + i] = 1.0;
        t[i * width + ncols] = rhs[i];
    }
    // Phase-1 reduced costs with the artificial basis: r_j = -sum_i a_ij.
    for j in 0..nv {
        let mut s = 0.0;
        for (i, row) in rows.iter().enumerate() {
            let _ = i;
            s += row[j];
        }
        t[nc * width + j] = -s;
    }
    t[nc * width + ncols] = -rhs.iter().sum::<f64>();

    let mut tab = Tableau { t, nc, ncols, basis: (nv..nv + nc).collect() };
    let max_pivots = 50_000 + 200 * (nv + nc);
    tab.run(ncols, max_pivots)?;

    let phase1 = -tab.get(nc, ncols);
    if phase1 > FEAS_TOL {
        return Err(Error::LpInfeasible { residual: phase1 });
    }

    // Drive remaining artificials out of the basis; rows that admit no
    // pivot are redundant and get dropped.
    let mut dead_rows: Vec<usize> = Vec::new();
    for i in 0..tab.nc {
        if tab.basis[i] >= nv {
            let mut pivot_col = None;
            for j in 0..nv {
                if tab.get(i, j).abs() > EPS && !tab.basis.contains(&j) {
                    pivot_col = Some(j);
                    break;
                }
            }
            match pivot_col {
                Some(j) => tab.pivot(i, j),
                None => dead_rows.push(i),
            }
        }
    }
    if !dead_rows.is_empty() {
        let width = tab.ncols + 1;
        let mut kept = Vec::with_capacity((tab.nc + 1 - dead_rows.len()) * width);
        let mut basis = Vec::with_capacity(tab.nc - dead_rows.len());
        for i in 0..tab.nc {
            if !dead_rows.contains(&i) {
                kept.extend_from_slice(&tab.t[i * width..(i + 1) * width]);
                basis.push(tab.basis[i]);
            }
        }
        kept.extend_from_slice(&tab.t[tab.nc * width..(tab.nc + 1) * width]);
        tab.nc -= dead_rows.len();
        tab.t = kept;
        tab.basis = basis;
    }

    // Phase 2: real costs. r_j = c_j - sum_i c_{basis(i)} T_ij.
    let cost_of = |j: usize| if j < nv { c[j] } else { 0.0 };
    for j in 0..tab.ncols {
        let mut r = cost_of(j);
        for i in 0..tab.nc {
            r -= cost_of(tab.basis[i]) * tab.get(i, j);
        }
        let idx = tab.idx(tab.nc, j);
        tab.t[idx] = r;
    }
    let mut z = 0.0;
    for i in 0..tab.nc {
        z += cost_of(tab.basis[i]) * tab.rhs(i);
    }
    let idx = tab.idx(tab.nc, tab.ncols);
    tab.t[idx] = -z;

    tab.run(nv, max_pivots)?;

    let mut x = vec![0.0f64; nv];
    for i in 0..tab.nc {
        if tab.basis[i] < nv {
            x[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_textbook_lp() {
        // min -x1 - 2 x2  s.t.  x1 + x2 + s1 = 4, x1 + 3 x2 + s2 = 6
        // optimum at (3, 1): value -5.
        let c = vec![-1.0, -2.0, 0.0, 0.0];
        let a = vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]];
        let b = vec![4.0, 6.0];
        let sol = solve_lp(&c, &a, &b).unwrap();
        assert_relative_eq!(sol.value, -5.0, epsilon = 1e-9);
        assert_relative_eq!(sol.x[0], 3.0, epsilon = 1e-9);
        assert_relative_eq!(sol.x[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn handles_negative_rhs_rows() {
        // -x1 = -2 means x1 = 2; min x1 has value 2.
        let sol = solve_lp(&[1.0, 0.0], &[vec![-1.0, 0.0]], &[-2.0]).unwrap();
        assert_relative_eq!(sol.value, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn detects_infeasibility() {
        // x1 = 1 and x1 = 2 cannot both hold.
        let err =
            solve_lp(&[1.0], &[vec![1.0], vec![1.0]], &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::LpInfeasible { .. }));
    }

    #[test]
    fn drops_redundant_rows() {
        // Second row is the first doubled.
        let sol = solve_lp(
            &[1.0, 1.0],
            &[vec![1.0, 1.0], vec![2.0, 2.0]],
            &[1.0, 2.0],
        )
        .unwrap();
        assert_relative_eq!(sol.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Multiple constraints meet at the optimum; Bland fallback must
        // terminate the run.
        let c = vec![-1.0, -1.0, 0.0, 0.0, 0.0];
        let a = vec![
            vec![1.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0, 0.0, 1.0],
        ];
        let b = vec![1.0, 1.0, 2.0];
        let sol = solve_lp(&c, &a, &b).unwrap();
        assert_relative_eq!(sol.value, -2.0, epsilon = 1e-9);
    }
}
