//! Dense tableau simplex for `max c^T x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! The slack basis is feasible from the start, so no phase one is needed.
//! Pivots follow Bland's rule, which rules out cycling on degenerate vertices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    /// Some nonbasic structural or slack variable has zero reduced cost, so
    /// the optimal vertex need not be unique.
    pub alternative_optima: bool,
    pub pivots: usize,
}

pub fn maximize(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LpSolution> {
    let (m, n) = a.shape();
    if c.len() != n || b.len() != m {
        return Err(Error::DimensionMismatch(format!("LP with {m}x{n} constraints, |c| = {}, |b| = {}", c.len(), b.len())));
    }
    if b.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter("simplex needs b >= 0".into()));
    }

    // columns: n structural, m slack, then the right-hand side
    let width = n + m + 1;
    let mut t = DMatrix::zeros(m + 1, width);
    for i in 0..m {
        for j in 0..n {
            t[(i, j)] = a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, width - 1)] = b[i];
    }
    // objective row holds reduced costs c_j - z_j
    for j in 0..n {
        t[(m, j)] = c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let max_pivots = 50 * (n + m + 1);
    let mut pivots = 0;
    loop {
        let entering = (0..n + m).find(|&j| t[(m, j)] > PIVOT_TOL);
        let Some(q) = entering else { break };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let aiq = t[(i, q)];
            if aiq > PIVOT_TOL {
                let ratio = t[(i, width - 1)] / aiq;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - PIVOT_TOL || (ratio <= best + PIVOT_TOL && basis[i] < basis[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leave else {
            return Err(Error::InvalidParameter("linear program is unbounded".into()));
        };
        pivot(&mut t, r, q);
        basis[r] = q;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::SolverNonConvergence { iterations: pivots });
        }
    }

    let mut x = DVector::zeros(n);
    for (i, &bi) in basis.iter().enumerate() {
        if bi < n {
            x[bi] = t[(i, width - 1)];
        }
    }
    let alternative_optima = (0..n + m).any(|j| !basis.contains(&j) && t[(m, j)].abs() <= PIVOT_TOL);
    let objective = c.dot(&x);
    Ok(LpSolution { x, objective, alternative_optima, pivots })
}

fn pivot(t: &mut DMatrix<f64>, r: usize, q: usize) {
    let p = t[(r, q)];
    let row = t.row(r) / p;
    t.set_row(r, &row);
    for i in 0..t.nrows() {
        if i != r {
            let f = t[(i, q)];
            if f != 0.0 {
                let updated = t.row(i) - &row * f;
                t.set_row(i, &updated);
                t[(i, q)] = 0.0;
            }
        }
    }
}
