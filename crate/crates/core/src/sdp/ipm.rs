//! Dense primal-dual interior-point method for block-diagonal SDPs.
//!
//! Solves the pair
//!
//! ```text
//! (P)  min <C, X>   s.t. <A_i, X> = b_i,  X >= 0
//! (D)  max b^T y    s.t. Z = C - sum_i y_i A_i >= 0
//! ```
//!
//! from an infeasible start, with Nesterov-Todd scaling and a Mehrotra-type
//! predictor-corrector step. Every matrix is block diagonal; blocks are dense.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, symmetric_map, symmetrize};

/// Residual level at which a stalled run still reports its best iterate.
const STALL_ACCEPT: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BlockSdp {
    pub block_sizes: Vec<usize>,
    /// `c[k]`: cost block `k`.
    pub c: Vec<DMatrix<f64>>,
    /// `a[i][k]`: block `k` of constraint matrix `i`.
    pub a: Vec<Vec<DMatrix<f64>>>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct IpmOptions {
    pub max_iter: usize,
    /// Relative duality gap and residual tolerance.
    pub tol: f64,
    /// When set, stop as soon as the sign of the optimal value is certified
    /// by a feasible primal or dual iterate.
    pub sign_only: bool,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions { max_iter: 100, tol: 1e-8, sign_only: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpmStatus {
    Optimal,
    /// A dual-feasible iterate with positive objective exists.
    CertifiedPositive,
    /// A primal-feasible iterate with negative objective exists.
    CertifiedNegative,
}

#[derive(Debug, Clone)]
pub struct IpmSolution {
    pub y: DVector<f64>,
    pub x: Vec<DMatrix<f64>>,
    pub z: Vec<DMatrix<f64>>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub iterations: usize,
    pub status: IpmStatus,
    pub rel_gap: f64,
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// Largest step `alpha` keeping `x + alpha * dx` positive semidefinite.
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    if x.nrows() == 0 {
        return f64::INFINITY;
    }
    let chol = match x.clone().cholesky() {
        Some(c) => c,
        None => return 0.0,
    };
    let l = chol.l();
    let linv = match l.clone().try_inverse() {
        Some(m) => m,
        None => return 0.0,
    };
    let m = &linv * dx * linv.transpose();
    let lmin = min_eigenvalue(&m);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

impl BlockSdp {
    fn n_constraints(&self) -> usize {
        self.b.len()
    }

    fn total_order(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    fn apply_a(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.n_constraints(),
            self.a.iter().map(|ai| ai.iter().zip(x).map(|(aik, xk)| inner(aik, xk)).sum::<f64>()),
        )
    }

    fn apply_at(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.block_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (i, ai) in self.a.iter().enumerate() {
            if y[i] != 0.0 {
                for (ok, aik) in out.iter_mut().zip(ai) {
                    *ok += aik * y[i];
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let nb = self.block_sizes.len();
        let ok = self.c.len() == nb
            && self.c.iter().zip(&self.block_sizes).all(|(c, &n)| c.shape() == (n, n))
            && self.a.len() == self.b.len()
            && self
                .a
                .iter()
                .all(|ai| ai.len() == nb && ai.iter().zip(&self.block_sizes).all(|(m, &n)| m.shape() == (n, n)));
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch("SDP blocks do not match the declared sizes".into()))
        }
    }

    pub fn solve(&self, opts: &IpmOptions) -> Result<IpmSolution> {
        self.validate()?;
        let m = self.n_constraints();
        let nb = self.block_sizes.len();
        let n_total = self.total_order().max(1) as f64;

        let b_norm = self.b.norm();
        let c_norm = self.c.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();

        let mut x = Vec::with_capacity(nb);
        let mut z = Vec::with_capacity(nb);
        for (k, &n) in self.block_sizes.iter().enumerate() {
            let nf = n as f64;
            let mut xi = 10f64.max(nf.sqrt());
            let mut eta = 10f64.max(nf.sqrt()).max(self.c[k].norm());
            for (i, ai) in self.a.iter().enumerate() {
                let an = ai[k].norm();
                xi = xi.max(nf * (1.0 + self.b[i].abs()) / (1.0 + an));
                eta = eta.max(an);
            }
            x.push(DMatrix::identity(n, n) * xi);
            z.push(DMatrix::identity(n, n) * eta);
        }
        let mut y = DVector::zeros(m);
        // best nearly-optimal iterate, returned if the method later stalls
        let mut fallback: Option<(f64, IpmSolution)> = None;
        let stalled = |fallback: Option<(f64, IpmSolution)>, iterations| match fallback {
            Some((_, sol)) => Ok(sol),
            None => Err(Error::SolverNonConvergence { iterations }),
        };

        for iter in 0..opts.max_iter {
            let mu = x.iter().zip(&z).map(|(xk, zk)| inner(xk, zk)).sum::<f64>() / n_total;
            let rp = &self.b - self.apply_a(&x);
            let aty = self.apply_at(&y);
            let rd: Vec<DMatrix<f64>> =
                (0..nb).map(|k| &self.c[k] - &z[k] - &aty[k]).collect();
            let pobj: f64 = self.c.iter().zip(&x).map(|(c, xk)| inner(c, xk)).sum();
            let dobj = self.b.dot(&y);
            let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let prim_rel = rp.norm() / (1.0 + b_norm);
            let dual_rel = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + c_norm);

            let finish = |status| IpmSolution {
                y: y.clone(),
                x: x.clone(),
                z: z.clone(),
                primal_obj: pobj,
                dual_obj: dobj,
                iterations: iter,
                status,
                rel_gap,
            };

            if rel_gap <= opts.tol && prim_rel <= opts.tol && dual_rel <= opts.tol {
                return Ok(finish(IpmStatus::Optimal));
            }
            let merit = rel_gap.max(prim_rel).max(dual_rel);
            if merit <= STALL_ACCEPT && fallback.as_ref().is_none_or(|(best, _)| merit < *best) {
                fallback = Some((merit, finish(IpmStatus::Optimal)));
            }
            if opts.sign_only {
                if dobj > 0.0 && dual_rel <= 1e-9 {
                    let slack = self.apply_at(&y);
                    let feasible = (0..nb).all(|k| min_eigenvalue(&(&self.c[k] - &slack[k])) >= 0.0);
                    if feasible {
                        return Ok(finish(IpmStatus::CertifiedPositive));
                    }
                }
                if prim_rel <= 1e-10 && pobj + rp.norm() * (1.0 + y.norm()) < 0.0 {
                    return Ok(finish(IpmStatus::CertifiedNegative));
                }
            }

            // Nesterov-Todd scaling point per block
            let mut w = Vec::with_capacity(nb);
            let mut zinv = Vec::with_capacity(nb);
            for k in 0..nb {
                if self.block_sizes[k] == 0 {
                    w.push(DMatrix::zeros(0, 0));
                    zinv.push(DMatrix::zeros(0, 0));
                    continue;
                }
                let xh = symmetric_map(&x[k], |l| l.max(0.0).sqrt());
                let g = &xh * &z[k] * &xh;
                let g_isqrt = symmetric_map(&g, |l| 1.0 / l.max(1e-300).sqrt());
                let mut wk = &xh * g_isqrt * &xh;
                symmetrize(&mut wk);
                w.push(wk);
                zinv.push(symmetric_map(&z[k], |l| 1.0 / l.max(1e-300)));
            }

            // Schur complement M_ij = <A_i, W A_j W>
            let wa: Vec<Vec<DMatrix<f64>>> = self
                .a
                .iter()
                .map(|ai| (0..nb).map(|k| &w[k] * &ai[k] * &w[k]).collect())
                .collect();
            let mut schur = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in i..m {
                    let v: f64 = (0..nb).map(|k| inner(&self.a[i][k], &wa[j][k])).sum();
                    schur[(i, j)] = v;
                    schur[(j, i)] = v;
                }
            }
            let chol = schur.clone().cholesky().or_else(|| {
                let reg = 1e-14 * (1.0 + schur.diagonal().amax());
                (schur.clone() + DMatrix::identity(m, m) * reg).cholesky()
            });
            let chol = match chol {
                Some(c) => c,
                None => return stalled(fallback, iter),
            };

            let direction = |rc: &[DMatrix<f64>]| -> (DVector<f64>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
                let t: Vec<DMatrix<f64>> = (0..nb).map(|k| &rc[k] - &w[k] * &rd[k] * &w[k]).collect();
                let rhs = &rp - self.apply_a(&t);
                let dy = chol.solve(&rhs);
                let atdy = self.apply_at(&dy);
                let dz: Vec<DMatrix<f64>> = (0..nb).map(|k| &rd[k] - &atdy[k]).collect();
                let dx: Vec<DMatrix<f64>> = (0..nb)
                    .map(|k| {
                        let mut d = &rc[k] - &w[k] * &dz[k] * &w[k];
                        symmetrize(&mut d);
                        d
                    })
                    .collect();
                (dy, dx, dz)
            };
            let steps = |dx: &[DMatrix<f64>], dz: &[DMatrix<f64>]| -> (f64, f64) {
                let ap = (0..nb).map(|k| max_step(&x[k], &dx[k])).fold(f64::INFINITY, f64::min);
                let ad = (0..nb).map(|k| max_step(&z[k], &dz[k])).fold(f64::INFINITY, f64::min);
                (ap, ad)
            };

            // predictor
            let rc_aff: Vec<DMatrix<f64>> = x.iter().map(|xk| -xk).collect();
            let (_, dx_a, dz_a) = direction(&rc_aff);
            let (ap, ad) = steps(&dx_a, &dz_a);
            let (ap, ad) = (ap.min(1.0), ad.min(1.0));
            let mu_aff = (0..nb)
                .map(|k| inner(&(&x[k] + &dx_a[k] * ap), &(&z[k] + &dz_a[k] * ad)))
                .sum::<f64>()
                / n_total;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // corrector
            let rc: Vec<DMatrix<f64>> = (0..nb)
                .map(|k| {
                    let mut corr = &dx_a[k] * &dz_a[k] * &zinv[k];
                    corr = (&corr + corr.transpose()) * 0.5;
                    &zinv[k] * (sigma * mu) - &x[k] - corr
                })
                .collect();
            let (dy, dx, dz) = direction(&rc);
            let (ap, ad) = steps(&dx, &dz);
            let ap = (0.95 * ap).min(1.0);
            let ad = (0.95 * ad).min(1.0);
            if !(ap > 1e-12 || ad > 1e-12) {
                return stalled(fallback, iter);
            }
            for k in 0..nb {
                x[k] += &dx[k] * ap;
                z[k] += &dz[k] * ad;
                symmetrize(&mut x[k]);
                symmetrize(&mut z[k]);
            }
            y.axpy(ad, &dy, 1.0);
        }
        stalled(fallback, opts.max_iter)
    }
}
