//! Worst-case stealthy impact for one realization.
//!
//! For `x' = A x + B a` with target output `y_t = C_t x` and monitor output
//! `y_m = C_m x`, the impact is `sup ||y_t||^2` over attacks with
//! `||y_m||^2 <= sigma` from rest. It is the least `gamma` for which some
//! `P >= 0` satisfies the dissipation inequality
//!
//! ```text
//! R(P, gamma) = [ A^T P + P A + C_t^T C_t - gamma C_m^T C_m   P B ]
//!               [ B^T P                                       0   ]  <= 0
//! ```
//!
//! (with `C_m` scaled by `1/sqrt(sigma)`). The zero corner of `R` means the
//! inequality has no strictly feasible point, so the solver first reduces it
//! to its minimal face: `R <= 0` forces `P A^k B = 0` for every `k` below
//! the monitor relative degree, and the remaining constraint lives on the
//! complement of `span{B, .., A^(r-2) B}`. If the target output shows up in
//! that Krylov chain before the monitor output, the face is empty and no
//! finite `gamma` exists. The reduced inequality is decided by the
//! interior-point method in [`ipm`] at each step of a bisection on `gamma`.

pub mod ipm;
pub mod oracle;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::impact::Impact;
use crate::linalg::{max_eigenvalue, min_eigenvalue, orthogonal_complement, orthonormal_basis};
use crate::sysid::{feasibility_verdict, Output, SystemRealization, Verdict, MARKOV_TOL};
use ipm::{BlockSdp, IpmOptions, IpmStatus};

pub use oracle::{impact_oracle_frequency, FrequencyGrid};

pub const DEFAULT_GAMMA_CAP: f64 = 1e6;
pub const MAX_BISECTION_STEPS: usize = 53;
/// Relative bracket width at which bisection stops. Tighter than the
/// absolute `1e-6 * max(1, gamma)` contract so that values below one keep
/// six significant digits.
pub const BISECTION_RTOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct ImpactProblem {
    pub sys: SystemRealization,
    /// Stealthiness bound on the monitor output energy.
    pub alarm_threshold: f64,
    pub gamma_cap: f64,
    /// Consult the structural verdict before solving.
    pub precheck: bool,
    /// Start the bisection from a modal frequency-response estimate of the
    /// optimum instead of from the lower bound. The bracket is still
    /// certified by the solver.
    pub warm_start: bool,
}

impl ImpactProblem {
    pub fn new(sys: SystemRealization) -> Self {
        ImpactProblem { sys, alarm_threshold: 1.0, gamma_cap: DEFAULT_GAMMA_CAP, precheck: true, warm_start: true }
    }

    pub fn without_warm_start(mut self) -> Self {
        self.warm_start = false;
        self
    }

    pub fn without_precheck(mut self) -> Self {
        self.precheck = false;
        self
    }

    pub fn with_alarm_threshold(mut self, sigma: f64) -> Self {
        self.alarm_threshold = sigma;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma_cap > 0.0 && self.gamma_cap.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma cap must be positive, got {}", self.gamma_cap)));
        }
        if !(self.alarm_threshold > 0.0 && self.alarm_threshold.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alarm threshold must be positive, got {}",
                self.alarm_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "verdict")]
pub enum UnboundedCause {
    /// The structural verdict ruled the pair out; no solve was attempted.
    Structural(Verdict),
    /// The reduced inequality has an empty face: the target output responds
    /// to the attack strictly earlier than the monitor output.
    EmptyFace,
    /// Infeasible at the gamma cap.
    CapHit,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub gamma: f64,
    #[serde(serialize_with = "serialize_matrix")]
    pub p: DMatrix<f64>,
    /// `lambda_max(R) / (1 + gamma)`.
    pub lmi_max_eig: f64,
    pub p_min_eig: f64,
}

fn serialize_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.serialize(s)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolverStats {
    pub feasibility_solves: usize,
    pub bisection_steps: usize,
    pub ipm_iterations: usize,
    /// Lower end of the final bracket.
    pub bracket_lo: f64,
    pub monotone: bool,
    /// Bisection stopped early because a probe sat too close to the
    /// boundary to be decided; the bracket is still valid.
    pub resolution_limited: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImpactResult {
    pub value: Impact,
    pub cause: Option<UnboundedCause>,
    pub certificate: Option<Certificate>,
    pub stats: SolverStats,
}

impl ImpactResult {
    fn unbounded(cause: UnboundedCause, stats: SolverStats) -> Self {
        ImpactResult { value: Impact::Unbounded, cause: Some(cause), certificate: None, stats }
    }
}

/// The block matrix `R(P, gamma)` of order `N + 1` for unit alarm threshold.
pub fn assemble_lmi(sys: &SystemRealization, gamma: f64, p: &DMatrix<f64>) -> DMatrix<f64> {
    assemble_weighted(sys, gamma, p, 1.0)
}

fn assemble_weighted(sys: &SystemRealization, gamma: f64, p: &DMatrix<f64>, monitor_weight: f64) -> DMatrix<f64> {
    let n = sys.n();
    let a = sys.a_matrix();
    let b = sys.input();
    let ct = sys.output(Output::Target);
    let cm = sys.output(Output::Monitor) * monitor_weight;
    let top = a.transpose() * p + p * a + &ct * ct.transpose() - (&cm * cm.transpose()) * gamma;
    let pb = p * b;
    let mut r = DMatrix::zeros(n + 1, n + 1);
    r.view_mut((0, 0), (n, n)).copy_from(&top);
    r.view_mut((0, n), (n, 1)).copy_from(&pb);
    r.view_mut((n, 0), (1, n)).copy_from(&pb.transpose());
    r
}

/// Minimal face of the dissipation inequality.
struct Face {
    /// Orthonormal columns spanning the allowed range of `P`.
    p_basis: DMatrix<f64>,
    /// Orthonormal columns on which the reduced inequality is imposed.
    q_basis: DMatrix<f64>,
    /// Necessary condition read off the diagonal of the reduced inequality.
    lower_bound: f64,
}

fn minimal_face(a_unit: &DMatrix<f64>, b: &DVector<f64>, ct: &DVector<f64>, cm: &DVector<f64>) -> Result<Option<Face>> {
    let n = a_unit.nrows();
    let mut chain: Vec<DVector<f64>> = Vec::new();
    let mut v = b.clone();
    for _ in 0..n {
        let m = cm.dot(&v);
        let t = ct.dot(&v);
        chain.push(v.clone());
        if m.abs() >= MARKOV_TOL {
            let earlier = &chain[..chain.len() - 1];
            let p_basis = orthogonal_complement(&chain, n, 1e-10);
            let q_basis = orthogonal_complement(earlier, n, 1e-10);
            // component of the last chain vector outside the earlier span
            let mut u = v.clone();
            for q in orthonormal_basis(earlier, 1e-10) {
                let c = q.dot(&u);
                u.axpy(-c, &q, 1.0);
            }
            let (um, ut) = (cm.dot(&u), ct.dot(&u));
            return Ok(Some(Face { p_basis, q_basis, lower_bound: (ut * ut) / (um * um) }));
        }
        if t.abs() >= MARKOV_TOL {
            return Ok(None);
        }
        v = a_unit * v;
    }
    Err(Error::DecoupledChannel { attack: 0, output: 0 })
}

/// Reduced feasibility test at a fixed `gamma`:
///
/// ```text
/// max t  s.t.  -Q_red(S, gamma) / (1 + gamma) - t I >= 0,
///              S - t I >= 0,  tr(S) <= bound
/// ```
///
/// with `P = V S V^T (1 + gamma) / ||A||`. Feasible iff `t* >= 0`.
struct ReducedLmi<'a> {
    face: &'a Face,
    a_scale: f64,
    ct: DVector<f64>,
    cm: DVector<f64>,
    sym_basis: Vec<DMatrix<f64>>,
    /// `Q_basis^T (A^T E_k + E_k A) Q_basis` per symmetric basis element.
    lyap_terms: Vec<DMatrix<f64>>,
    trace_bound: f64,
}

struct Probe {
    p: Option<DMatrix<f64>>,
    iterations: usize,
}

impl<'a> ReducedLmi<'a> {
    fn new(face: &'a Face, a_unit: DMatrix<f64>, a_scale: f64, ct: DVector<f64>, cm: DVector<f64>) -> Self {
        let ns = face.p_basis.ncols();
        let mut sym_basis = Vec::with_capacity(ns * (ns + 1) / 2);
        for i in 0..ns {
            for j in i..ns {
                let mut e = DMatrix::zeros(ns, ns);
                if i == j {
                    e[(i, i)] = 1.0;
                } else {
                    e[(i, j)] = std::f64::consts::FRAC_1_SQRT_2;
                    e[(j, i)] = std::f64::consts::FRAC_1_SQRT_2;
                }
                sym_basis.push(e);
            }
        }
        let v = &face.p_basis;
        let u = &face.q_basis;
        let lyap_terms = sym_basis
            .iter()
            .map(|bk| {
                let ek = v * bk * v.transpose();
                u.transpose() * (a_unit.transpose() * &ek + &ek * &a_unit) * u
            })
            .collect();
        let trace_bound = 1e3 * ns.max(1) as f64;
        ReducedLmi { face, a_scale, ct, cm, sym_basis, lyap_terms, trace_bound }
    }

    fn program(&self, gamma: f64) -> BlockSdp {
        let u = &self.face.q_basis;
        let nu = u.ncols();
        let ns = self.face.p_basis.ncols();
        let supply = (&self.cm * self.cm.transpose()) * gamma - &self.ct * self.ct.transpose();
        let c1 = u.transpose() * supply * u / (1.0 + gamma);

        let mut block_sizes = vec![nu];
        let mut c = vec![c1];
        if ns > 0 {
            block_sizes.push(ns);
            c.push(DMatrix::zeros(ns, ns));
            block_sizes.push(1);
            c.push(DMatrix::from_element(1, 1, self.trace_bound));
        }
        let mut a = Vec::with_capacity(self.sym_basis.len() + 1);
        for (bk, lk) in self.sym_basis.iter().zip(&self.lyap_terms) {
            a.push(vec![lk.clone(), -bk, DMatrix::from_element(1, 1, bk.trace())]);
        }
        let mut at = vec![DMatrix::identity(nu, nu)];
        if ns > 0 {
            at.push(DMatrix::identity(ns, ns));
            at.push(DMatrix::zeros(1, 1));
        }
        a.push(at);
        let mut b = DVector::zeros(a.len());
        b[a.len() - 1] = 1.0;
        BlockSdp { block_sizes, c, a, b }
    }

    fn probe(&self, gamma: f64) -> Result<Probe> {
        let sdp = self.program(gamma);
        let sol = sdp.solve(&IpmOptions { sign_only: true, ..Default::default() })?;
        let feasible = match sol.status {
            IpmStatus::CertifiedPositive => true,
            IpmStatus::CertifiedNegative => false,
            IpmStatus::Optimal => sol.dual_obj >= 0.0,
        };
        let p = feasible.then(|| {
            let ns = self.face.p_basis.ncols();
            let mut s = DMatrix::zeros(ns, ns);
            for (k, bk) in self.sym_basis.iter().enumerate() {
                s += bk * sol.y[k];
            }
            let v = &self.face.p_basis;
            v * s * v.transpose() * ((1.0 + gamma) / self.a_scale)
        });
        Ok(Probe { p, iterations: sol.iterations })
    }
}

enum Side {
    Feasible(DMatrix<f64>),
    Infeasible,
    /// The interior-point method stalled before the sign of the margin was
    /// settled; happens only within a hair of the boundary.
    Undecided,
}

struct Search<'a> {
    lmi: &'a ReducedLmi<'a>,
    stats: &'a mut SolverStats,
    lowest_feasible: f64,
    highest_infeasible: f64,
}

impl Search<'_> {
    fn probe(&mut self, gamma: f64) -> Result<Side> {
        self.stats.feasibility_solves += 1;
        let side = match self.lmi.probe(gamma) {
            Ok(p) => {
                self.stats.ipm_iterations += p.iterations;
                match p.p {
                    Some(p) => {
                        self.lowest_feasible = self.lowest_feasible.min(gamma);
                        Side::Feasible(p)
                    }
                    None => {
                        self.highest_infeasible = self.highest_infeasible.max(gamma);
                        Side::Infeasible
                    }
                }
            }
            Err(Error::SolverNonConvergence { iterations }) => {
                self.stats.ipm_iterations += iterations;
                Side::Undecided
            }
            Err(e) => return Err(e),
        };
        if self.lowest_feasible < self.highest_infeasible {
            self.stats.monotone = false;
        }
        Ok(side)
    }

    /// Certifies the cap, then walks up from the lower bound.
    fn bracket_from_below(&mut self, floor: f64, cap: f64) -> Result<Option<(f64, f64, DMatrix<f64>)>> {
        let mut best = match self.probe(cap)? {
            Side::Feasible(p) => p,
            Side::Infeasible => return Ok(None),
            Side::Undecided => return Err(Error::SolverNonConvergence { iterations: self.stats.ipm_iterations }),
        };
        let mut lo = floor;
        let mut hi = if lo > 0.0 { 2.0 * lo } else { 1.0 };
        loop {
            if hi >= cap {
                hi = cap;
                break;
            }
            match self.probe(hi)? {
                Side::Feasible(p) => {
                    best = p;
                    break;
                }
                Side::Infeasible => lo = hi,
                Side::Undecided => {}
            }
            hi *= 4.0;
        }
        Ok(Some((lo, hi, best)))
    }

    /// Brackets the optimum near an estimate `h`, widening geometrically on
    /// whichever side the estimate turns out wrong.
    fn bracket_around(&mut self, h: f64, floor: f64, cap: f64) -> Result<Option<(f64, f64, DMatrix<f64>)>> {
        let d0 = 4e-7 * h.max(1e-3);
        let mut lo = floor;
        let mut d = d0;
        let (mut hi, mut best) = loop {
            let x = (h + d).min(cap);
            match self.probe(x)? {
                Side::Feasible(p) => break (x, p),
                Side::Infeasible if x >= cap => return Ok(None),
                Side::Infeasible => lo = lo.max(x),
                Side::Undecided if x >= cap => {
                    return Err(Error::SolverNonConvergence { iterations: self.stats.ipm_iterations })
                }
                Side::Undecided => {}
            }
            d *= 8.0;
        };
        if lo > floor {
            return Ok(Some((lo, hi, best)));
        }
        let mut d = d0;
        loop {
            let x = h - d;
            if x <= floor {
                break;
            }
            match self.probe(x)? {
                Side::Feasible(p) => {
                    hi = x;
                    best = p;
                }
                Side::Infeasible => {
                    lo = x;
                    break;
                }
                Side::Undecided => {}
            }
            d *= 8.0;
        }
        Ok(Some((lo, hi, best)))
    }
}

/// Minimal worst-case impact `gamma*` for one realization.
pub fn solve_impact(prob: &ImpactProblem) -> Result<ImpactResult> {
    prob.validate()?;
    let sys = &prob.sys;
    let mut stats = SolverStats { monotone: true, ..Default::default() };
    if prob.precheck {
        let verdict = feasibility_verdict(sys)?;
        if !verdict.is_feasible() {
            return Ok(ImpactResult::unbounded(UnboundedCause::Structural(verdict), stats));
        }
    }

    let a_scale = sys.scale();
    let a_unit = sys.a_matrix() / a_scale;
    let b = sys.input();
    let ct = sys.output(Output::Target);
    let monitor_weight = 1.0 / prob.alarm_threshold.sqrt();
    let cm = sys.output(Output::Monitor) * monitor_weight;

    let face = match minimal_face(&a_unit, &b, &ct, &cm) {
        Ok(Some(f)) => f,
        Ok(None) => return Ok(ImpactResult::unbounded(UnboundedCause::EmptyFace, stats)),
        Err(_) => {
            return Err(Error::DecoupledChannel { attack: sys.attack().0, output: sys.monitor().0 });
        }
    };
    let lmi = ReducedLmi::new(&face, a_unit, a_scale, ct, cm);

    let mut search = Search {
        lmi: &lmi,
        stats: &mut stats,
        lowest_feasible: f64::INFINITY,
        highest_infeasible: f64::NEG_INFINITY,
    };
    let cap = prob.gamma_cap;
    let floor = face.lower_bound.min(cap);
    let hint = if prob.warm_start { oracle::modal_peak_estimate(sys).filter(|h| *h < cap) } else { None };

    let (mut lo, mut hi, mut best) = match hint {
        Some(h) => match search.bracket_around(h, floor, cap)? {
            Some(bracket) => bracket,
            None => return Ok(ImpactResult::unbounded(UnboundedCause::CapHit, stats)),
        },
        None => match search.bracket_from_below(floor, cap)? {
            Some(bracket) => bracket,
            None => return Ok(ImpactResult::unbounded(UnboundedCause::CapHit, stats)),
        },
    };

    while hi - lo > BISECTION_RTOL * hi.max(1e-6) && search.stats.bisection_steps < MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        search.stats.bisection_steps += 1;
        match search.probe(mid)? {
            Side::Feasible(p) => {
                hi = mid;
                best = p;
            }
            Side::Infeasible => lo = mid,
            Side::Undecided => {
                search.stats.resolution_limited = true;
                break;
            }
        }
    }
    let (lowest_feasible, highest_infeasible) = (search.lowest_feasible, search.highest_infeasible);
    let best_gamma = hi;
    if !stats.monotone {
        return Err(Error::NonMonotoneBisection { feasible: lowest_feasible, infeasible: highest_infeasible });
    }
    stats.bracket_lo = lo;

    let p = best;
    let r = assemble_weighted(sys, best_gamma, &p, monitor_weight);
    let certificate = Certificate {
        gamma: best_gamma,
        lmi_max_eig: max_eigenvalue(&r) / (1.0 + best_gamma),
        p_min_eig: min_eigenvalue(&p),
        p,
    };
    Ok(ImpactResult { value: Impact::Finite(best_gamma), cause: None, certificate: Some(certificate), stats })
}
