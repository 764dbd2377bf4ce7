//! The detector-vs-adversary zero-sum game.
//!
//! Rows are attack vertices (the maximizer), columns are monitor vertices
//! (the minimizer), entries are VaR payoffs at one risk level. A monitor
//! column with any unbounded entry is removed before solving; the attacker
//! keeps every row.

pub mod simplex;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impact::Impact;
use crate::netgraph::Vertex;
use crate::risk::RiskEstimate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    pub beta: f64,
    pub attack_actions: Vec<Vertex>,
    pub monitor_actions: Vec<Vertex>,
    /// Row-major: `entries[i][j]` is the payoff of attack `i` against monitor `j`.
    pub entries: Vec<Vec<Impact>>,
}

impl PayoffMatrix {
    pub fn new(beta: f64, attack_actions: Vec<Vertex>, monitor_actions: Vec<Vertex>, entries: Vec<Vec<Impact>>) -> Result<Self> {
        if entries.len() != attack_actions.len() || entries.iter().any(|r| r.len() != monitor_actions.len()) {
            return Err(Error::DimensionMismatch(format!(
                "payoff entries do not form a {}x{} matrix",
                attack_actions.len(),
                monitor_actions.len()
            )));
        }
        Ok(PayoffMatrix { beta, attack_actions, monitor_actions, entries })
    }

    pub fn from_finite(rows: &[&[f64]]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        PayoffMatrix::new(
            0.0,
            (1..=n_rows).map(Vertex).collect(),
            (1..=n_cols).map(Vertex).collect(),
            rows.iter().map(|r| r.iter().map(|&v| Impact::Finite(v)).collect()).collect(),
        )
    }

    pub fn entry(&self, attack: Vertex, monitor: Vertex) -> Option<Impact> {
        let i = self.attack_actions.iter().position(|&a| a == attack)?;
        let j = self.monitor_actions.iter().position(|&m| m == monitor)?;
        Some(self.entries[i][j])
    }

    /// Monitors whose column is entirely finite, and those that are not.
    pub fn split_monitors(&self) -> (Vec<usize>, Vec<usize>) {
        (0..self.monitor_actions.len()).partition(|&j| self.entries.iter().all(|r| r[j].is_finite()))
    }

    fn finite_block(&self, cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.attack_actions.len(), cols.len(), |i, k| self.entries[i][cols[k]].as_f64())
    }

    /// Adds `c` to every finite entry.
    pub fn shifted(&self, c: f64) -> Self {
        PayoffMatrix {
            entries: self.entries.iter().map(|r| r.iter().map(|v| v.shifted(c)).collect()).collect(),
            ..self.clone()
        }
    }

    /// Aligned plain-text table, attacks down and monitors across.
    pub fn to_text(&self, precision: usize) -> String {
        let cells: Vec<Vec<String>> =
            self.entries.iter().map(|r| r.iter().map(|v| format!("{v:.precision$}")).collect()).collect();
        let width = cells
            .iter()
            .flatten()
            .map(String::len)
            .chain(self.monitor_actions.iter().map(|m| format!("m={m}").len()))
            .max()
            .unwrap_or(1);
        let label = self.attack_actions.iter().map(|a| format!("a={a}").len()).max().unwrap_or(3);
        let mut out = String::new();
        let _ = write!(out, "{:label$}", "");
        for m in &self.monitor_actions {
            let _ = write!(out, "  {:>width$}", format!("m={m}"));
        }
        out.push('\n');
        for (a, row) in self.attack_actions.iter().zip(&cells) {
            let _ = write!(out, "{:<label$}", format!("a={a}"));
            for c in row {
                let _ = write!(out, "  {c:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

/// Collects one VaR level from the per-pair estimates into a payoff matrix.
///
/// Action lists are the sorted distinct attack and monitor vertices seen in
/// `estimates`; every combination must be present.
pub fn assemble_payoffs(estimates: &[RiskEstimate], beta: f64) -> Result<PayoffMatrix> {
    let mut attacks: Vec<Vertex> = estimates.iter().map(|e| e.attack).collect();
    let mut monitors: Vec<Vertex> = estimates.iter().map(|e| e.monitor).collect();
    attacks.sort();
    attacks.dedup();
    monitors.sort();
    monitors.dedup();
    let mut entries = Vec::with_capacity(attacks.len());
    for &a in &attacks {
        let mut row = Vec::with_capacity(monitors.len());
        for &m in &monitors {
            let est = estimates
                .iter()
                .find(|e| e.attack == a && e.monitor == m)
                .ok_or(Error::MissingPair { attack: a.0, monitor: m.0 })?;
            let v = est.var_at(beta).ok_or_else(|| {
                Error::InvalidParameter(format!("pair (a={a}, m={m}) has no VaR at level {beta}"))
            })?;
            row.push(v);
        }
        entries.push(row);
    }
    PayoffMatrix::new(beta, attacks, monitors, entries)
}

/// First `(attack, monitor)` in action order whose entry is both the
/// maximum of its monitor column and the minimum of its attack row, over
/// the fully finite columns.
pub fn find_pure_saddle(pm: &PayoffMatrix) -> Result<Option<(Vertex, Vertex)>> {
    let (cols, _) = pm.split_monitors();
    if pm.attack_actions.is_empty() || cols.is_empty() {
        return Err(Error::NoSecurePlacement);
    }
    let j = pm.finite_block(&cols);
    for i in 0..j.nrows() {
        let row_min = j.row(i).min();
        for k in 0..j.ncols() {
            let v = j[(i, k)];
            if v == row_min && v == j.column(k).max() {
                return Ok(Some((pm.attack_actions[i], pm.monitor_actions[cols[k]])));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub value: f64,
    /// Value from the detector's program alone.
    pub detector_value: f64,
    /// Value from the attacker's program alone.
    pub attacker_value: f64,
    /// Probabilities over `attack_actions`.
    pub attacker_mix: Vec<f64>,
    /// Probabilities over `monitor_actions`; pruned monitors get zero.
    pub detector_mix: Vec<f64>,
    /// Set when both equilibrium mixes are pure.
    pub pure_saddle: Option<(Vertex, Vertex)>,
    pub pruned_monitors: Vec<Vertex>,
    /// Either program had a tied reduced cost at its optimum, so other
    /// equilibrium mixes may exist.
    pub alternative_optima: bool,
}

impl GameSolution {
    pub fn attacker_support(&self, pm: &PayoffMatrix) -> Vec<Vertex> {
        support(&pm.attack_actions, &self.attacker_mix)
    }

    pub fn detector_support(&self, pm: &PayoffMatrix) -> Vec<Vertex> {
        support(&pm.monitor_actions, &self.detector_mix)
    }
}

fn support(actions: &[Vertex], mix: &[f64]) -> Vec<Vertex> {
    actions.iter().zip(mix).filter(|(_, &p)| p > SUPPORT_TOL).map(|(&v, _)| v).collect()
}

const SUPPORT_TOL: f64 = 1e-9;

/// Solves `min_q max_i (J q)_i` for a matrix game, returning the optimal
/// column mix and value. The matrix is shifted to be positive so the
/// program `max 1^T x  s.t. J' x <= 1` has the slack basis feasible.
fn minimizer_program(j: &DMatrix<f64>) -> Result<(Vec<f64>, f64, bool)> {
    let shift = 1.0 - j.min();
    let jp = j.map(|v| v + shift);
    let (rows, cols) = jp.shape();
    let sol = simplex::maximize(&DVector::from_element(cols, 1.0), &jp, &DVector::from_element(rows, 1.0))?;
    let total: f64 = sol.x.sum();
    if total <= 0.0 {
        return Err(Error::InvalidParameter("degenerate matrix game".into()));
    }
    let mix = sol.x.iter().map(|v| v / total).collect();
    Ok((mix, 1.0 / total - shift, sol.alternative_optima))
}

/// Mixed equilibrium of the game restricted to its fully finite monitor columns.
///
/// The detector's and the attacker's programs are solved separately; their
/// values agree by LP duality, and both are reported.
pub fn solve_mixed_nash(pm: &PayoffMatrix) -> Result<GameSolution> {
    let (cols, pruned) = pm.split_monitors();
    if pm.attack_actions.is_empty() || cols.is_empty() {
        return Err(Error::NoSecurePlacement);
    }
    let j = pm.finite_block(&cols);

    let (q, detector_value, alt_d) = minimizer_program(&j)?;
    // the attacker maximizes p^T J, i.e. minimizes the columns of -J^T
    let (p, neg_value, alt_a) = minimizer_program(&(-j.transpose()))?;
    let attacker_value = -neg_value;

    let mut detector_mix = vec![0.0; pm.monitor_actions.len()];
    for (k, &c) in cols.iter().enumerate() {
        detector_mix[c] = q[k];
    }
    let attacker_mix = p;

    let single = |mix: &[f64]| {
        let s: Vec<usize> = (0..mix.len()).filter(|&i| mix[i] > SUPPORT_TOL).collect();
        (s.len() == 1).then(|| s[0])
    };
    let pure_saddle = match (single(&attacker_mix), single(&detector_mix)) {
        (Some(i), Some(k)) => Some((pm.attack_actions[i], pm.monitor_actions[k])),
        _ => None,
    };
    Ok(GameSolution {
        value: 0.5 * (detector_value + attacker_value),
        detector_value,
        attacker_value,
        attacker_mix,
        detector_mix,
        pure_saddle,
        pruned_monitors: pruned.iter().map(|&c| pm.monitor_actions[c]).collect(),
        alternative_optima: alt_d || alt_a,
    })
}

/// `p^T J q`. An unbounded entry met with positive weight gives `+inf`.
pub fn expected_payoff(pm: &PayoffMatrix, p_attack: &[f64], p_monitor: &[f64]) -> Result<f64> {
    if p_attack.len() != pm.attack_actions.len() || p_monitor.len() != pm.monitor_actions.len() {
        return Err(Error::DimensionMismatch(format!(
            "mixes of length {}/{} for a {}x{} game",
            p_attack.len(),
            p_monitor.len(),
            pm.attack_actions.len(),
            pm.monitor_actions.len()
        )));
    }
    let mut total = 0.0;
    for (row, &pi) in pm.entries.iter().zip(p_attack) {
        for (v, &qj) in row.iter().zip(p_monitor) {
            let w = pi * qj;
            if w != 0.0 {
                total += w * v.as_f64();
            }
        }
    }
    Ok(total)
}

/// Largest violation of the no-deviation inequalities by `sol`: how much a
/// pure attack beats the value against `q`, or a kept monitor undercuts it
/// against `p`.
pub fn deviation_gap(pm: &PayoffMatrix, sol: &GameSolution) -> f64 {
    let (cols, _) = pm.split_monitors();
    let mut gap: f64 = 0.0;
    for i in 0..pm.attack_actions.len() {
        let v: f64 = cols.iter().map(|&c| pm.entries[i][c].as_f64() * sol.detector_mix[c]).sum();
        gap = gap.max(v - sol.value);
    }
    for &c in &cols {
        let v: f64 = (0..pm.attack_actions.len()).map(|i| pm.entries[i][c].as_f64() * sol.attacker_mix[i]).sum();
        gap = gap.max(sol.value - v);
    }
    gap
}
