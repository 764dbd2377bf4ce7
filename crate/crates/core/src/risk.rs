//! Scenario approximation of the Value-at-Risk payoff.
//!
//! Each (attack, monitor) pair is evaluated on the same `M1` i.i.d.
//! realizations; its payoff at risk level `beta` is the empirical VaR of the
//! per-sample impacts. `(epsilon1, beta1)` only size the sample set.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impact::Impact;
use crate::netgraph::{sample_set, SampledLaplacian, UncertainNetwork, Vertex};
use crate::sdp::{solve_impact, ImpactProblem};
use crate::sysid::SystemRealization;

/// Slack for ranks like `450 * 0.92` that land a rounding error above an integer.
const RANK_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub epsilon1: f64,
    pub beta1: f64,
    pub m1: usize,
    pub risk_levels: Vec<f64>,
    #[serde(default)]
    pub master_seed: u64,
}

impl ScenarioConfig {
    /// Checks everything except the sample-size bound.
    pub fn validate_parameters(&self) -> Result<()> {
        check_unit("epsilon1", self.epsilon1)?;
        check_unit("beta1", self.beta1)?;
        if self.m1 == 0 {
            return Err(Error::InvalidParameter("m1 must be positive".into()));
        }
        if self.risk_levels.is_empty() {
            return Err(Error::InvalidParameter("at least one risk level is required".into()));
        }
        for &b in &self.risk_levels {
            check_unit("risk level", b)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_parameters()?;
        let need = self.required_samples()?;
        if self.m1 < need {
            return Err(Error::InvalidParameter(format!(
                "m1 = {} is below the required {need} samples for epsilon1 = {}, beta1 = {}",
                self.m1, self.epsilon1, self.beta1
            )));
        }
        Ok(())
    }

    pub fn required_samples(&self) -> Result<usize> {
        required_samples(self.epsilon1, self.beta1)
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// `ceil(ln(2 / beta1) / (2 epsilon1^2))`.
pub fn required_samples(epsilon1: f64, beta1: f64) -> Result<usize> {
    check_unit("epsilon1", epsilon1)?;
    check_unit("beta1", beta1)?;
    let bound = (2.0 / beta1).ln() / (2.0 * epsilon1 * epsilon1);
    Ok((bound - RANK_EPS).ceil().max(1.0) as usize)
}

/// `ceil(m (1 - beta))`, clamped to `1..=m`.
pub fn order_statistic_rank(m: usize, beta: f64) -> usize {
    let k = (m as f64 * (1.0 - beta) - RANK_EPS).ceil();
    (k.max(1.0) as usize).min(m)
}

/// The `ceil(M (1 - beta))`-th smallest value, `Unbounded` sorting last.
pub fn empirical_var(values: &[Impact], beta: f64) -> Result<Impact> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("empirical VaR of an empty sample".into()));
    }
    check_unit("risk level", beta)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(Impact::total_cmp);
    Ok(sorted[order_statistic_rank(values.len(), beta) - 1])
}

/// True when at least `ceil(M (1 - beta1))` values are finite.
pub fn boundedness_check(values: &[Impact], beta1: f64) -> bool {
    if values.is_empty() {
        return false;
    }
    let finite = values.iter().filter(|v| v.is_finite()).count();
    finite >= order_statistic_rank(values.len(), beta1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelVar {
    pub beta: f64,
    pub var: Impact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub attack: Vertex,
    pub monitor: Vertex,
    /// `gamma*` per sample, sample `i` at position `i - 1`.
    pub sample_values: Vec<Impact>,
    /// Sorted by increasing `beta`.
    pub var_by_level: Vec<LevelVar>,
    pub bounded_count: usize,
    /// Samples whose solve failed and were counted as unbounded.
    #[serde(default)]
    pub failed_samples: Vec<usize>,
}

impl RiskEstimate {
    pub fn pair(&self) -> (Vertex, Vertex) {
        (self.attack, self.monitor)
    }

    pub fn var_at(&self, beta: f64) -> Option<Impact> {
        self.var_by_level.iter().find(|l| (l.beta - beta).abs() <= 1e-12).map(|l| l.var)
    }

    fn from_samples(
        (attack, monitor): (Vertex, Vertex),
        sample_values: Vec<Impact>,
        failed_samples: Vec<usize>,
        levels: &[f64],
    ) -> Result<Self> {
        let mut levels = levels.to_vec();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let var_by_level = levels
            .iter()
            .map(|&beta| Ok(LevelVar { beta, var: empirical_var(&sample_values, beta)? }))
            .collect::<Result<Vec<_>>>()?;
        let bounded_count = sample_values.iter().filter(|v| v.is_finite()).count();
        Ok(RiskEstimate { attack, monitor, sample_values, var_by_level, bounded_count, failed_samples })
    }
}

/// What to do when a per-sample solve fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailurePolicy {
    /// Abort with the failing sample index attached.
    #[default]
    Propagate,
    /// Record the sample as failed and count it as `Unbounded`, which can
    /// only raise the VaR.
    CountAsUnbounded,
}

type CacheKey = (u64, usize, Vertex, Vertex);

/// Per-sample impacts keyed by `(master seed, sample index, attack, monitor)`.
#[derive(Debug, Default)]
pub struct ImpactCache {
    map: Mutex<HashMap<CacheKey, Impact>>,
}

impl ImpactCache {
    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &CacheKey) -> Option<Impact> {
        self.map.lock().expect("cache lock").get(key).copied()
    }

    fn insert(&self, key: CacheKey, value: Impact) {
        self.map.lock().expect("cache lock").insert(key, value);
    }
}

/// Evaluates pairs over one fixed sample set.
pub struct ScenarioRunner<'a> {
    net: &'a UncertainNetwork,
    cfg: ScenarioConfig,
    samples: Vec<SampledLaplacian>,
    cache: ImpactCache,
    policy: FailurePolicy,
}

impl<'a> ScenarioRunner<'a> {
    pub fn new(net: &'a UncertainNetwork, cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        Self::build(net, cfg)
    }

    /// Like [`ScenarioRunner::new`] but accepts fewer samples than the bound asks for.
    pub fn forced(net: &'a UncertainNetwork, cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate_parameters()?;
        Self::build(net, cfg)
    }

    fn build(net: &'a UncertainNetwork, cfg: ScenarioConfig) -> Result<Self> {
        let samples = sample_set(net, cfg.master_seed, cfg.m1)?;
        Ok(ScenarioRunner { net, cfg, samples, cache: ImpactCache::default(), policy: FailurePolicy::default() })
    }

    pub fn with_policy(mut self, policy: FailurePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn samples(&self) -> &[SampledLaplacian] {
        &self.samples
    }

    pub fn cache(&self) -> &ImpactCache {
        &self.cache
    }

    fn check_pair(&self, (a, m): (Vertex, Vertex)) -> Result<()> {
        let t = self.net.target();
        let n = self.net.n_vertices();
        for v in [a, m] {
            if v.0 == 0 || v.0 > n {
                return Err(Error::InvalidParameter(format!("vertex {v} is outside 1..={n}")));
            }
            if v == t {
                return Err(Error::InvalidParameter(format!("vertex {v} is the target")));
            }
        }
        Ok(())
    }

    fn solve_one(&self, k: usize, (a, m): (Vertex, Vertex)) -> Result<Impact> {
        let sample = &self.samples[k];
        let key = (self.cfg.master_seed, sample.sample_index, a, m);
        if let Some(v) = self.cache.get(&key) {
            return Ok(v);
        }
        let sys = SystemRealization::from_laplacian(sample, a, self.net.target(), m)?;
        let value = solve_impact(&ImpactProblem::new(sys))
            .map_err(|e| Error::Sample { sample: sample.sample_index, source: Box::new(e) })?
            .value;
        self.cache.insert(key, value);
        Ok(value)
    }

    pub fn estimate(&self, pair: (Vertex, Vertex)) -> Result<RiskEstimate> {
        Ok(self.estimate_all(&[pair])?.remove(0))
    }

    /// Estimates every pair; all `(pair, sample)` solves run in parallel and
    /// are merged in sample order.
    pub fn estimate_all(&self, pairs: &[(Vertex, Vertex)]) -> Result<Vec<RiskEstimate>> {
        for &p in pairs {
            self.check_pair(p)?;
        }
        let m1 = self.samples.len();
        let outcomes: Vec<Result<Impact>> = (0..pairs.len() * m1)
            .into_par_iter()
            .map(|job| self.solve_one(job % m1, pairs[job / m1]))
            .collect();
        let mut out = Vec::with_capacity(pairs.len());
        for (p, chunk) in pairs.iter().zip(outcomes.chunks(m1.max(1))) {
            let mut values = Vec::with_capacity(m1);
            let mut failed = Vec::new();
            for (k, r) in chunk.iter().enumerate() {
                match (r, self.policy) {
                    (Ok(v), _) => values.push(*v),
                    (Err(e), FailurePolicy::Propagate) => return Err(e.clone()),
                    (Err(_), FailurePolicy::CountAsUnbounded) => {
                        failed.push(self.samples[k].sample_index);
                        values.push(Impact::Unbounded);
                    }
                }
            }
            out.push(RiskEstimate::from_samples(*p, values, failed, &self.cfg.risk_levels)?);
        }
        Ok(out)
    }
}

/// One-shot estimate for a single pair.
pub fn estimate_pair_risk(net: &UncertainNetwork, pair: (Vertex, Vertex), cfg: &ScenarioConfig) -> Result<RiskEstimate> {
    ScenarioRunner::new(net, cfg.clone())?.estimate(pair)
}
