//! Run directory layout and writers.
//!
//! ```text
//! <out>/manifest.json         provenance: tool version, config digest, seed, sample counts
//! <out>/timing.json           per-phase wall-clock time
//! <out>/config.toml           the exact input config (hashed in the manifest)
//! <out>/feasibility.csv       structural verdict per pair, nominal realization
//! <out>/samples/a{a}_m{m}.csv per-sample gamma* for one pair
//! <out>/estimates.json        every per-pair estimate, reloadable by `game`
//! <out>/var.json              VaR tables per risk level
//! <out>/game_beta{b}.json     payoff matrix and equilibrium per level
//! <out>/report.txt            human-readable summary
//! ```
//!
//! Everything except `timing.json` is a pure function of the config and seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use riskplace_core::risk::RiskEstimate;
use riskplace_core::{Impact, Vertex};
use serde::{Deserialize, Serialize};

use crate::config::LoadedConfig;
use crate::Failure;

pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root).with_context(|| format!("creating run directory {}", root.display()))?;
        Ok(RunDir { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<(), Failure> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<(), Failure> {
        self.write_json("manifest.json", manifest)?;
        self.write_json("timing.json", &manifest.timing)
    }

    pub fn write_config(&self, cfg: &LoadedConfig) -> Result<(), Failure> {
        self.write_text("config.toml", &cfg.text)
    }

    pub fn write_samples(&self, est: &RiskEstimate) -> Result<(), Failure> {
        let name = format!("samples/a{}_m{}.csv", est.attack, est.monitor);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["pair", "sample_index", "gamma_star"])?;
        let pair = pair_label(est.attack, est.monitor);
        for (k, v) in est.sample_values.iter().enumerate() {
            w.write_record([pair.as_str(), &(k + 1).to_string(), &impact_cell(*v)])?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("flushing {name}: {e}"))?;
        self.write_text(&name, &String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

pub fn pair_label(a: Vertex, m: Vertex) -> String {
    format!("a{a}-m{m}")
}

/// CSV cell for an impact: shortest round-trip decimal, or `inf`.
pub fn impact_cell(v: Impact) -> String {
    match v {
        Impact::Finite(x) => format!("{x:?}"),
        Impact::Unbounded => "inf".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_source: String,
    pub config_digest: String,
    pub seed: u64,
    pub m1: usize,
    pub epsilon1: f64,
    pub beta1: f64,
    pub risk_levels: Vec<f64>,
    pub failed_samples: usize,
    /// Written to `timing.json` so the manifest itself stays reproducible.
    #[serde(skip)]
    pub timing: Vec<PhaseTiming>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &LoadedConfig) -> Self {
        let s = &cfg.config.scenario;
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_source: cfg.source.clone(),
            config_digest: cfg.digest(),
            seed: s.master_seed,
            m1: s.m1,
            epsilon1: s.epsilon1,
            beta1: s.beta1,
            risk_levels: s.risk_levels.clone(),
            failed_samples: 0,
            timing: Vec::new(),
        }
    }

    /// Runs `f` and records its wall-clock time under `phase`.
    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timing.push(PhaseTiming { phase: phase.to_string(), seconds: start.elapsed().as_secs_f64() });
        out
    }
}
