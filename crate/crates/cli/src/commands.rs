use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use riskplace_core::game::{assemble_payoffs, deviation_gap, find_pure_saddle, solve_mixed_nash, GameSolution, PayoffMatrix};
use riskplace_core::netgraph::nominal_laplacian;
use riskplace_core::risk::{required_samples, FailurePolicy, RiskEstimate, ScenarioConfig, ScenarioRunner};
use riskplace_core::sysid::{all_pairs, feasibility_verdict, relative_degree, Output, SystemRealization, Verdict};
use riskplace_core::{Impact, UncertainNetwork, Vertex};
use serde::{Deserialize, Serialize};

use crate::config::LoadedConfig;
use crate::run::{RunDir, RunManifest};
use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityRow {
    pub attack: Vertex,
    pub monitor: Vertex,
    pub verdict: Verdict,
    pub monitor_relative_degree: usize,
    pub target_relative_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityTable {
    pub rows: Vec<FeasibilityRow>,
    /// Monitors feasible against every attack.
    pub universal_monitors: Vec<Vertex>,
}

impl FeasibilityTable {
    pub fn verdict(&self, attack: Vertex, monitor: Vertex) -> Option<Verdict> {
        self.rows.iter().find(|r| r.attack == attack && r.monitor == monitor).map(|r| r.verdict)
    }

    /// Monitors whose relative degree exceeds the target's for some attack.
    /// The comparison depends only on the topology, so these columns are
    /// unbounded on every sample.
    pub fn structurally_excluded(&self) -> Vec<Vertex> {
        let mut out: Vec<Vertex> = self
            .rows
            .iter()
            .filter(|r| r.verdict == Verdict::InfeasibleRelativeDegree)
            .map(|r| r.monitor)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn to_text(&self, actions: &[Vertex]) -> String {
        let mut out = String::from("verdict per pair on the nominal realization (F feasible, R relative degree, Z unstable zero)\n");
        let _ = write!(out, "{:>6}", "");
        for m in actions {
            let _ = write!(out, "{:>5}", format!("m={m}"));
        }
        out.push('\n');
        for &a in actions {
            let _ = write!(out, "{:>6}", format!("a={a}"));
            for &m in actions {
                let mark = match self.verdict(a, m) {
                    Some(Verdict::Feasible) => "F",
                    Some(Verdict::InfeasibleRelativeDegree) => "R",
                    Some(Verdict::InfeasibleUnstableZero) => "Z",
                    None => "?",
                };
                let _ = write!(out, "{mark:>5}");
            }
            out.push('\n');
        }
        let list: Vec<String> = self.universal_monitors.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(out, "monitors feasible against every attack: {{{}}}", list.join(", "));
        out
    }

    fn to_csv(&self) -> Result<String, Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["attack", "monitor", "verdict", "monitor_relative_degree", "target_relative_degree"])?;
        for r in &self.rows {
            w.write_record([
                r.attack.to_string(),
                r.monitor.to_string(),
                verdict_name(r.verdict).to_string(),
                r.monitor_relative_degree.to_string(),
                r.target_relative_degree.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("flushing feasibility table: {e}"))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Feasible => "feasible",
        Verdict::InfeasibleRelativeDegree => "infeasible_relative_degree",
        Verdict::InfeasibleUnstableZero => "infeasible_unstable_zero",
    }
}

pub fn feasibility_table(net: &UncertainNetwork) -> Result<FeasibilityTable, Failure> {
    let l = nominal_laplacian(net);
    let mut rows = Vec::new();
    for (a, m) in all_pairs(net) {
        let sys = SystemRealization::from_laplacian(&l, a, net.target(), m)?;
        rows.push(FeasibilityRow {
            attack: a,
            monitor: m,
            verdict: feasibility_verdict(&sys)?,
            monitor_relative_degree: relative_degree(&sys, Output::Monitor)?,
            target_relative_degree: relative_degree(&sys, Output::Target)?,
        });
    }
    let universal_monitors = net
        .actions()
        .into_iter()
        .filter(|&m| rows.iter().filter(|r| r.monitor == m).all(|r| r.verdict == Verdict::Feasible))
        .collect();
    Ok(FeasibilityTable { rows, universal_monitors })
}

pub fn cmd_feasibility(cfg: &LoadedConfig, out: Option<&Path>) -> Result<FeasibilityTable, Failure> {
    let mut manifest = RunManifest::new("feasibility", cfg);
    let table = manifest.timed("feasibility", || feasibility_table(&cfg.network))?;
    if let Some(out) = out {
        let dir = RunDir::create(out)?;
        dir.write_config(cfg)?;
        dir.write_text("feasibility.csv", &table.to_csv()?)?;
        dir.write_manifest(&manifest)?;
    }
    Ok(table)
}

#[derive(Debug, Clone, Default)]
pub struct RiskOptions {
    pub pairs: Option<Vec<(Vertex, Vertex)>>,
    pub levels: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    /// Accept fewer samples than the sample-size bound asks for.
    pub force: bool,
    /// Skip monitor columns that are unbounded for structural reasons.
    pub screen: bool,
    /// Abort on the first failed per-sample solve instead of counting it.
    pub strict: bool,
}

impl RiskOptions {
    pub fn effective_scenario(&self, base: &ScenarioConfig) -> ScenarioConfig {
        let mut s = base.clone();
        if let Some(levels) = &self.levels {
            s.risk_levels = levels.clone();
        }
        if let Some(seed) = self.seed {
            s.master_seed = seed;
        }
        if let Some(m1) = self.samples {
            s.m1 = m1;
        }
        s
    }
}

/// Everything the risk phase produced; serialized as `estimates.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRun {
    pub config_digest: String,
    pub scenario: ScenarioConfig,
    /// Monitors left out by screening; unbounded against some attack on every sample.
    pub screened_monitors: Vec<Vertex>,
    pub estimates: Vec<RiskEstimate>,
}

impl RiskRun {
    pub fn failed_samples(&self) -> usize {
        self.estimates.iter().map(|e| e.failed_samples.len()).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
struct VarEntry {
    attack: Vertex,
    monitor: Vertex,
    var: Impact,
}

#[derive(Debug, Clone, Serialize)]
struct LevelTable {
    beta: f64,
    entries: Vec<VarEntry>,
}

#[derive(Debug, Clone, Serialize)]
struct VarTables<'a> {
    config_digest: &'a str,
    master_seed: u64,
    m1: usize,
    screened_monitors: &'a [Vertex],
    levels: Vec<LevelTable>,
}

fn var_tables(run: &RiskRun) -> VarTables<'_> {
    let levels = run
        .scenario
        .risk_levels
        .iter()
        .map(|&beta| LevelTable {
            beta,
            entries: run
                .estimates
                .iter()
                .map(|e| VarEntry { attack: e.attack, monitor: e.monitor, var: e.var_at(beta).unwrap_or(Impact::Unbounded) })
                .collect(),
        })
        .collect();
    VarTables {
        config_digest: &run.config_digest,
        master_seed: run.scenario.master_seed,
        m1: run.scenario.m1,
        screened_monitors: &run.screened_monitors,
        levels,
    }
}

fn risk_text(run: &RiskRun) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "VaR per pair ({} samples, seed {}, {} failed samples)",
        run.scenario.m1,
        run.scenario.master_seed,
        run.failed_samples()
    );
    let _ = write!(out, "{:>10}{:>10}", "pair", "bounded");
    for b in &run.scenario.risk_levels {
        let _ = write!(out, "{:>14}", format!("beta={b}"));
    }
    out.push('\n');
    for e in &run.estimates {
        let _ = write!(out, "{:>10}{:>10}", format!("a={},m={}", e.attack, e.monitor), e.bounded_count);
        for &b in &run.scenario.risk_levels {
            let v = e.var_at(b).unwrap_or(Impact::Unbounded);
            let _ = write!(out, "{:>14}", format!("{v:.6}"));
        }
        out.push('\n');
    }
    if !run.screened_monitors.is_empty() {
        let list: Vec<String> = run.screened_monitors.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(out, "screened monitors (structurally unbounded): {{{}}}", list.join(", "));
    }
    out
}

fn required_check(s: &ScenarioConfig, force: bool) -> Result<(), Failure> {
    s.validate_parameters().map_err(|e| Failure::Config(e.to_string()))?;
    let need = required_samples(s.epsilon1, s.beta1).map_err(|e| Failure::Config(e.to_string()))?;
    if s.m1 < need && !force {
        return Err(Failure::Config(format!(
            "{} samples requested but epsilon1 = {}, beta1 = {} require at least {need}; pass --force to run anyway",
            s.m1, s.epsilon1, s.beta1
        )));
    }
    Ok(())
}

/// Runs the scenario phase without touching the filesystem.
pub fn run_risk(cfg: &LoadedConfig, opts: &RiskOptions) -> Result<RiskRun, Failure> {
    let scenario = opts.effective_scenario(&cfg.config.scenario);
    required_check(&scenario, opts.force)?;
    let net = &cfg.network;

    let (pairs, screened_monitors) = match &opts.pairs {
        Some(p) => (p.clone(), Vec::new()),
        None if opts.screen => {
            let excluded = feasibility_table(net)?.structurally_excluded();
            let kept: Vec<Vertex> = net.actions().into_iter().filter(|m| !excluded.contains(m)).collect();
            let pairs = net.actions().into_iter().flat_map(|a| kept.iter().map(move |&m| (a, m))).collect();
            (pairs, excluded)
        }
        None => (all_pairs(net), Vec::new()),
    };
    let policy = if opts.strict { FailurePolicy::Propagate } else { FailurePolicy::CountAsUnbounded };
    let runner = ScenarioRunner::forced(net, scenario.clone())?.with_policy(policy);
    let estimates = runner.estimate_all(&pairs)?;
    Ok(RiskRun { config_digest: cfg.digest(), scenario, screened_monitors, estimates })
}

fn write_risk(dir: &RunDir, run: &RiskRun) -> Result<(), Failure> {
    for e in &run.estimates {
        dir.write_samples(e)?;
    }
    dir.write_json("estimates.json", run)?;
    dir.write_json("var.json", &var_tables(run))?;
    Ok(())
}

fn apply_scenario(manifest: &mut RunManifest, s: &ScenarioConfig) {
    manifest.seed = s.master_seed;
    manifest.m1 = s.m1;
    manifest.risk_levels = s.risk_levels.clone();
}

pub fn cmd_risk(cfg: &LoadedConfig, opts: &RiskOptions, out: &Path) -> Result<RiskRun, Failure> {
    let mut manifest = RunManifest::new("risk", cfg);
    let run = manifest.timed("risk", || run_risk(cfg, opts))?;
    apply_scenario(&mut manifest, &run.scenario);
    manifest.failed_samples = run.failed_samples();
    let dir = RunDir::create(out)?;
    dir.write_config(cfg)?;
    write_risk(&dir, &run)?;
    dir.write_text("report.txt", &risk_text(&run))?;
    dir.write_manifest(&manifest)?;
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub beta: f64,
    pub payoff: PayoffMatrix,
    /// Pure saddle found by direct search over the finite columns.
    pub pure_saddle: Option<(Vertex, Vertex)>,
    pub solution: GameSolution,
    /// Monitors left out before the payoff matrix was built.
    pub screened_monitors: Vec<Vertex>,
    /// `|detector value - attacker value|`.
    pub duality_gap: f64,
    /// Largest violation of the no-deviation inequalities.
    pub max_deviation: f64,
}

impl GameReport {
    /// Direct saddle search and the equilibrium mixes agree on whether the
    /// game has a pure solution.
    pub fn coherent(&self) -> bool {
        self.pure_saddle.is_some() == self.solution.pure_saddle.is_some()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "payoff matrix at beta = {}", self.beta);
        out.push_str(&self.payoff.to_text(4));
        let _ = writeln!(out, "game value {:.6}", self.solution.value);
        match self.pure_saddle {
            Some((a, m)) => {
                let _ = writeln!(out, "pure saddle point: attack {a}, monitor {m}");
            }
            None => out.push_str("no pure saddle point\n"),
        }
        let mix = |actions: &[Vertex], p: &[f64]| -> String {
            actions
                .iter()
                .zip(p)
                .filter(|(_, &x)| x > 1e-9)
                .map(|(v, x)| format!("{v}: {:.2}%", 100.0 * x))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(out, "detector mix: {}", mix(&self.payoff.monitor_actions, &self.solution.detector_mix));
        let _ = writeln!(out, "attacker mix: {}", mix(&self.payoff.attack_actions, &self.solution.attacker_mix));
        let pruned: Vec<String> = self
            .screened_monitors
            .iter()
            .chain(&self.solution.pruned_monitors)
            .map(|m| m.to_string())
            .collect();
        if !pruned.is_empty() {
            let _ = writeln!(out, "monitors excluded (unbounded payoff): {{{}}}", pruned.join(", "));
        }
        if self.solution.alternative_optima {
            out.push_str("note: the equilibrium mixes may not be unique\n");
        }
        let _ = writeln!(out, "duality gap {:.2e}, max deviation gain {:.2e}", self.duality_gap, self.max_deviation);
        out
    }
}

pub fn solve_game(run: &RiskRun, beta: f64) -> Result<GameReport, Failure> {
    let payoff = assemble_payoffs(&run.estimates, beta)?;
    let pure_saddle = find_pure_saddle(&payoff)?;
    let solution = solve_mixed_nash(&payoff)?;
    let duality_gap = (solution.detector_value - solution.attacker_value).abs();
    let max_deviation = deviation_gap(&payoff, &solution);
    Ok(GameReport {
        beta,
        payoff,
        pure_saddle,
        solution,
        screened_monitors: run.screened_monitors.clone(),
        duality_gap,
        max_deviation,
    })
}

pub fn game_file_name(beta: f64) -> String {
    format!("game_beta{beta}.json")
}

pub enum GameSource<'a> {
    /// Compute the risk phase from a config first.
    Config(&'a LoadedConfig, RiskOptions),
    /// Reload `estimates.json` from an earlier run directory.
    RunDir(PathBuf),
}

pub fn load_risk_run(dir: &Path) -> Result<RiskRun, Failure> {
    let path = dir.join("estimates.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

pub fn cmd_game(source: GameSource<'_>, level: Option<f64>, out: &Path) -> Result<Vec<GameReport>, Failure> {
    let dir = RunDir::create(out)?;
    let run = match source {
        GameSource::Config(cfg, opts) => {
            let mut manifest = RunManifest::new("game", cfg);
            let run = manifest.timed("risk", || run_risk(cfg, &opts))?;
            apply_scenario(&mut manifest, &run.scenario);
            manifest.failed_samples = run.failed_samples();
            dir.write_config(cfg)?;
            write_risk(&dir, &run)?;
            dir.write_manifest(&manifest)?;
            run
        }
        GameSource::RunDir(path) => load_risk_run(&path)?,
    };
    let levels = match level {
        Some(b) => vec![b],
        None => run.scenario.risk_levels.clone(),
    };
    let mut reports = Vec::new();
    let mut text = String::new();
    for beta in levels {
        if !run.scenario.risk_levels.iter().any(|&b| (b - beta).abs() <= 1e-12) {
            return Err(Failure::Config(format!("risk level {beta} was not computed in this run")));
        }
        let report = solve_game(&run, beta)?;
        dir.write_json(&game_file_name(beta), &report)?;
        text.push_str(&report.to_text());
        text.push('\n');
        reports.push(report);
    }
    dir.write_text("game.txt", &text)?;
    Ok(reports)
}

/// Outcome of the full example pipeline.
#[derive(Debug, Clone)]
pub struct Reproduction {
    pub feasibility: FeasibilityTable,
    pub risk: RiskRun,
    pub games: Vec<GameReport>,
    pub sheet: String,
}

struct Published {
    feasible_monitors: &'static [usize],
    unbounded_pairs: &'static [(usize, usize)],
    /// `(attack, monitor, beta, value)`.
    payoffs: &'static [(usize, usize, f64, f64)],
    saddle_low: (usize, usize),
    mixed_high: &'static str,
}

const PUBLISHED: Published = Published {
    feasible_monitors: &[2, 6],
    unbounded_pairs: &[(3, 1), (10, 3)],
    payoffs: &[(1, 2, 0.15, 1.4603), (1, 6, 0.15, 1.4856), (10, 2, 0.15, 1.5550), (10, 6, 0.15, 1.4803)],
    saddle_low: (10, 6),
    mixed_high: "m 6: 94.72%, 2: 5.28% / a 1: 74.71%, 10: 25.29%",
};

fn comparison_sheet(cfg: &LoadedConfig, table: &FeasibilityTable, risk: &RiskRun, games: &[GameReport]) -> String {
    let s = &risk.scenario;
    let mut rows: Vec<(String, String, String, String)> = Vec::new();
    let need = required_samples(s.epsilon1, s.beta1).unwrap_or(0);
    rows.push((
        format!("required samples (eps1={}, beta1={})", s.epsilon1, s.beta1),
        "448 <= 450".into(),
        format!("{need} <= {}", s.m1),
        "exact".into(),
    ));
    let ours: Vec<String> = table.universal_monitors.iter().map(|m| m.to_string()).collect();
    let theirs: Vec<String> = PUBLISHED.feasible_monitors.iter().map(|m| m.to_string()).collect();
    rows.push((
        "monitors feasible against all attacks".into(),
        format!("{{{}}}", theirs.join(", ")),
        format!("{{{}}}", ours.join(", ")),
        "exact".into(),
    ));
    let n = cfg.network.n_vertices();
    for &(a, m) in PUBLISHED.unbounded_pairs {
        if a > n || m > n {
            continue;
        }
        let v = table.verdict(Vertex(a), Vertex(m));
        let shown = match v {
            Some(Verdict::Feasible) => "bounded".to_string(),
            Some(other) => format!("inf ({})", verdict_name(other)),
            None => "n/a".into(),
        };
        rows.push((format!("J(a={a}, m={m})"), "inf".into(), shown, "exact, every sample".into()));
    }
    for &(a, m, beta, value) in PUBLISHED.payoffs {
        let ours = risk
            .estimates
            .iter()
            .find(|e| e.attack == Vertex(a) && e.monitor == Vertex(m))
            .and_then(|e| e.var_at(beta));
        let shown = ours.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        let within = ours.and_then(|v| v.finite()).is_some_and(|x| x / value <= 10.0 && value / x <= 10.0);
        rows.push((
            format!("J(a={a}, m={m}; beta={beta})"),
            format!("{value:.4}"),
            shown,
            format!("within one decade: {}", if within { "yes" } else { "no" }),
        ));
    }
    for g in games {
        let published = if (g.beta - 0.08).abs() < 1e-12 {
            format!("saddle (a={}, m={})", PUBLISHED.saddle_low.0, PUBLISHED.saddle_low.1)
        } else if (g.beta - 0.15).abs() < 1e-12 {
            format!("mixed: {}", PUBLISHED.mixed_high)
        } else {
            "n/a".into()
        };
        let ours = match g.solution.pure_saddle {
            Some((a, m)) => format!("saddle (a={a}, m={m})"),
            None => {
                let mix = |actions: &[Vertex], p: &[f64]| {
                    actions
                        .iter()
                        .zip(p)
                        .filter(|(_, &x)| x > 1e-9)
                        .map(|(v, x)| format!("{v}: {:.2}%", 100.0 * x))
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                format!(
                    "mixed: m {} / a {}",
                    mix(&g.payoff.monitor_actions, &g.solution.detector_mix),
                    mix(&g.payoff.attack_actions, &g.solution.attacker_mix)
                )
            }
        };
        let note = if g.coherent() { "saddle search and LP agree" } else { "saddle search and LP DISAGREE" };
        rows.push((format!("equilibrium at beta={}", g.beta), published, ours, note.into()));
    }
    let mut all_finite: Vec<f64> = risk
        .estimates
        .iter()
        .flat_map(|e| e.var_by_level.iter().filter_map(|l| l.var.finite()))
        .collect();
    all_finite.sort_by(f64::total_cmp);
    if let (Some(lo), Some(hi)) = (all_finite.first(), all_finite.last()) {
        let ok = *lo >= 0.146 && *hi <= 15.9;
        rows.push((
            "finite payoff range".into(),
            "[1.46, 1.59]".into(),
            format!("[{lo:.4}, {hi:.4}]"),
            format!("within one decade: {}", if ok { "yes" } else { "no" }),
        ));
    }

    let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(8);
    let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0).max(9);
    let w2 = rows.iter().map(|r| r.2.len()).max().unwrap_or(0).max(8);
    let mut out = String::new();
    let _ = writeln!(out, "{:<w0$}  {:<w1$}  {:<w2$}  note", "quantity", "published", "this run");
    for (q, p, o, n) in rows {
        let _ = writeln!(out, "{q:<w0$}  {p:<w1$}  {o:<w2$}  {n}");
    }
    out
}

/// Runs feasibility, screened risk and game phases on `cfg` and writes the
/// full bundle with a comparison sheet into `out`.
pub fn cmd_reproduce(cfg: &LoadedConfig, out: &Path) -> Result<Reproduction, Failure> {
    let dir = RunDir::create(out)?;
    let mut manifest = RunManifest::new("reproduce", cfg);
    dir.write_config(cfg)?;

    let table = manifest
        .timed("feasibility", || feasibility_table(&cfg.network))
        .map_err(Failure::in_phase("feasibility"))?;
    dir.write_text("feasibility.csv", &table.to_csv().map_err(Failure::in_phase("feasibility"))?)?;

    let opts = RiskOptions { screen: true, ..Default::default() };
    let risk = manifest.timed("risk", || run_risk(cfg, &opts)).map_err(Failure::in_phase("risk"))?;
    manifest.failed_samples = risk.failed_samples();
    write_risk(&dir, &risk)?;

    let games = manifest
        .timed("game", || risk.scenario.risk_levels.iter().map(|&b| solve_game(&risk, b)).collect::<Result<Vec<_>, _>>())
        .map_err(Failure::in_phase("game"))?;
    for g in &games {
        dir.write_json(&game_file_name(g.beta), g)?;
    }

    let sheet = comparison_sheet(cfg, &table, &risk, &games);
    let mut report = String::new();
    report.push_str(&table.to_text(&cfg.network.actions()));
    report.push('\n');
    report.push_str(&risk_text(&risk));
    for g in &games {
        report.push('\n');
        report.push_str(&g.to_text());
    }
    report.push_str("\ncomparison with published values\n");
    report.push_str(&sheet);
    dir.write_text("report.txt", &report)?;
    dir.write_manifest(&manifest)?;
    Ok(Reproduction { feasibility: table, risk, games, sheet })
}

