use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riskplace_cli::{
    cmd_feasibility, cmd_game, cmd_reproduce, cmd_risk, Failure, GameSource, LoadedConfig, RiskOptions,
};
use riskplace_core::Vertex;

#[derive(Parser)]
#[command(name = "riskplace", version, about = "Risk-based sensor placement against stealthy data-injection attacks")]
struct Cli {
    /// Worker threads for the scenario phase (default: all logical cores).
    #[arg(long, global = true, env = "RISKPLACE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural verdict for every (attack, monitor) pair on the nominal network.
    Feasibility {
        config: PathBuf,
        /// Also write feasibility.csv and a manifest here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-sample worst-case impacts and VaR tables.
    Risk {
        config: PathBuf,
        #[command(flatten)]
        risk: RiskArgs,
        #[arg(long, default_value = "riskplace-run")]
        out: PathBuf,
    },
    /// Payoff matrix and equilibrium at one or all risk levels.
    Game {
        /// Run configuration; the risk phase is computed first.
        #[arg(required_unless_present = "from_run", conflicts_with = "from_run")]
        config: Option<PathBuf>,
        /// Reuse estimates.json from an earlier `risk` run directory.
        #[arg(long)]
        from_run: Option<PathBuf>,
        /// Risk level; all configured levels when omitted.
        #[arg(long)]
        level: Option<f64>,
        #[command(flatten)]
        risk: RiskArgs,
        #[arg(long, default_value = "riskplace-run")]
        out: PathBuf,
    },
    /// Full pipeline on the shipped example (or a given config) with a comparison sheet.
    Reproduce {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "riskplace-reproduce")]
        out: PathBuf,
    },
}

#[derive(Args, Clone, Default)]
struct RiskArgs {
    /// Pairs to evaluate, e.g. `a=10,m=6;a=1,m=2`.
    #[arg(long, value_parser = parse_pairs)]
    pairs: Option<PairList>,
    /// Risk levels, comma separated; overrides the config.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Sample count M1; overrides the config.
    #[arg(long)]
    samples: Option<usize>,
    /// Run even if the sample count is below the required bound.
    #[arg(long)]
    force: bool,
    /// Only evaluate monitors that are structurally feasible against every attack.
    #[arg(long)]
    screen: bool,
    /// Abort on the first failed per-sample solve.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Debug)]
struct PairList(Vec<(Vertex, Vertex)>);

fn parse_pairs(s: &str) -> Result<PairList, String> {
    let mut out = Vec::new();
    for item in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let (mut a, mut m) = (None, None);
        for part in item.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(|| format!("expected key=value in `{part}`"))?;
            let v: usize = value.trim().parse().map_err(|_| format!("bad vertex `{value}`"))?;
            match key.trim() {
                "a" => a = Some(Vertex(v)),
                "m" => m = Some(Vertex(v)),
                other => return Err(format!("unknown key `{other}`, expected a or m")),
            }
        }
        match (a, m) {
            (Some(a), Some(m)) => out.push((a, m)),
            _ => return Err(format!("pair `{item}` needs both a= and m=")),
        }
    }
    if out.is_empty() {
        return Err("no pairs given".into());
    }
    Ok(PairList(out))
}

impl RiskArgs {
    fn options(&self) -> RiskOptions {
        RiskOptions {
            pairs: self.pairs.clone().map(|p| p.0),
            levels: self.levels.clone(),
            seed: self.seed,
            samples: self.samples,
            force: self.force,
            screen: self.screen,
            strict: self.strict,
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot start {n} worker threads: {e}")))?;
    }
    match cli.command {
        Command::Feasibility { config, out } => {
            let cfg = LoadedConfig::load(&config)?;
            let table = cmd_feasibility(&cfg, out.as_deref())?;
            print!("{}", table.to_text(&cfg.network.actions()));
        }
        Command::Risk { config, risk, out } => {
            let cfg = LoadedConfig::load(&config)?;
            let result = cmd_risk(&cfg, &risk.options(), &out)?;
            print!("{}", std::fs::read_to_string(out.join("report.txt"))?);
            if result.failed_samples() > 0 {
                eprintln!("warning: {} per-sample solves failed and were counted as unbounded", result.failed_samples());
            }
        }
        Command::Game { config, from_run, level, risk, out } => {
            let reports = match (config, from_run) {
                (_, Some(dir)) => cmd_game(GameSource::RunDir(dir), level, &out)?,
                (Some(path), None) => {
                    let cfg = LoadedConfig::load(&path)?;
                    cmd_game(GameSource::Config(&cfg, risk.options()), level, &out)?
                }
                (None, None) => return Err(Failure::Config("either a config or --from-run is required".into())),
            };
            for r in reports {
                println!("{}", r.to_text());
            }
        }
        Command::Reproduce { config, out } => {
            let cfg = match config {
                Some(path) => LoadedConfig::load(&path)?,
                None => LoadedConfig::example(),
            };
            let rep = cmd_reproduce(&cfg, &out)?;
            print!("{}", rep.sheet);
            println!("bundle written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
