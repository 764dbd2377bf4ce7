//! Library side of the `riskplace` command: config loading, the pipeline
//! phases and the run-directory layout.

pub mod commands;
pub mod config;
pub mod run;

use std::fmt;

pub use commands::{cmd_feasibility, cmd_game, cmd_reproduce, cmd_risk, GameSource, RiskOptions};
pub use config::{LoadedConfig, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_NO_SECURE_PLACEMENT: i32 = 5;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Solver(riskplace_core::Error),
    NoSecurePlacement,
    Io(anyhow::Error),
    /// A failure inside a named phase of `reproduce`.
    Phase(&'static str, Box<Failure>),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Solver(_) => EXIT_SOLVER,
            Failure::NoSecurePlacement => EXIT_NO_SECURE_PLACEMENT,
            Failure::Io(_) => EXIT_OTHER,
            Failure::Phase(_, inner) => inner.exit_code(),
        }
    }

    pub fn in_phase(phase: &'static str) -> impl FnOnce(Failure) -> Failure {
        move |f| Failure::Phase(phase, Box::new(f))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(msg) => write!(f, "configuration error: {msg}"),
            Failure::Solver(e) => write!(f, "solver failure: {e}"),
            Failure::NoSecurePlacement => {
                write!(f, "no secure placement: every monitor has an unbounded payoff against some attack")
            }
            Failure::Io(e) => write!(f, "{e:#}"),
            Failure::Phase(phase, inner) => write!(f, "{phase} phase: {inner}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<riskplace_core::Error> for Failure {
    fn from(e: riskplace_core::Error) -> Self {
        use riskplace_core::Error as E;
        match e {
            E::NoSecurePlacement => Failure::NoSecurePlacement,
            E::InvalidNetwork(_) | E::Disconnected(_) | E::InvalidParameter(_) | E::MissingPair { .. } => {
                Failure::Config(e.to_string())
            }
            other => Failure::Solver(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.into())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}
