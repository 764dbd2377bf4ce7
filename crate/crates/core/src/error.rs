use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("graph is disconnected: vertex {0} is unreachable from vertex 1")]
    Disconnected(usize),

    #[error("invalid system realization: {0}")]
    InvalidRealization(String),

    #[error("output vertex {output} is decoupled from attack vertex {attack}")]
    DecoupledChannel { attack: usize, output: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("interior-point solver did not converge after {iterations} iterations")]
    SolverNonConvergence { iterations: usize },

    #[error("bisection observed feasibility at gamma={feasible} but infeasibility at gamma={infeasible}")]
    NonMonotoneBisection { feasible: f64, infeasible: f64 },

    #[error("sample {sample}: {source}")]
    Sample {
        sample: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("frequency grid too coarse to bracket the peak near {omega} rad/s")]
    GridTooCoarse { omega: f64 },

    #[error("payoff table is missing pair (a={attack}, m={monitor})")]
    MissingPair { attack: usize, monitor: usize },

    #[error("no secure placement: every monitor column has an unbounded payoff")]
    NoSecurePlacement,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
