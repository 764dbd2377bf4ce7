//! The shipped 10-vertex example network.
//!
//! The edge list is a reconstruction: only the drawing of the original graph
//! exists, so this topology was chosen to satisfy every structural statement
//! made about it, with target vertex 5:
//!
//! - relative degrees `r(a=3 -> 5) = 2 < r(a=3 -> 1) = 3` and
//!   `r(a=10 -> 5) = 2 < r(a=10 -> 3) = 3`;
//! - vertices 2 and 6 are the only monitors whose relative degree never
//!   exceeds the target's, whatever the attacked vertex.
//!
//! Payoff magnitudes computed on it are therefore not expected to match the
//! published ones digit for digit.

use crate::netgraph::{GainSpec, NetworkSpec, UncertainNetwork};

pub const EXAMPLE_EDGES: [[usize; 2]; 14] = [
    [1, 2],
    [1, 7],
    [2, 3],
    [2, 4],
    [2, 10],
    [3, 5],
    [3, 6],
    [4, 5],
    [4, 6],
    [5, 10],
    [6, 9],
    [6, 10],
    [7, 8],
    [8, 9],
];

pub const EXAMPLE_TARGET: usize = 5;
pub const EXAMPLE_NOMINAL_WEIGHT: f64 = -10.0;
pub const EXAMPLE_UNCERTAINTY: [f64; 2] = [-0.5, 0.5];
pub const EXAMPLE_THETA0: f64 = 0.5;

pub fn example_spec() -> NetworkSpec {
    NetworkSpec {
        vertices: 10,
        target: EXAMPLE_TARGET,
        self_loop_gain: GainSpec::Uniform(EXAMPLE_THETA0),
        nominal_weight: EXAMPLE_NOMINAL_WEIGHT,
        uncertainty: EXAMPLE_UNCERTAINTY,
        law: "uniform".into(),
        edges: EXAMPLE_EDGES.to_vec(),
        edge_overrides: Vec::new(),
    }
}

pub fn example_network() -> UncertainNetwork {
    crate::netgraph::build_network(&example_spec()).expect("fixture is valid")
}
