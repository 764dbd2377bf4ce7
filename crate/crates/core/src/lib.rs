//! Risk-based sensor placement against stealthy data-injection attacks on
//! uncertain networked control systems.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! - [`netgraph`]: the uncertain weighted graph and i.i.d. Laplacian samples;
//! - [`sysid`]: relative degrees, invariant zeros, the uniform gain shift and
//!   the structural feasibility verdict for one attack/monitor pair;
//! - [`sdp`]: worst-case stealthy impact per sample from a linear matrix
//!   inequality, solved by bisection over a dense interior-point method, plus
//!   an independent frequency-domain oracle;
//! - [`risk`]: scenario sample sizes and empirical Value-at-Risk;
//! - [`game`]: the detector-vs-adversary payoff matrix and its pure and
//!   mixed equilibria.

pub mod error;
pub mod fixture;
pub mod game;
pub mod impact;
pub mod linalg;
pub mod netgraph;
pub mod risk;
pub mod sdp;
pub mod sysid;

pub use error::{Error, Result};
pub use impact::Impact;
pub use netgraph::{SampledLaplacian, UncertainNetwork, Vertex};
