//! Linear-systems analysis of one sampled realization
//! `(A = -L, B = e_a, C = [e_tau; e_m]^T, D = 0)`: relative degrees, finite
//! and infinite invariant zeros, the uniform self-loop gain shift, and the
//! structural verdict deciding whether the worst-case impact is finite.

pub mod poly;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, unit};
use crate::netgraph::{SampledLaplacian, UncertainNetwork, Vertex};

/// `|C A^k B|` below this, with `A` normalized to unit infinity norm, counts as zero.
pub const MARKOV_TOL: f64 = 1e-9;

/// A finite zero with `Re >= -UNSTABLE_MARGIN` counts as unstable.
pub const UNSTABLE_MARGIN: f64 = 1e-9;

/// One attack/target/monitor realization. The feedthrough is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemRealization {
    a_matrix: DMatrix<f64>,
    attack: Vertex,
    target: Vertex,
    monitor: Vertex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Target,
    Monitor,
}

impl SystemRealization {
    pub fn new(a_matrix: DMatrix<f64>, attack: Vertex, target: Vertex, monitor: Vertex) -> Result<Self> {
        let n = a_matrix.nrows();
        if a_matrix.ncols() != n || n == 0 {
            return Err(Error::InvalidRealization("state matrix must be square and non-empty".into()));
        }
        for (name, v) in [("attack", attack), ("target", target), ("monitor", monitor)] {
            if v.0 == 0 || v.0 > n {
                return Err(Error::InvalidRealization(format!("{name} vertex {v} out of range 1..={n}")));
            }
        }
        if attack == target {
            return Err(Error::InvalidRealization(format!("attack vertex {attack} is the protected target")));
        }
        if monitor == target {
            return Err(Error::InvalidRealization(format!("monitor vertex {monitor} is the unmeasurable target")));
        }
        Ok(SystemRealization { a_matrix, attack, target, monitor })
    }

    /// `A = -L` for a sampled Laplacian.
    pub fn from_laplacian(l: &SampledLaplacian, attack: Vertex, target: Vertex, monitor: Vertex) -> Result<Self> {
        Self::new(-&l.matrix, attack, target, monitor)
    }

    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.a_matrix
    }

    pub fn n(&self) -> usize {
        self.a_matrix.nrows()
    }

    pub fn attack(&self) -> Vertex {
        self.attack
    }

    pub fn target(&self) -> Vertex {
        self.target
    }

    pub fn monitor(&self) -> Vertex {
        self.monitor
    }

    pub fn input(&self) -> DVector<f64> {
        unit(self.n(), self.attack.index())
    }

    pub fn output(&self, which: Output) -> DVector<f64> {
        let v = match which {
            Output::Target => self.target,
            Output::Monitor => self.monitor,
        };
        unit(self.n(), v.index())
    }

    fn output_vertex(&self, which: Output) -> Vertex {
        match which {
            Output::Target => self.target,
            Output::Monitor => self.monitor,
        }
    }

    /// The same realization with `A` replaced by `A - shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let n = self.n();
        SystemRealization { a_matrix: &self.a_matrix - DMatrix::identity(n, n) * shift, ..self.clone() }
    }

    /// Normalization scale for `A`; never zero.
    pub(crate) fn scale(&self) -> f64 {
        let s = inf_norm(&self.a_matrix);
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }
}

/// Smallest `r >= 1` with `C A^(r-1) B != 0`.
pub fn relative_degree(sys: &SystemRealization, output: Output) -> Result<usize> {
    let a = sys.a_matrix() / sys.scale();
    let c = sys.output(output);
    let mut v = sys.input();
    for r in 1..=sys.n() {
        if c.dot(&v).abs() >= MARKOV_TOL {
            return Ok(r);
        }
        v = &a * v;
    }
    Err(Error::DecoupledChannel { attack: sys.attack().0, output: sys.output_vertex(output).0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroReport {
    #[serde(serialize_with = "serialize_complex")]
    pub finite_zeros: Vec<Complex<f64>>,
    /// Equals the relative degree of the SISO channel.
    pub infinite_zero_count: usize,
    pub has_unstable_finite_zero: bool,
}

fn serialize_complex<S: serde::Serializer>(z: &[Complex<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(z.len()))?;
    for v in z {
        seq.serialize_element(&[v.re, v.im])?;
    }
    seq.end()
}

impl ZeroReport {
    pub fn max_real_part(&self) -> Option<f64> {
        self.finite_zeros.iter().map(|z| z.re).reduce(f64::max)
    }
}

/// Finite and infinite invariant zeros of the SISO channel `attack -> output`.
///
/// The transfer numerator `C adj(sI - A) B` comes from the Faddeev-LeVerrier
/// expansion of the normalized state matrix; leading coefficients below
/// [`MARKOV_TOL`] are deflated and counted as zeros at infinity, and the
/// remaining polynomial is solved through its companion matrix.
pub fn invariant_zeros(sys: &SystemRealization, output: Output) -> Result<ZeroReport> {
    let scale = sys.scale();
    let a = sys.a_matrix() / scale;
    let num = poly::numerator_coefficients(&a, &sys.input(), &sys.output(output));
    let lead = num
        .iter()
        .position(|c| c.abs() >= MARKOV_TOL)
        .ok_or(Error::DecoupledChannel { attack: sys.attack().0, output: sys.output_vertex(output).0 })?;
    let finite_zeros: Vec<Complex<f64>> =
        poly::polynomial_roots(&num[lead..]).into_iter().map(|z| z * scale).collect();
    let has_unstable_finite_zero = finite_zeros.iter().any(|z| z.re >= -UNSTABLE_MARGIN);
    Ok(ZeroReport { finite_zeros, infinite_zero_count: lead + 1, has_unstable_finite_zero })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Feasible,
    InfeasibleRelativeDegree,
    InfeasibleUnstableZero,
}

impl Verdict {
    pub fn is_feasible(self) -> bool {
        self == Verdict::Feasible
    }
}

/// Structural verdict on whether the worst-case stealthy impact is finite:
/// the monitor relative degree must not exceed the target's, and the monitor
/// channel must have no unstable finite zero.
pub fn feasibility_verdict(sys: &SystemRealization) -> Result<Verdict> {
    let r_target = relative_degree(sys, Output::Target)?;
    let r_monitor = relative_degree(sys, Output::Monitor)?;
    if r_monitor > r_target {
        return Ok(Verdict::InfeasibleRelativeDegree);
    }
    if invariant_zeros(sys, Output::Monitor)?.has_unstable_finite_zero {
        return Ok(Verdict::InfeasibleUnstableZero);
    }
    Ok(Verdict::Feasible)
}

/// All ordered (attack, monitor) pairs over the non-target vertices.
pub fn all_pairs(net: &UncertainNetwork) -> Vec<(Vertex, Vertex)> {
    let actions = net.actions();
    actions.iter().flat_map(|&a| actions.iter().map(move |&m| (a, m))).collect()
}

/// Largest real part of any finite monitor-channel zero over the samples and pairs.
pub fn max_monitor_zero(
    net: &UncertainNetwork,
    samples: &[SampledLaplacian],
    pairs: &[(Vertex, Vertex)],
) -> Result<Option<f64>> {
    let mut worst: Option<f64> = None;
    for s in samples {
        for &(a, m) in pairs {
            let sys = SystemRealization::from_laplacian(s, a, net.target(), m)?;
            if let Some(re) = invariant_zeros(&sys, Output::Monitor)?.max_real_part() {
                worst = Some(worst.map_or(re, |w| w.max(re)));
            }
        }
    }
    Ok(worst)
}

/// Uniform self-loop offset `theta0 >= 0` that, added to every gain, leaves
/// no monitor channel of any sample with a finite zero in the closed right
/// half-plane.
///
/// Adding `theta0` to every gain shifts every finite zero by `-theta0`, so
/// the offset only has to exceed the largest real part found. The result is
/// re-verified on the shifted realizations.
pub fn design_gain_shift(
    net: &UncertainNetwork,
    samples: &[SampledLaplacian],
    pairs: &[(Vertex, Vertex)],
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("gain shift design needs at least one sample".into()));
    }
    let worst = match max_monitor_zero(net, samples, pairs)? {
        Some(re) if re >= -UNSTABLE_MARGIN => re,
        _ => return Ok(0.0),
    };
    let mut margin = 1e-3 * worst.abs().max(1.0);
    loop {
        let theta0 = worst.max(0.0) + margin;
        let shifted: Vec<SampledLaplacian> = samples
            .iter()
            .map(|s| SampledLaplacian {
                matrix: &s.matrix + DMatrix::identity(s.n(), s.n()) * theta0,
                ..s.clone()
            })
            .collect();
        match max_monitor_zero(net, &shifted, pairs)? {
            Some(re) if re >= -UNSTABLE_MARGIN => margin *= 2.0,
            _ => return Ok(theta0),
        }
    }
}
