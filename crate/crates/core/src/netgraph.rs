//! Uncertain networked control systems as weighted undirected graphs, and
//! i.i.d. sampling of their Laplacian realizations.
//!
//! A realization is assembled as
//!
//! ```text
//! L[i][j] = nominal_ij + delta_ij                       (i != j, edge)
//! L[i][i] = -sum_{j in N(i)} (nominal_ij + delta_ij) + theta_i
//! ```
//!
//! with one `delta` per undirected edge drawn uniformly from its interval.
//! Nominal off-diagonal weights are negative (they are Laplacian entries, not
//! adjacency weights), so `L` is symmetric positive definite whenever every
//! `theta_i > 0` and every coupling stays negative.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vertex label, 1-based as in the usual graph notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vertex(pub usize);

impl Vertex {
    pub fn from_index(index: usize) -> Self {
        Vertex(index + 1)
    }

    /// 0-based matrix index.
    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Self-loop gains: either one value for every vertex or a per-vertex list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainSpec {
    Uniform(f64),
    PerVertex(Vec<f64>),
}

/// Per-edge override of the default weight and uncertainty interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeOverride {
    pub edge: [usize; 2],
    #[serde(default)]
    pub nominal_weight: Option<f64>,
    #[serde(default)]
    pub uncertainty: Option<[f64; 2]>,
}

/// Network description as written in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub vertices: usize,
    pub target: usize,
    pub self_loop_gain: GainSpec,
    /// Default nominal Laplacian entry for every listed edge.
    pub nominal_weight: f64,
    /// Default uncertainty interval `[lo, hi]` for every listed edge.
    #[serde(default)]
    pub uncertainty: [f64; 2],
    /// Only `"uniform"` is supported.
    #[serde(default = "default_law")]
    pub law: String,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub edge_overrides: Vec<EdgeOverride>,
}

fn default_law() -> String {
    "uniform".to_string()
}

/// One undirected edge with 0-based endpoints `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub nominal: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Edge {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A validated uncertain network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertainNetwork {
    n: usize,
    edges: Vec<Edge>,
    theta: Vec<f64>,
    target: Vertex,
}

/// `((u, v), nominal_weight, (lo, hi))` with 1-based endpoints.
pub type EdgeInput = ((usize, usize), f64, (f64, f64));

impl UncertainNetwork {
    /// Validates and builds a network from raw parts. Endpoints are 1-based.
    ///
    /// A pair listed twice must carry identical weight and bounds in both
    /// entries; otherwise the weights are asymmetric and rejected.
    pub fn new(
        n: usize,
        edges: &[EdgeInput],
        theta: Vec<f64>,
        target: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidNetwork("network needs at least one vertex".into()));
        }
        if target == 0 || target > n {
            return Err(Error::InvalidNetwork(format!("target vertex {target} out of range 1..={n}")));
        }
        if theta.len() != n {
            return Err(Error::InvalidNetwork(format!(
                "expected {n} self-loop gains, got {}",
                theta.len()
            )));
        }
        if let Some((k, t)) = theta.iter().enumerate().find(|(_, t)| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::InvalidNetwork(format!(
                "self-loop gain of vertex {} must be positive, got {t}",
                k + 1
            )));
        }

        let mut by_pair: BTreeMap<(usize, usize), Edge> = BTreeMap::new();
        for &((u, v), nominal, (lo, hi)) in edges {
            if u == 0 || v == 0 || u > n || v > n {
                return Err(Error::InvalidNetwork(format!("edge ({u}, {v}) out of range 1..={n}")));
            }
            if u == v {
                return Err(Error::InvalidNetwork(format!("self-loop edge ({u}, {v})")));
            }
            if !(nominal.is_finite() && lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidNetwork(format!("edge ({u}, {v}) has non-finite data")));
            }
            if lo > hi {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({u}, {v}) has empty interval [{lo}, {hi}]"
                )));
            }
            let (i, j) = if u < v { (u - 1, v - 1) } else { (v - 1, u - 1) };
            let edge = Edge { i, j, nominal, lo, hi };
            if let Some(prev) = by_pair.get(&(i, j)) {
                if *prev != edge {
                    return Err(Error::InvalidNetwork(format!(
                        "asymmetric weights on edge ({u}, {v})"
                    )));
                }
            }
            by_pair.insert((i, j), edge);
        }

        let net = UncertainNetwork {
            n,
            edges: by_pair.into_values().collect(),
            theta,
            target: Vertex(target),
        };
        if let Some(v) = net.hop_distances(0).iter().position(|d| d.is_none()) {
            return Err(Error::Disconnected(v + 1));
        }
        Ok(net)
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn self_loop_gains(&self) -> &[f64] {
        &self.theta
    }

    pub fn target(&self) -> Vertex {
        self.target
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        (1..=self.n).map(Vertex)
    }

    /// All vertices other than the target, in increasing order.
    pub fn actions(&self) -> Vec<Vertex> {
        self.vertices().filter(|&v| v != self.target).collect()
    }

    pub fn with_target(&self, target: Vertex) -> Result<Self> {
        if target.0 == 0 || target.0 > self.n {
            return Err(Error::InvalidNetwork(format!("target vertex {target} out of range")));
        }
        Ok(UncertainNetwork { target, ..self.clone() })
    }

    /// Adds `theta0` to every self-loop gain.
    pub fn with_gain_shift(&self, theta0: f64) -> Result<Self> {
        let theta: Vec<f64> = self.theta.iter().map(|t| t + theta0).collect();
        if theta.iter().any(|t| t.is_nan() || *t <= 0.0) {
            return Err(Error::InvalidParameter(format!("gain shift {theta0} makes a gain non-positive")));
        }
        Ok(UncertainNetwork { theta, ..self.clone() })
    }

    /// Multiplies every nominal weight and interval endpoint by `factor`.
    pub fn with_weight_scale(&self, factor: f64) -> Result<Self> {
        if factor.is_nan() || factor <= 0.0 {
            return Err(Error::InvalidParameter(format!("scale factor must be positive, got {factor}")));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { nominal: e.nominal * factor, lo: e.lo * factor, hi: e.hi * factor, ..*e })
            .collect();
        Ok(UncertainNetwork { edges, ..self.clone() })
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|e| {
                if e.i == v {
                    Some(e.j)
                } else if e.j == v {
                    Some(e.i)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Hop distances from the 0-based vertex `from`; `None` when unreachable.
    pub fn hop_distances(&self, from: usize) -> Vec<Option<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        let mut dist = vec![None; self.n];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &w in &adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn distance(&self, a: Vertex, b: Vertex) -> usize {
        self.hop_distances(a.index())[b.index()].expect("validated networks are connected")
    }

    /// Assembles the Laplacian for the given per-edge perturbations.
    pub fn laplacian_with(&self, deltas: &[f64]) -> DMatrix<f64> {
        assert_eq!(deltas.len(), self.edges.len());
        let mut l = DMatrix::zeros(self.n, self.n);
        for (e, d) in self.edges.iter().zip(deltas) {
            let w = e.nominal + d;
            l[(e.i, e.j)] = w;
            l[(e.j, e.i)] = w;
            l[(e.i, e.i)] -= w;
            l[(e.j, e.j)] -= w;
        }
        for (k, t) in self.theta.iter().enumerate() {
            l[(k, k)] += t;
        }
        l
    }
}

/// Builds a validated network from its configuration form.
pub fn build_network(spec: &NetworkSpec) -> Result<UncertainNetwork> {
    if spec.law != "uniform" {
        return Err(Error::InvalidNetwork(format!("unsupported uncertainty law {:?}", spec.law)));
    }
    let theta = match &spec.self_loop_gain {
        GainSpec::Uniform(t) => vec![*t; spec.vertices],
        GainSpec::PerVertex(v) => v.clone(),
    };
    let key = |[u, v]: [usize; 2]| if u < v { (u, v) } else { (v, u) };
    let mut overrides: BTreeMap<(usize, usize), &EdgeOverride> = BTreeMap::new();
    for o in &spec.edge_overrides {
        if overrides.insert(key(o.edge), o).is_some() {
            return Err(Error::InvalidNetwork(format!("duplicate override for edge {:?}", o.edge)));
        }
        if !spec.edges.iter().any(|e| key(*e) == key(o.edge)) {
            return Err(Error::InvalidNetwork(format!("override for unlisted edge {:?}", o.edge)));
        }
    }
    let edges: Vec<_> = spec
        .edges
        .iter()
        .map(|&[u, v]| {
            let o = overrides.get(&key([u, v]));
            let nominal = o.and_then(|o| o.nominal_weight).unwrap_or(spec.nominal_weight);
            let [lo, hi] = o.and_then(|o| o.uncertainty).unwrap_or(spec.uncertainty);
            ((u, v), nominal, (lo, hi))
        })
        .collect();
    UncertainNetwork::new(spec.vertices, &edges, theta, spec.target)
}

/// One Laplacian realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledLaplacian {
    pub matrix: DMatrix<f64>,
    /// 1-based sample index; 0 denotes the nominal realization.
    pub sample_index: usize,
    pub seed_trace: u64,
}

impl SampledLaplacian {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_symmetric(&self) -> bool {
        self.matrix == self.matrix.transpose()
    }

    /// True when `-L` is Hurwitz, i.e. the symmetric `L` is positive definite.
    pub fn is_stable(&self) -> bool {
        self.matrix.clone().cholesky().is_some()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable sub-seed for sample `i` of a run with `master_seed`.
pub fn sample_seed(master_seed: u64, i: usize) -> u64 {
    splitmix64(splitmix64(master_seed) ^ (i as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Draws realization `i >= 1`; a pure function of `(net, master_seed, i)`.
pub fn sample_laplacian(net: &UncertainNetwork, master_seed: u64, i: usize) -> Result<SampledLaplacian> {
    if i == 0 {
        return Err(Error::InvalidParameter("sample indices start at 1".into()));
    }
    let seed = sample_seed(master_seed, i);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deltas: Vec<f64> = net
        .edges
        .iter()
        .map(|e| {
            let u: f64 = rng.gen();
            if e.width() == 0.0 {
                e.lo
            } else {
                e.lo + e.width() * u
            }
        })
        .collect();
    Ok(SampledLaplacian { matrix: net.laplacian_with(&deltas), sample_index: i, seed_trace: seed })
}

/// Draws realizations `1..=m1`.
pub fn sample_set(net: &UncertainNetwork, master_seed: u64, m1: usize) -> Result<Vec<SampledLaplacian>> {
    (1..=m1).map(|i| sample_laplacian(net, master_seed, i)).collect()
}

/// The `Delta = 0` realization.
pub fn nominal_laplacian(net: &UncertainNetwork) -> SampledLaplacian {
    SampledLaplacian {
        matrix: net.laplacian_with(&vec![0.0; net.edges.len()]),
        sample_index: 0,
        seed_trace: 0,
    }
}
