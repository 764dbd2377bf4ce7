#![allow(dead_code)]

pub mod brute;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskplace_core::netgraph::{nominal_laplacian, UncertainNetwork, Vertex};
use riskplace_core::sysid::{feasibility_verdict, SystemRealization, Verdict};

/// Random connected network: a random spanning tree plus extra edges.
pub fn random_network(rng: &mut ChaCha8Rng, n: usize) -> UncertainNetwork {
    let mut edges = Vec::new();
    for v in 2..=n {
        let u = rng.gen_range(1..v);
        edges.push(((u, v), -rng.gen_range(0.5..3.0), (0.0, 0.0)));
    }
    let extra = rng.gen_range(0..=n / 2);
    for _ in 0..extra {
        let u = rng.gen_range(1..=n);
        let v = rng.gen_range(1..=n);
        if u != v && !edges.iter().any(|((a, b), _, _)| (*a, *b) == (u.min(v), u.max(v))) {
            edges.push(((u.min(v), u.max(v)), -rng.gen_range(0.5..3.0), (0.0, 0.0)));
        }
    }
    let theta = (0..n).map(|_| rng.gen_range(0.2..1.5)).collect();
    UncertainNetwork::new(n, &edges, theta, 1).unwrap()
}

pub fn random_realization(rng: &mut ChaCha8Rng, n: usize) -> SystemRealization {
    let net = random_network(rng, n);
    let t = rng.gen_range(1..=n);
    let a = loop {
        let a = rng.gen_range(1..=n);
        if a != t {
            break a;
        }
    };
    let m = loop {
        let m = rng.gen_range(1..=n);
        if m != t {
            break m;
        }
    };
    SystemRealization::from_laplacian(&nominal_laplacian(&net), Vertex(a), Vertex(t), Vertex(m)).unwrap()
}

/// Draws realizations until `want` says yes.
pub fn realizations_where(
    seed: u64,
    count: usize,
    sizes: std::ops::RangeInclusive<usize>,
    want: impl Fn(Verdict) -> bool,
) -> Vec<SystemRealization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let n = rng.gen_range(sizes.clone());
        let sys = random_realization(&mut rng, n);
        if want(feasibility_verdict(&sys).unwrap()) {
            out.push(sys);
        }
    }
    out
}
