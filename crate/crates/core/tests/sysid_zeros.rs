mod common;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskplace_core::fixture::example_network;
use riskplace_core::netgraph::{nominal_laplacian, sample_set, SampledLaplacian, Vertex};
use riskplace_core::sysid::{
    all_pairs, design_gain_shift, feasibility_verdict, invariant_zeros, relative_degree, Output,
    SystemRealization, Verdict,
};

/// Zeros as the spectrum of the zero dynamics: `A - B (C A^(r-1) B)^-1 C A^r`
/// restricted to the kernel of `[C; C A; ..; C A^(r-1)]`.
fn zero_dynamics_spectrum(sys: &SystemRealization, output: Output) -> Vec<Complex<f64>> {
    let a = sys.a_matrix().clone();
    let n = a.nrows();
    let b = sys.input();
    let c = sys.output(output).transpose();
    let r = relative_degree(sys, output).unwrap();
    let mut obs = DMatrix::zeros(r, n);
    let mut row = c.clone();
    for k in 0..r {
        obs.set_row(k, &row);
        row = &row * &a;
    }
    // row now holds C A^r
    let car1b = (&c * a.pow((r - 1) as u32) * &b)[(0, 0)];
    let closed = &a - &b * &row / car1b;
    let svd = obs.clone().svd(true, true);
    let vt = svd.v_t.unwrap();
    let full = DMatrix::<f64>::identity(n, n);
    // kernel basis: right singular vectors beyond the rank, completed if the SVD is thin
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let proj = vt.transpose() * &vt;
    let resid = &full - proj;
    let eig = resid.symmetric_eigen();
    for k in 0..n {
        if eig.eigenvalues[k] > 0.5 {
            basis.push(eig.eigenvectors.column(k).into_owned());
        }
    }
    assert_eq!(basis.len(), n - r);
    if basis.is_empty() {
        return Vec::new();
    }
    let nb = DMatrix::from_columns(&basis);
    (nb.transpose() * closed * &nb).complex_eigenvalues().iter().copied().collect()
}

/// Smallest singular value of the Rosenbrock pencil at `z`, relative to the largest.
fn pencil_rank_gap(sys: &SystemRealization, output: Output, z: Complex<f64>) -> f64 {
    let a = sys.a_matrix();
    let n = a.nrows();
    let b = sys.input();
    let c = sys.output(output);
    let mut p = DMatrix::<Complex<f64>>::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] = Complex::new(-a[(i, j)], 0.0);
        }
        p[(i, i)] += z;
        p[(i, n)] = Complex::new(-b[i], 0.0);
        p[(n, i)] = Complex::new(c[i], 0.0);
    }
    let s = p.singular_values();
    s.min() / s.max()
}

fn match_within(got: &[Complex<f64>], want: &[Complex<f64>], tol: f64) -> f64 {
    assert_eq!(got.len(), want.len(), "zero counts differ: {got:?} vs {want:?}");
    let mut used = vec![false; want.len()];
    let mut worst: f64 = 0.0;
    for g in got {
        let (k, d) = want
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, w)| (k, (g - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        used[k] = true;
        assert!(d <= tol * g.norm().max(1.0), "zero {g} has no partner within {tol}: {want:?}");
        worst = worst.max(d);
    }
    worst
}

fn random_pairs(seed: u64, count: usize, sizes: std::ops::RangeInclusive<usize>) -> Vec<SystemRealization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| {
        let n = rng.gen_range(sizes.clone());
        common::random_realization(&mut rng, n)
    }).collect()
}

#[test]
fn finite_zeros_match_zero_dynamics_and_pencil() {
    for (k, sys) in random_pairs(11, 40, 4..=6).iter().enumerate() {
        for output in [Output::Monitor, Output::Target] {
            let report = invariant_zeros(sys, output).unwrap();
            let oracle = zero_dynamics_spectrum(sys, output);
            match_within(&report.finite_zeros, &oracle, 1e-6);
            for &z in &report.finite_zeros {
                let gap = pencil_rank_gap(sys, output, z);
                assert!(gap <= 1e-8, "instance {k}: pencil keeps full rank at {z} (gap {gap:e})");
            }
        }
    }
}

#[test]
fn infinite_zero_count_is_relative_degree() {
    for sys in random_pairs(12, 30, 3..=7) {
        for output in [Output::Monitor, Output::Target] {
            let report = invariant_zeros(&sys, output).unwrap();
            assert!(report.infinite_zero_count >= 1);
            assert_eq!(report.infinite_zero_count, relative_degree(&sys, output).unwrap());
            assert_eq!(report.finite_zeros.len() + report.infinite_zero_count, sys.n());
        }
    }
}

#[test]
fn relative_degree_is_graph_distance_plus_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let n = rng.gen_range(3..=8);
        let net = common::random_network(&mut rng, n);
        let l = nominal_laplacian(&net);
        for (a, m) in all_pairs(&net) {
            let sys = SystemRealization::from_laplacian(&l, a, net.target(), m).unwrap();
            assert_eq!(relative_degree(&sys, Output::Monitor).unwrap(), net.distance(a, m) + 1);
            assert_eq!(relative_degree(&sys, Output::Target).unwrap(), net.distance(a, net.target()) + 1);
        }
    }
}

#[test]
fn shift_moves_every_zero_by_the_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst: f64 = 0.0;
    for sys in random_pairs(15, 20, 4..=7) {
        let theta0 = rng.gen_range(0.1..2.0);
        let before = invariant_zeros(&sys, Output::Monitor).unwrap();
        let after = invariant_zeros(&sys.shifted(theta0), Output::Monitor).unwrap();
        let expected: Vec<Complex<f64>> = before.finite_zeros.iter().map(|z| z - theta0).collect();
        worst = worst.max(match_within(&after.finite_zeros, &expected, 1e-8));
        assert_eq!(after.infinite_zero_count, before.infinite_zero_count);
    }
    assert!(worst <= 1e-8, "worst deviation {worst:e}");
}

#[test]
fn verdict_survives_scaling_the_state_matrix() {
    for sys in random_pairs(16, 40, 3..=7) {
        let v = feasibility_verdict(&sys).unwrap();
        for c in [0.5, 2.0] {
            let scaled =
                SystemRealization::new(sys.a_matrix() * c, sys.attack(), sys.target(), sys.monitor()).unwrap();
            assert_eq!(feasibility_verdict(&scaled).unwrap(), v);
        }
    }
}

#[test]
fn gain_shift_clears_unstable_monitor_zeros() {
    // pulling every gain down by 2 pushes the monitor zeros to the right;
    // the designed offset must bring all of them back into the open left half-plane
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut exercised = 0;
    for _ in 0..40 {
        let n = rng.gen_range(4..=7);
        let net = common::random_network(&mut rng, n);
        let nominal = nominal_laplacian(&net);
        let pulled = SampledLaplacian { matrix: &nominal.matrix - DMatrix::identity(n, n) * 2.0, ..nominal };
        let pairs: Vec<(Vertex, Vertex)> = all_pairs(&net)
            .into_iter()
            .filter(|&(a, m)| net.distance(a, m) <= net.distance(a, net.target()))
            .collect();
        let theta0 = design_gain_shift(&net, std::slice::from_ref(&pulled), &pairs).unwrap();
        if theta0 > 0.0 {
            exercised += 1;
        }
        let fixed = SampledLaplacian { matrix: &pulled.matrix + DMatrix::identity(n, n) * theta0, ..pulled };
        for &(a, m) in &pairs {
            let sys = SystemRealization::from_laplacian(&fixed, a, net.target(), m).unwrap();
            assert!(!invariant_zeros(&sys, Output::Monitor).unwrap().has_unstable_finite_zero);
        }
    }
    assert!(exercised > 20, "only {exercised} instances needed a shift");
}

#[test]
fn example_gains_leave_universal_monitors_minimum_phase() {
    let net = example_network();
    let samples = sample_set(&net, 99, 50).unwrap();
    for s in &samples {
        for a in net.actions() {
            for m in [Vertex(2), Vertex(6)] {
                let sys = SystemRealization::from_laplacian(s, a, net.target(), m).unwrap();
                assert_eq!(feasibility_verdict(&sys).unwrap(), Verdict::Feasible, "a={a} m={m}");
            }
        }
    }
}
