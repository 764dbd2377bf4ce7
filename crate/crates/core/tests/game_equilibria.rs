mod common;

use common::brute::support_enumeration;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskplace_core::game::{deviation_gap, expected_payoff, find_pure_saddle, solve_mixed_nash, PayoffMatrix};
use riskplace_core::{Impact, Vertex};

fn to_payoff(j: &DMatrix<f64>) -> PayoffMatrix {
    let rows: Vec<Vec<f64>> = j.row_iter().map(|r| r.iter().copied().collect()).collect();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    PayoffMatrix::from_finite(&refs).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn lp_matches_support_enumeration_on_random_games() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for trial in 0..200 {
        let rows = rng.gen_range(1..=4);
        let cols = rng.gen_range(1..=4);
        let j = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(0.5..2.0));
        let pm = to_payoff(&j);
        let sol = solve_mixed_nash(&pm).unwrap();
        let eqs = support_enumeration(&j);
        assert!(!eqs.is_empty(), "trial {trial}: brute force found nothing");
        for e in &eqs {
            assert!((e.value - sol.value).abs() <= 1e-6, "trial {trial}: {} vs {}", e.value, sol.value);
        }
        if eqs.len() == 1 {
            assert!(max_diff(&eqs[0].p, &sol.attacker_mix) <= 1e-6, "trial {trial}: attacker mix");
            assert!(max_diff(&eqs[0].q, &sol.detector_mix) <= 1e-6, "trial {trial}: detector mix");
        }
        assert!((sol.attacker_value - sol.detector_value).abs() <= 1e-8, "trial {trial}: duality");
        assert!(deviation_gap(&pm, &sol) <= 1e-8, "trial {trial}: deviation");
        let payoff = expected_payoff(&pm, &sol.attacker_mix, &sol.detector_mix).unwrap();
        assert!((payoff - sol.value).abs() <= 1e-8);
    }
}

#[test]
fn shifting_every_payoff_shifts_only_the_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..30 {
        let j = DMatrix::from_fn(3, 4, |_, _| rng.gen_range(0.5..2.0));
        let pm = to_payoff(&j);
        let base = solve_mixed_nash(&pm).unwrap();
        for c in [-1.0, 5.0] {
            let sol = solve_mixed_nash(&pm.shifted(c)).unwrap();
            assert!((sol.value - base.value - c).abs() <= 1e-9);
            if !base.alternative_optima {
                assert!(max_diff(&sol.attacker_mix, &base.attacker_mix) <= 1e-9);
                assert!(max_diff(&sol.detector_mix, &base.detector_mix) <= 1e-9);
            }
        }
    }
}

#[test]
fn two_by_two_closed_form() {
    let (a, b, c, d) = (1.4603, 1.4856, 1.5550, 1.4803);
    let mut pm = PayoffMatrix::from_finite(&[&[a, b], &[c, d]]).unwrap();
    pm.attack_actions = vec![Vertex(1), Vertex(10)];
    pm.monitor_actions = vec![Vertex(2), Vertex(6)];
    assert_eq!(find_pure_saddle(&pm).unwrap(), None);
    let sol = solve_mixed_nash(&pm).unwrap();
    let den = a - b - c + d;
    let q = (d - b) / den;
    let p = (d - c) / den;
    let v = (a * d - b * c) / den;
    assert!((q - 0.0530).abs() < 1e-9);
    assert!((sol.detector_mix[0] - q).abs() <= 1e-6, "{:?}", sol.detector_mix);
    assert!((sol.attacker_mix[0] - p).abs() <= 1e-6, "{:?}", sol.attacker_mix);
    assert!((sol.value - v).abs() <= 1e-6);
    assert!((sol.attacker_value - sol.detector_value).abs() <= 1e-8);
    assert!(deviation_gap(&pm, &sol) <= 1e-8);
}

#[test]
fn constant_game_is_valued_at_the_constant() {
    let pm = PayoffMatrix::from_finite(&[&[1.5, 1.5, 1.5], &[1.5, 1.5, 1.5]]).unwrap();
    let sol = solve_mixed_nash(&pm).unwrap();
    assert!((sol.value - 1.5).abs() <= 1e-12);
    assert!((sol.attacker_mix.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    assert!((sol.detector_mix.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    assert!(find_pure_saddle(&pm).unwrap().is_some());
}

#[test]
fn one_by_one_game_is_a_saddle() {
    let pm = PayoffMatrix::from_finite(&[&[0.7]]).unwrap();
    let sol = solve_mixed_nash(&pm).unwrap();
    assert_eq!(sol.pure_saddle, Some((Vertex(1), Vertex(1))));
    assert!((sol.value - 0.7).abs() <= 1e-12);
}

#[test]
fn unbounded_column_is_never_played() {
    let pm = PayoffMatrix::new(
        0.1,
        vec![Vertex(1), Vertex(2)],
        vec![Vertex(3), Vertex(4), Vertex(5)],
        vec![
            vec![Impact::Finite(1.0), Impact::Unbounded, Impact::Finite(2.0)],
            vec![Impact::Finite(2.0), Impact::Finite(0.1), Impact::Finite(1.0)],
        ],
    )
    .unwrap();
    let sol = solve_mixed_nash(&pm).unwrap();
    assert_eq!(sol.pruned_monitors, vec![Vertex(4)]);
    assert_eq!(sol.detector_mix[1], 0.0);
    assert!((sol.value - 1.5).abs() <= 1e-9);
    assert!(expected_payoff(&pm, &sol.attacker_mix, &sol.detector_mix).unwrap().is_finite());
}
