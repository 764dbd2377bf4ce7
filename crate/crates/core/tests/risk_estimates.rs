use proptest::prelude::*;
use riskplace_core::fixture::example_spec;
use riskplace_core::netgraph::{build_network, Vertex};
use riskplace_core::risk::{empirical_var, order_statistic_rank, ScenarioConfig, ScenarioRunner};
use riskplace_core::Impact;

fn small_config(m1: usize) -> ScenarioConfig {
    ScenarioConfig { epsilon1: 0.06, beta1: 0.08, m1, risk_levels: vec![0.08, 0.15, 0.3], master_seed: 7 }
}

const PAIRS: [(Vertex, Vertex); 3] = [(Vertex(10), Vertex(6)), (Vertex(1), Vertex(2)), (Vertex(3), Vertex(1))];

#[test]
fn estimates_are_reproducible_byte_for_byte() {
    let net = build_network(&example_spec()).unwrap();
    let run = || {
        let runner = ScenarioRunner::forced(&net, small_config(12)).unwrap();
        serde_json::to_string(&runner.estimate_all(&PAIRS).unwrap()).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn pair_order_does_not_change_values() {
    let net = build_network(&example_spec()).unwrap();
    let runner = ScenarioRunner::forced(&net, small_config(8)).unwrap();
    let forward = runner.estimate_all(&PAIRS).unwrap();
    let mut reversed = PAIRS;
    reversed.reverse();
    let runner = ScenarioRunner::forced(&net, small_config(8)).unwrap();
    let mut backward = runner.estimate_all(&reversed).unwrap();
    backward.reverse();
    assert_eq!(forward, backward);
}

#[test]
fn zero_width_uncertainty_gives_a_flat_var_curve() {
    let mut spec = example_spec();
    spec.uncertainty = [0.0, 0.0];
    let net = build_network(&spec).unwrap();
    let runner = ScenarioRunner::forced(&net, small_config(6)).unwrap();
    let est = runner.estimate((Vertex(10), Vertex(6))).unwrap();
    let first = est.sample_values[0];
    assert!(first.is_finite());
    assert!(est.sample_values.iter().all(|v| *v == first));
    assert!(est.var_by_level.iter().all(|l| l.var == first));
}

#[test]
fn unbounded_pair_has_unbounded_var_everywhere() {
    let net = build_network(&example_spec()).unwrap();
    let runner = ScenarioRunner::forced(&net, small_config(5)).unwrap();
    let est = runner.estimate((Vertex(3), Vertex(1))).unwrap();
    assert_eq!(est.bounded_count, 0);
    assert!(est.var_by_level.iter().all(|l| l.var == Impact::Unbounded));
}

#[test]
fn order_statistic_boundaries() {
    assert_eq!(order_statistic_rank(450, 0.08), 414);
    assert_eq!(order_statistic_rank(450, 0.15), 383);
    assert_eq!(order_statistic_rank(450, 1.0 / 450.0), 449);
    assert_eq!(order_statistic_rank(450, 1e-9), 450);
    assert_eq!(order_statistic_rank(450, 0.999_999), 1);
    assert_eq!(order_statistic_rank(1, 0.5), 1);
    // exact products must not round up a rank
    assert_eq!(order_statistic_rank(100, 0.1), 90);
    assert_eq!(order_statistic_rank(50, 0.02), 49);
    let values: Vec<Impact> = (1..=10).map(|k| Impact::Finite(k as f64)).collect();
    assert_eq!(empirical_var(&values, 0.1).unwrap(), Impact::Finite(9.0));
    assert_eq!(empirical_var(&values, 0.95).unwrap(), Impact::Finite(1.0));
    assert!(empirical_var(&values, 0.0).is_err());
    assert!(empirical_var(&values, 1.0).is_err());
}

fn impact() -> impl Strategy<Value = Impact> {
    prop_oneof![9 => (0.0..10.0f64).prop_map(Impact::Finite), 1 => Just(Impact::Unbounded)]
}

proptest! {
    #[test]
    fn var_is_antitone_in_the_risk_level(
        values in prop::collection::vec(impact(), 1..80),
        b1 in 0.001..0.999f64,
        b2 in 0.001..0.999f64,
    ) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let v_lo = empirical_var(&values, lo).unwrap();
        let v_hi = empirical_var(&values, hi).unwrap();
        prop_assert!(v_hi.total_cmp(&v_lo).is_le());
    }

    #[test]
    fn var_is_one_of_the_samples(values in prop::collection::vec(impact(), 1..40), beta in 0.001..0.999f64) {
        let v = empirical_var(&values, beta).unwrap();
        prop_assert!(values.contains(&v));
    }
}
