mod common;

use riskplace_core::fixture::example_network;
use riskplace_core::netgraph::{nominal_laplacian, Vertex};
use riskplace_core::sdp::{assemble_lmi, solve_impact, ImpactProblem, UnboundedCause};
use riskplace_core::sysid::{feasibility_verdict, SystemRealization};
use riskplace_core::Impact;

#[test]
fn verdict_predicts_boundedness_without_precheck() {
    let feasible = common::realizations_where(31, 50, 3..=6, |v| v.is_feasible());
    let infeasible = common::realizations_where(32, 20, 3..=6, |v| !v.is_feasible());
    for (k, sys) in feasible.iter().chain(&infeasible).enumerate() {
        let verdict = feasibility_verdict(sys).unwrap();
        let res = solve_impact(&ImpactProblem::new(sys.clone()).without_precheck()).unwrap();
        assert_eq!(res.value.is_finite(), verdict.is_feasible(), "instance {k}: {verdict:?} gave {:?}", res.value);
        if !verdict.is_feasible() {
            assert!(matches!(res.cause, Some(UnboundedCause::EmptyFace | UnboundedCause::CapHit)));
        }
    }
}

#[test]
fn impact_scales_linearly_with_alarm_threshold() {
    for (k, sys) in common::realizations_where(33, 10, 3..=6, |v| v.is_feasible()).into_iter().enumerate() {
        let g1 = solve_impact(&ImpactProblem::new(sys.clone())).unwrap().value.finite().unwrap();
        let g2 = solve_impact(&ImpactProblem::new(sys).with_alarm_threshold(2.0)).unwrap().value.finite().unwrap();
        assert!((g2 - 2.0 * g1).abs() <= 1e-6 * g2.max(1.0), "instance {k}: {g2} vs 2 x {g1}");
    }
}

#[test]
fn certificates_are_feasible_points() {
    for sys in common::realizations_where(34, 15, 3..=6, |v| v.is_feasible()) {
        let res = solve_impact(&ImpactProblem::new(sys.clone())).unwrap();
        let cert = res.certificate.unwrap();
        assert_eq!(Impact::Finite(cert.gamma), res.value);
        assert!(cert.lmi_max_eig <= 1e-6, "lmi max eig {}", cert.lmi_max_eig);
        assert!(cert.p_min_eig >= -1e-8, "p min eig {}", cert.p_min_eig);
        assert!(res.stats.monotone);
        // the certificate must not survive a visibly smaller gamma
        let lower = assemble_lmi(&sys, 0.9 * cert.gamma, &cert.p);
        let eig = lower.symmetric_eigen().eigenvalues.max();
        assert!(eig > 0.0, "certificate still valid at 0.9 gamma");
    }
}

#[test]
fn example_network_pairs_have_the_expected_boundedness() {
    let net = example_network();
    let l = nominal_laplacian(&net);
    let solve = |a: usize, m: usize| {
        let sys = SystemRealization::from_laplacian(&l, Vertex(a), net.target(), Vertex(m)).unwrap();
        solve_impact(&ImpactProblem::new(sys)).unwrap().value
    };
    for a in net.actions() {
        assert!(solve(a.0, 6).is_finite(), "a={a} m=6");
    }
    assert_eq!(solve(3, 1), Impact::Unbounded);
    assert_eq!(solve(10, 3), Impact::Unbounded);
}
