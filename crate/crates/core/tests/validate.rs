mod common;

use common::{gen_at, load_at, network};
use mldkit::contingency::{apply, generate, Scenario};
use mldkit::formulation::{evaluate_ac_mld, objective_weights, AcCandidate};
use mldkit::netmodel::{five_bus_fixture, Branch, Network};
use mldkit::preprocess::preprocess_pipeline;
use mldkit::validate::*;
use mldkit_conic::SolverSettings;

fn without(net: &Network, ids: &[usize]) -> Network {
    apply(net, &Scenario { id: 0, removed_branches: ids.to_vec() }).unwrap()
}

fn lossless_pair() -> Network {
    let mut net = network(2, &[]);
    net.branches = vec![Branch::from_raw(1, 1, 2, 0.0, 0.1, 0.0, None, 0.0, 0.0, -360.0, 360.0).unwrap()];
    net
}

#[test]
fn two_bus_angle_matches_the_closed_form() {
    let net = lossless_pair();
    let mut sp = Setpoints::zero(&net);
    sp.v_set = vec![Some(1.0), Some(1.0)];
    sp.p[1] = -1.0;
    let pf = newton_power_flow(&net, 1, &sp, PF_TOLERANCE, PF_MAX_ITER);
    assert!(pf.converged, "{pf:?}");
    let theta = pf.v[0].arg() - pf.v[1].arg();
    assert!((theta - 0.1f64.asin()).abs() < 1e-9, "{theta}");
    assert!((theta - 0.100167).abs() < 1e-6);
    assert!((pf.v[1].norm() - 1.0).abs() < 1e-15);
}

#[test]
fn flat_start_solves_an_unloaded_network() {
    let mut net = network(4, &[(1, 2), (2, 3), (3, 4), (4, 1)]);
    net.generators = vec![gen_at(1, 1, 0.0, 1.0)];
    let mut sp = Setpoints::zero(&net);
    sp.v_set[0] = Some(1.0);
    let pf = newton_power_flow(&net, 1, &sp, PF_TOLERANCE, PF_MAX_ITER);
    assert!(pf.converged);
    assert!(pf.iterations <= 2);
    assert!(pf.v.iter().all(|v| (v - mldkit::netmodel::Complex::new(1.0, 0.0)).norm() < 1e-12));
}

#[test]
fn failure_is_reported_not_raised() {
    let mut net = lossless_pair();
    net.loads = vec![load_at(1, 2, 50.0, 50.0)];
    let mut sp = Setpoints::zero(&net);
    sp.v_set[0] = Some(1.0);
    sp.p[1] = -50.0;
    sp.q[1] = -50.0;
    let pf = newton_power_flow(&net, 1, &sp, PF_TOLERANCE, PF_MAX_ITER);
    assert!(!pf.converged);

    // Unknown slack.
    let pf = newton_power_flow(&net, 9, &sp, PF_TOLERANCE, PF_MAX_ITER);
    assert!(!pf.converged);
    assert_eq!(pf.iterations, 0);
}

#[test]
fn fixture_power_flow_is_ac_feasible() {
    let net = five_bus_fixture();
    let (cand, report) = candidate_at(&net, 1.0, VoltageRule::Capped).unwrap();
    assert!(report.max_violation <= 1e-8, "{report:?}");
    assert!(report.balance <= PF_TOLERANCE);
    assert!(cand.zv.iter().chain(&cand.zg).chain(&cand.zd).chain(&cand.zs).all(|z| *z == 1.0));
}

#[test]
fn uniform_shed_examples() {
    let net = five_bus_fixture();
    let (gamma, cand) = uniform_shed_bound(&net, 40);
    assert_eq!(gamma, 1.0);
    assert!(evaluate_ac_mld(&net, &cand, CANDIDATE_TOLERANCE).feasible);

    let (pp, _) = preprocess_pipeline(&without(&net, &[2, 3]));
    let (gamma, cand) = uniform_shed_bound(&pp, 40);
    let adj = pp.adjacency();
    let gen3 = pp.generators.iter().position(|g| g.bus == 3).unwrap();
    assert_eq!(cand.zv[adj.pos(3)], 0.0);
    assert_eq!(cand.zg[gen3], 0.0);
    assert!(gamma > 0.0, "{gamma}");
    assert!(evaluate_ac_mld(&pp, &cand, CANDIDATE_TOLERANCE).feasible);

    let mut lonely = network(1, &[]);
    lonely.loads = vec![load_at(1, 1, 0.4, 0.1)];
    let (gamma, cand) = uniform_shed_bound(&lonely, 40);
    assert_eq!(gamma, 0.0);
    assert_eq!(cand.zd, vec![0.0]);
    assert!(evaluate_ac_mld(&lonely, &cand, CANDIDATE_TOLERANCE).feasible);
}

#[test]
fn shed_everything_is_always_feasible() {
    for net in [five_bus_fixture(), common::case("case30")] {
        let r = evaluate_ac_mld(&net, &shed_everything(&net), 0.0);
        assert!(r.feasible, "{r:?}");
        assert_eq!(r.objective.weighted, 0.0);
    }
}

#[test]
fn gap_examples() {
    let settings = SolverSettings::default();
    let intact = gap_estimate(&five_bus_fixture(), &settings).unwrap();
    assert!(intact.gap_pct <= 0.1, "{intact:?}");
    assert_eq!(intact.gamma, 1.0);

    let mut lonely = network(1, &[]);
    lonely.loads = vec![load_at(1, 1, 0.4, 0.1)];
    let g = gap_estimate(&lonely, &settings).unwrap();
    let floor = objective_weights(&lonely).m_v;
    assert_eq!(g.lower, floor);
    assert!((g.upper - g.lower).abs() <= 1e-5 * (1.0 + g.upper.abs()), "{g:?}");

    let damaged = gap_estimate(&without(&five_bus_fixture(), &[5, 3]), &settings).unwrap();
    assert!(damaged.gap_pct.is_finite());
    assert!(damaged.lower <= damaged.upper + 1e-5 * (1.0 + damaged.upper.abs()), "{damaged:?}");
}

#[test]
fn bounds_are_ordered_under_damage() {
    let settings = SolverSettings::default();
    for case in ["fixture", "case14"] {
        let net = if case == "fixture" { five_bus_fixture() } else { common::case(case) };
        for s in generate(&net, 0.2, 8, 21).unwrap().scenarios {
            let g = gap_estimate(&apply(&net, &s).unwrap(), &settings).unwrap();
            assert!(g.lower <= g.upper + 1e-5 * (1.0 + g.upper.abs()), "{case} {}: {g:?}", s.id);
        }
    }
}

#[test]
fn candidates_are_feasible_and_newton_is_quadratic() {
    for case in ["fixture", "case14", "case30"] {
        let net = if case == "fixture" { five_bus_fixture() } else { common::case(case) };
        for s in generate(&net, 0.1, 6, 4).unwrap().scenarios {
            let (pp, _) = preprocess_pipeline(&apply(&net, &s).unwrap());
            let (_, cand) = uniform_shed_bound(&pp, 40);
            assert!(evaluate_ac_mld(&pp, &cand, CANDIDATE_TOLERANCE).feasible, "{case} {}", s.id);
        }
        let (pp, _) = preprocess_pipeline(&net);
        let mut sp = Setpoints::zero(&pp);
        let adj = pp.adjacency();
        for l in pp.loads.iter().filter(|l| l.in_service) {
            sp.p[adj.pos(l.bus)] -= 0.5 * l.demand.re;
            sp.q[adj.pos(l.bus)] -= 0.5 * l.demand.im;
        }
        let slack = pp.generators.iter().find(|g| g.in_service).unwrap().bus;
        sp.v_set[adj.pos(slack)] = Some(1.0);
        let pf = newton_power_flow(&pp, slack, &sp, PF_TOLERANCE, PF_MAX_ITER);
        assert!(pf.converged, "{case}: {:?}", pf.history);
        let h = &pf.history;
        assert!(h.len() >= 3, "{case}: {h:?}");
        let ratio = h[h.len() - 1] / h[h.len() - 2];
        eprintln!("{case}: newton mismatch history {h:?}");
        assert!(ratio < 0.1, "{case}: {h:?}");
    }
}

#[test]
fn candidate_dimensions_cover_the_whole_network() {
    let net = without(&five_bus_fixture(), &[2, 3]);
    let (pp, _) = preprocess_pipeline(&net);
    let (_, cand): (f64, AcCandidate) = uniform_shed_bound(&pp, 10);
    assert_eq!(cand.v.len(), net.buses.len());
    assert_eq!(cand.sg.len(), net.generators.len());
    assert_eq!(cand.zd.len(), net.loads.len());
    assert_eq!(cand.zs.len(), net.shunts.len());
}
