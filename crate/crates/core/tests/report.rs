mod common;

use mldkit::contingency::{generate, Scenario, ScenarioSet};
use mldkit::netmodel::five_bus_fixture;
use mldkit::report::*;
use mldkit_conic::{SolverSettings, Status};

fn record(id: u64, status: Status, runtime_s: f64, served_fraction: f64) -> BatchRecord {
    BatchRecord {
        scenario_id: id,
        status,
        iterations: 10,
        runtime_s,
        objective: 1.0,
        served_active_pu: served_fraction,
        served_mw: 100.0 * served_fraction,
        served_fraction,
        buses_on: 1.0,
        gens_on: 1.0,
        shunt_retention: 1.0,
        hazards: vec![],
    }
}

fn strip_runtime(mut rs: Vec<BatchRecord>) -> Vec<BatchRecord> {
    for r in &mut rs {
        r.runtime_s = 0.0;
    }
    rs
}

#[test]
fn small_batch_is_deterministic() {
    let net = five_bus_fixture();
    let set = generate(&net, 0.4, 3, 17).unwrap();
    let settings = SolverSettings::default();
    let a = run_batch(&net, &set, &settings, 1).unwrap();
    let b = run_batch(&net, &set, &settings, 3).unwrap();
    assert_eq!(a.len(), 3);
    assert_eq!(strip_runtime(a.clone()), strip_runtime(b.clone()));
    assert_eq!(records_csv(&a).unwrap(), records_csv(&b).unwrap());
    for r in &a {
        assert_eq!(r.status, Status::Optimal);
        assert!((0.0..=1.0 + 1e-7).contains(&r.served_fraction), "{r:?}");
    }
}

#[test]
fn records_follow_scenario_ids() {
    let net = five_bus_fixture();
    let mut set = generate(&net, 0.2, 6, 3).unwrap();
    set.scenarios.reverse();
    let records = run_batch(&net, &set, &SolverSettings::default(), 4).unwrap();
    let ids: Vec<u64> = records.iter().map(|r| r.scenario_id).collect();
    assert_eq!(ids, (0..6).collect::<Vec<_>>());
}

#[test]
fn emptied_network_yields_a_trivial_record() {
    let net = common::network(2, &[(1, 2)]);
    let set = ScenarioSet {
        seed: 0,
        fraction: 1.0,
        count: 1,
        case: "pair".into(),
        scenarios: vec![Scenario { id: 0, removed_branches: vec![1] }],
    };
    let r = &run_batch(&net, &set, &SolverSettings::default(), 1).unwrap()[0];
    assert_eq!(r.status, Status::Optimal);
    assert_eq!(r.iterations, 0);
    assert_eq!(r.served_fraction, 1.0);
}

#[test]
fn hazards_are_flagged() {
    let net = five_bus_fixture();
    let set = ScenarioSet {
        seed: 0,
        fraction: 0.4,
        count: 1,
        case: "fixture".into(),
        scenarios: vec![Scenario { id: 0, removed_branches: vec![2, 3] }],
    };
    let records = run_batch(&net, &set, &SolverSettings::default(), 1).unwrap();
    assert_eq!(records[0].hazards, vec![mldkit::preprocess::HazardKind::GenMinInjection]);
    assert!(records_csv(&records).unwrap().contains(",GenMinInjection\n"));
}

#[test]
fn summary_examples() {
    let full: Vec<_> = (0..4).map(|k| record(k, Status::Optimal, 1.0, 1.0)).collect();
    let s = summarize(&full).unwrap();
    assert_eq!(s.histogram.len(), 51);
    assert_eq!(s.histogram[50], 4);
    assert_eq!(s.histogram.iter().sum::<usize>(), 4);
    assert_eq!(s.served_variance, 0.0);

    let two = [record(0, Status::Optimal, 1.0, 0.5), record(1, Status::Optimal, 3.0, 1.0)];
    let s = summarize(&two).unwrap();
    assert_eq!(s.served_mean, 0.75);
    assert_eq!(s.served_variance, 0.0625);
    assert_eq!(s.histogram[25], 1);
    assert_eq!(s.runtime.mean, 2.0);
    assert_eq!(s.runtime.median, 2.0);

    assert!(matches!(summarize(&[]), Err(ReportError::Empty)));
}

#[test]
fn per_status_runtimes_recompute_from_rows() {
    let rows = [
        record(0, Status::Optimal, 0.5, 1.0),
        record(1, Status::IterLimit, 4.0, 0.2),
        record(2, Status::Optimal, 1.5, 0.9),
        record(3, Status::Optimal, 0.25, 0.31),
        record(4, Status::TimeLimit, 150.0, 0.0),
    ];
    let s = summarize(&rows).unwrap();
    assert_eq!(s.status_counts["Optimal"], 3);
    assert_eq!(s.status_counts["IterLimit"], 1);
    assert_eq!(s.status_counts["TimeLimit"], 1);
    let opt = s.runtime_by_status["Optimal"];
    assert_eq!(opt.mean, (0.5 + 1.5 + 0.25) / 3.0);
    assert_eq!(opt.median, 0.5);
    assert_eq!(s.histogram.iter().sum::<usize>(), rows.len());
    assert_eq!(s.histogram[histogram_bin(0.31)], 1);
    assert_eq!(histogram_bin(0.31), 16);
    assert_eq!(histogram_bin(1.0 - 1e-7), 50);
    assert_eq!(histogram_bin(0.0), 0);
}

#[test]
fn number_format_is_fixed() {
    assert_eq!(sci(1.0), "1.00000000e0");
    assert_eq!(sci(0.123456789123), "1.23456789e-1");
    assert_eq!(sci(-2500.0), "-2.50000000e3");
}

#[test]
fn csv_layouts() {
    let rows = [record(0, Status::Optimal, 0.5, 1.0), record(1, Status::Optimal, 0.25, 0.5)];
    let csv = records_csv(&rows).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario_id,status,iterations,objective,served_active_pu,served_mw,served_fraction,buses_on,gens_on,shunt_retention,hazards"
    );
    assert!(!csv.contains("runtime"));
    assert_eq!(lines.count(), 2);

    let timings = timings_csv(&rows).unwrap();
    assert!(timings.starts_with("scenario_id,status,runtime_s\n0,Optimal,5.00000000e-1\n"));

    let hist = histogram_csv(&summarize(&rows).unwrap()).unwrap();
    assert_eq!(hist.lines().count(), 52);
    assert!(hist.contains("\n1.00,1\n"));
    assert!(hist.contains("\n0.50,1\n"));
}

#[test]
fn zero_parallelism_is_rejected() {
    let net = five_bus_fixture();
    let set = generate(&net, 0.2, 1, 1).unwrap();
    assert!(matches!(run_batch(&net, &set, &SolverSettings::default(), 0), Err(ReportError::Parallelism)));
}
