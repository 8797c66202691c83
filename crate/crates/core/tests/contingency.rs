mod common;

use common::case;
use mldkit::contingency::{apply, damage_count, generate, Scenario, ScenarioSet};
use mldkit::netmodel::five_bus_fixture;
use proptest::prelude::*;

#[test]
fn damage_count_examples() {
    assert_eq!(damage_count(120, 0.3), 36);
    assert_eq!(damage_count(2896, 0.3), 869);
    assert_eq!(damage_count(5, 0.3), 2);
    assert_eq!(damage_count(7, 1.0), 7);
    assert_eq!(damage_count(7, 0.0), 0);
}

#[test]
fn generation_is_reproducible() {
    let net = five_bus_fixture();
    let a = generate(&net, 0.3, 3, 42).unwrap();
    let b = generate(&net, 0.3, 3, 42).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.scenarios.len(), 3);
    assert!(a.scenarios.iter().all(|s| s.removed_branches.len() == 2));
    assert_ne!(a.to_json(), generate(&net, 0.3, 3, 43).unwrap().to_json());
    let back = ScenarioSet::from_json(&a.to_json()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn full_damage_removes_everything() {
    let net = five_bus_fixture();
    let set = generate(&net, 1.0, 1, 9).unwrap();
    assert_eq!(set.scenarios[0].removed_branches, vec![1, 2, 3, 4, 5]);
}

#[test]
fn argument_errors() {
    let net = five_bus_fixture();
    assert!(generate(&net, 0.3, 0, 1).is_err());
    assert!(generate(&net, 0.01, 5, 1).is_err());
    assert!(generate(&net, 1.5, 5, 1).is_err());
    let mut dead = net.clone();
    dead.branches.iter_mut().for_each(|b| b.in_service = false);
    assert!(generate(&dead, 0.3, 5, 1).is_err());
}

#[test]
fn samples_only_in_service_branches() {
    let mut net = five_bus_fixture();
    net.branches[0].in_service = false;
    let set = generate(&net, 0.5, 200, 3).unwrap();
    assert!(set.scenarios.iter().all(|s| !s.removed_branches.contains(&1) && s.removed_branches.len() == 2));
}

/// Chi-square statistic of inclusion counts, corrected for sampling without
/// replacement so that it follows chi² with n - 1 degrees of freedom.
fn inclusion_statistic(counts: &[usize], scenarios: usize, k: usize) -> f64 {
    let n = counts.len() as f64;
    let p = k as f64 / n;
    let expected = scenarios as f64 * p;
    let ss: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2)).sum();
    ss / (scenarios as f64 * p * (1.0 - p)) * (n - 1.0) / n
}

#[test]
fn inclusion_frequencies_on_the_fixture() {
    let net = five_bus_fixture();
    let set = generate(&net, 0.3, 10_000, 2024).unwrap();
    let mut counts = [0usize; 5];
    for s in &set.scenarios {
        for id in &s.removed_branches {
            counts[id - 1] += 1;
        }
    }
    for c in counts {
        assert!((3850..=4150).contains(&c), "{counts:?}");
    }
    let stat = inclusion_statistic(&counts, 10_000, 2);
    assert!(stat < 18.4668, "chi-square {stat}");
}

#[test]
fn inclusion_uniformity_on_a_public_case() {
    let net = case("case30");
    let set = generate(&net, 0.3, 20_000, 99).unwrap();
    let k = set.scenarios[0].removed_branches.len();
    assert_eq!(k, 12);
    let mut counts = vec![0usize; net.branches.len()];
    for s in &set.scenarios {
        for id in &s.removed_branches {
            counts[id - 1] += 1;
        }
    }
    let stat = inclusion_statistic(&counts, 20_000, k);
    assert!(stat < 73.4020, "chi-square {stat}");
}

#[test]
fn apply_marks_only_branches() {
    let net = five_bus_fixture();
    let empty = Scenario { id: 0, removed_branches: vec![] };
    assert_eq!(apply(&net, &empty).unwrap(), net);
    let s = Scenario { id: 1, removed_branches: vec![2, 3] };
    let once = apply(&net, &s).unwrap();
    assert_eq!(apply(&once, &s).unwrap(), once);
    assert!(!once.branches[1].in_service && !once.branches[2].in_service);
    assert_eq!((&once.buses, &once.generators, &once.loads, &once.shunts), (&net.buses, &net.generators, &net.loads, &net.shunts));
    assert!(apply(&net, &Scenario { id: 2, removed_branches: vec![6] }).is_err());
}

proptest! {
    #[test]
    fn scenarios_are_well_formed(seed in any::<u64>(), fraction in 0.05..1.0f64, count in 1usize..40) {
        let net = case("case14");
        prop_assume!(damage_count(20, fraction) > 0);
        let set = generate(&net, fraction, count, seed).unwrap();
        prop_assert_eq!(set.scenarios.len(), count);
        for (i, s) in set.scenarios.iter().enumerate() {
            prop_assert_eq!(s.id, i as u64);
            prop_assert_eq!(s.removed_branches.len(), damage_count(20, fraction));
            prop_assert!(s.removed_branches.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(s.removed_branches.iter().all(|&id| (1..=20).contains(&id)));
        }
        prop_assert_eq!(set.to_json(), generate(&net, fraction, count, seed).unwrap().to_json());
    }

    #[test]
    fn damage_count_is_half_up(n in 0usize..100_000, tenths in 0u32..=10) {
        let f = tenths as f64 / 10.0;
        // exact rational oracle: round(n * tenths / 10) half up
        let want = (n * tenths as usize * 2 + 10) / 20;
        prop_assert_eq!(damage_count(n, f), want);
    }
}
