mod common;

use common::*;
use mldkit::contingency::{apply, Scenario};
use mldkit::netmodel::five_bus_fixture;
use mldkit::preprocess::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn fixture_without(ids: &[usize]) -> mldkit::netmodel::Network {
    apply(&five_bus_fixture(), &Scenario { id: 0, removed_branches: ids.to_vec() }).unwrap()
}

fn live_buses(net: &mldkit::netmodel::Network) -> Vec<usize> {
    net.buses.iter().filter(|b| b.in_service).map(|b| b.id).collect()
}

#[test]
fn propagation() {
    let mut net = five_bus_fixture();
    net.buses[2].in_service = false;
    let out = propagate_outages(&net);
    assert!(!out.generators[1].in_service);
    assert!(!out.branches[1].in_service && !out.branches[2].in_service);
    let intact = five_bus_fixture();
    assert_eq!(propagate_outages(&intact), intact);
    let cut = fixture_without(&[2, 3]);
    assert_eq!(propagate_outages(&cut), cut);
}

#[test]
fn dangling_buses() {
    let mut path = network(3, &[(1, 2), (2, 3)]);
    path.loads.push(load_at(1, 1, 0.5, 0.0));
    path.generators.push(gen_at(1, 3, 0.0, 1.0));
    assert_eq!(deactivate_dangling_buses(&path), path);

    let mut chain = network(3, &[(1, 2), (2, 3)]);
    chain.generators.push(gen_at(1, 1, 0.0, 1.0));
    chain.shunts.push(shunt_at(1, 3, 0.0, 0.1));
    let out = deactivate_dangling_buses(&chain);
    assert_eq!(live_buses(&out), vec![1]);
    assert!(out.branches.iter().all(|b| !b.in_service));
    assert!(!out.shunts[0].in_service);

    let intact = five_bus_fixture();
    assert_eq!(deactivate_dangling_buses(&intact), intact);
}

#[test]
fn component_examples() {
    assert_eq!(connected_components(&five_bus_fixture()).components, vec![vec![1, 2, 3, 4, 5]]);
    assert_eq!(connected_components(&fixture_without(&[2, 3])).components, vec![vec![1, 2, 4, 5], vec![3]]);
    let empty = network(0, &[]);
    assert!(connected_components(&empty).components.is_empty());
}

#[test]
fn dead_components() {
    let bare = network(2, &[]);
    let mut with_load = bare.clone();
    with_load.loads.push(load_at(1, 1, 1.0, 0.0));
    let out = deactivate_dead_components(&with_load);
    assert_eq!(live_buses(&out), vec![1]);

    let island = fixture_without(&[5, 3]);
    let out = deactivate_dead_components(&island);
    assert_eq!(live_buses(&out), vec![1, 2, 3, 4, 5]);

    let mut shunt_only = network(2, &[(1, 2)]);
    shunt_only.shunts.push(shunt_at(1, 2, 0.05, 0.3));
    let out = deactivate_dead_components(&shunt_only);
    assert!(live_buses(&out).is_empty());
    assert!(!out.shunts[0].in_service);
}

#[test]
fn largest_component_selection() {
    let out = largest_component(&fixture_without(&[2, 3]));
    assert_eq!(live_buses(&out), vec![1, 2, 4, 5]);
    let intact = five_bus_fixture();
    assert_eq!(largest_component(&intact), intact);
    let pairs = network(4, &[(3, 4), (1, 2)]);
    assert_eq!(live_buses(&largest_component(&pairs)), vec![1, 2]);
}

#[test]
fn hazard_oracle_over_all_outage_pairs() {
    use HazardKind::*;
    // Hand-derived from the fixture data: bus-3 generator minimum 0.10 p.u.,
    // bus-2 shunt conductance 0.05 (absorbs at most 0.05 * 1.1² = 0.0605),
    // charged line 4-5, loads only at buses 4 and 5.
    let expected: Vec<((usize, usize), Vec<(HazardKind, Vec<usize>)>)> = vec![
        ((1, 2), vec![(ShuntIsland, vec![2])]),
        ((1, 3), vec![(GenMinInjection, vec![2, 3])]),
        ((1, 4), vec![]),
        ((1, 5), vec![]),
        ((2, 3), vec![(GenMinInjection, vec![3])]),
        ((2, 4), vec![]),
        ((2, 5), vec![]),
        ((3, 4), vec![]),
        // Buses 1-3 keep the 0.10 minimum but have no load: 0.10 > 0.0605.
        ((3, 5), vec![(GenMinInjection, vec![1, 2, 3]), (LineChargingIsland, vec![4, 5])]),
        ((4, 5), vec![]),
    ];
    for ((a, b), want) in expected {
        let net = propagate_outages(&fixture_without(&[a, b]));
        let got: Vec<(HazardKind, Vec<usize>)> =
            detect_hazards(&net).into_iter().map(|h| (h.kind, h.component_ids)).collect();
        assert_eq!(got, want, "outage of branches {a} and {b}");
    }
    assert!(detect_hazards(&five_bus_fixture()).is_empty());
}

#[test]
fn pipeline_examples() {
    let intact = five_bus_fixture();
    let (out, hz) = preprocess_pipeline(&intact);
    assert_eq!(out, intact);
    assert!(hz.is_empty());

    // Bus 2 then hangs off bus 1 with only a shunt, so it is dangling too.
    let (out, hz) = preprocess_pipeline(&fixture_without(&[2, 3]));
    assert_eq!(live_buses(&out), vec![1, 4, 5]);
    assert!(hz.iter().any(|h| h.kind == HazardKind::GenMinInjection));
    assert_eq!(preprocess_pipeline(&out).0, out);
}

/// Reachability by repeated relaxation of the in-service edge set.
fn closure_components(net: &mldkit::netmodel::Network) -> Vec<Vec<usize>> {
    let ids: Vec<usize> = net.buses.iter().filter(|b| b.in_service).map(|b| b.id).collect();
    let n = net.buses.len();
    let mut reach = vec![vec![false; n + 1]; n + 1];
    for &i in &ids {
        reach[i][i] = true;
    }
    for br in net.branches.iter().filter(|b| b.in_service) {
        if ids.contains(&br.from_bus) && ids.contains(&br.to_bus) {
            reach[br.from_bus][br.to_bus] = true;
            reach[br.to_bus][br.from_bus] = true;
        }
    }
    for k in 1..=n {
        for i in 1..=n {
            for j in 1..=n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    for &i in &ids {
        if out.iter().any(|c| c.contains(&i)) {
            continue;
        }
        out.push(ids.iter().copied().filter(|&j| reach[i][j]).collect());
    }
    out
}

#[test]
fn components_match_transitive_closure() {
    let mut rng = StdRng::seed_from_u64(11);
    for trial in 0..300 {
        let n = 1 + trial % 50;
        let net = propagate_outages(&random_network(&mut rng, n));
        let part = connected_components(&net);
        assert_eq!(part.components, closure_components(&net), "trial {trial}");
        for (c, ids) in part.components.iter().enumerate() {
            assert!(ids.iter().all(|id| part.component_of[id] == c));
        }
    }
}

#[test]
fn pipeline_is_idempotent_on_random_networks() {
    let mut rng = StdRng::seed_from_u64(12);
    for trial in 0..1000 {
        let net = random_network(&mut rng, 2 + trial % 40);
        let (once, _) = preprocess_pipeline(&net);
        let (twice, _) = preprocess_pipeline(&once);
        assert_eq!(once, twice, "trial {trial}");
    }
}

#[test]
fn pipeline_keeps_useful_buses_of_the_kept_component() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..300 {
        let net = propagate_outages(&random_network(&mut rng, 30));
        let (out, _) = preprocess_pipeline(&net);
        let part = connected_components(&net);
        let kept = live_buses(&out);
        let adj = net.adjacency();
        for (k, bus) in net.buses.iter().enumerate() {
            let useful = adj.loads[k].iter().any(|&l| net.loads[l].in_service)
                || adj.generators[k].iter().any(|&g| net.generators[g].in_service);
            if bus.in_service && useful && !kept.contains(&bus.id) {
                // its whole component must be gone
                let comp = &part.components[part.component_of[&bus.id]];
                assert!(comp.iter().all(|id| !kept.contains(id)));
            }
        }
    }
}

proptest! {
    #[test]
    fn partition_covers_live_buses(seed in any::<u64>(), n in 1usize..50) {
        let mut rng = StdRng::seed_from_u64(seed);
        let net = random_network(&mut rng, n);
        let part = connected_components(&net);
        let mut all: Vec<usize> = part.components.concat();
        all.sort_unstable();
        prop_assert_eq!(all, live_buses(&net));
        let firsts: Vec<usize> = part.components.iter().map(|c| c[0]).collect();
        prop_assert!(firsts.windows(2).all(|w| w[0] < w[1]));
    }
}
