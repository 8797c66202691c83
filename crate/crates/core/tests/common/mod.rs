#![allow(dead_code)]

use mldkit::netmodel::{parse_case, Branch, Bus, Complex, Generator, Load, Network, Shunt};
use rand::Rng;

pub fn case(name: &str) -> Network {
    let path = format!("{}/../../data/cases/{name}.m", env!("CARGO_MANIFEST_DIR"));
    parse_case(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn bare_bus(id: usize) -> Bus {
    Bus {
        id,
        kind: 1,
        v_min: 0.9,
        v_max: 1.1,
        in_service: true,
        area: 1.0,
        vm: 1.0,
        va_deg: 0.0,
        base_kv: 0.0,
        zone: 1.0,
    }
}

pub fn line(id: usize, f: usize, t: usize) -> Branch {
    Branch::from_raw(id, f, t, 0.01, 0.1, 0.0, None, 0.0, 0.0, -360.0, 360.0).unwrap()
}

pub fn gen_at(id: usize, bus: usize, p_min: f64, p_max: f64) -> Generator {
    Generator {
        id,
        bus,
        p_min,
        p_max,
        q_min: -p_max,
        q_max: p_max,
        cost_c0: 0.0,
        cost_c1: 0.0,
        cost_c2: 0.0,
        in_service: true,
        pg_mw: 0.0,
        qg_mvar: 0.0,
        vg: 1.0,
        mbase: 100.0,
    }
}

pub fn load_at(id: usize, bus: usize, p: f64, q: f64) -> Load {
    Load { id, bus, demand: Complex::new(p, q), priority: 1.0, in_service: true }
}

pub fn shunt_at(id: usize, bus: usize, g: f64, b: f64) -> Shunt {
    Shunt { id, bus, admittance: Complex::new(g, b), in_service: true }
}

pub fn network(buses: usize, edges: &[(usize, usize)]) -> Network {
    Network {
        name: "synthetic".into(),
        base_mva: 100.0,
        buses: (1..=buses).map(bare_bus).collect(),
        branches: edges.iter().enumerate().map(|(k, &(f, t))| line(k + 1, f, t)).collect(),
        generators: vec![],
        loads: vec![],
        shunts: vec![],
    }
}

/// Random sparse network with random components and random outages.
pub fn random_network<R: Rng>(rng: &mut R, n: usize) -> Network {
    let mut edges = Vec::new();
    let m = rng.random_range(0..=2 * n);
    for _ in 0..m {
        let f = rng.random_range(1..=n);
        let t = rng.random_range(1..=n);
        if f != t {
            edges.push((f, t));
        }
    }
    let mut net = network(n, &edges);
    for bus in 1..=n {
        if rng.random_bool(0.3) {
            net.loads.push(load_at(net.loads.len() + 1, bus, rng.random_range(0.0..1.0), 0.1));
        }
        if rng.random_bool(0.2) {
            net.generators.push(gen_at(net.generators.len() + 1, bus, 0.0, 2.0));
        }
        if rng.random_bool(0.15) {
            net.shunts.push(shunt_at(net.shunts.len() + 1, bus, 0.01, 0.1));
        }
    }
    for b in &mut net.buses {
        b.in_service = !rng.random_bool(0.05);
    }
    for br in &mut net.branches {
        br.in_service = !rng.random_bool(0.3);
    }
    net
}
