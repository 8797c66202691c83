use super::{Branch, Bus, Complex, Generator, Load, Network, Shunt};

fn bus(id: usize, kind: u8) -> Bus {
    Bus {
        id,
        kind,
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

fn generator(id: usize, at: usize, p: (f64, f64), q: (f64, f64)) -> Generator {
    Generator {
        id,
        bus: at,
        p_min: p.0,
        p_max: p.1,
        q_min: q.0,
        q_max: q.1,
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

/// Five-bus cycle exhibiting the three classic infeasibility pathologies.
///
/// Branch ids 1..5 are 1-2, 2-3, 3-5, 4-5, 1-4. Bus 1 holds a large
/// generator, bus 3 a generator with a positive active minimum, bus 2 a shunt,
/// and buses 4 and 5 the loads joined by a line with charging.
pub fn five_bus_fixture() -> Network {
    let branch = |id, f, t, r, x, b| {
        Branch::from_raw(id, f, t, r, x, b, None, 0.0, 0.0, -360.0, 360.0).expect("fixture impedances are nonzero")
    };
    Network {
        name: "five_bus".into(),
        base_mva: 100.0,
        buses: vec![bus(1, 3), bus(2, 1), bus(3, 2), bus(4, 1), bus(5, 1)],
        branches: vec![
            branch(1, 1, 2, 0.01, 0.1, 0.0),
            branch(2, 2, 3, 0.01, 0.1, 0.0),
            branch(3, 3, 5, 0.01, 0.1, 0.0),
            branch(4, 4, 5, 0.0, 0.04, 0.08),
            branch(5, 1, 4, 0.01, 0.1, 0.0),
        ],
        generators: vec![
            generator(1, 1, (0.0, 10.0), (-10.0, 10.0)),
            generator(2, 3, (0.1, 1.0), (f64::NEG_INFINITY, f64::INFINITY)),
        ],
        loads: vec![
            Load { id: 1, bus: 4, demand: Complex::new(0.5, 0.1), priority: 1.0, in_service: true },
            Load { id: 2, bus: 5, demand: Complex::new(0.5, 0.1), priority: 1.0, in_service: true },
        ],
        shunts: vec![Shunt { id: 1, bus: 2, admittance: Complex::new(0.05, 0.30), in_service: true }],
    }
}
