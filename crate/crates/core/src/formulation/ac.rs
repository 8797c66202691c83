use super::{objective_weights, ConicProblem, Model};
use crate::netmodel::{Branch, Complex, Network};
use serde::Serialize;

/// A full operating point of the exact model. Vectors are indexed by position
/// in the corresponding network component vector; entries of components that
/// are out of service are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct AcCandidate {
    pub v: Vec<Complex>,
    pub sg: Vec<Complex>,
    pub zv: Vec<f64>,
    pub zg: Vec<f64>,
    pub zd: Vec<f64>,
    pub zs: Vec<f64>,
}

impl AcCandidate {
    /// Everything on at flat voltage with zero dispatch.
    pub fn flat(net: &Network) -> Self {
        AcCandidate {
            v: vec![Complex::new(1.0, 0.0); net.buses.len()],
            sg: vec![Complex::new(0.0, 0.0); net.generators.len()],
            zv: vec![1.0; net.buses.len()],
            zg: vec![1.0; net.generators.len()],
            zd: vec![1.0; net.loads.len()],
            zs: vec![1.0; net.shunts.len()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ObjectiveTerms {
    pub buses_on: f64,
    pub gens_on: f64,
    pub shunts_on: f64,
    pub weighted_load: f64,
    /// The weighted single objective.
    pub weighted: f64,
}

/// Worst absolute violation per constraint family.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct AcReport {
    pub indicators: f64,
    pub voltage: f64,
    pub generator: f64,
    pub balance: f64,
    pub thermal: f64,
    pub angle: f64,
    pub max_violation: f64,
    pub feasible: bool,
    pub objective: ObjectiveTerms,
}

/// Directed complex flows `(S_ij, S_ji)` of a branch at voltages `(vi, vj)`.
pub fn branch_flows(br: &Branch, vi: Complex, vj: Complex) -> (Complex, Complex) {
    let y = br.series_admittance;
    let t = br.tap;
    let s_ij = (y + br.charge_from).conj() * vi.norm_sqr() / t.norm_sqr() - y.conj() * vi * vj.conj() / t;
    let s_ji = (y + br.charge_to).conj() * vj.norm_sqr() - y.conj() * vi.conj() * vj / t.conj();
    (s_ij, s_ji)
}

fn above(v: f64, hi: f64) -> f64 {
    (v - hi).max(0.0)
}

fn outside(v: f64, lo: f64, hi: f64) -> f64 {
    above(v, hi).max(above(lo, v))
}

/// Evaluate every constraint of the exact model, with no lifting.
pub fn evaluate_ac_mld(net: &Network, cand: &AcCandidate, tol: f64) -> AcReport {
    let model = Model::of(net);
    let adj = net.adjacency();
    let mut r = AcReport::default();

    let binary = |z: f64| z.abs().min((z - 1.0).abs());
    for &k in &model.buses {
        r.indicators = r.indicators.max(binary(cand.zv[k]));
        let bus = &net.buses[k];
        let mag = cand.v[k].norm();
        r.voltage = r.voltage.max(outside(mag, cand.zv[k] * bus.v_min, cand.zv[k] * bus.v_max));
    }
    for &k in &model.generators {
        let g = &net.generators[k];
        let z = cand.zg[k];
        r.indicators = r.indicators.max(binary(z));
        for (val, lo, hi) in [(cand.sg[k].re, g.p_min, g.p_max), (cand.sg[k].im, g.q_min, g.q_max)] {
            if lo.is_finite() {
                r.generator = r.generator.max(above(z * lo, val));
            }
            if hi.is_finite() {
                r.generator = r.generator.max(above(val, z * hi));
            }
        }
    }
    for &k in &model.loads {
        r.indicators = r.indicators.max(outside(cand.zd[k], 0.0, 1.0));
    }
    for &k in &model.shunts {
        r.indicators = r.indicators.max(outside(cand.zs[k], 0.0, 1.0));
    }

    let mut mismatch = vec![Complex::new(0.0, 0.0); net.buses.len()];
    for &k in &model.generators {
        mismatch[adj.pos(net.generators[k].bus)] += cand.sg[k];
    }
    for &k in &model.loads {
        mismatch[adj.pos(net.loads[k].bus)] -= net.loads[k].demand * cand.zd[k];
    }
    for &k in &model.shunts {
        let p = adj.pos(net.shunts[k].bus);
        mismatch[p] -= net.shunts[k].admittance.conj() * cand.zs[k] * cand.v[p].norm_sqr();
    }
    for &k in &model.branches {
        let br = &net.branches[k];
        let (i, j) = (adj.pos(br.from_bus), adj.pos(br.to_bus));
        let (s_ij, s_ji) = branch_flows(br, cand.v[i], cand.v[j]);
        mismatch[i] -= s_ij;
        mismatch[j] -= s_ji;
        if let Some(limit) = br.rating {
            r.thermal = r.thermal.max(above(s_ij.norm(), limit)).max(above(s_ji.norm(), limit));
        }
        let w = cand.v[i] * cand.v[j].conj();
        let angle = if w.norm() == 0.0 { 0.0 } else { w.arg() };
        r.angle = r.angle.max(outside(angle, br.angmin, br.angmax));
    }
    for &k in &model.buses {
        r.balance = r.balance.max(mismatch[k].re.abs()).max(mismatch[k].im.abs());
    }

    r.max_violation = [r.indicators, r.voltage, r.generator, r.balance, r.thermal, r.angle].into_iter().fold(0.0, f64::max);
    r.feasible = r.max_violation <= tol;
    r.objective = objective_terms(net, &model, cand);
    r
}

fn objective_terms(net: &Network, model: &Model, cand: &AcCandidate) -> ObjectiveTerms {
    let w = objective_weights(net);
    let buses_on: f64 = model.buses.iter().map(|&k| cand.zv[k]).sum();
    let gens_on: f64 = model.generators.iter().map(|&k| cand.zg[k]).sum();
    let shunts_on: f64 = model.shunts.iter().map(|&k| cand.zs[k]).sum();
    let weighted_load: f64 = model
        .loads
        .iter()
        .map(|&k| net.loads[k].priority * net.loads[k].demand.re.abs() * cand.zd[k])
        .sum();
    ObjectiveTerms {
        buses_on,
        gens_on,
        shunts_on,
        weighted_load,
        weighted: w.m_v * buses_on + w.m_g * gens_on + w.m_s * shunts_on + weighted_load,
    }
}

/// Map an operating point into the relaxation's variable space.
pub fn lift_candidate(net: &Network, prob: &ConicProblem, cand: &AcCandidate) -> Vec<f64> {
    let model = Model::of(net);
    let vm = &prob.varmap;
    assert_eq!(model.buses.len(), vm.buses.len(), "problem was built for a different network");
    let adj = net.adjacency();
    let mut x = vec![0.0; vm.len()];
    for (b, &k) in model.buses.iter().enumerate() {
        x[vm.w(b)] = cand.v[k].norm_sqr();
        x[vm.zv(b)] = cand.zv[k];
    }
    for (e, &k) in model.branches.iter().enumerate() {
        let br = &net.branches[k];
        let (vi, vj) = (cand.v[adj.pos(br.from_bus)], cand.v[adj.pos(br.to_bus)]);
        let w = vi * vj.conj();
        x[vm.wr(e)] = w.re;
        x[vm.wi(e)] = w.im;
        let (s_ij, s_ji) = branch_flows(br, vi, vj);
        x[vm.p_from(e)] = s_ij.re;
        x[vm.q_from(e)] = s_ij.im;
        x[vm.p_to(e)] = s_ji.re;
        x[vm.q_to(e)] = s_ji.im;
    }
    for (g, &k) in model.generators.iter().enumerate() {
        x[vm.pg(g)] = cand.sg[k].re;
        x[vm.qg(g)] = cand.sg[k].im;
        x[vm.zg(g)] = cand.zg[k];
    }
    for (l, &k) in model.loads.iter().enumerate() {
        x[vm.zd(l)] = cand.zd[k];
    }
    for (h, &k) in model.shunts.iter().enumerate() {
        let p = adj.pos(net.shunts[k].bus);
        x[vm.zs(h)] = cand.zs[k];
        x[vm.ws(h)] = cand.zs[k] * cand.v[p].norm_sqr();
    }
    x
}
