//! AC-feasible reference points: polar Newton power flow and a uniform
//! load-scaling search built on it.

use crate::formulation::{
    build_soc_mld_c, evaluate_ac_mld, extract_solution, objective_weights, AcCandidate, AcReport, FormulationError,
    Model,
};
use crate::netmodel::{Complex, Network};
use crate::preprocess::preprocess_pipeline;
use mldkit_conic::{solve, SolverSettings};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub const PF_TOLERANCE: f64 = 1e-9;
pub const PF_MAX_ITER: usize = 30;
/// Feasibility tolerance applied to every candidate.
pub const CANDIDATE_TOLERANCE: f64 = 1e-8;

/// Specified injections and voltage magnitudes, indexed by bus position.
///
/// A bus with `v_set` is PV (or the slack); every other bus is PQ.
#[derive(Debug, Clone, PartialEq)]
pub struct Setpoints {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub v_set: Vec<Option<f64>>,
}

impl Setpoints {
    pub fn zero(net: &Network) -> Self {
        let n = net.buses.len();
        Setpoints { p: vec![0.0; n], q: vec![0.0; n], v_set: vec![None; n] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PfResult {
    pub converged: bool,
    /// Voltage per bus position; zero at buses out of service.
    #[serde(skip)]
    pub v: Vec<Complex>,
    pub mismatch_inf: f64,
    pub iterations: usize,
    /// Mismatch norm before every Newton step plus the final one.
    pub history: Vec<f64>,
}

/// Dense admittance matrix over in-service buses, shunts at full size.
fn admittance_matrix(net: &Network, model: &Model) -> Vec<Vec<Complex>> {
    let n = model.buses.len();
    let adj = net.adjacency();
    let local = |id: usize| model.bus_local[adj.pos(id)].expect("live bus");
    let mut y = vec![vec![Complex::new(0.0, 0.0); n]; n];
    for &k in &model.branches {
        let br = &net.branches[k];
        let (i, j) = (local(br.from_bus), local(br.to_bus));
        let ys = br.series_admittance;
        let t = br.tap;
        y[i][i] += (ys + br.charge_from) / t.norm_sqr();
        y[j][j] += ys + br.charge_to;
        y[i][j] -= ys / t.conj();
        y[j][i] -= ys / t;
    }
    for &k in &model.shunts {
        let i = local(net.shunts[k].bus);
        y[i][i] += net.shunts[k].admittance;
    }
    y
}

fn injections(y: &[Vec<Complex>], v: &[Complex]) -> Vec<Complex> {
    (0..v.len())
        .map(|i| {
            let current: Complex = y[i].iter().zip(v).map(|(a, b)| a * b).sum();
            v[i] * current.conj()
        })
        .collect()
}

/// Polar Newton-Raphson. Never panics on a singular Jacobian; the result
/// simply reports non-convergence.
pub fn newton_power_flow(
    net: &Network,
    slack_bus: usize,
    setpoints: &Setpoints,
    tol: f64,
    max_iter: usize,
) -> PfResult {
    newton_from(net, slack_bus, setpoints, tol, max_iter, None)
}

fn newton_from(
    net: &Network,
    slack_bus: usize,
    sp: &Setpoints,
    tol: f64,
    max_iter: usize,
    warm: Option<&[Complex]>,
) -> PfResult {
    let model = Model::of(net);
    let adj = net.adjacency();
    let n = model.buses.len();
    let mut out = PfResult {
        converged: false,
        v: vec![Complex::new(0.0, 0.0); net.buses.len()],
        mismatch_inf: f64::INFINITY,
        iterations: 0,
        history: Vec::new(),
    };
    let Some(slack) = adj.position(slack_bus).and_then(|p| model.bus_local[p]) else {
        return out;
    };
    let y = admittance_matrix(net, &model);

    let mut vm = vec![1.0; n];
    let mut va = vec![0.0; n];
    for (l, &k) in model.buses.iter().enumerate() {
        if let Some(w) = warm.map(|w| w[k]).filter(|w| w.norm() > 0.0) {
            vm[l] = w.norm();
            va[l] = w.arg();
        }
        if let Some(set) = sp.v_set[k] {
            vm[l] = set;
        }
    }
    va[slack] = 0.0;
    if sp.v_set[model.buses[slack]].is_none() && warm.is_none() {
        vm[slack] = 1.0;
    }
    if let Some(w) = warm.map(|w| w[model.buses[slack]]) {
        // Keep the angle reference at the slack.
        let shift = -w.arg();
        for a in va.iter_mut() {
            *a += shift;
        }
        va[slack] = 0.0;
    }

    let pv: Vec<bool> = model.buses.iter().map(|&k| sp.v_set[k].is_some()).collect();
    let angle_idx: Vec<usize> = (0..n).filter(|&l| l != slack).collect();
    let mag_idx: Vec<usize> = (0..n).filter(|&l| l != slack && !pv[l]).collect();
    let dim = angle_idx.len() + mag_idx.len();

    let voltages = |vm: &[f64], va: &[f64]| -> Vec<Complex> {
        vm.iter().zip(va).map(|(&m, &a)| Complex::from_polar(m, a)).collect()
    };
    let mismatch = |s: &[Complex]| -> DVector<f64> {
        let mut f = DVector::zeros(dim);
        for (r, &l) in angle_idx.iter().enumerate() {
            f[r] = s[l].re - sp.p[model.buses[l]];
        }
        for (r, &l) in mag_idx.iter().enumerate() {
            f[angle_idx.len() + r] = s[l].im - sp.q[model.buses[l]];
        }
        f
    };

    loop {
        let v = voltages(&vm, &va);
        let s = injections(&y, &v);
        let f = mismatch(&s);
        let norm = f.amax();
        out.history.push(norm);
        out.mismatch_inf = norm;
        if !norm.is_finite() {
            break;
        }
        if norm <= tol {
            out.converged = true;
            break;
        }
        if out.iterations >= max_iter {
            break;
        }
        let jac = jacobian(&y, &vm, &va, &s, &angle_idx, &mag_idx);
        let Some(dx) = jac.lu().solve(&(-f)) else {
            break;
        };
        for (r, &l) in angle_idx.iter().enumerate() {
            va[l] += dx[r];
        }
        for (r, &l) in mag_idx.iter().enumerate() {
            vm[l] += dx[angle_idx.len() + r];
        }
        out.iterations += 1;
    }
    for (l, &k) in model.buses.iter().enumerate() {
        out.v[k] = Complex::from_polar(vm[l], va[l]);
    }
    out
}

fn jacobian(
    y: &[Vec<Complex>],
    vm: &[f64],
    va: &[f64],
    s: &[Complex],
    angle_idx: &[usize],
    mag_idx: &[usize],
) -> DMatrix<f64> {
    let na = angle_idx.len();
    let dim = na + mag_idx.len();
    // Derivatives of (P_i, Q_i) with respect to (theta_k, |V_k|).
    let partials = |i: usize, k: usize| -> [f64; 4] {
        let (g, b) = (y[i][k].re, y[i][k].im);
        if i == k {
            let (p, q) = (s[i].re, s[i].im);
            let v = vm[i];
            [-q - b * v * v, p / v + g * v, p - g * v * v, q / v - b * v]
        } else {
            let th = va[i] - va[k];
            let (sn, cs) = th.sin_cos();
            let a = g * sn - b * cs;
            let c = g * cs + b * sn;
            [vm[i] * vm[k] * a, vm[i] * c, -vm[i] * vm[k] * c, vm[i] * a]
        }
    };
    let mut jac = DMatrix::zeros(dim, dim);
    for (r, &i) in angle_idx.iter().enumerate() {
        for (c, &k) in angle_idx.iter().enumerate() {
            jac[(r, c)] = partials(i, k)[0];
        }
        for (c, &k) in mag_idx.iter().enumerate() {
            jac[(r, na + c)] = partials(i, k)[1];
        }
    }
    for (r, &i) in mag_idx.iter().enumerate() {
        for (c, &k) in angle_idx.iter().enumerate() {
            jac[(na + r, c)] = partials(i, k)[2];
        }
        for (c, &k) in mag_idx.iter().enumerate() {
            jac[(na + r, na + c)] = partials(i, k)[3];
        }
    }
    jac
}

/// The generator with the largest `p_max` (first wins ties), as a position.
fn slack_generator(net: &Network, model: &Model) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &k in &model.generators {
        if best.is_none_or(|b| net.generators[k].p_max > net.generators[b].p_max) {
            best = Some(k);
        }
    }
    best
}

/// Dispatch for loads scaled by `gamma`: every generator bus is PV, the
/// largest unit is slack, and the others share the expected demand
/// pro rata on `p_max`.
struct Dispatch {
    slack_gen: usize,
    setpoints: Setpoints,
    p_gen: Vec<f64>,
}

/// How PV buses pick their voltage magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VoltageRule {
    /// `min(v_max, 1)`, raised to `v_min` if needed.
    Capped,
    /// The case file's generator setpoint, clipped to the bus limits.
    CaseSetpoint,
}

fn dispatch(net: &Network, model: &Model, gamma: f64, rule: VoltageRule) -> Option<Dispatch> {
    let slack_gen = slack_generator(net, model)?;
    let adj = net.adjacency();
    let mut sp = Setpoints::zero(net);
    for &k in &model.loads {
        let p = adj.pos(net.loads[k].bus);
        sp.p[p] -= gamma * net.loads[k].demand.re;
        sp.q[p] -= gamma * net.loads[k].demand.im;
    }
    let target = gamma * model.loads.iter().map(|&k| net.loads[k].demand.re).sum::<f64>()
        + model.shunts.iter().map(|&k| net.shunts[k].admittance.re).sum::<f64>();
    let capacity: f64 = model.generators.iter().map(|&k| net.generators[k].p_max).filter(|p| p.is_finite()).sum();
    let share = if capacity > 0.0 { target / capacity } else { 0.0 };

    let mut p_gen = vec![0.0; net.generators.len()];
    for &k in &model.generators {
        let g = &net.generators[k];
        let bus = &net.buses[adj.pos(g.bus)];
        let slot = &mut sp.v_set[adj.pos(g.bus)];
        if slot.is_none() {
            let v = match rule {
                VoltageRule::Capped => bus.v_max.min(1.0),
                VoltageRule::CaseSetpoint => g.vg.min(bus.v_max),
            };
            *slot = Some(v.max(bus.v_min));
        }
        if k != slack_gen {
            let want = if g.p_max.is_finite() { share * g.p_max } else { 0.0 };
            p_gen[k] = want.clamp(g.p_min, g.p_max);
            sp.p[adj.pos(g.bus)] += p_gen[k];
        }
    }
    Some(Dispatch { slack_gen, setpoints: sp, p_gen })
}

/// Split a bus total among generators: pro rata on the interval width when
/// every limit is finite, evenly otherwise.
fn split_reactive(net: &Network, gens: &[usize], total: f64, q: &mut [f64]) {
    let finite = gens.iter().all(|&k| net.generators[k].q_min.is_finite() && net.generators[k].q_max.is_finite());
    let width: f64 = gens.iter().map(|&k| net.generators[k].q_max - net.generators[k].q_min).sum();
    if finite && width > 0.0 {
        let base: f64 = gens.iter().map(|&k| net.generators[k].q_min).sum();
        for &k in gens {
            let g = &net.generators[k];
            q[k] = g.q_min + (total - base) * (g.q_max - g.q_min) / width;
        }
    } else {
        for &k in gens {
            q[k] = total / gens.len() as f64;
        }
    }
}

/// Power flow at uniform load scale `gamma`, turned into a candidate.
/// Returns `None` when the flow does not converge.
pub fn candidate_at(net: &Network, gamma: f64, rule: VoltageRule) -> Option<(AcCandidate, AcReport)> {
    candidate_from(net, gamma, rule, None).map(|(c, r, _)| (c, r))
}

fn candidate_from(
    net: &Network,
    gamma: f64,
    rule: VoltageRule,
    warm: Option<&[Complex]>,
) -> Option<(AcCandidate, AcReport, Vec<Complex>)> {
    let model = Model::of(net);
    let d = dispatch(net, &model, gamma, rule)?;
    let adj = net.adjacency();
    let slack_bus = net.generators[d.slack_gen].bus;
    let mut pf = newton_from(net, slack_bus, &d.setpoints, PF_TOLERANCE, PF_MAX_ITER, warm);
    if !pf.converged && warm.is_some() {
        pf = newton_from(net, slack_bus, &d.setpoints, PF_TOLERANCE, PF_MAX_ITER, None);
    }
    if !pf.converged {
        return None;
    }

    let y = admittance_matrix(net, &model);
    let local_v: Vec<Complex> = model.buses.iter().map(|&k| pf.v[k]).collect();
    let s = injections(&y, &local_v);

    let mut cand = shed_everything(net);
    for &k in &model.buses {
        cand.zv[k] = 1.0;
        cand.v[k] = pf.v[k];
    }
    for &k in &model.loads {
        cand.zd[k] = gamma;
    }
    for &k in &model.shunts {
        cand.zs[k] = 1.0;
    }

    // Generator output per bus: computed injection plus served load.
    let mut at_bus: Vec<Vec<usize>> = vec![Vec::new(); net.buses.len()];
    for &k in &model.generators {
        at_bus[adj.pos(net.generators[k].bus)].push(k);
    }
    let mut q_gen = vec![0.0; net.generators.len()];
    for (l, &b) in model.buses.iter().enumerate() {
        let gens = &at_bus[b];
        if gens.is_empty() {
            continue;
        }
        // Non-slack outputs are already inside the setpoint, so the slack
        // unit takes exactly the remaining injection.
        for &k in gens {
            cand.zg[k] = 1.0;
            cand.sg[k].re = if k == d.slack_gen { s[l].re - d.setpoints.p[b] } else { d.p_gen[k] };
        }
        let q_total = s[l].im - d.setpoints.q[b];
        split_reactive(net, gens, q_total, &mut q_gen);
        for &k in gens {
            cand.sg[k].im = q_gen[k];
        }
    }
    let report = evaluate_ac_mld(net, &cand, CANDIDATE_TOLERANCE);
    Some((cand, report, pf.v))
}

/// Everything off at zero voltage; always feasible.
pub fn shed_everything(net: &Network) -> AcCandidate {
    AcCandidate {
        v: vec![Complex::new(0.0, 0.0); net.buses.len()],
        sg: vec![Complex::new(0.0, 0.0); net.generators.len()],
        zv: vec![0.0; net.buses.len()],
        zg: vec![0.0; net.generators.len()],
        zd: vec![0.0; net.loads.len()],
        zs: vec![0.0; net.shunts.len()],
    }
}

/// Buses energised at flat voltage with nothing connected; feasible only
/// when no branch carries charging or phase shift.
fn buses_only(net: &Network) -> AcCandidate {
    let model = Model::of(net);
    let mut cand = shed_everything(net);
    for &k in &model.buses {
        cand.zv[k] = 1.0;
        cand.v[k] = Complex::new(1.0, 0.0);
    }
    cand
}

/// Largest uniform load scale with an AC-feasible power flow point.
///
/// Tries full delivery, then zero load, then bisects `steps` times. Each
/// load level tries the capped voltage rule first and the case setpoints
/// second. When no power flow point is feasible, falls back to energised
/// empty buses and finally to shedding everything.
pub fn uniform_shed_bound(net: &Network, steps: usize) -> (f64, AcCandidate) {
    let feasible = |gamma: f64, warm: Option<&[Complex]>| {
        [VoltageRule::Capped, VoltageRule::CaseSetpoint]
            .into_iter()
            .find_map(|rule| candidate_from(net, gamma, rule, warm).filter(|(_, r, _)| r.feasible))
    };
    if let Some((cand, _, _)) = feasible(1.0, None) {
        return (1.0, cand);
    }
    let Some((mut best, _, mut warm)) = feasible(0.0, None) else {
        let cand = buses_only(net);
        if evaluate_ac_mld(net, &cand, CANDIDATE_TOLERANCE).feasible {
            return (0.0, cand);
        }
        return (0.0, shed_everything(net));
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        match feasible(mid, Some(&warm)) {
            Some((cand, _, v)) => {
                lo = mid;
                best = cand;
                warm = v;
            }
            None => hi = mid,
        }
    }
    (lo, best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapEstimate {
    pub upper: f64,
    pub lower: f64,
    pub gap_pct: f64,
    pub gamma: f64,
}

/// Relaxation optimum against the uniform-shed point, both after the
/// standard preprocessing and under the same objective weights.
pub fn gap_estimate(net: &Network, settings: &SolverSettings) -> Result<GapEstimate, FormulationError> {
    let (pp, _) = preprocess_pipeline(net);
    if pp.in_service_buses() == 0 {
        return Ok(GapEstimate { upper: 0.0, lower: 0.0, gap_pct: 0.0, gamma: 0.0 });
    }
    let prob = build_soc_mld_c(&pp, &objective_weights(&pp))?;
    let result = solve(&prob.program, settings)?;
    let upper = extract_solution(&prob, &result)?.objective;
    let (gamma, cand) = uniform_shed_bound(&pp, 40);
    let lower = evaluate_ac_mld(&pp, &cand, CANDIDATE_TOLERANCE).objective.weighted;
    let gap_pct = if upper > 0.0 { 100.0 * (upper - lower) / upper } else { 0.0 };
    Ok(GapEstimate { upper, lower, gap_pct, gamma })
}
