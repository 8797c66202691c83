use super::{mccormick, objective_weights, FormulationError, ObjectiveWeights};
use crate::netmodel::{Branch, Network};
use crate::preprocess::connected_components;
use mldkit_conic::{Cone, ConeProgram, CscMatrix};
use serde::Serialize;
use std::f64::consts::FRAC_1_SQRT_2;

/// Column layout of the conic program. Component lists hold the ids of the
/// in-service components that are modelled, in network order; the position
/// of an id in its list is the local index used by the accessors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarMap {
    pub buses: Vec<usize>,
    pub branches: Vec<usize>,
    pub generators: Vec<usize>,
    pub loads: Vec<usize>,
    pub shunts: Vec<usize>,
    /// Bus local index of each shunt.
    pub shunt_bus: Vec<usize>,
    offsets: Offsets,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Offsets {
    w: usize,
    wr: usize,
    wi: usize,
    flow: usize,
    gen: usize,
    zd: usize,
    shunt: usize,
    zv: usize,
    total: usize,
}

impl VarMap {
    fn new(buses: Vec<usize>, branches: Vec<usize>, generators: Vec<usize>, loads: Vec<usize>, shunts: Vec<usize>, shunt_bus: Vec<usize>) -> Self {
        let (n, e, g, l, h) = (buses.len(), branches.len(), generators.len(), loads.len(), shunts.len());
        let w = 0;
        let wr = w + n;
        let wi = wr + e;
        let flow = wi + e;
        let gen = flow + 4 * e;
        let zd = gen + 3 * g;
        let shunt = zd + l;
        let zv = shunt + 2 * h;
        let total = zv + n;
        VarMap { buses, branches, generators, loads, shunts, shunt_bus, offsets: Offsets { w, wr, wi, flow, gen, zd, shunt, zv, total } }
    }

    pub fn len(&self) -> usize {
        self.offsets.total
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.total == 0
    }

    pub fn w(&self, bus: usize) -> usize {
        self.offsets.w + bus
    }
    pub fn wr(&self, br: usize) -> usize {
        self.offsets.wr + br
    }
    pub fn wi(&self, br: usize) -> usize {
        self.offsets.wi + br
    }
    pub fn p_from(&self, br: usize) -> usize {
        self.offsets.flow + 4 * br
    }
    pub fn q_from(&self, br: usize) -> usize {
        self.offsets.flow + 4 * br + 1
    }
    pub fn p_to(&self, br: usize) -> usize {
        self.offsets.flow + 4 * br + 2
    }
    pub fn q_to(&self, br: usize) -> usize {
        self.offsets.flow + 4 * br + 3
    }
    pub fn pg(&self, g: usize) -> usize {
        self.offsets.gen + 3 * g
    }
    pub fn qg(&self, g: usize) -> usize {
        self.offsets.gen + 3 * g + 1
    }
    pub fn zg(&self, g: usize) -> usize {
        self.offsets.gen + 3 * g + 2
    }
    pub fn zd(&self, l: usize) -> usize {
        self.offsets.zd + l
    }
    pub fn zs(&self, h: usize) -> usize {
        self.offsets.shunt + 2 * h
    }
    pub fn ws(&self, h: usize) -> usize {
        self.offsets.shunt + 2 * h + 1
    }
    pub fn zv(&self, bus: usize) -> usize {
        self.offsets.zv + bus
    }
}

#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub program: ConeProgram,
    pub varmap: VarMap,
    pub weights: ObjectiveWeights,
    /// Active demand of each modelled load, p.u.
    pub load_active: Vec<f64>,
}

#[derive(Serialize)]
struct ExportView<'a> {
    #[serde(flatten)]
    payload: mldkit_conic::ProgramPayload,
    varmap: &'a VarMap,
}

impl ConicProblem {
    /// JSON with fields `c`, `A`, `b`, `cones` and `varmap`.
    pub fn to_json(&self) -> String {
        let view = ExportView { payload: self.program.to_payload(), varmap: &self.varmap };
        serde_json::to_string(&view).expect("problem serializes")
    }
}

/// Affine rows `s = Σ coef·x + constant`, grouped by cone.
#[derive(Default)]
struct RowBlock {
    terms: Vec<Vec<(usize, f64)>>,
    constants: Vec<f64>,
}

impl RowBlock {
    fn push(&mut self, terms: Vec<(usize, f64)>, constant: f64) {
        self.terms.push(terms.into_iter().filter(|t| t.1 != 0.0).collect());
        self.constants.push(constant);
    }

    fn len(&self) -> usize {
        self.constants.len()
    }
}

/// Modelled components as positions into the network vectors.
pub(crate) struct Model {
    pub buses: Vec<usize>,
    pub branches: Vec<usize>,
    pub generators: Vec<usize>,
    pub loads: Vec<usize>,
    pub shunts: Vec<usize>,
    /// Bus local index for each network bus position.
    pub bus_local: Vec<Option<usize>>,
}

impl Model {
    pub(crate) fn of(net: &Network) -> Self {
        let buses: Vec<usize> = (0..net.buses.len()).filter(|&k| net.buses[k].in_service).collect();
        let mut bus_local = vec![None; net.buses.len()];
        for (local, &k) in buses.iter().enumerate() {
            bus_local[k] = Some(local);
        }
        let adj = net.adjacency();
        let live = |id: usize| adj.position(id).is_some_and(|p| bus_local[p].is_some());
        Model {
            branches: (0..net.branches.len())
                .filter(|&k| {
                    let b = &net.branches[k];
                    b.in_service && live(b.from_bus) && live(b.to_bus)
                })
                .collect(),
            generators: (0..net.generators.len()).filter(|&k| net.generators[k].in_service && live(net.generators[k].bus)).collect(),
            loads: (0..net.loads.len()).filter(|&k| net.loads[k].in_service && live(net.loads[k].bus)).collect(),
            shunts: (0..net.shunts.len()).filter(|&k| net.shunts[k].in_service && live(net.shunts[k].bus)).collect(),
            buses,
            bus_local,
        }
    }

    pub(crate) fn local_bus(&self, adj: &crate::netmodel::Adjacency, id: usize) -> usize {
        self.bus_local[adj.pos(id)].expect("component sits on a modelled bus")
    }
}

/// Coefficients of the directed power flows in terms of (W_ii or W_jj, WR, WI).
struct FlowCoefficients {
    /// `p = pw·W + pr·WR + pi·WI`, likewise for `q`.
    pub from: [[f64; 3]; 2],
    pub to: [[f64; 3]; 2],
}

fn flow_coefficients(br: &Branch) -> FlowCoefficients {
    let y = br.series_admittance;
    let t2 = br.tap.norm_sqr();
    let c = y.conj() / br.tap;
    let d = y.conj() / br.tap.conj();
    let (gf, bf) = (y.re + br.charge_from.re, y.im + br.charge_from.im);
    let (gt, bt) = (y.re + br.charge_to.re, y.im + br.charge_to.im);
    FlowCoefficients {
        from: [[gf / t2, -c.re, c.im], [-bf / t2, -c.im, -c.re]],
        to: [[gt, -d.re, -d.im], [-bt, -d.im, d.re]],
    }
}

/// Assemble the relaxation for a preprocessed single-component network.
pub fn build_soc_mld_c(net: &Network, weights: &ObjectiveWeights) -> Result<ConicProblem, FormulationError> {
    let parts = connected_components(net).components.len();
    if parts != 1 {
        return Err(FormulationError::NotSingleComponent(parts));
    }
    let model = Model::of(net);
    let adj = net.adjacency();
    for &k in &model.buses {
        if !net.buses[k].v_max.is_finite() {
            return Err(FormulationError::InfiniteVoltage(net.buses[k].id));
        }
    }
    let vm = VarMap::new(
        model.buses.iter().map(|&k| net.buses[k].id).collect(),
        model.branches.iter().map(|&k| net.branches[k].id).collect(),
        model.generators.iter().map(|&k| net.generators[k].id).collect(),
        model.loads.iter().map(|&k| net.loads[k].id).collect(),
        model.shunts.iter().map(|&k| net.shunts[k].id).collect(),
        model.shunts.iter().map(|&k| model.local_bus(&adj, net.shunts[k].bus)).collect(),
    );

    let mut zero = RowBlock::default();
    let mut nonneg = RowBlock::default();
    let mut soc = RowBlock::default();
    let mut rsoc = RowBlock::default();
    let unit_box = |nonneg: &mut RowBlock, var: usize| {
        nonneg.push(vec![(var, 1.0)], 0.0);
        nonneg.push(vec![(var, -1.0)], 1.0);
    };

    // Voltage magnitudes switched by z^v.
    for (b, &k) in model.buses.iter().enumerate() {
        let bus = &net.buses[k];
        let (lo, hi) = (bus.v_min * bus.v_min, bus.v_max * bus.v_max);
        if lo == hi {
            zero.push(vec![(vm.w(b), 1.0), (vm.zv(b), -lo)], 0.0);
        } else {
            nonneg.push(vec![(vm.w(b), 1.0), (vm.zv(b), -lo)], 0.0);
            nonneg.push(vec![(vm.w(b), -1.0), (vm.zv(b), hi)], 0.0);
        }
        unit_box(&mut nonneg, vm.zv(b));
    }

    // Shunt products W^s = z^s·W_ii under a McCormick envelope.
    for h in 0..model.shunts.len() {
        let b = vm.shunt_bus[h];
        let vu = net.buses[model.buses[b]].v_max;
        for plane in mccormick(0.0, 1.0, 0.0, vu * vu)? {
            nonneg.push(vec![(vm.zs(h), plane.ax), (vm.w(b), plane.ay), (vm.ws(h), plane.aw)], plane.c);
        }
        unit_box(&mut nonneg, vm.zs(h));
    }

    // Generator capability scaled by z^g; infinite bounds drop their row.
    for (g, &k) in model.generators.iter().enumerate() {
        let gen = &net.generators[k];
        for (var, lo, hi) in [(vm.pg(g), gen.p_min, gen.p_max), (vm.qg(g), gen.q_min, gen.q_max)] {
            if lo.is_finite() {
                nonneg.push(vec![(var, 1.0), (vm.zg(g), -lo)], 0.0);
            }
            if hi.is_finite() {
                nonneg.push(vec![(var, -1.0), (vm.zg(g), hi)], 0.0);
            }
        }
        unit_box(&mut nonneg, vm.zg(g));
    }
    for l in 0..model.loads.len() {
        unit_box(&mut nonneg, vm.zd(l));
    }

    // Power balance per bus.
    let mut p_bal: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.buses.len()];
    let mut q_bal: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.buses.len()];
    for (g, &k) in model.generators.iter().enumerate() {
        let b = model.local_bus(&adj, net.generators[k].bus);
        p_bal[b].push((vm.pg(g), 1.0));
        q_bal[b].push((vm.qg(g), 1.0));
    }
    for (l, &k) in model.loads.iter().enumerate() {
        let load = &net.loads[k];
        let b = model.local_bus(&adj, load.bus);
        p_bal[b].push((vm.zd(l), -load.demand.re));
        q_bal[b].push((vm.zd(l), -load.demand.im));
    }
    for (h, &k) in model.shunts.iter().enumerate() {
        let y = net.shunts[k].admittance;
        let b = vm.shunt_bus[h];
        p_bal[b].push((vm.ws(h), -y.re));
        q_bal[b].push((vm.ws(h), y.im));
    }

    for (e, &k) in model.branches.iter().enumerate() {
        let br = &net.branches[k];
        let i = model.local_bus(&adj, br.from_bus);
        let j = model.local_bus(&adj, br.to_bus);
        let fc = flow_coefficients(br);
        let (wr, wi) = (vm.wr(e), vm.wi(e));
        let defs = [
            (vm.p_from(e), vm.w(i), fc.from[0]),
            (vm.q_from(e), vm.w(i), fc.from[1]),
            (vm.p_to(e), vm.w(j), fc.to[0]),
            (vm.q_to(e), vm.w(j), fc.to[1]),
        ];
        for (flow, w, [cw, cr, ci]) in defs {
            zero.push(vec![(flow, -1.0), (w, cw), (wr, cr), (wi, ci)], 0.0);
        }
        p_bal[i].push((vm.p_from(e), -1.0));
        q_bal[i].push((vm.q_from(e), -1.0));
        p_bal[j].push((vm.p_to(e), -1.0));
        q_bal[j].push((vm.q_to(e), -1.0));

        // Angle-difference envelope.
        nonneg.push(vec![(wi, 1.0), (wr, -br.angmin.tan())], 0.0);
        nonneg.push(vec![(wi, -1.0), (wr, br.angmax.tan())], 0.0);

        if let Some(rating) = br.rating {
            soc.push(vec![], rating);
            soc.push(vec![(vm.p_from(e), 1.0)], 0.0);
            soc.push(vec![(vm.q_from(e), 1.0)], 0.0);
            soc.push(vec![], rating);
            soc.push(vec![(vm.p_to(e), 1.0)], 0.0);
            soc.push(vec![(vm.q_to(e), 1.0)], 0.0);
        }

        rsoc.push(vec![(vm.w(i), FRAC_1_SQRT_2)], 0.0);
        rsoc.push(vec![(vm.w(j), FRAC_1_SQRT_2)], 0.0);
        rsoc.push(vec![(wr, 1.0)], 0.0);
        rsoc.push(vec![(wi, 1.0)], 0.0);
    }
    for (p, q) in p_bal.into_iter().zip(q_bal) {
        zero.push(p, 0.0);
        zero.push(q, 0.0);
    }

    // Objective: maximise the weighted retention and service terms.
    let mut c = vec![0.0; vm.len()];
    for b in 0..model.buses.len() {
        c[vm.zv(b)] = -weights.m_v;
    }
    for g in 0..model.generators.len() {
        c[vm.zg(g)] = -weights.m_g;
    }
    for h in 0..model.shunts.len() {
        c[vm.zs(h)] = -weights.m_s;
    }
    for (l, &k) in model.loads.iter().enumerate() {
        let load = &net.loads[k];
        c[vm.zd(l)] = -load.priority * load.demand.re.abs();
    }

    let mut cones = Vec::new();
    if zero.len() > 0 {
        cones.push(Cone::Zero(zero.len()));
    }
    if nonneg.len() > 0 {
        cones.push(Cone::NonNeg(nonneg.len()));
    }
    cones.extend(std::iter::repeat_n(Cone::SecondOrder(3), soc.len() / 3));
    cones.extend(std::iter::repeat_n(Cone::RotatedSecondOrder(4), rsoc.len() / 4));

    let (mut rows, mut cols, mut vals, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for block in [&zero, &nonneg, &soc, &rsoc] {
        for (terms, &constant) in block.terms.iter().zip(&block.constants) {
            let r = b.len();
            for &(var, coef) in terms {
                rows.push(r);
                cols.push(var);
                vals.push(-coef);
            }
            b.push(constant);
        }
    }
    let a = CscMatrix::from_triplets(b.len(), vm.len(), &rows, &cols, &vals);
    let program = ConeProgram::new(c, a, b, cones)?;
    let load_active = model.loads.iter().map(|&k| net.loads[k].demand.re).collect();
    Ok(ConicProblem { program, varmap: vm, weights: *weights, load_active })
}

/// Weights and relaxation in one call.
pub fn build_default(net: &Network) -> Result<ConicProblem, FormulationError> {
    build_soc_mld_c(net, &objective_weights(net))
}
