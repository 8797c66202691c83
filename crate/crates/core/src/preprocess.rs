//! Cleaning of damaged networks and diagnosis of structural infeasibility.

use crate::netmodel::Network;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum HazardKind {
    GenMinInjection,
    ShuntIsland,
    LineChargingIsland,
}

impl HazardKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            HazardKind::GenMinInjection => "GenMinInjection",
            HazardKind::ShuntIsland => "ShuntIsland",
            HazardKind::LineChargingIsland => "LineChargingIsland",
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HazardReport {
    pub kind: HazardKind,
    /// Bus ids of the offending component, ascending.
    pub component_ids: Vec<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComponentPartition {
    /// Bus ids per component, each ascending; components ordered by smallest id.
    pub components: Vec<Vec<usize>>,
    pub component_of: BTreeMap<usize, usize>,
}

/// Mark everything attached to an out-of-service bus as out of service.
pub fn propagate_outages(net: &Network) -> Network {
    let mut out = net.clone();
    let live: std::collections::HashSet<usize> = out.buses.iter().filter(|b| b.in_service).map(|b| b.id).collect();
    for br in &mut out.branches {
        if !(live.contains(&br.from_bus) && live.contains(&br.to_bus)) {
            br.in_service = false;
        }
    }
    for g in &mut out.generators {
        g.in_service &= live.contains(&g.bus);
    }
    for l in &mut out.loads {
        l.in_service &= live.contains(&l.bus);
    }
    for s in &mut out.shunts {
        s.in_service &= live.contains(&s.bus);
    }
    out
}

/// Whether each bus position carries an in-service load or generator.
fn supplied_or_loaded(net: &Network) -> Vec<bool> {
    let adj = net.adjacency();
    (0..net.buses.len())
        .map(|k| {
            adj.loads[k].iter().any(|&l| net.loads[l].in_service)
                || adj.generators[k].iter().any(|&g| net.generators[g].in_service)
        })
        .collect()
}

fn deactivate_bus(net: &mut Network, pos: usize) {
    let id = net.buses[pos].id;
    net.buses[pos].in_service = false;
    for br in net.branches.iter_mut().filter(|b| b.from_bus == id || b.to_bus == id) {
        br.in_service = false;
    }
    for s in net.shunts.iter_mut().filter(|s| s.bus == id) {
        s.in_service = false;
    }
    for l in net.loads.iter_mut().filter(|l| l.bus == id) {
        l.in_service = false;
    }
    for g in net.generators.iter_mut().filter(|g| g.bus == id) {
        g.in_service = false;
    }
}

/// Repeatedly remove degree-one buses without load or generation.
pub fn deactivate_dangling_buses(net: &Network) -> Network {
    let mut out = net.clone();
    let adj = out.adjacency();
    let useful = supplied_or_loaded(&out);
    loop {
        let mut degree = vec![0usize; out.buses.len()];
        for br in out.branches.iter().filter(|b| b.in_service) {
            degree[adj.pos(br.from_bus)] += 1;
            degree[adj.pos(br.to_bus)] += 1;
        }
        let dangling: Vec<usize> =
            (0..out.buses.len()).filter(|&k| out.buses[k].in_service && degree[k] == 1 && !useful[k]).collect();
        if dangling.is_empty() {
            return out;
        }
        for k in dangling {
            deactivate_bus(&mut out, k);
        }
    }
}

/// Components of in-service buses joined by in-service branches.
pub fn connected_components(net: &Network) -> ComponentPartition {
    let adj = net.adjacency();
    let n = net.buses.len();
    let mut nbrs = vec![Vec::new(); n];
    for br in net.branches.iter().filter(|b| b.in_service) {
        let (f, t) = (adj.pos(br.from_bus), adj.pos(br.to_bus));
        if net.buses[f].in_service && net.buses[t].in_service {
            nbrs[f].push(t);
            nbrs[t].push(f);
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&k| net.buses[k].in_service).collect();
    order.sort_by_key(|&k| net.buses[k].id);

    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in order {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut ids = Vec::new();
        while let Some(k) = stack.pop() {
            ids.push(net.buses[k].id);
            for &m in &nbrs[k] {
                if !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
        ids.sort_unstable();
        components.push(ids);
    }
    let component_of = components.iter().enumerate().flat_map(|(c, ids)| ids.iter().map(move |&id| (id, c))).collect();
    ComponentPartition { components, component_of }
}

fn deactivate_components(net: &mut Network, keep: impl Fn(usize) -> bool, part: &ComponentPartition) {
    let adj = net.adjacency();
    for (c, ids) in part.components.iter().enumerate() {
        if !keep(c) {
            for id in ids {
                deactivate_bus(net, adj.pos(*id));
            }
        }
    }
}

/// Put out of service every component with neither load nor generation.
pub fn deactivate_dead_components(net: &Network) -> Network {
    let mut out = net.clone();
    let part = connected_components(&out);
    let adj = out.adjacency();
    let useful = supplied_or_loaded(&out);
    let alive: Vec<bool> = part.components.iter().map(|ids| ids.iter().any(|id| useful[adj.pos(*id)])).collect();
    deactivate_components(&mut out, |c| alive[c], &part);
    out
}

/// Keep only the component with the most buses (ties: smallest bus id).
pub fn largest_component(net: &Network) -> Network {
    let mut out = net.clone();
    let part = connected_components(&out);
    // Components are ordered by smallest id, so the first maximum wins ties.
    let mut best = None::<(usize, usize)>;
    for (c, ids) in part.components.iter().enumerate() {
        if best.is_none_or(|(_, len)| ids.len() > len) {
            best = Some((c, ids.len()));
        }
    }
    if let Some((keep, _)) = best {
        deactivate_components(&mut out, |c| c == keep, &part);
    }
    out
}

/// Scan each component for the three known sources of infeasibility.
pub fn detect_hazards(net: &Network) -> Vec<HazardReport> {
    let part = connected_components(net);
    let adj = net.adjacency();
    let mut reports = Vec::new();
    for ids in &part.components {
        let pos: Vec<usize> = ids.iter().map(|id| adj.pos(*id)).collect();
        let gens: Vec<usize> =
            pos.iter().flat_map(|&k| adj.generators[k].iter().copied()).filter(|&g| net.generators[g].in_service).collect();
        let load: f64 = pos
            .iter()
            .flat_map(|&k| adj.loads[k].iter())
            .filter(|&&l| net.loads[l].in_service)
            .map(|&l| net.loads[l].demand.re)
            .sum();
        let shunts: Vec<usize> =
            pos.iter().flat_map(|&k| adj.shunts[k].iter().copied()).filter(|&s| net.shunts[s].in_service).collect();
        let absorption: f64 = shunts
            .iter()
            .map(|&s| {
                let vu = net.buses[adj.pos(net.shunts[s].bus)].v_max;
                net.shunts[s].admittance.re.abs() * vu * vu
            })
            .sum();
        let p_min: f64 = gens.iter().map(|&g| net.generators[g].p_min).sum();

        if !gens.is_empty() && p_min > load + absorption {
            reports.push(HazardReport {
                kind: HazardKind::GenMinInjection,
                component_ids: ids.clone(),
                detail: format!(
                    "minimum generation {p_min:.6} p.u. exceeds load {load:.6} plus shunt absorption {absorption:.6}"
                ),
            });
        }
        if !shunts.is_empty() && gens.is_empty() {
            reports.push(HazardReport {
                kind: HazardKind::ShuntIsland,
                component_ids: ids.clone(),
                detail: format!("{} fixed shunt(s) with no generator to supply them", shunts.len()),
            });
        }
        if ids.len() == 2 && gens.is_empty() {
            let lines: Vec<&crate::netmodel::Branch> = net
                .branches
                .iter()
                .filter(|b| b.in_service && ids.contains(&b.from_bus) && ids.contains(&b.to_bus))
                .collect();
            let energized = pos.iter().all(|&k| net.buses[k].v_min > 0.0);
            let zero = crate::netmodel::Complex::new(0.0, 0.0);
            if let [br] = lines.as_slice() {
                if energized && (br.charge_from != zero || br.charge_to != zero) {
                    reports.push(HazardReport {
                        kind: HazardKind::LineChargingIsland,
                        component_ids: ids.clone(),
                        detail: format!("isolated branch {} has line charging and no source", br.id),
                    });
                }
            }
        }
    }
    reports
}

/// Propagate, diagnose, then reduce to the largest live component.
pub fn preprocess_pipeline(net: &Network) -> (Network, Vec<HazardReport>) {
    let propagated = propagate_outages(net);
    let hazards = detect_hazards(&propagated);
    let reduced = largest_component(&deactivate_dead_components(&deactivate_dangling_buses(&propagated)));
    (reduced, hazards)
}
