use super::{ConicProblem, FormulationError};
use mldkit_conic::{SolverResult, Status};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BusValue {
    pub id: usize,
    pub w: f64,
    pub zv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchValue {
    pub id: usize,
    pub wr: f64,
    pub wi: f64,
    pub p_from: f64,
    pub q_from: f64,
    pub p_to: f64,
    pub q_to: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorValue {
    pub id: usize,
    pub pg: f64,
    pub qg: f64,
    pub zg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadValue {
    pub id: usize,
    pub zd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShuntValue {
    pub id: usize,
    pub zs: f64,
    pub ws: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MldSolution {
    pub status: Status,
    pub iterations: usize,
    pub runtime_s: f64,
    /// Weighted single objective (the maximised quantity).
    pub objective: f64,
    pub served_active: f64,
    pub served_fraction: f64,
    pub buses: Vec<BusValue>,
    pub branches: Vec<BranchValue>,
    pub generators: Vec<GeneratorValue>,
    pub loads: Vec<LoadValue>,
    pub shunts: Vec<ShuntValue>,
}

impl MldSolution {
    pub fn buses_on(&self) -> f64 {
        self.buses.iter().map(|b| b.zv).sum()
    }

    pub fn gens_on(&self) -> f64 {
        self.generators.iter().map(|g| g.zg).sum()
    }

    pub fn shunts_on(&self) -> f64 {
        self.shunts.iter().map(|s| s.zs).sum()
    }
}

/// Read network quantities off a solver point. Indicator values within the
/// solver's primal accuracy of `[0, 1]` are clamped into it.
pub fn extract_solution(prob: &ConicProblem, result: &SolverResult) -> Result<MldSolution, FormulationError> {
    let vm = &prob.varmap;
    let x = &result.x;
    if x.len() != vm.len() {
        return Err(FormulationError::Dimension { got: x.len(), want: vm.len() });
    }
    // Slack for rounding: the worst row can sit exactly on the residual.
    let tol = (result.residuals.primal_abs * (1.0 + 1e-6)).max(1e-7);
    let indicator = |what: &str, id: usize, v: f64| -> Result<f64, FormulationError> {
        if v.is_finite() && v >= -tol && v <= 1.0 + tol {
            Ok(v.clamp(0.0, 1.0))
        } else {
            Err(FormulationError::Extraction(format!("{what} {id} has indicator {v} outside [0, 1]")))
        }
    };

    let buses = vm
        .buses
        .iter()
        .enumerate()
        .map(|(b, &id)| Ok(BusValue { id, w: x[vm.w(b)], zv: indicator("bus", id, x[vm.zv(b)])? }))
        .collect::<Result<Vec<_>, FormulationError>>()?;
    let branches = vm
        .branches
        .iter()
        .enumerate()
        .map(|(e, &id)| BranchValue {
            id,
            wr: x[vm.wr(e)],
            wi: x[vm.wi(e)],
            p_from: x[vm.p_from(e)],
            q_from: x[vm.q_from(e)],
            p_to: x[vm.p_to(e)],
            q_to: x[vm.q_to(e)],
        })
        .collect();
    let generators = vm
        .generators
        .iter()
        .enumerate()
        .map(|(g, &id)| Ok(GeneratorValue { id, pg: x[vm.pg(g)], qg: x[vm.qg(g)], zg: indicator("generator", id, x[vm.zg(g)])? }))
        .collect::<Result<Vec<_>, FormulationError>>()?;
    let loads = vm
        .loads
        .iter()
        .enumerate()
        .map(|(l, &id)| Ok(LoadValue { id, zd: indicator("load", id, x[vm.zd(l)])? }))
        .collect::<Result<Vec<_>, FormulationError>>()?;
    let shunts = vm
        .shunts
        .iter()
        .enumerate()
        .map(|(h, &id)| Ok(ShuntValue { id, zs: indicator("shunt", id, x[vm.zs(h)])?, ws: x[vm.ws(h)] }))
        .collect::<Result<Vec<_>, FormulationError>>()?;

    let served_active: f64 = loads.iter().zip(&prob.load_active).map(|(l, p)| l.zd * p).sum();
    let demand: f64 = prob.load_active.iter().sum();
    let served_fraction = if demand > 0.0 { served_active / demand } else { 1.0 };
    Ok(MldSolution {
        status: result.status,
        iterations: result.iterations,
        runtime_s: result.runtime_s,
        objective: -result.objective,
        served_active,
        served_fraction,
        buses,
        branches,
        generators,
        loads,
        shunts,
    })
}
