//! Batch runs over scenario sets and their delivered-load summaries.

use crate::contingency::{apply, ContingencyError, Scenario, ScenarioSet};
use crate::formulation::{build_default, extract_solution, MldSolution};
use crate::netmodel::Network;
use crate::preprocess::{preprocess_pipeline, HazardKind};
use mldkit_conic::{solve, SolverSettings, Status};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot summarize an empty batch")]
    Empty,
    #[error("parallelism must be at least 1")]
    Parallelism,
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Scenario(#[from] ContingencyError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchRecord {
    pub scenario_id: u64,
    pub status: Status,
    pub iterations: usize,
    pub runtime_s: f64,
    pub objective: f64,
    pub served_active_pu: f64,
    pub served_mw: f64,
    /// Relative to the undamaged network's in-service active demand.
    pub served_fraction: f64,
    pub buses_on: f64,
    pub gens_on: f64,
    /// Mean shunt indicator; 1 when the network has no in-service shunt.
    pub shunt_retention: f64,
    pub hazards: Vec<HazardKind>,
}

/// Solve one scenario end to end. Never fails: problems surface as a status.
pub fn run_scenario(net: &Network, scenario: &Scenario, settings: &SolverSettings) -> Result<BatchRecord, ContingencyError> {
    let base_demand = net.active_demand();
    let damaged = apply(net, scenario)?;
    let (pp, hazard_reports) = preprocess_pipeline(&damaged);
    let mut hazards: Vec<HazardKind> = hazard_reports.iter().map(|h| h.kind).collect();
    hazards.sort_by_key(|k| k.as_str());
    hazards.dedup();

    let mut record = BatchRecord {
        scenario_id: scenario.id,
        status: Status::Optimal,
        iterations: 0,
        runtime_s: 0.0,
        objective: 0.0,
        served_active_pu: 0.0,
        served_mw: 0.0,
        served_fraction: if base_demand > 0.0 { 0.0 } else { 1.0 },
        buses_on: 0.0,
        gens_on: 0.0,
        shunt_retention: 1.0,
        hazards,
    };
    // Nothing survived preprocessing: everything is shed, trivially optimal.
    if pp.in_service_buses() == 0 {
        return Ok(record);
    }
    let solution = build_default(&pp).map_err(|_| ()).and_then(|prob| {
        let result = solve(&prob.program, settings).map_err(|_| ())?;
        let status = result.status;
        let (iterations, runtime) = (result.iterations, result.runtime_s);
        Ok(extract_solution(&prob, &result).map_err(|_| (status, iterations, runtime)))
    });
    match solution {
        Ok(Ok(sol)) => fill(&mut record, &sol, net.base_mva, base_demand),
        Ok(Err((status, iterations, runtime))) => {
            record.status = if status == Status::Optimal { Status::NumericalError } else { status };
            record.iterations = iterations;
            record.runtime_s = runtime;
            blank(&mut record);
        }
        Err(()) => {
            record.status = Status::NumericalError;
            blank(&mut record);
        }
    }
    Ok(record)
}

fn fill(record: &mut BatchRecord, sol: &MldSolution, base_mva: f64, base_demand: f64) {
    record.status = sol.status;
    record.iterations = sol.iterations;
    record.runtime_s = sol.runtime_s;
    record.objective = sol.objective;
    record.served_active_pu = sol.served_active;
    record.served_mw = sol.served_active * base_mva;
    record.served_fraction = if base_demand > 0.0 { sol.served_active / base_demand } else { 1.0 };
    record.buses_on = sol.buses_on();
    record.gens_on = sol.gens_on();
    record.shunt_retention = if sol.shunts.is_empty() { 1.0 } else { sol.shunts_on() / sol.shunts.len() as f64 };
}

fn blank(record: &mut BatchRecord) {
    for v in [
        &mut record.objective,
        &mut record.served_active_pu,
        &mut record.served_mw,
        &mut record.served_fraction,
        &mut record.buses_on,
        &mut record.gens_on,
        &mut record.shunt_retention,
    ] {
        *v = f64::NAN;
    }
}

/// Records come back in scenario-id order whatever the completion order.
pub fn run_batch(
    net: &Network,
    set: &ScenarioSet,
    settings: &SolverSettings,
    parallelism: usize,
) -> Result<Vec<BatchRecord>, ReportError> {
    if parallelism == 0 {
        return Err(ReportError::Parallelism);
    }
    let mut order: Vec<&Scenario> = set.scenarios.iter().collect();
    order.sort_by_key(|s| s.id);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(parallelism).build()?;
    let records: Result<Vec<_>, _> =
        pool.install(|| order.par_iter().map(|s| run_scenario(net, s, settings)).collect());
    Ok(records?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuntimeStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
}

fn runtime_stats(times: &mut [f64]) -> RuntimeStats {
    times.sort_by(f64::total_cmp);
    let n = times.len();
    let median = if n % 2 == 1 { times[n / 2] } else { 0.5 * (times[n / 2 - 1] + times[n / 2]) };
    RuntimeStats { count: n, mean: times.iter().sum::<f64>() / n as f64, median }
}

pub const BIN_WIDTH: f64 = 0.02;
/// Bins are centred on 0, 0.02, ..., 1.0.
pub const BIN_COUNT: usize = 51;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub records: usize,
    pub status_counts: BTreeMap<String, usize>,
    pub runtime: RuntimeStats,
    pub runtime_by_status: BTreeMap<String, RuntimeStats>,
    pub histogram: Vec<usize>,
    pub served_mean: f64,
    /// Population variance.
    pub served_variance: f64,
    /// Records whose served fraction is undefined (failed extraction).
    pub unserved_records: usize,
}

pub fn histogram_bin(fraction: f64) -> usize {
    ((fraction / BIN_WIDTH).round().max(0.0) as usize).min(BIN_COUNT - 1)
}

pub fn summarize(records: &[BatchRecord]) -> Result<Summary, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut status_counts = BTreeMap::new();
    let mut times: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        *status_counts.entry(r.status.to_string()).or_insert(0) += 1;
        times.entry(r.status.to_string()).or_default().push(r.runtime_s);
    }
    let mut all: Vec<f64> = records.iter().map(|r| r.runtime_s).collect();
    let runtime_by_status = times.into_iter().map(|(k, mut v)| (k, runtime_stats(&mut v))).collect();

    let served: Vec<f64> = records.iter().map(|r| r.served_fraction).filter(|f| f.is_finite()).collect();
    let mut histogram = vec![0usize; BIN_COUNT];
    for &f in &served {
        histogram[histogram_bin(f)] += 1;
    }
    let (mean, variance) = if served.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let n = served.len() as f64;
        let mean = served.iter().sum::<f64>() / n;
        (mean, served.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n)
    };
    Ok(Summary {
        records: records.len(),
        status_counts,
        runtime: runtime_stats(&mut all),
        runtime_by_status,
        histogram,
        served_mean: mean,
        served_variance: variance,
        unserved_records: records.len() - served.len(),
    })
}

/// Fixed 9-significant-digit scientific notation.
pub fn sci(v: f64) -> String {
    format!("{v:.8e}")
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Result table without timing columns, so reruns compare byte for byte.
pub fn records_csv(records: &[BatchRecord]) -> Result<String, ReportError> {
    let header = [
        "scenario_id",
        "status",
        "iterations",
        "objective",
        "served_active_pu",
        "served_mw",
        "served_fraction",
        "buses_on",
        "gens_on",
        "shunt_retention",
        "hazards",
    ];
    csv_text(
        &header,
        records.iter().map(|r| {
            let hazards: Vec<&str> = r.hazards.iter().map(|h| h.as_str()).collect();
            vec![
                r.scenario_id.to_string(),
                r.status.to_string(),
                r.iterations.to_string(),
                sci(r.objective),
                sci(r.served_active_pu),
                sci(r.served_mw),
                sci(r.served_fraction),
                sci(r.buses_on),
                sci(r.gens_on),
                sci(r.shunt_retention),
                hazards.join("|"),
            ]
        }),
    )
}

pub fn timings_csv(records: &[BatchRecord]) -> Result<String, ReportError> {
    csv_text(
        &["scenario_id", "status", "runtime_s"],
        records.iter().map(|r| vec![r.scenario_id.to_string(), r.status.to_string(), sci(r.runtime_s)]),
    )
}

pub fn histogram_csv(summary: &Summary) -> Result<String, ReportError> {
    csv_text(
        &["bin_center", "count"],
        summary.histogram.iter().enumerate().map(|(k, c)| vec![format!("{:.2}", k as f64 * BIN_WIDTH), c.to_string()]),
    )
}
