use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use mldkit::contingency::{apply, generate, ScenarioSet};
use mldkit::formulation::{build_default, extract_solution};
use mldkit::netmodel::{parse_case, Network};
use mldkit::preprocess::{detect_hazards, preprocess_pipeline, propagate_outages};
use mldkit::report::{histogram_csv, records_csv, run_batch, summarize, timings_csv};
use mldkit::validate::gap_estimate;
use mldkit_conic::{solve, ConeProgram, ConicError, SolverSettings, Status};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mldkit", version, about = "Maximal load delivery on damaged power networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a case, then scan it for hazards.
    Check { case: PathBuf },
    /// Generate a seeded set of branch-outage scenarios.
    Scenarios {
        case: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        fraction: f64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve the relaxation for the base case or one scenario.
    Solve {
        case: PathBuf,
        #[command(flatten)]
        pick: Pick,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve every scenario of a set and write a results table.
    Batch {
        case: PathBuf,
        scenarios: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Served-fraction histogram output.
        #[arg(long)]
        hist: Option<PathBuf>,
        /// Per-scenario runtimes, kept apart so the results table is reproducible.
        #[arg(long)]
        timings: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Compare the relaxation bound with a uniform-shedding feasible point.
    Gap {
        case: PathBuf,
        #[command(flatten)]
        pick: Pick,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Write the standard-form conic program as JSON.
    ExportConic {
        case: PathBuf,
        #[command(flatten)]
        pick: Pick,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve a conic program previously written by export-conic.
    SolveConic {
        program: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Pick {
    /// Scenario set produced by `scenarios`.
    #[arg(long, requires = "id")]
    scenario: Option<PathBuf>,
    #[arg(long, requires = "scenario")]
    id: Option<u64>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = 150.0)]
    time_limit: f64,
}

impl SolverArgs {
    fn settings(&self) -> SolverSettings {
        SolverSettings { time_limit_s: self.time_limit, ..SolverSettings::with_tolerance(self.eps) }
    }
}

/// Errors tagged with the exit code they map to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

const USAGE: u8 = 1;
const INPUT: u8 = 2;
const SOLVER: u8 = 3;

trait Tag<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Tag<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

/// Bad settings are a usage problem; anything else is the solver's.
fn solve_checked(prog: &ConeProgram, settings: &SolverSettings) -> Result<mldkit_conic::SolverResult, Failure> {
    solve(prog, settings).map_err(|e| {
        let code = if matches!(e, ConicError::Settings(_)) { USAGE } else { SOLVER };
        Failure { code, error: e.into() }
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_case(path: &Path) -> Result<Network> {
    let net = parse_case(&read(path)?).with_context(|| format!("cannot parse {}", path.display()))?;
    net.validate().with_context(|| format!("invalid network in {}", path.display()))?;
    Ok(net)
}

fn load_scenarios(path: &Path) -> Result<ScenarioSet> {
    ScenarioSet::from_json(&read(path)?).with_context(|| format!("cannot read scenarios from {}", path.display()))
}

/// The base case, or the base case with one scenario applied.
fn pick_network(case: &Path, pick: &Pick) -> Result<Network, Failure> {
    let net = load_case(case).code(INPUT)?;
    match (&pick.scenario, pick.id) {
        (Some(path), Some(id)) => {
            let set = load_scenarios(path).code(INPUT)?;
            let s = set.get(id).ok_or_else(|| anyhow!("scenario {id} not in {}", path.display())).code(INPUT)?;
            apply(&net, s).code(INPUT)
        }
        _ => Ok(net),
    }
}

fn case_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Check { case } => {
            let net = load_case(&case).code(INPUT)?;
            println!(
                "{}: {} buses, {} branches, {} generators, {} loads, {} shunts, demand {:.4} p.u.",
                net.name,
                net.buses.len(),
                net.branches.len(),
                net.generators.len(),
                net.loads.len(),
                net.shunts.len(),
                net.active_demand()
            );
            let hazards = detect_hazards(&propagate_outages(&net));
            if hazards.is_empty() {
                println!("no hazards");
            }
            for h in hazards {
                println!("hazard {} on buses {:?}: {}", h.kind.as_str(), h.component_ids, h.detail);
            }
        }
        Command::Scenarios { case, fraction, count, seed, output } => {
            let net = load_case(&case).code(INPUT)?;
            let mut set = generate(&net, fraction, count, seed).code(USAGE)?;
            set.case = case_name(&case);
            write(output.as_deref(), &set.to_json()).code(INPUT)?;
        }
        Command::Solve { case, pick, solver, output } => {
            let net = pick_network(&case, &pick)?;
            let (pp, hazards) = preprocess_pipeline(&net);
            let prob = build_default(&pp).code(INPUT)?;
            let result = solve_checked(&prob.program, &solver.settings())?;
            let sol = extract_solution(&prob, &result).code(SOLVER)?;
            let doc = json!({ "case": case_name(&case), "scenario": pick.id, "hazards": hazards, "solution": sol });
            write(output.as_deref(), &serde_json::to_string_pretty(&doc).expect("solution serializes")).code(INPUT)?;
            eprintln!("{}: served {:.6} after {} iterations", sol.status, sol.served_fraction, sol.iterations);
            if sol.status != Status::Optimal {
                return Err(anyhow!("solver stopped with status {}", sol.status)).code(SOLVER);
            }
        }
        Command::Batch { case, scenarios, output, parallel, hist, timings, solver } => {
            let net = load_case(&case).code(INPUT)?;
            let set = load_scenarios(&scenarios).code(INPUT)?;
            let records = run_batch(&net, &set, &solver.settings(), parallel).code(USAGE)?;
            write(Some(&output), &records_csv(&records).code(INPUT)?).code(INPUT)?;
            if let Some(path) = timings {
                write(Some(&path), &timings_csv(&records).code(INPUT)?).code(INPUT)?;
            }
            if records.is_empty() {
                return Ok(());
            }
            let summary = summarize(&records).code(INPUT)?;
            if let Some(path) = hist {
                write(Some(&path), &histogram_csv(&summary).code(INPUT)?).code(INPUT)?;
            }
            let counts: Vec<String> = summary.status_counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!(
                "{} scenarios: {}; runtime mean {:.3} s median {:.3} s; served mean {:.4} variance {:.6}",
                summary.records,
                counts.join(" "),
                summary.runtime.mean,
                summary.runtime.median,
                summary.served_mean,
                summary.served_variance
            );
        }
        Command::Gap { case, pick, solver } => {
            let net = pick_network(&case, &pick)?;
            let gap = gap_estimate(&net, &solver.settings()).code(SOLVER)?;
            println!("{}", serde_json::to_string_pretty(&gap).expect("gap serializes"));
        }
        Command::ExportConic { case, pick, output } => {
            let net = pick_network(&case, &pick)?;
            let (pp, _) = preprocess_pipeline(&net);
            let prob = build_default(&pp).code(INPUT)?;
            write(output.as_deref(), &prob.to_json()).code(INPUT)?;
        }
        Command::SolveConic { program, solver, output } => {
            let prog = ConeProgram::from_json(&read(&program).code(INPUT)?).code(INPUT)?;
            let r = solve_checked(&prog, &solver.settings())?;
            let doc = json!({
                "status": r.status,
                "objective": r.objective,
                "iterations": r.iterations,
                "residuals": { "primal": r.residuals.primal, "dual": r.residuals.dual, "gap": r.residuals.gap },
                "x": r.x,
            });
            write(output.as_deref(), &doc.to_string()).code(INPUT)?;
            if r.status != Status::Optimal {
                return Err(anyhow!("solver stopped with status {}", r.status)).code(SOLVER);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
