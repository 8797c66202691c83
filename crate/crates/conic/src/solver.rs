//! ADMM on the conic splitting `Ax + s = b, s ∈ K`.
//!
//! Each iteration solves one quasi-definite system with a cached factorization,
//! projects onto `K`, and updates the multiplier. Convergence is declared on
//! the unscaled residuals
//!
//! ```text
//! r_p = ‖Ax + s − b‖∞ / (1 + ‖b‖∞)
//! r_d = ‖Aᵀy + c‖∞ / (1 + ‖c‖∞)
//! gap = |cᵀx + bᵀy| / (1 + |cᵀx| + |bᵀy|)
//! ```
//!
//! with `y ∈ K*` the multiplier of the dual `max −bᵀy s.t. Aᵀy + c = 0`.

use crate::cone::{for_each_block, Cone};
use crate::error::ConicError;
use crate::kkt::KktSolver;
use crate::program::ConeProgram;
use crate::scaling::{equilibrate, Equilibration};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSettings {
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub eps_gap: f64,
    pub max_iters: usize,
    pub time_limit_s: f64,
    pub scaling: bool,
    pub equilibration_iters: usize,
    pub rho: f64,
    /// Multiplier applied to `rho` on rows of zero cones.
    pub rho_eq_factor: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub adaptive_rho: bool,
    /// Base spacing of rho updates; the spacing grows after every update.
    pub adapt_interval: usize,
    pub check_interval: usize,
    pub eps_infeasible: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            eps_primal: 1e-6,
            eps_dual: 1e-6,
            eps_gap: 1e-6,
            max_iters: 200_000,
            time_limit_s: 150.0,
            scaling: true,
            equilibration_iters: 25,
            rho: 0.3,
            rho_eq_factor: 1e3,
            sigma: 1e-6,
            alpha: 1.6,
            adaptive_rho: true,
            adapt_interval: 50,
            check_interval: 10,
            eps_infeasible: 1e-7,
        }
    }
}

impl SolverSettings {
    pub fn with_tolerance(eps: f64) -> Self {
        SolverSettings { eps_primal: eps, eps_dual: eps, eps_gap: eps, ..Default::default() }
    }

    fn validate(&self) -> Result<(), ConicError> {
        let tols = [self.eps_primal, self.eps_dual, self.eps_gap, self.eps_infeasible, self.rho, self.sigma];
        if tols.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(ConicError::Settings("tolerances and step parameters must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(ConicError::Settings("relaxation alpha must lie in (0, 2)".into()));
        }
        if self.check_interval == 0 || self.adapt_interval == 0 {
            return Err(ConicError::Settings("intervals must be nonzero".into()));
        }
        if self.time_limit_s.is_nan() || self.time_limit_s <= 0.0 {
            return Err(ConicError::Settings("time limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    TimeLimit,
    IterLimit,
    Infeasible,
    NumericalError,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "Optimal",
            Status::TimeLimit => "TimeLimit",
            Status::IterLimit => "IterLimit",
            Status::Infeasible => "Infeasible",
            Status::NumericalError => "NumericalError",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    /// Unnormalized `‖Ax + s − b‖∞`.
    pub primal_abs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverResult {
    pub status: Status,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub runtime_s: f64,
}

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const DIVERGENCE: f64 = 1e20;

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Solve `prog` from a cold start.
pub fn solve(prog: &ConeProgram, settings: &SolverSettings) -> Result<SolverResult, ConicError> {
    prog.validate()?;
    settings.validate()?;
    Ok(Admm::new(prog, settings).run())
}

/// Unscaled quantities at a residual check.
struct Snapshot {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    ax: Vec<f64>,
    aty: Vec<f64>,
}

struct Admm<'a> {
    prog: &'a ConeProgram,
    set: &'a SolverSettings,
    a: crate::csc::CscMatrix,
    b: Vec<f64>,
    c: Vec<f64>,
    eq: Equilibration,
    zero_rows: Vec<bool>,
    rho_base: f64,
    rho: Vec<f64>,
    start: Instant,
}

impl<'a> Admm<'a> {
    fn new(prog: &'a ConeProgram, set: &'a SolverSettings) -> Self {
        let start = Instant::now();
        let (m, n) = (prog.num_rows(), prog.num_vars());
        let mut a = prog.a.clone();
        let eq = if set.scaling {
            equilibrate(&mut a, &prog.c, &prog.cones, set.equilibration_iters)
        } else {
            Equilibration::identity(n, m)
        };
        let c = prog.c.iter().zip(&eq.d).map(|(c, d)| c * d * eq.cost).collect();
        let b = prog.b.iter().zip(&eq.e).map(|(b, e)| b * e).collect();
        let zero_rows = prog
            .cones
            .iter()
            .flat_map(|cone| std::iter::repeat(matches!(cone, Cone::Zero(_))).take(cone.dim()))
            .collect();
        let mut admm =
            Admm { prog, set, a, b, c, eq, zero_rows, rho_base: set.rho, rho: vec![0.0; m], start };
        admm.fill_rho();
        admm
    }

    fn fill_rho(&mut self) {
        for (r, &z) in self.rho.iter_mut().zip(&self.zero_rows) {
            *r = if z { self.rho_base * self.set.rho_eq_factor } else { self.rho_base };
        }
    }

    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    /// Map a scaled iterate back to the original program. `y_polar` is the
    /// ADMM multiplier, which lives in the polar cone.
    fn unscale(&self, x: &[f64], y_polar: &[f64], s: &[f64]) -> Snapshot {
        let (m, n) = (self.prog.num_rows(), self.prog.num_vars());
        let mut ax_hat = vec![0.0; m];
        self.a.mul_vec(x, &mut ax_hat);
        let y_hat: Vec<f64> = y_polar.iter().map(|v| -v).collect();
        let mut aty_hat = vec![0.0; n];
        self.a.tmul_vec(&y_hat, &mut aty_hat);
        let (d, e, cost) = (&self.eq.d, &self.eq.e, self.eq.cost);
        Snapshot {
            x: (0..n).map(|j| d[j] * x[j]).collect(),
            y: (0..m).map(|i| e[i] * y_hat[i] / cost).collect(),
            s: (0..m).map(|i| s[i] / e[i]).collect(),
            ax: (0..m).map(|i| ax_hat[i] / e[i]).collect(),
            aty: (0..n).map(|j| aty_hat[j] / (d[j] * cost)).collect(),
        }
    }

    fn residuals(&self, snap: &Snapshot) -> Residuals {
        let p = self.prog;
        let pres: Vec<f64> = (0..p.num_rows()).map(|i| snap.ax[i] + snap.s[i] - p.b[i]).collect();
        let dres: Vec<f64> = (0..p.num_vars()).map(|j| snap.aty[j] + p.c[j]).collect();
        let primal_abs = norm_inf(&pres);
        let cx = dot(&p.c, &snap.x);
        let by = dot(&p.b, &snap.y);
        Residuals {
            primal: primal_abs / (1.0 + norm_inf(&p.b)),
            dual: norm_inf(&dres) / (1.0 + norm_inf(&p.c)),
            gap: (cx + by).abs() / (1.0 + cx.abs() + by.abs()),
            primal_abs,
        }
    }

    fn converged(&self, r: &Residuals) -> bool {
        r.primal <= self.set.eps_primal && r.dual <= self.set.eps_dual && r.gap <= self.set.eps_gap
    }

    /// Farkas-type certificates built from the change between two checks.
    fn certifies_infeasibility(&self, now: &Snapshot, prev: &Snapshot) -> bool {
        let eps = self.set.eps_infeasible;
        let p = self.prog;

        let dy: Vec<f64> = now.y.iter().zip(&prev.y).map(|(a, b)| a - b).collect();
        let ny = norm_inf(&dy);
        if ny > 0.0 && ny.is_finite() {
            let at_dy = now.aty.iter().zip(&prev.aty).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            let mut unit: Vec<f64> = dy.iter().map(|v| v / ny).collect();
            if at_dy <= eps * ny && dot(&p.b, &unit) < -eps && dual_cone_distance(&p.cones, &mut unit) <= eps {
                return true;
            }
        }

        let dx: Vec<f64> = now.x.iter().zip(&prev.x).map(|(a, b)| a - b).collect();
        let nx = norm_inf(&dx);
        if nx > 0.0 && nx.is_finite() && dot(&p.c, &dx) < -eps * nx {
            let dir: Vec<f64> = now.ax.iter().zip(&prev.ax).map(|(a, b)| -(a - b) / nx).collect();
            if crate::cone::product_distance(&p.cones, &dir) <= eps {
                return true;
            }
        }
        false
    }

    /// OSQP-style balance of scaled primal and dual residuals.
    fn rho_ratio(&self, x: &[f64], y_polar: &[f64], s: &[f64]) -> f64 {
        let (m, n) = (self.prog.num_rows(), self.prog.num_vars());
        let mut ax = vec![0.0; m];
        self.a.mul_vec(x, &mut ax);
        let y_hat: Vec<f64> = y_polar.iter().map(|v| -v).collect();
        let mut aty = vec![0.0; n];
        self.a.tmul_vec(&y_hat, &mut aty);
        let rp = (0..m).map(|i| (ax[i] + s[i] - self.b[i]).abs()).fold(0.0f64, f64::max);
        let rd = (0..n).map(|j| (aty[j] + self.c[j]).abs()).fold(0.0f64, f64::max);
        let p_scale = norm_inf(&ax).max(norm_inf(s)).max(norm_inf(&self.b)).max(1e-12);
        let d_scale = norm_inf(&aty).max(norm_inf(&self.c)).max(1e-12);
        let num = rp / p_scale;
        let den = (rd / d_scale).max(1e-30);
        (num / den).sqrt()
    }

    fn run(mut self) -> SolverResult {
        let (m, n) = (self.prog.num_rows(), self.prog.num_vars());
        let set = self.set;
        let alpha = set.alpha;

        let mut kkt = match KktSolver::new(&self.a, set.sigma, &self.rho) {
            Ok(k) => k,
            Err(_) => return self.failure(vec![0.0; n], vec![0.0; m], vec![0.0; m], 0),
        };

        let mut x = vec![0.0; n];
        let mut s = vec![0.0; m];
        let mut y = vec![0.0; m];
        let mut rhs = vec![0.0; n + m];
        let mut s_relax = vec![0.0; m];
        let mut v = vec![0.0; m];
        let mut prev: Option<Snapshot> = None;
        let mut next_adapt = set.adapt_interval;
        let mut updates = 0usize;

        let mut iter = 0;
        while iter < set.max_iters {
            iter += 1;
            for j in 0..n {
                rhs[j] = set.sigma * x[j] - self.c[j];
            }
            for i in 0..m {
                rhs[n + i] = self.b[i] - s[i] + y[i] / self.rho[i];
            }
            kkt.solve(&mut rhs);
            for j in 0..n {
                x[j] = alpha * rhs[j] + (1.0 - alpha) * x[j];
            }
            for i in 0..m {
                let s_tilde = s[i] - (rhs[n + i] + y[i]) / self.rho[i];
                s_relax[i] = alpha * s_tilde + (1.0 - alpha) * s[i];
                v[i] = s_relax[i] + y[i] / self.rho[i];
            }
            crate::cone::project_product(&self.prog.cones, &mut v);
            for i in 0..m {
                y[i] += self.rho[i] * (s_relax[i] - v[i]);
            }
            std::mem::swap(&mut s, &mut v);

            let last = iter == set.max_iters;
            if iter % set.check_interval == 0 || last {
                if !x.iter().chain(&y).all(|v| v.is_finite() && v.abs() < DIVERGENCE) {
                    return self.failure(x, y, s, iter);
                }
                let snap = self.unscale(&x, &y, &s);
                let res = self.residuals(&snap);
                if self.converged(&res) {
                    return self.finish(Status::Optimal, snap, res, iter);
                }
                if let Some(p) = &prev {
                    if self.certifies_infeasibility(&snap, p) {
                        return self.finish(Status::Infeasible, snap, res, iter);
                    }
                }
                if self.elapsed() >= set.time_limit_s {
                    return self.finish(Status::TimeLimit, snap, res, iter);
                }
                if last {
                    return self.finish(Status::IterLimit, snap, res, iter);
                }
                prev = Some(snap);
            }

            if set.adaptive_rho && iter >= next_adapt {
                let ratio = self.rho_ratio(&x, &y, &s);
                next_adapt = iter + set.adapt_interval;
                if ratio.is_finite() && !(0.2..=5.0).contains(&ratio) {
                    // Damped step and a growing interval keep rho from oscillating.
                    updates += 1;
                    next_adapt = iter + set.adapt_interval * (1 + updates);
                    self.rho_base = (self.rho_base * ratio.sqrt()).clamp(RHO_MIN, RHO_MAX);
                    self.fill_rho();
                    if kkt.update_rho(&self.rho).is_err() {
                        return self.failure(x, y, s, iter);
                    }
                }
            }
        }
        // max_iters == 0
        let snap = self.unscale(&x, &y, &s);
        let res = self.residuals(&snap);
        self.finish(Status::IterLimit, snap, res, iter)
    }

    fn finish(&self, status: Status, snap: Snapshot, residuals: Residuals, iterations: usize) -> SolverResult {
        SolverResult {
            status,
            objective: self.prog.objective(&snap.x),
            x: snap.x,
            y: snap.y,
            s: snap.s,
            residuals,
            iterations,
            runtime_s: self.elapsed(),
        }
    }

    fn failure(&self, x: Vec<f64>, y: Vec<f64>, s: Vec<f64>, iterations: usize) -> SolverResult {
        let snap = self.unscale(&x, &y, &s);
        let residuals = self.residuals(&snap);
        self.finish(Status::NumericalError, snap, residuals, iterations)
    }
}

/// Distance of `v` from the dual product cone; `v` is used as scratch space.
fn dual_cone_distance(cones: &[Cone], v: &mut [f64]) -> f64 {
    let mut worst = 0.0f64;
    for_each_block(cones, v, |cone, blk| worst = worst.max(cone.dual_distance(blk)));
    worst
}
