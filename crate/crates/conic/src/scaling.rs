//! Ruiz equilibration.
//!
//! The scaled program is `Â = E A D`, `b̂ = E b`, `ĉ = σ D c`. Rows of a
//! non-separable cone block share one factor so the block stays a cone.

use crate::cone::Cone;
use crate::csc::CscMatrix;

const MIN_SCALE: f64 = 1e-4;
const MAX_SCALE: f64 = 1e4;

#[derive(Debug, Clone)]
pub(crate) struct Equilibration {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub cost: f64,
}

impl Equilibration {
    pub(crate) fn identity(n: usize, m: usize) -> Self {
        Equilibration { d: vec![1.0; n], e: vec![1.0; m], cost: 1.0 }
    }
}

fn inv_sqrt(norm: f64) -> f64 {
    if norm < MIN_SCALE {
        1.0
    } else {
        1.0 / norm.clamp(MIN_SCALE, MAX_SCALE).sqrt()
    }
}

/// Scale `a` in place and return the accumulated factors.
pub(crate) fn equilibrate(a: &mut CscMatrix, c: &[f64], cones: &[Cone], iters: usize) -> Equilibration {
    let (m, n) = (a.nrows, a.ncols);
    let mut eq = Equilibration::identity(n, m);
    for _ in 0..iters {
        let col = a.col_norms_inf();
        let dj: Vec<f64> = col.iter().map(|&v| inv_sqrt(v)).collect();

        let mut row = a.row_norms_inf();
        let mut offset = 0;
        for cone in cones {
            let d = cone.dim();
            if !cone.is_separable() {
                let blk = &mut row[offset..offset + d];
                let mx = blk.iter().fold(0.0f64, |acc, v| acc.max(*v));
                blk.iter_mut().for_each(|v| *v = mx);
            }
            offset += d;
        }
        let ei: Vec<f64> = row.iter().map(|&v| inv_sqrt(v)).collect();

        a.scale(&ei, &dj);
        for (d, s) in eq.d.iter_mut().zip(&dj) {
            *d *= s;
        }
        for (e, s) in eq.e.iter_mut().zip(&ei) {
            *e *= s;
        }
    }
    let c_norm = c.iter().zip(&eq.d).fold(0.0f64, |acc, (c, d)| acc.max((c * d).abs()));
    eq.cost = if c_norm < MIN_SCALE { 1.0 } else { (1.0 / c_norm).clamp(MIN_SCALE, MAX_SCALE) };
    eq
}
