//! The SOC-MLD-C relaxation in standard conic form, and the exact AC model it
//! relaxes.

mod ac;
mod build;
mod extract;

pub use ac::{branch_flows, evaluate_ac_mld, lift_candidate, AcCandidate, AcReport, ObjectiveTerms};
pub use build::{build_default, build_soc_mld_c, ConicProblem, VarMap};
pub(crate) use build::Model;
pub use extract::{extract_solution, MldSolution};

use crate::netmodel::Network;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("McCormick box needs finite bounds")]
    InfiniteBound,
    #[error("McCormick box is empty")]
    EmptyBox,
    #[error("bus {0} has an infinite voltage upper bound")]
    InfiniteVoltage(usize),
    #[error("network must be a single connected component, found {0}")]
    NotSingleComponent(usize),
    #[error("solution vector has length {got}, expected {want}")]
    Dimension { got: usize, want: usize },
    #[error("{0}")]
    Extraction(String),
    #[error(transparent)]
    Conic(#[from] mldkit_conic::ConicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub m_v: f64,
    pub m_g: f64,
    pub m_s: f64,
}

/// Weights that make bus, generator and shunt retention dominate load service.
pub fn objective_weights(net: &Network) -> ObjectiveWeights {
    let largest = net
        .loads
        .iter()
        .filter(|l| l.in_service)
        .map(|l| l.priority * l.demand.re.abs())
        .fold(0.0f64, f64::max);
    let m_s = if largest > 0.0 { 10.0 * largest } else { 10.0 };
    ObjectiveWeights { m_v: 10.0 * m_s, m_g: m_s, m_s }
}

/// `ax·x + ay·y + aw·w + c ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub ax: f64,
    pub ay: f64,
    pub aw: f64,
    pub c: f64,
}

impl Plane {
    pub fn eval(&self, x: f64, y: f64, w: f64) -> f64 {
        self.ax * x + self.ay * y + self.aw * w + self.c
    }
}

/// The four McCormick planes bounding `w = x·y` over the box.
pub fn mccormick(xl: f64, xu: f64, yl: f64, yu: f64) -> Result<[Plane; 4], FormulationError> {
    if ![xl, xu, yl, yu].iter().all(|v| v.is_finite()) {
        return Err(FormulationError::InfiniteBound);
    }
    if xl > xu || yl > yu {
        return Err(FormulationError::EmptyBox);
    }
    Ok([
        Plane { ax: -yl, ay: -xl, aw: 1.0, c: xl * yl },
        Plane { ax: -yu, ay: -xu, aw: 1.0, c: xu * yu },
        Plane { ax: yu, ay: xl, aw: -1.0, c: -xl * yu },
        Plane { ax: yl, ay: xu, aw: -1.0, c: -xu * yl },
    ])
}
