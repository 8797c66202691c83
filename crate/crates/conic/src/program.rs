use crate::cone::{total_dim, Cone};
use crate::csc::{CscMatrix, Triplets};
use crate::error::ConicError;
use serde::{Deserialize, Serialize};

/// `min cᵀx  s.t.  Ax + s = b,  s ∈ K`, with `K` the product of `cones` in order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeProgram {
    pub c: Vec<f64>,
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
}

/// Wire layout shared with the formulation export (`c`, `A`, `b`, `cones`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProgramPayload {
    pub c: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Triplets,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ConeProgram {
    pub fn new(c: Vec<f64>, a: CscMatrix, b: Vec<f64>, cones: Vec<Cone>) -> Result<Self, ConicError> {
        let p = ConeProgram { c, a, b, cones };
        p.validate()?;
        Ok(p)
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let (m, n) = (self.b.len(), self.c.len());
        if n == 0 || m == 0 {
            return Err(ConicError::Empty);
        }
        if self.a.nrows != m || self.a.ncols != n {
            return Err(ConicError::Dimension(format!(
                "A is {}x{}, expected {m}x{n}",
                self.a.nrows, self.a.ncols
            )));
        }
        if total_dim(&self.cones) != m {
            return Err(ConicError::Dimension(format!(
                "cone dimensions sum to {}, rows = {m}",
                total_dim(&self.cones)
            )));
        }
        for cone in &self.cones {
            let ok = match cone {
                Cone::Zero(d) | Cone::NonNeg(d) | Cone::SecondOrder(d) => *d >= 1,
                Cone::RotatedSecondOrder(d) => *d >= 2,
            };
            if !ok {
                return Err(ConicError::Dimension(format!("degenerate cone {cone:?}")));
            }
        }
        let finite = self.c.iter().chain(&self.b).chain(&self.a.nzval).all(|v| v.is_finite());
        if !finite {
            return Err(ConicError::NonFinite);
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Worst violation of `b − Ax ∈ K` at `x` (infinity norm of the distance).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.num_rows()];
        self.a.mul_vec(x, &mut ax);
        let s: Vec<f64> = self.b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
        crate::cone::product_distance(&self.cones, &s)
    }

    pub fn to_payload(&self) -> ProgramPayload {
        ProgramPayload { c: self.c.clone(), a: self.a.to_triplets(), b: self.b.clone(), cones: self.cones.clone() }
    }

    pub fn from_payload(p: &ProgramPayload) -> Result<Self, ConicError> {
        if p.a.rows.len() != p.a.cols.len() || p.a.cols.len() != p.a.vals.len() {
            return Err(ConicError::Dimension("triplet arrays differ in length".into()));
        }
        let [m, n] = p.a.shape;
        if p.a.rows.iter().any(|&r| r >= m) || p.a.cols.iter().any(|&c| c >= n) {
            return Err(ConicError::Dimension("triplet index outside shape".into()));
        }
        ConeProgram::new(p.c.clone(), CscMatrix::from(&p.a), p.b.clone(), p.cones.clone())
    }

    pub fn from_json(text: &str) -> Result<Self, ConicError> {
        let payload: ProgramPayload = serde_json::from_str(text)?;
        Self::from_payload(&payload)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_payload()).expect("program serializes")
    }
}
