//! Standard-form cone programs and an ADMM solver for them.

pub mod cone;
pub mod csc;
mod error;
mod kkt;
pub mod program;
pub mod random;
mod scaling;
pub mod solver;

pub use cone::{project_nonneg, project_rsoc, project_soc, Cone};
pub use csc::{CscMatrix, Triplets};
pub use error::ConicError;
pub use program::{ConeProgram, ProgramPayload};
pub use solver::{solve, Residuals, SolverResult, SolverSettings, Status};
