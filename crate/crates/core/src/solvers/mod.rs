//! Conjugate gradients, deflated conjugate gradients and coarse-solve
//! policies.

mod cg;
mod coarse;
mod deflated;

pub use cg::{cg, cg_with_monitor, CgConfig, SolveReport, StopRule};
pub use coarse::{
    adaptive_tolerance, coarse_solve, CoarsePolicy, CoarseSolver, InnerContext, InnerSolve, DIRECT_MAX_DIM,
    STRICT_INNER_TOL,
};
pub use deflated::{deflated_cg, DeflatedCg, Formulation};
