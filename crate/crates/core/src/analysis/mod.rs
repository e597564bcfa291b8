//! Dense evaluation of the deflated spectrum and of the constants bounding
//! it.

mod bounds;
mod perturbation;

pub use bounds::{
    bound_report, compute_gamma, compute_k, compute_xi, deflated_spectrum, BoundReport, DeflatedSpectrum,
    DenseAnalysis, NONZERO_REL_TOL, ZERO_REL_TOL,
};
pub use perturbation::{
    loglog_slope, perturbation_estimate, perturbation_sweep, random_orthogonal_direction, PerturbationRecord,
    PerturbationSweep,
};

/// Largest order accepted by the dense analysis routines.
pub const DEFAULT_DENSE_LIMIT: usize = 4000;

/// The dense size cap, overridable through `DEFLATRON_DENSE_LIMIT`.
pub fn dense_limit() -> usize {
    std::env::var("DEFLATRON_DENSE_LIMIT")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DENSE_LIMIT)
}
