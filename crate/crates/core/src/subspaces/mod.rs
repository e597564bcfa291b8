//! Deflation subspaces: aggregation, eigenvectors and their perturbations,
//! and algebraic multigrid interpolation.

mod aggregation;
mod eigen;
mod interpolation;

pub use aggregation::{aggregate_restricted_eigen_basis, aggregation_basis, AggregateSet};
pub(crate) use eigen::completion;
pub use eigen::{
    deflation_eigenvectors, eigen_basis, orthonormal_completion, perturbed_eigen_basis, OrthonormalCompletion,
    PerturbationSpec,
};
pub use interpolation::{
    direct_interpolation, full_coarsening, full_coarsening_with, verify_wap_tau, CfPoint, CfSplitting, CoarseIndexing,
};
