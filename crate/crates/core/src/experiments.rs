//! The numerical experiments on the bilinear grid problem and the
//! `n = 100` outlier spectrum, shared by the command line and the
//! acceptance suite.

use serde::{Deserialize, Serialize};

use crate::analysis::{perturbation_sweep, random_orthogonal_direction, BoundReport, DenseAnalysis, PerturbationSweep};
use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::problems::{laplace_bilinear, outlier_spectrum, random_unit_solution_rhs, Frame};
use crate::projection::DeflatedOperator;
use crate::solvers::{CgConfig, CoarsePolicy, DeflatedCg, StopRule};
use crate::subspaces::{deflation_eigenvectors, direct_interpolation, full_coarsening_with, CoarseIndexing};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1Config {
    pub tol: f64,
    pub stop_rule: StopRule,
    pub max_iter: usize,
    pub policy: CoarsePolicy,
    pub indexing: CoarseIndexing,
    /// Seed of the manufactured solution.
    pub seed: u64,
}

impl Default for Table1Config {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            stop_rule: StopRule::Absolute,
            max_iter: 1000,
            policy: CoarsePolicy::InnerCgAdaptive { c: 1.0 },
            indexing: CoarseIndexing::ZeroBasedEven,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub p: u32,
    pub n_grid: usize,
    pub n: usize,
    pub m: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub true_residual: f64,
    /// `‖x - x_true‖₂` for the manufactured solution, `‖x_true‖₂ = 1`.
    pub error: f64,
    pub inner_iterations_total: usize,
}

/// Deflated CG on the `N = 2^p - 1` grid problem with the full-coarsening
/// direct-interpolation subspace.
pub fn table1_row(p: u32, cfg: &Table1Config) -> Result<Table1Row> {
    if !(2..=12).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p} outside 2..=12")));
    }
    let n_grid = (1usize << p) - 1;
    let problem = laplace_bilinear(n_grid)?;
    let a = &problem.matrix;
    let split = full_coarsening_with(n_grid, cfg.indexing)?;
    let basis = direct_interpolation(a, &split)?;
    let op = DeflatedOperator::new(a, &basis, cfg.policy)?;
    let rhs = random_unit_solution_rhs(a, cfg.seed)?;
    let cg_cfg = CgConfig::with_rule(cfg.tol, cfg.stop_rule, cfg.max_iter)?.with_history(false);
    let report = DeflatedCg::new(&op).solve(&rhs.b, None, &cg_cfg)?;
    let error = norm2(&crate::linalg::sub(&report.x, &rhs.x_true));
    Ok(Table1Row {
        p,
        n_grid,
        n: a.n(),
        m: basis.m(),
        iterations: report.iterations,
        converged: report.converged,
        final_residual: report.final_residual,
        true_residual: report.true_residual,
        error,
        inner_iterations_total: report.inner_iterations_total,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table2 {
    pub n_grid: usize,
    pub m: usize,
    #[serde(flatten)]
    pub report: BoundReport,
}

/// All constants for the `N x N` grid problem with the full-coarsening
/// direct-interpolation subspace.
pub fn table2(n_grid: usize, indexing: CoarseIndexing) -> Result<Table2> {
    let limit = crate::analysis::dense_limit();
    if n_grid * n_grid > limit {
        return Err(Error::SizeLimit {
            n: n_grid * n_grid,
            limit,
        });
    }
    let problem = laplace_bilinear(n_grid)?;
    let basis = direct_interpolation(&problem.matrix, &full_coarsening_with(n_grid, indexing)?)?;
    let report = DenseAnalysis::new(&problem.matrix)?.bound_report(&basis)?;
    Ok(Table2 {
        n_grid,
        m: basis.m(),
        report,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure1Config {
    /// Seed of the orthogonal eigenvector frame.
    pub frame_seed: u64,
    /// Seed of the perturbation direction.
    pub direction_seed: u64,
    pub magnitudes: Vec<f64>,
}

impl Default for Figure1Config {
    fn default() -> Self {
        Self {
            frame_seed: 1,
            direction_seed: 2,
            magnitudes: figure1_magnitudes(),
        }
    }
}

/// `0` followed by `10^{-8 + j/2}` for `j = 0..=16`.
pub fn figure1_magnitudes() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..=16).map(|j| 10f64.powf(-8.0 + j as f64 / 2.0)))
        .collect()
}

/// The sweep on `Qᵀ diag(0.01, 1, …, 1) Q`, deflating the eigenvector of
/// `0.01` perturbed along a fixed unit direction orthogonal to it.
pub fn figure1(cfg: &Figure1Config) -> Result<PerturbationSweep> {
    let problem = outlier_spectrum(Frame::RandomOrthogonal { seed: cfg.frame_seed })?;
    let eig = DenseAnalysis::new(&problem.matrix)?.eig()?.clone();
    let k = problem.n() - 1;
    let direction = random_orthogonal_direction(&deflation_eigenvectors(&eig, k)?, 1, cfg.direction_seed)?;
    perturbation_sweep(&problem.matrix, &eig, k, &direction, &cfg.magnitudes)
}
