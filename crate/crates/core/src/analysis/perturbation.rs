use serde::{Deserialize, Serialize};

use super::DenseAnalysis;
use crate::dense_eig::EigenDecomposition;
use crate::error::{check_len, Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::projection::{DeflationBasis, Provenance};
use crate::rng::Stream;
use crate::subspaces::{completion, deflation_eigenvectors, PerturbationSpec};

/// `[√κ_opt + √κ (2δ + δ²)]² (1 - √κ δ)² / (1 - 4 √κ δ)`, defined while
/// `√κ δ < 1/4`.
pub fn perturbation_estimate(kappa: f64, kappa_opt: f64, delta: f64) -> Result<f64> {
    if !(kappa >= 1.0 && kappa_opt >= 1.0 && delta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need kappa, kappa_opt >= 1 and delta >= 0, got {kappa}, {kappa_opt}, {delta}"
        )));
    }
    let s = kappa.sqrt();
    if !(s * delta < 0.25) {
        return Err(Error::Precondition(format!(
            "sqrt(kappa) * delta = {} is not below 1/4",
            s * delta
        )));
    }
    let lead = kappa_opt.sqrt() + s * (2.0 * delta + delta * delta);
    let shrink = 1.0 - s * delta;
    Ok(lead * lead * shrink * shrink / (1.0 - 4.0 * s * delta))
}

/// One sweep point. `None` marks a quantity outside its hypothesis:
/// `delta_bound` needs `‖E₁‖₂ < 1`, the estimate needs `√κ δ < 1/4`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub e1_frob: f64,
    pub delta_measured: f64,
    pub delta_bound: Option<f64>,
    pub kappa_eff_actual: f64,
    pub kappa_eff_estimate: Option<f64>,
    pub kappa_opt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSweep {
    /// `λ₁ / λ_n`
    pub kappa: f64,
    /// `λ₁ / λ_k`
    pub kappa_opt: f64,
    pub k: usize,
    /// Sorted by `e1_frob`.
    pub records: Vec<PerturbationRecord>,
}

impl PerturbationSweep {
    /// Least-squares slope of `log(κ_eff - κ_opt)` against `log ‖E₁‖_F`
    /// over the `count` smallest nonzero magnitudes.
    pub fn initial_slope(&self, count: usize) -> Result<f64> {
        let points: Vec<(f64, f64)> = self
            .records
            .iter()
            .filter(|r| r.e1_frob > 0.0)
            .take(count)
            .map(|r| (r.e1_frob, r.kappa_eff_actual - r.kappa_opt))
            .collect();
        if points.len() < count {
            return Err(Error::InvalidArgument(format!(
                "only {} nonzero magnitudes",
                points.len()
            )));
        }
        loglog_slope(&points)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("a slope needs at least two points".into()));
    }
    if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "log-log fit needs positive data, got ({x}, {y})"
        )));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let len = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / len;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / len;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all magnitudes are equal".into()));
    }
    Ok(sxy / sxx)
}

/// `cols` seeded normal columns, projected onto the orthogonal complement
/// of the orthonormal columns of `avoid` and scaled to unit Frobenius norm.
pub fn random_orthogonal_direction(avoid: &DenseMatrix, cols: usize, seed: u64) -> Result<DenseMatrix> {
    let n = avoid.rows();
    let mut d = DenseMatrix::from_column_major(n, cols, Stream::new(seed).normals(n * cols))?;
    let initial = d.frobenius_norm();
    for c in 0..cols {
        // Two passes keep the result orthogonal to working precision.
        for _ in 0..2 {
            let coeffs = avoid.tr_mul_vec(d.col(c))?;
            let proj = avoid.mul_vec(&coeffs)?;
            d.col_mut(c).iter_mut().zip(&proj).for_each(|(x, p)| *x -= p);
        }
    }
    let norm = d.frobenius_norm();
    if !(norm > 1e-8 * initial) {
        return Err(Error::InvalidArgument(
            "no room for a direction orthogonal to the given columns".into(),
        ));
    }
    Ok(d.scaled(1.0 / norm))
}

/// For each magnitude, deflates with `range(Q₁ + E₁)` where `Q₁` holds the
/// eigenvectors `k..n` of `eig` and `E₁ = magnitude · direction/‖direction‖_F`.
/// The estimate uses the measured `δ`. Magnitudes with `‖E₁‖₂ ≥ 1` are
/// still evaluated, with no bound or estimate.
pub fn perturbation_sweep(
    a: &SparseMatrix,
    eig: &EigenDecomposition,
    k: usize,
    direction: &DenseMatrix,
    magnitudes: &[f64],
) -> Result<PerturbationSweep> {
    let n = a.n();
    check_len("perturbation_sweep eigenvalues", n, eig.values.len())?;
    let q1 = deflation_eigenvectors(eig, k)?;
    check_len("perturbation direction rows", n, direction.rows())?;
    check_len("perturbation direction columns", q1.cols(), direction.cols())?;
    let q = q1.hcat(&eig.vectors.columns(0..k))?;
    let kappa = eig.values[0] / eig.values[n - 1];
    let kappa_opt = eig.values[0] / eig.values[k - 1];
    let analysis = DenseAnalysis::new(a)?;

    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut records = Vec::with_capacity(sorted.len());
    for magnitude in sorted {
        let e1 = PerturbationSpec::new(direction, magnitude)?.e1();
        let c = completion(&q, &e1)?;
        let basis = DeflationBasis::dense(q1.add(&e1)?, Provenance::PerturbedEigen)?;
        let actual = analysis.deflated_spectrum(&basis)?.kappa_eff();
        let estimate = match (c.delta_bound, perturbation_estimate(kappa, kappa_opt, c.delta)) {
            (Some(_), Ok(e)) => Some(e),
            _ => None,
        };
        records.push(PerturbationRecord {
            e1_frob: c.e1_frobenius,
            delta_measured: c.delta,
            delta_bound: c.delta_bound,
            kappa_eff_actual: actual,
            kappa_eff_estimate: estimate,
            kappa_opt,
        });
    }
    Ok(PerturbationSweep {
        kappa,
        kappa_opt,
        k,
        records,
    })
}
