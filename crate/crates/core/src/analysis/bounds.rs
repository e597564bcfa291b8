use std::cell::OnceCell;

use serde::{Deserialize, Serialize};

use super::dense_limit;
use crate::dense_eig::{complete_qr, spectral_norm, sym_eig, sym_eigvals, Cholesky, EigenDecomposition};
use crate::error::{check_len, Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::projection::DeflationBasis;

/// Declared zeros must lie below this fraction of `μ₁`.
pub const ZERO_REL_TOL: f64 = 1e-8;
/// The smallest kept eigenvalue must exceed this fraction of `μ₁`.
pub const NONZERO_REL_TOL: f64 = 1e-6;

/// Spectrum of `A (I - π_A(S))`. `values` holds all `n` eigenvalues in
/// descending order; the last `rank_deficiency = dim S` are the zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeflatedSpectrum {
    pub values: Vec<f64>,
    pub rank_deficiency: usize,
}

impl DeflatedSpectrum {
    pub fn nonzero(&self) -> &[f64] {
        &self.values[..self.values.len() - self.rank_deficiency]
    }

    pub fn mu_1(&self) -> f64 {
        self.values[0]
    }

    /// Smallest nonzero eigenvalue.
    pub fn mu_ell(&self) -> f64 {
        self.values[self.values.len() - self.rank_deficiency - 1]
    }

    pub fn kappa_eff(&self) -> f64 {
        self.mu_1() / self.mu_ell()
    }
}

/// Every constant of the convergence theory for one `(A, S)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub kappa: f64,
    pub mu_1: f64,
    pub mu_ell: f64,
    pub kappa_eff: f64,
    /// Weak approximation constant.
    #[serde(rename = "K")]
    pub k: f64,
    /// Strengthened Cauchy-Schwarz constant between `S⊥` and `S` in the
    /// `A` inner product.
    pub gamma: f64,
    /// `min_{x ∈ S⊥} ‖x - π_A x‖_A² / ‖x‖_A²`
    pub xi: f64,
    /// `K / (1 - γ)`
    pub bound: f64,
    pub rank_deficiency: usize,
}

impl BoundReport {
    /// The report's invariants that fail, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.xi > 0.0 && self.xi <= 1.0 + 1e-12) {
            out.push(format!("xi = {} outside (0, 1]", self.xi));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            out.push(format!("gamma = {} outside [0, 1)", self.gamma));
        }
        if !(self.kappa_eff <= self.bound * (1.0 + 1e-6)) {
            out.push(format!(
                "kappa_eff = {} exceeds K/(1-gamma) = {}",
                self.kappa_eff, self.bound
            ));
        }
        if !(self.xi >= 1.0 - self.gamma - 1e-9) {
            out.push(format!("xi = {} below 1 - gamma = {}", self.xi, 1.0 - self.gamma));
        }
        if !(self.mu_1 <= self.lambda_max * (1.0 + 1e-10)) {
            out.push(format!("mu_1 = {} exceeds lambda_max = {}", self.mu_1, self.lambda_max));
        }
        out
    }
}

/// `V`, `AV`, the Cholesky factor of `VᵀAV` and an orthonormal basis `W`
/// of `S⊥`.
struct Geometry {
    v: DenseMatrix,
    av: DenseMatrix,
    lv: Cholesky,
    w: OnceCell<DenseMatrix>,
}

impl Geometry {
    fn new(a: &SparseMatrix, basis: &DeflationBasis) -> Result<Self> {
        check_len("analysis basis rows", a.n(), basis.n())?;
        let v = basis.to_dense();
        let av = a.mul_dense(&v)?;
        let lv = Cholesky::factor(&v.tr_matmul(&av)?.symmetrized())?;
        Ok(Self {
            v,
            av,
            lv,
            w: OnceCell::new(),
        })
    }

    fn w(&self) -> Result<&DenseMatrix> {
        if let Some(w) = self.w.get() {
            return Ok(w);
        }
        let (n, m) = (self.v.rows(), self.v.cols());
        let w = complete_qr(&self.v)?.q.columns(m..n);
        Ok(self.w.get_or_init(|| w))
    }

    /// `L_V⁻¹ (AV)ᵀ`; its Gram matrix is `A π_A(S)`.
    fn projected_rows(&self) -> Result<DenseMatrix> {
        self.lv.forward_matrix(&self.av.transpose())
    }
}

/// A dense copy of an SPD matrix with its eigendecomposition computed on
/// first use; reused across bases.
pub struct DenseAnalysis<'a> {
    a: &'a SparseMatrix,
    dense: DenseMatrix,
    eig: OnceCell<EigenDecomposition>,
}

impl<'a> DenseAnalysis<'a> {
    pub fn new(a: &'a SparseMatrix) -> Result<Self> {
        let (n, limit) = (a.n(), dense_limit());
        if n > limit {
            return Err(Error::SizeLimit { n, limit });
        }
        Ok(Self {
            a,
            dense: a.to_dense(),
            eig: OnceCell::new(),
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        self.a
    }

    pub fn dense(&self) -> &DenseMatrix {
        &self.dense
    }

    pub fn eig(&self) -> Result<&EigenDecomposition> {
        if let Some(e) = self.eig.get() {
            return Ok(e);
        }
        let e = sym_eig(&self.dense)?;
        if let Some(&bad) = e.values.last().filter(|&&l| !(l > 0.0)) {
            return Err(Error::NotPositiveDefinite {
                index: e.values.len() - 1,
                pivot: bad,
            });
        }
        Ok(self.eig.get_or_init(|| e))
    }

    pub fn lambda_max(&self) -> Result<f64> {
        Ok(self.eig()?.values[0])
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(*self.eig()?.values.last().expect("non-empty spectrum"))
    }

    pub fn deflated_spectrum(&self, basis: &DeflationBasis) -> Result<DeflatedSpectrum> {
        self.spectrum_of(&Geometry::new(self.a, basis)?)
    }

    pub fn compute_k(&self, basis: &DeflationBasis) -> Result<f64> {
        self.k_of(&Geometry::new(self.a, basis)?)
    }

    pub fn compute_gamma(&self, basis: &DeflationBasis) -> Result<f64> {
        self.gamma_of(&Geometry::new(self.a, basis)?)
    }

    /// `1 - γ²`: the `A`-projection of a unit `x ∈ S⊥` onto `S` has
    /// `A`-norm at most `γ`.
    pub fn compute_xi(&self, basis: &DeflationBasis) -> Result<f64> {
        let g = self.compute_gamma(basis)?;
        Ok(1.0 - g * g)
    }

    pub fn bound_report(&self, basis: &DeflationBasis) -> Result<BoundReport> {
        let geo = Geometry::new(self.a, basis)?;
        let spec = self.spectrum_of(&geo)?;
        let k = self.k_of(&geo)?;
        let gamma = self.gamma_of(&geo)?;
        let (lambda_max, lambda_min) = (self.lambda_max()?, self.lambda_min()?);
        Ok(BoundReport {
            lambda_max,
            lambda_min,
            kappa: lambda_max / lambda_min,
            mu_1: spec.mu_1(),
            mu_ell: spec.mu_ell(),
            kappa_eff: spec.kappa_eff(),
            k,
            gamma,
            xi: 1.0 - gamma * gamma,
            bound: k / (1.0 - gamma),
            rank_deficiency: spec.rank_deficiency,
        })
    }

    /// Eigenvalues of `A - A V (VᵀAV)⁻¹ VᵀA`, the symmetric form of
    /// `A (I - π_A(S))`.
    fn spectrum_of(&self, geo: &Geometry) -> Result<DeflatedSpectrum> {
        let m = geo.v.cols();
        let values = sym_eigvals(&self.dense.sub(&geo.projected_rows()?.gram())?.symmetrized())?;
        let n = values.len();
        let mu_1 = values[0];
        let largest_zero = values[n - m..].iter().fold(0.0f64, |acc, z| acc.max(z.abs()));
        let smallest_kept = values[n - m - 1];
        if !(mu_1 > 0.0 && largest_zero < ZERO_REL_TOL * mu_1 && smallest_kept > NONZERO_REL_TOL * mu_1) {
            return Err(Error::ZeroClassification(format!(
                "dim S = {m}: largest declared zero {largest_zero:e}, smallest kept {smallest_kept:e}, mu_1 = {mu_1:e}"
            )));
        }
        Ok(DeflatedSpectrum {
            values,
            rank_deficiency: m,
        })
    }

    /// `K = ‖A‖ · max_x ‖Wᵀx‖² / ‖x‖_A² = ‖A‖ · ‖Wᵀ Q Λ^{-1/2}‖₂²`.
    fn k_of(&self, geo: &Geometry) -> Result<f64> {
        let eig = self.eig()?;
        let n = eig.values.len();
        let scaled = DenseMatrix::from_fn(n, n, |i, j| eig.vectors[(i, j)] / eig.values[j].sqrt());
        let s = spectral_norm(&geo.w()?.tr_matmul(&scaled)?);
        Ok(eig.values[0] * s * s)
    }

    /// Largest cosine of the principal angles between `S⊥` and `S` in the
    /// `A` geometry: `‖L_W⁻¹ WᵀAV L_V⁻ᵀ‖₂`.
    fn gamma_of(&self, geo: &Geometry) -> Result<f64> {
        let w = geo.w()?;
        let aw = self.a.mul_dense(w)?;
        let lw = Cholesky::factor(&w.tr_matmul(&aw)?.symmetrized())?;
        let cross = lw.forward_matrix(&aw.tr_matmul(&geo.v)?)?;
        let gamma = spectral_norm(&geo.lv.forward_matrix(&cross.transpose())?);
        // Cosines cannot exceed 1; rounding can.
        Ok(gamma.min(1.0))
    }
}

pub fn deflated_spectrum(a: &SparseMatrix, basis: &DeflationBasis) -> Result<DeflatedSpectrum> {
    DenseAnalysis::new(a)?.deflated_spectrum(basis)
}

pub fn compute_k(a: &SparseMatrix, basis: &DeflationBasis) -> Result<f64> {
    DenseAnalysis::new(a)?.compute_k(basis)
}

pub fn compute_gamma(a: &SparseMatrix, basis: &DeflationBasis) -> Result<f64> {
    DenseAnalysis::new(a)?.compute_gamma(basis)
}

pub fn compute_xi(a: &SparseMatrix, basis: &DeflationBasis) -> Result<f64> {
    DenseAnalysis::new(a)?.compute_xi(basis)
}

pub fn bound_report(a: &SparseMatrix, basis: &DeflationBasis) -> Result<BoundReport> {
    DenseAnalysis::new(a)?.bound_report(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;
    use crate::problems::{spectrum_matrix, Frame};
    use crate::projection::Provenance;
    use crate::rng::Stream;
    use crate::subspaces::eigen_basis;
    use proptest::prelude::*;

    fn sparse(m: &DenseMatrix) -> SparseMatrix {
        SparseMatrix::new(CsrMatrix::from_dense(m, 0.0)).unwrap()
    }

    fn random_spd(n: usize, seed: u64) -> SparseMatrix {
        let mut s = Stream::new(seed);
        let eigenvalues: Vec<f64> = (0..n).map(|_| 10f64.powf(3.0 * s.uniform())).collect();
        spectrum_matrix(&eigenvalues, Frame::RandomOrthogonal { seed })
            .unwrap()
            .matrix
    }

    fn random_basis(n: usize, m: usize, seed: u64) -> DeflationBasis {
        let g = DenseMatrix::from_column_major(n, m, Stream::new(seed).normals(n * m)).unwrap();
        DeflationBasis::dense(g, Provenance::UserSupplied).unwrap()
    }

    /// `λ_max(Wᵀ A⁻¹ W) ‖A‖`, the brute-force maximum of
    /// `dist(S, x)² ‖A‖ / ‖x‖_A²`.
    fn k_oracle(a: &SparseMatrix, basis: &DeflationBasis) -> f64 {
        let n = a.n();
        let chol = Cholesky::factor(&a.to_dense()).unwrap();
        let inv = DenseMatrix::from_columns(
            &(0..n)
                .map(|j| chol.solve(DenseMatrix::identity(n).col(j)).unwrap())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let v = basis.to_dense();
        let w = complete_qr(&v).unwrap().q.columns(v.cols()..n);
        let q = w.tr_matmul(&inv.matmul(&w).unwrap()).unwrap().symmetrized();
        sym_eigvals(&q).unwrap()[0] * sym_eigvals(&a.to_dense()).unwrap()[0]
    }

    /// Smallest generalized eigenvalue of `(WᵀMW, WᵀAW)` with `M` the
    /// explicitly projected operator.
    fn xi_oracle(a: &SparseMatrix, basis: &DeflationBasis) -> f64 {
        let ad = a.to_dense();
        let v = basis.to_dense();
        let n = a.n();
        let av = ad.matmul(&v).unwrap();
        let g = Cholesky::factor(&v.tr_matmul(&av).unwrap()).unwrap();
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let row: Vec<f64> = (0..v.cols()).map(|k| av[(j, k)]).collect();
                let z = g.solve(&row).unwrap();
                // Column j of A V G⁻¹ VᵀA.
                av.mul_vec(&z).unwrap()
            })
            .collect();
        let m = ad.sub(&DenseMatrix::from_columns(&cols).unwrap()).unwrap();
        let w = complete_qr(&v).unwrap().q.columns(v.cols()..n);
        let wmw = w.tr_matmul(&m.matmul(&w).unwrap()).unwrap().symmetrized();
        let l = Cholesky::factor(&w.tr_matmul(&ad.matmul(&w).unwrap()).unwrap().symmetrized()).unwrap();
        let half = l.forward_matrix(&wmw).unwrap();
        let reduced = l.forward_matrix(&half.transpose()).unwrap().symmetrized();
        *sym_eigvals(&reduced).unwrap().last().unwrap()
    }

    #[test]
    fn two_by_two_by_hand() {
        let a = sparse(&DenseMatrix::from_diagonal(&[1.0, 2.0]));
        let v = DenseMatrix::from_column_major(2, 1, vec![1.0, 1.0]).unwrap();
        let basis = DeflationBasis::dense(v, Provenance::UserSupplied).unwrap();
        let r = bound_report(&a, &basis).unwrap();
        // W = (1, -1)/√2: ⟨w, v⟩_A = -1/2, ‖w‖_A² = ‖v‖_A² = 3/2.
        assert!((r.gamma - 1.0 / 3.0).abs() < 1e-14);
        assert!((r.xi - 8.0 / 9.0).abs() < 1e-14);
        // Wᵀ A⁻¹ W = 3/4 and ‖A‖ = 2.
        assert!((r.k - 1.5).abs() < 1e-14);
        assert!((r.mu_1 - 4.0 / 3.0).abs() < 1e-14);
        assert_eq!(r.kappa_eff, 1.0);
        assert!((r.bound - 2.25).abs() < 1e-14);
        assert_eq!(r.rank_deficiency, 1);
        assert!(r.violations().is_empty());
    }

    #[test]
    fn identity_matrix() {
        let n = 7;
        let a = SparseMatrix::new(CsrMatrix::identity(n)).unwrap();
        let r = bound_report(&a, &random_basis(n, 3, 5)).unwrap();
        assert!((r.k - 1.0).abs() < 1e-12);
        assert!(r.gamma < 1e-12);
        assert!((r.bound - 1.0).abs() < 1e-12);
        assert!((r.kappa_eff - 1.0).abs() < 1e-12);
        let s = deflated_spectrum(&a, &random_basis(n, 3, 5)).unwrap();
        assert!(s.nonzero().iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert_eq!(s.rank_deficiency, 3);
    }

    #[test]
    fn eigenvector_deflation_is_tight() {
        for seed in 0..5u64 {
            let n = 20 + 5 * seed as usize;
            let a = random_spd(n, seed);
            let da = DenseAnalysis::new(&a).unwrap();
            let eig = da.eig().unwrap().clone();
            let k = 1 + (seed as usize * 3) % (n - 2);
            let r = da.bound_report(&eigen_basis(&eig, k).unwrap()).unwrap();
            let expected = eig.values[0] / eig.values[k - 1];
            assert!(r.gamma < 1e-8);
            assert!((r.k - expected).abs() <= 1e-8 * expected);
            assert!((r.kappa_eff - expected).abs() <= 1e-8 * expected);
            assert!((r.bound - r.kappa_eff).abs() <= 1e-8 * r.kappa_eff);
        }
    }

    #[test]
    fn size_limit_and_bad_basis() {
        let a = random_spd(6, 1);
        let basis = random_basis(5, 2, 1);
        assert!(matches!(compute_k(&a, &basis), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn ambiguous_zeros_are_reported() {
        // An eigenvalue of 1e-9 · ‖A‖ left after deflation cannot be told
        // apart from the declared zeros.
        let a = sparse(&DenseMatrix::from_diagonal(&[1.0, 1e-9, 1.0]));
        let v = DenseMatrix::from_column_major(3, 1, vec![1.0, 0.0, 0.0]).unwrap();
        let basis = DeflationBasis::dense(v, Provenance::UserSupplied).unwrap();
        assert!(matches!(
            deflated_spectrum(&a, &basis),
            Err(Error::ZeroClassification(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn constants_match_oracles(n in 4usize..24, seed in 0u64..10_000, frac in 0.1f64..0.9) {
            let m = ((n as f64 * frac) as usize).clamp(1, n - 1);
            let a = random_spd(n, seed);
            let basis = random_basis(n, m, seed + 1);
            let da = DenseAnalysis::new(&a).unwrap();
            let r = da.bound_report(&basis).unwrap();
            let k = k_oracle(&a, &basis);
            prop_assert!((r.k - k).abs() <= 1e-8 * k, "{} vs {}", r.k, k);
            let xi = xi_oracle(&a, &basis);
            prop_assert!((r.xi - xi).abs() <= 1e-9, "{} vs {}", r.xi, xi);
            prop_assert!(r.violations().is_empty(), "{:?}", r.violations());
            prop_assert!(r.mu_1 <= r.lambda_max * (1.0 + 1e-10));
        }
    }
}
