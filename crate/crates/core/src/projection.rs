//! The A-orthogonal projector onto a deflation subspace and the deflated
//! operator `A (I - π)`, both applied implicitly.
//!
//! With `G = VᵀAV`, `π x = V G⁻¹ (AV)ᵀ x` and `(I - π)ᵀ b = b - AV G⁻¹ Vᵀ b`.

use serde::{Deserialize, Serialize};

use crate::dense_eig::{qr, Cholesky};
use crate::error::{check_len, Error, Result};
use crate::linalg::{axpy, CsrMatrix, DenseMatrix, LinearOperator, SparseMatrix};
use crate::solvers::{CoarsePolicy, CoarseSolver, InnerContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Aggregation,
    ExactEigen,
    PerturbedEigen,
    AggregateRestrictedEigen,
    DirectInterpolation,
    UserSupplied,
}

/// Storage for an `n x m` basis. Aggregation and interpolation bases have a
/// handful of nonzeros per row and stay sparse at every problem size.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisMatrix {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl BasisMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            Self::Dense(d) => d.rows(),
            Self::Sparse(s) => s.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Self::Dense(d) => d.cols(),
            Self::Sparse(s) => s.ncols(),
        }
    }

    pub fn mul_vec(&self, z: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Dense(d) => d.mul_vec(z),
            Self::Sparse(s) => s.mul_vec(z),
        }
    }

    pub fn tr_mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Dense(d) => d.tr_mul_vec(x),
            Self::Sparse(s) => s.tr_mul_vec(x),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Self::Dense(d) => d.clone(),
            Self::Sparse(s) => s.to_dense(),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Self::Dense(d) => d.all_finite(),
            Self::Sparse(s) => s.values().iter().all(|v| v.is_finite()),
        }
    }

    fn left_mul(&self, a: &SparseMatrix) -> Result<Self> {
        Ok(match self {
            Self::Dense(d) => Self::Dense(a.mul_dense(d)?),
            Self::Sparse(s) => Self::Sparse(a.matmul(s)?),
        })
    }
}

/// Every column has a row in which it is the only nonzero.
fn has_private_rows(v: &CsrMatrix) -> bool {
    let mut private = vec![false; v.ncols()];
    for i in 0..v.nrows() {
        let (cols, vals) = v.row(i);
        let nonzero: Vec<usize> = cols
            .iter()
            .zip(vals)
            .filter(|(_, &x)| x != 0.0)
            .map(|(&j, _)| j)
            .collect();
        if let [j] = nonzero[..] {
            private[j] = true;
        }
    }
    private.iter().all(|&p| p)
}

fn check_rank(v: &BasisMatrix) -> Result<()> {
    match v {
        BasisMatrix::Dense(d) => qr(d).map(|_| ()),
        BasisMatrix::Sparse(s) => {
            if has_private_rows(s) {
                return Ok(());
            }
            let m = s.ncols();
            if m > crate::analysis::dense_limit() {
                return Err(Error::RankDeficient(format!(
                    "cannot certify the rank of a sparse {} x {m} basis without private rows",
                    s.nrows()
                )));
            }
            // Columns are independent iff the Gram matrix is positive definite.
            let gram = s.transpose().matmul(s)?.to_dense().symmetrized();
            let scale = (0..m).map(|i| gram[(i, i)]).fold(0.0, f64::max);
            let chol = Cholesky::factor(&gram)
                .map_err(|_| Error::RankDeficient("Gram matrix of the basis is singular".into()))?;
            let l = chol.lower();
            // Gram pivots carry roundoff of order ε·scale, which caps how
            // small a singular-value ratio this test can resolve.
            let tol = crate::dense_eig::TOLERANCES.rank;
            let floor = (tol * tol).max(64.0 * f64::EPSILON) * scale;
            if (0..m).any(|i| l[(i, i)] * l[(i, i)] <= floor) {
                return Err(Error::RankDeficient(
                    "Gram matrix of the basis is numerically singular".into(),
                ));
            }
            Ok(())
        }
    }
}

/// An `n x m` basis of the deflation subspace with `1 ≤ m < n` and full
/// column rank.
#[derive(Clone, Debug)]
pub struct DeflationBasis {
    v: BasisMatrix,
    provenance: Provenance,
}

impl DeflationBasis {
    pub fn new(v: BasisMatrix, provenance: Provenance) -> Result<Self> {
        let (n, m) = (v.nrows(), v.ncols());
        if m == 0 || m >= n {
            return Err(Error::InvalidArgument(format!(
                "a deflation basis needs 1 <= m < n, got n = {n}, m = {m}"
            )));
        }
        if !v.is_finite() {
            return Err(Error::NonFinite("deflation basis"));
        }
        check_rank(&v)?;
        Ok(Self { v, provenance })
    }

    pub fn dense(v: DenseMatrix, provenance: Provenance) -> Result<Self> {
        Self::new(BasisMatrix::Dense(v), provenance)
    }

    pub fn sparse(v: CsrMatrix, provenance: Provenance) -> Result<Self> {
        Self::new(BasisMatrix::Sparse(v), provenance)
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    pub fn m(&self) -> usize {
        self.v.ncols()
    }

    pub fn matrix(&self) -> &BasisMatrix {
        &self.v
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.v.to_dense()
    }
}

/// The Galerkin matrix `VᵀAV`, exactly symmetric.
#[derive(Clone, Debug)]
pub enum CoarseOperator {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

impl CoarseOperator {
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Self::Dense(d) => d.clone(),
            Self::Sparse(s) => s.to_dense(),
        }
    }
}

impl LinearOperator for CoarseOperator {
    fn dim(&self) -> usize {
        match self {
            Self::Dense(d) => d.rows(),
            Self::Sparse(s) => s.n(),
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        match self {
            Self::Dense(d) => d.apply(x, y),
            Self::Sparse(s) => s.apply(x, y),
        }
    }
}

/// `VᵀAV` given `AV`.
pub fn galerkin(v: &BasisMatrix, av: &BasisMatrix) -> Result<CoarseOperator> {
    Ok(match (v, av) {
        (BasisMatrix::Sparse(v), BasisMatrix::Sparse(av)) => {
            CoarseOperator::Sparse(SparseMatrix::new(v.transpose().matmul(av)?.symmetric_part()?)?)
        }
        _ => CoarseOperator::Dense(v.to_dense().tr_matmul(&av.to_dense())?.symmetrized()),
    })
}

/// A vector together with the inner CG steps spent producing it.
#[derive(Clone, Debug)]
pub(crate) struct Counted {
    pub value: Vec<f64>,
    pub inner_iterations: usize,
}

/// The deflated operator `A (I - π)` with `AV` cached and the coarse solves
/// delegated to a [`CoarseSolver`].
#[derive(Debug)]
pub struct DeflatedOperator<'a> {
    a: &'a SparseMatrix,
    basis: &'a DeflationBasis,
    av: BasisMatrix,
    coarse: CoarseSolver,
}

impl<'a> DeflatedOperator<'a> {
    pub fn new(a: &'a SparseMatrix, basis: &'a DeflationBasis, policy: CoarsePolicy) -> Result<Self> {
        check_len("deflated operator", a.n(), basis.n())?;
        let av = basis.matrix().left_mul(a)?;
        let coarse = CoarseSolver::new(policy, galerkin(basis.matrix(), &av)?)?;
        Ok(Self { a, basis, av, coarse })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        self.a
    }

    pub fn basis(&self) -> &DeflationBasis {
        self.basis
    }

    pub fn av(&self) -> &BasisMatrix {
        &self.av
    }

    pub fn coarse(&self) -> &CoarseSolver {
        &self.coarse
    }

    /// `G⁻¹ (AV)ᵀ x`
    pub(crate) fn coarse_of_ax(&self, x: &[f64], ctx: InnerContext) -> Result<Counted> {
        let rhs = self.av.tr_mul_vec(x)?;
        let s = self.coarse.solve(&rhs, ctx)?;
        Ok(Counted {
            value: s.z,
            inner_iterations: s.iterations,
        })
    }

    /// `G⁻¹ Vᵀ b`
    pub(crate) fn coarse_of_b(&self, b: &[f64], ctx: InnerContext) -> Result<Counted> {
        let rhs = self.basis.matrix().tr_mul_vec(b)?;
        let s = self.coarse.solve(&rhs, ctx)?;
        Ok(Counted {
            value: s.z,
            inner_iterations: s.iterations,
        })
    }

    pub(crate) fn project_with(&self, x: &[f64], ctx: InnerContext) -> Result<Counted> {
        check_len("project_a", self.a.n(), x.len())?;
        let z = self.coarse_of_ax(x, ctx)?;
        Ok(Counted {
            value: self.basis.matrix().mul_vec(&z.value)?,
            inner_iterations: z.inner_iterations,
        })
    }

    /// `A (I - π) x = Ax - (AV) G⁻¹ (AV)ᵀ x`: one sparse product and one
    /// coarse solve.
    pub(crate) fn apply_with(&self, x: &[f64], ctx: InnerContext) -> Result<Counted> {
        check_len("deflated_apply", self.a.n(), x.len())?;
        let mut y = self.a.spmv(x)?;
        let z = self.coarse_of_ax(x, ctx)?;
        let correction = self.av.mul_vec(&z.value)?;
        axpy(-1.0, &correction, &mut y);
        Ok(Counted {
            value: y,
            inner_iterations: z.inner_iterations,
        })
    }

    pub(crate) fn rhs_with(&self, b: &[f64], ctx: InnerContext) -> Result<Counted> {
        check_len("deflated_rhs", self.a.n(), b.len())?;
        let z = self.coarse_of_b(b, ctx)?;
        let mut y = b.to_vec();
        axpy(-1.0, &self.av.mul_vec(&z.value)?, &mut y);
        Ok(Counted {
            value: y,
            inner_iterations: z.inner_iterations,
        })
    }

    /// `x = (I - π) x̂ + V G⁻¹ Vᵀ b = x̂ + V (G⁻¹Vᵀb - G⁻¹(AV)ᵀx̂)`
    pub(crate) fn reconstruct_with(&self, b: &[f64], x_hat: &[f64], ctx: InnerContext) -> Result<Counted> {
        check_len("reconstruct b", self.a.n(), b.len())?;
        check_len("reconstruct x_hat", self.a.n(), x_hat.len())?;
        let zb = self.coarse_of_b(b, ctx)?;
        let zx = self.coarse_of_ax(x_hat, ctx)?;
        let dz: Vec<f64> = zb.value.iter().zip(&zx.value).map(|(p, q)| p - q).collect();
        let mut x = x_hat.to_vec();
        axpy(1.0, &self.basis.matrix().mul_vec(&dz)?, &mut x);
        Ok(Counted {
            value: x,
            inner_iterations: zb.inner_iterations + zx.inner_iterations,
        })
    }

    /// `π x`
    pub fn project_a(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.project_with(x, InnerContext::strict()).map(|c| c.value)
    }

    /// `A (I - π) x`
    pub fn deflated_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_with(x, InnerContext::strict()).map(|c| c.value)
    }

    /// `(I - π)ᵀ b`
    pub fn deflated_rhs(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.rhs_with(b, InnerContext::strict()).map(|c| c.value)
    }

    /// Solution of `Ax = b` from any solution `x̂` of the deflated system.
    pub fn reconstruct(&self, b: &[f64], x_hat: &[f64]) -> Result<Vec<f64>> {
        self.reconstruct_with(b, x_hat, InnerContext::strict()).map(|c| c.value)
    }
}

impl LinearOperator for DeflatedOperator<'_> {
    fn dim(&self) -> usize {
        self.a.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len("deflated apply output", self.a.n(), y.len())?;
        y.copy_from_slice(&self.deflated_apply(x)?);
        Ok(())
    }
}

pub fn project_a(op: &DeflatedOperator<'_>, x: &[f64]) -> Result<Vec<f64>> {
    op.project_a(x)
}

pub fn deflated_apply(op: &DeflatedOperator<'_>, x: &[f64]) -> Result<Vec<f64>> {
    op.deflated_apply(x)
}

pub fn deflated_rhs(op: &DeflatedOperator<'_>, b: &[f64]) -> Result<Vec<f64>> {
    op.deflated_rhs(b)
}

pub fn reconstruct(op: &DeflatedOperator<'_>, b: &[f64], x_hat: &[f64]) -> Result<Vec<f64>> {
    op.reconstruct(b, x_hat)
}
