//! Sparse and dense matrix storage, vector kernels and Matrix Market I/O.
//!
//! All reductions run sequentially in index order, so results are bitwise
//! reproducible for a given input.

pub mod csr;
pub mod dense;
pub mod mm;

pub use csr::{CsrMatrix, SparseMatrix};
pub use dense::DenseMatrix;

use crate::error::{check_len, Result};
use crate::rng::Stream;

/// A square linear map `y = Op x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()>;
}

pub fn dot(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len("dot", u.len(), v.len())?;
    Ok(dot_unchecked(u, v))
}

pub fn norm2(v: &[f64]) -> f64 {
    dot_unchecked(v, v).sqrt()
}

pub fn a_dot(a: &SparseMatrix, u: &[f64], v: &[f64]) -> Result<f64> {
    check_len("a_dot", a.n(), u.len())?;
    let av = a.spmv(v)?;
    Ok(dot_unchecked(u, &av))
}

pub fn a_norm(a: &SparseMatrix, v: &[f64]) -> Result<f64> {
    Ok(a_dot(a, v, v)?.max(0.0).sqrt())
}

pub fn spmv(a: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    a.spmv(x)
}

/// Randomized positive-definiteness probe: every `xᵀAx` over `k` seeded
/// directions must be positive, and `A` must admit a Cholesky factor when it
/// is small enough to densify.
pub fn assert_spd_sample(a: &SparseMatrix, k: usize, seed: u64) -> bool {
    let n = a.n();
    let mut stream = Stream::new(seed);
    for _ in 0..k {
        let x = stream.unit_vector(n);
        match a_dot(a, &x, &x) {
            Ok(q) if q > 0.0 => {}
            _ => return false,
        }
    }
    if n <= crate::analysis::dense_limit() {
        crate::dense_eig::cholesky(&a.to_dense()).is_ok()
    } else {
        true
    }
}

pub(crate) fn dot_unchecked(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `y += alpha x`
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub(crate) fn sub(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a - b).collect()
}
