use crate::error::{check_len, Error, Result};
use crate::linalg::DenseMatrix;

use super::TOLERANCES;

/// `M = L Lᵀ` with `L` lower triangular and a positive diagonal.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn factor(m: &DenseMatrix) -> Result<Self> {
        let n = m.rows();
        check_len("cholesky", n, m.cols())?;
        if !m.is_symmetric(TOLERANCES.sym) {
            return Err(Error::NotSymmetric("cholesky input".into()));
        }
        let mut l = DenseMatrix::zeros(n, n);
        // Left-looking by columns; column j reads the finished columns 0..j.
        for j in 0..n {
            let mut col: Vec<f64> = (j..n).map(|i| m[(i, j)]).collect();
            for k in 0..j {
                let ljk = l[(j, k)];
                if ljk != 0.0 {
                    let lk = &l.col(k)[j..];
                    col.iter_mut().zip(lk).for_each(|(c, v)| *c -= ljk * v);
                }
            }
            let pivot = col[0];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::NotPositiveDefinite { index: j, pivot });
            }
            let d = pivot.sqrt();
            let dst = &mut l.col_mut(j)[j..];
            dst[0] = d;
            for (t, c) in dst.iter_mut().zip(&col).skip(1) {
                *t = c / d;
            }
        }
        Ok(Self { l })
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn into_lower(self) -> DenseMatrix {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `L y = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for j in 0..n {
            b[j] /= self.l[(j, j)];
            let bj = b[j];
            let col = &self.l.col(j)[j + 1..];
            b[j + 1..].iter_mut().zip(col).for_each(|(x, v)| *x -= bj * v);
        }
    }

    /// Solves `Lᵀ y = b` in place.
    pub fn backward_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for j in (0..n).rev() {
            let col = &self.l.col(j)[j + 1..];
            let s: f64 = col.iter().zip(&b[j + 1..]).map(|(v, x)| v * x).sum();
            b[j] = (b[j] - s) / self.l[(j, j)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len("cholesky solve", self.dim(), b.len())?;
        let mut x = b.to_vec();
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        Ok(x)
    }

    /// `L⁻¹ B`
    pub fn forward_matrix(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        check_len("cholesky forward_matrix", self.dim(), b.rows())?;
        let mut out = b.clone();
        for c in 0..out.cols() {
            self.forward_in_place(out.col_mut(c));
        }
        Ok(out)
    }
}

pub fn cholesky(m: &DenseMatrix) -> Result<DenseMatrix> {
    Cholesky::factor(m).map(Cholesky::into_lower)
}
