use super::TOLERANCES;
use crate::error::{Error, Result};
use crate::linalg::{dot_unchecked, DenseMatrix};

/// `q` has orthonormal columns, `r` is upper triangular (trapezoidal for the
/// complete variant) with a positive diagonal, and `q r` reproduces the input.
#[derive(Clone, Debug)]
pub struct QrDecomposition {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

struct Householder {
    /// Reflector `I - 2 v vᵀ` with unit `v` supported on rows `j..`.
    vectors: Vec<Vec<f64>>,
    r: DenseMatrix,
}

fn reflect(v: &[f64], col: &mut [f64]) {
    let offset = col.len() - v.len();
    let tail = &mut col[offset..];
    let s = 2.0 * dot_unchecked(v, tail);
    tail.iter_mut().zip(v).for_each(|(c, vi)| *c -= s * vi);
}

fn householder(m: &DenseMatrix) -> Householder {
    let (n, k) = (m.rows(), m.cols());
    let mut a = m.clone();
    let mut vectors = Vec::with_capacity(k.min(n));
    for j in 0..k.min(n) {
        let x = &a.col(j)[j..];
        let alpha = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = x.to_vec();
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vn = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if vn > 0.0 {
            v.iter_mut().for_each(|t| *t /= vn);
            for c in j..k {
                reflect(&v, a.col_mut(c));
            }
        } else {
            v.iter_mut().for_each(|t| *t = 0.0);
        }
        vectors.push(v);
    }
    Householder { vectors, r: a }
}

fn build(h: &Householder, n: usize, qcols: usize) -> DenseMatrix {
    let mut q = DenseMatrix::from_fn(n, qcols, |i, j| if i == j { 1.0 } else { 0.0 });
    for v in h.vectors.iter().rev() {
        for c in 0..qcols {
            reflect(v, q.col_mut(c));
        }
    }
    q
}

fn normalize_signs(q: &mut DenseMatrix, r: &mut DenseMatrix) {
    for i in 0..r.rows().min(r.cols()) {
        if r[(i, i)] < 0.0 {
            for j in 0..r.cols() {
                r[(i, j)] = -r[(i, j)];
            }
            q.col_mut(i).iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn check_rank(m: &DenseMatrix, r: &DenseMatrix) -> Result<()> {
    let scale = TOLERANCES.rank * m.frobenius_norm();
    for i in 0..m.cols() {
        if !(r[(i, i)].abs() > scale) {
            return Err(Error::RankDeficient(format!(
                "|r_{i}{i}| = {:e} is below {scale:e}",
                r[(i, i)].abs()
            )));
        }
    }
    Ok(())
}

/// Thin QR of a tall matrix with full column rank.
pub fn qr(m: &DenseMatrix) -> Result<QrDecomposition> {
    let (n, k) = (m.rows(), m.cols());
    if k > n {
        return Err(Error::RankDeficient(format!(
            "{n} x {k} matrix has more columns than rows"
        )));
    }
    if !m.all_finite() {
        return Err(Error::NonFinite("qr input"));
    }
    let h = householder(m);
    let mut q = build(&h, n, k);
    let mut r = DenseMatrix::from_fn(k, k, |i, j| if i <= j { h.r[(i, j)] } else { 0.0 });
    normalize_signs(&mut q, &mut r);
    check_rank(m, &r)?;
    Ok(QrDecomposition { q, r })
}

/// Complete QR: `q` is `n x n` orthogonal and `r` is `n x k`. The leading
/// `k` columns of `q` equal the thin factor.
pub fn complete_qr(m: &DenseMatrix) -> Result<QrDecomposition> {
    let (n, k) = (m.rows(), m.cols());
    if k > n {
        return Err(Error::RankDeficient(format!(
            "{n} x {k} matrix has more columns than rows"
        )));
    }
    if !m.all_finite() {
        return Err(Error::NonFinite("complete_qr input"));
    }
    let h = householder(m);
    let mut q = build(&h, n, n);
    let mut r = DenseMatrix::from_fn(n, k, |i, j| if i <= j { h.r[(i, j)] } else { 0.0 });
    normalize_signs(&mut q, &mut r);
    check_rank(m, &r)?;
    Ok(QrDecomposition { q, r })
}
