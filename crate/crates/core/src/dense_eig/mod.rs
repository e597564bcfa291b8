//! Dense symmetric eigendecomposition, singular values, QR and Cholesky.

mod cholesky;
mod jacobi;
mod qr;
mod tridiagonal;

pub use cholesky::{cholesky, Cholesky};
pub use qr::{complete_qr, qr, QrDecomposition};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Tolerances shared by the dense routines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Jacobi stops once the off-diagonal Frobenius mass is below this
    /// fraction of `‖M‖_F`.
    pub eig_offdiag: f64,
    pub eig_max_sweeps: usize,
    /// Largest order handled by Jacobi; larger inputs use the tridiagonal
    /// QL route.
    pub jacobi_max_dim: usize,
    /// Relative asymmetry accepted by the symmetric routines.
    pub sym: f64,
    /// QR declares rank deficiency when `|r_ii| ≤ rank ‖M‖_F`.
    pub rank: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    eig_offdiag: 1e-12,
    eig_max_sweeps: 100,
    jacobi_max_dim: 128,
    sym: 1e-10,
    rank: 1e-10,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenMethod {
    Jacobi,
    TridiagonalQl,
}

impl EigenMethod {
    pub fn for_dim(n: usize) -> Self {
        if n <= TOLERANCES.jacobi_max_dim {
            Self::Jacobi
        } else {
            Self::TridiagonalQl
        }
    }
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

fn check_symmetric(m: &DenseMatrix) -> Result<()> {
    if m.rows() != m.cols() {
        return Err(Error::InvalidMatrix(format!(
            "expected a square matrix, got {} x {}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.all_finite() {
        return Err(Error::NonFinite("eigensolver input"));
    }
    if !m.is_symmetric(TOLERANCES.sym) {
        return Err(Error::NotSymmetric("eigensolver input".into()));
    }
    Ok(())
}

fn run(m: &DenseMatrix, method: EigenMethod, want_vectors: bool) -> Result<(Vec<f64>, Option<DenseMatrix>)> {
    match method {
        EigenMethod::Jacobi => jacobi::jacobi(m, want_vectors),
        EigenMethod::TridiagonalQl => tridiagonal::tridiagonal_ql(m, want_vectors),
    }
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    order
}

pub fn sym_eig_with(m: &DenseMatrix, method: EigenMethod) -> Result<EigenDecomposition> {
    check_symmetric(m)?;
    let (values, vectors) = run(m, method, true)?;
    let vectors = vectors.expect("vectors requested");
    let order = descending_order(&values);
    let mut sorted = DenseMatrix::zeros(m.rows(), m.rows());
    for (dst, &src) in order.iter().enumerate() {
        sorted.col_mut(dst).copy_from_slice(vectors.col(src));
    }
    Ok(EigenDecomposition {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: sorted,
    })
}

pub fn sym_eig(m: &DenseMatrix) -> Result<EigenDecomposition> {
    sym_eig_with(m, EigenMethod::for_dim(m.rows()))
}

/// Eigenvalues only, descending.
pub fn sym_eigvals(m: &DenseMatrix) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let (mut values, _) = run(m, EigenMethod::for_dim(m.rows()), false)?;
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Singular values, descending, from the Gram matrix of the shorter side.
/// The input is scaled by its largest entry first so the Gram matrix cannot
/// overflow or underflow.
pub fn svd_values(m: &DenseMatrix) -> Vec<f64> {
    let scale = m.max_abs();
    if scale == 0.0 || !scale.is_finite() {
        return vec![if scale == 0.0 { 0.0 } else { f64::NAN }; m.rows().min(m.cols())];
    }
    let scaled = m.scaled(1.0 / scale);
    let gram = if m.rows() >= m.cols() {
        scaled.gram()
    } else {
        scaled.transpose().gram()
    };
    sym_eigvals(&gram)
        .expect("Gram matrices are symmetric and finite")
        .into_iter()
        .map(|v| v.max(0.0).sqrt() * scale)
        .collect()
}

/// Largest singular value.
pub fn spectral_norm(m: &DenseMatrix) -> f64 {
    svd_values(m).first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn random(n: usize, k: usize, seed: u64) -> DenseMatrix {
        let mut s = Stream::new(seed);
        DenseMatrix::from_column_major(n, k, s.normals(n * k)).unwrap()
    }

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        random(n, n, seed).symmetrized()
    }

    fn check_decomposition(m: &DenseMatrix, e: &EigenDecomposition) {
        let n = m.rows();
        let norm = m.frobenius_norm();
        let lam = DenseMatrix::from_diagonal(&e.values);
        let rebuilt = e.vectors.matmul(&lam).unwrap().matmul(&e.vectors.transpose()).unwrap();
        assert!(m.sub(&rebuilt).unwrap().frobenius_norm() <= 1e-10 * norm);
        let orth = e.vectors.gram().sub(&DenseMatrix::identity(n)).unwrap().max_abs();
        assert!(orth <= 1e-12, "orthogonality {orth:e}");
        let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
        let sum: f64 = e.values.iter().sum();
        assert!((trace - sum).abs() <= 1e-11 * norm);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        for (i, &lam) in e.values.iter().enumerate() {
            let q = e.vectors.col(i);
            let mq = m.mul_vec(q).unwrap();
            let res: f64 = mq.iter().zip(q).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
            assert!(res <= 1e-11 * norm, "residual {res:e}");
        }
    }

    #[test]
    fn diagonal_is_sorted() {
        let e = sym_eig(&DenseMatrix::from_diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(e.vectors.col(0), &[1.0, 0.0, 0.0]);
        assert_eq!(e.vectors.col(1), &[0.0, 0.0, 1.0]);
        assert_eq!(e.vectors.col(2), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn two_by_two_by_hand() {
        let m = DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        for method in [EigenMethod::Jacobi, EigenMethod::TridiagonalQl] {
            let e = sym_eig_with(&m, method).unwrap();
            assert_relative_eq!(e.values[0], 3.0, epsilon = 1e-14);
            assert_relative_eq!(e.values[1], 1.0, epsilon = 1e-14);
            let h = 0.5f64.sqrt();
            let q0 = e.vectors.col(0);
            let q1 = e.vectors.col(1);
            assert_relative_eq!((q0[0] * q0[1]).abs(), 0.5, epsilon = 1e-14);
            assert_relative_eq!(q0[0].abs(), h, epsilon = 1e-14);
            assert_relative_eq!(q1[0] * q1[1], -0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(sym_eig(&DenseMatrix::zeros(2, 3)).is_err());
        let asym = DenseMatrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&asym), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn both_methods_agree() {
        for (n, seed) in [(1, 1), (5, 2), (40, 3), (90, 4)] {
            let m = random_symmetric(n, seed);
            let a = sym_eig_with(&m, EigenMethod::Jacobi).unwrap();
            let b = sym_eig_with(&m, EigenMethod::TridiagonalQl).unwrap();
            check_decomposition(&m, &a);
            check_decomposition(&m, &b);
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() <= 1e-12 * m.frobenius_norm());
            }
            let vals = sym_eigvals(&m).unwrap();
            for (x, y) in vals.iter().zip(&a.values) {
                assert!((x - y).abs() <= 1e-12 * m.frobenius_norm());
            }
        }
    }

    #[test]
    fn repeated_eigenvalues() {
        let mut d = vec![1.0; 30];
        d[0] = 0.01;
        let q = qr(&random(30, 30, 9)).unwrap().q;
        let m = q
            .matmul(&DenseMatrix::from_diagonal(&d))
            .unwrap()
            .matmul(&q.transpose())
            .unwrap()
            .symmetrized();
        for method in [EigenMethod::Jacobi, EigenMethod::TridiagonalQl] {
            let e = sym_eig_with(&m, method).unwrap();
            check_decomposition(&m, &e);
            assert_relative_eq!(e.values[29], 0.01, epsilon = 1e-13);
        }
    }

    #[test]
    fn svd_examples() {
        assert_eq!(svd_values(&DenseMatrix::identity(3)), vec![1.0; 3]);
        assert_eq!(svd_values(&DenseMatrix::from_diagonal(&[0.0, 5.0])), vec![5.0, 0.0]);
        let m = random(8, 5, 11);
        let gram = sym_eig(&m.gram()).unwrap();
        for (s, l) in svd_values(&m).iter().zip(&gram.values) {
            assert!((s - l.sqrt()).abs() <= 1e-10 * s.max(1.0));
        }
    }

    #[test]
    fn qr_examples() {
        let q0 = qr(&random(6, 3, 5)).unwrap().q;
        let d = qr(&q0).unwrap();
        assert!(d.q.sub(&q0).unwrap().max_abs() < 1e-14);
        assert!(d.r.sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-14);
        let d = qr(&DenseMatrix::from_rows(&[&[1.0], &[1.0]]).unwrap()).unwrap();
        assert_relative_eq!(d.q[(0, 0)], 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(d.q[(1, 0)], 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(d.r[(0, 0)], 2f64.sqrt(), epsilon = 1e-15);
        let deficient = DenseMatrix::from_rows(&[&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]]).unwrap();
        assert!(matches!(qr(&deficient), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn complete_qr_extends_thin() {
        let m = random(7, 3, 21);
        let thin = qr(&m).unwrap();
        let full = complete_qr(&m).unwrap();
        assert_eq!(full.q.cols(), 7);
        assert!(full.q.columns(0..3).sub(&thin.q).unwrap().max_abs() < 1e-14);
        assert!(full.q.gram().sub(&DenseMatrix::identity(7)).unwrap().max_abs() < 1e-14);
        assert!(full.q.matmul(&full.r).unwrap().sub(&m).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(cholesky(&DenseMatrix::identity(3)).unwrap(), DenseMatrix::identity(3));
        let l = cholesky(&DenseMatrix::from_rows(&[&[4.0, 2.0], &[2.0, 5.0]]).unwrap()).unwrap();
        assert_eq!(l, DenseMatrix::from_rows(&[&[2.0, 0.0], &[1.0, 2.0]]).unwrap());
        let indefinite = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky(&indefinite),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn qr_reconstructs(n in 1usize..12, extra in 0usize..6, seed in 0u64..10_000) {
            let m = random(n + extra, n, seed);
            let d = qr(&m).unwrap();
            let err = d.q.matmul(&d.r).unwrap().sub(&m).unwrap().frobenius_norm();
            prop_assert!(err <= 1e-12 * m.frobenius_norm());
            prop_assert!((0..n).all(|i| d.r[(i, i)] > 0.0));
            prop_assert!(d.q.gram().sub(&DenseMatrix::identity(n)).unwrap().max_abs() < 1e-13);
        }

        #[test]
        fn svd_of_transpose_pads_zeros(r in 1usize..9, c in 1usize..9, seed in 0u64..10_000) {
            let m = random(r, c, seed);
            let a = svd_values(&m);
            let b = svd_values(&m.transpose());
            prop_assert_eq!(a.len(), r.min(c));
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12 * a[0]);
            }
        }

        #[test]
        fn cholesky_reconstructs(n in 1usize..15, seed in 0u64..10_000) {
            let b = random(n, n, seed);
            let m = b.gram().add(&DenseMatrix::identity(n)).unwrap();
            let l = cholesky(&m).unwrap();
            let err = l.matmul(&l.transpose()).unwrap().sub(&m).unwrap().max_abs();
            prop_assert!(err <= 1e-12 * m.max_abs());
            let x = Stream::new(seed).normals(n);
            let rhs = m.mul_vec(&x).unwrap();
            let sol = Cholesky::factor(&m).unwrap().solve(&rhs).unwrap();
            for (a, b) in sol.iter().zip(&x) {
                prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn eig_invariants(n in 1usize..25, seed in 0u64..10_000) {
            let m = random_symmetric(n, seed);
            let e = sym_eig(&m).unwrap();
            let lam = DenseMatrix::from_diagonal(&e.values);
            let rebuilt = e.vectors.matmul(&lam).unwrap().matmul(&e.vectors.transpose()).unwrap();
            prop_assert!(m.sub(&rebuilt).unwrap().frobenius_norm() <= 1e-10 * m.frobenius_norm());
        }
    }
}
