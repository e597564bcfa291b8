//! Reproducible test matrices and right-hand sides.

use serde::{Deserialize, Serialize};

use crate::dense_eig::qr;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix, SparseMatrix};
use crate::rng::Stream;

/// The bilinear finite element stencil `[-1 -1 -1; -1 8 -1; -1 -1 -1]` on
/// the `N x N` interior points of a uniform grid. Legs leaving the grid are
/// dropped. Unknown `(i, j)` has index `i N + j`.
#[derive(Clone, Debug)]
pub struct GridProblem {
    pub n_grid: usize,
    pub matrix: SparseMatrix,
}

impl GridProblem {
    pub fn n(&self) -> usize {
        self.n_grid * self.n_grid
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_grid + j
    }
}

pub fn laplace_bilinear(n_grid: usize) -> Result<GridProblem> {
    if n_grid < 3 {
        return Err(Error::InvalidArgument(format!(
            "grid size must be at least 3, got {n_grid}"
        )));
    }
    let n = n_grid as isize;
    let mut triplets = Vec::with_capacity(9 * n_grid * n_grid);
    for i in 0..n {
        for j in 0..n {
            let row = (i * n + j) as usize;
            for di in -1..=1 {
                for dj in -1..=1 {
                    let (k, l) = (i + di, j + dj);
                    if (0..n).contains(&k) && (0..n).contains(&l) {
                        let v = if di == 0 && dj == 0 { 8.0 } else { -1.0 };
                        triplets.push((row, (k * n + l) as usize, v));
                    }
                }
            }
        }
    }
    let m = n_grid * n_grid;
    Ok(GridProblem {
        n_grid,
        matrix: SparseMatrix::new(CsrMatrix::from_triplets(m, m, &triplets)?)?,
    })
}

/// `tridiag(-1, 2, -1)` of order `n`.
pub fn laplace_1d(n: usize) -> Result<SparseMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("order must be positive".into()));
    }
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, 2.0));
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
            t.push((i + 1, i, -1.0));
        }
    }
    SparseMatrix::new(CsrMatrix::from_triplets(n, n, &t)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Frame {
    Diagonal,
    RandomOrthogonal { seed: u64 },
}

/// A symmetric matrix with a prescribed spectrum. Column `i` of
/// `eigenvectors` belongs to `eigenvalues[i]`.
#[derive(Clone, Debug)]
pub struct SpectrumProblem {
    pub eigenvalues: Vec<f64>,
    pub frame: Frame,
    pub eigenvectors: DenseMatrix,
    pub matrix: SparseMatrix,
}

impl SpectrumProblem {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// A uniformly distributed orthogonal matrix: the Q factor (positive
/// diagonal R) of a matrix of seeded standard normals.
pub fn random_orthogonal(n: usize, seed: u64) -> Result<DenseMatrix> {
    let mut s = Stream::new(seed);
    let g = DenseMatrix::from_column_major(n, n, s.normals(n * n))?;
    Ok(qr(&g)?.q)
}

/// `diag(eigenvalues)` or `Qᵀ diag(eigenvalues) Q` for a seeded orthogonal
/// `Q`; the result is symmetrized so it is exactly symmetric.
pub fn spectrum_matrix(eigenvalues: &[f64], frame: Frame) -> Result<SpectrumProblem> {
    if eigenvalues.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    if let Some(bad) = eigenvalues.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(format!("eigenvalue {bad} is not positive")));
    }
    let n = eigenvalues.len();
    let (eigenvectors, matrix) = match frame {
        Frame::Diagonal => (DenseMatrix::identity(n), CsrMatrix::from_diagonal(eigenvalues)),
        Frame::RandomOrthogonal { seed } => {
            let qt = random_orthogonal(n, seed)?.transpose();
            let scaled = DenseMatrix::from_fn(n, n, |i, j| qt[(i, j)] * eigenvalues[j]);
            let m = scaled.matmul(&qt.transpose())?.symmetrized();
            (qt, CsrMatrix::from_dense(&m, 0.0))
        }
    };
    Ok(SpectrumProblem {
        eigenvalues: eigenvalues.to_vec(),
        frame,
        eigenvectors,
        matrix: SparseMatrix::new(matrix)?,
    })
}

/// The `n = 100` matrix with a simple eigenvalue `0.01` and the eigenvalue
/// `1` of multiplicity 99.
pub fn outlier_spectrum(frame: Frame) -> Result<SpectrumProblem> {
    let mut eigenvalues = vec![1.0; 100];
    eigenvalues[0] = 0.01;
    spectrum_matrix(&eigenvalues, frame)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedSolution {
    pub seed: u64,
    pub x_true: Vec<f64>,
    pub b: Vec<f64>,
}

/// `x_true` uniform on the unit sphere (normalized seeded normals) and
/// `b = A x_true`.
pub fn random_unit_solution_rhs(a: &SparseMatrix, seed: u64) -> Result<ManufacturedSolution> {
    let x_true = Stream::new(seed).unit_vector(a.n());
    let b = a.spmv(&x_true)?;
    Ok(ManufacturedSolution { seed, x_true, b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense_eig::sym_eigvals;
    use crate::linalg::{assert_spd_sample, norm2};

    #[test]
    fn three_by_three_grid() {
        let p = laplace_bilinear(3).unwrap();
        let a = &p.matrix;
        assert_eq!(a.n(), 9);
        let (cols, vals) = a.row(4);
        assert_eq!(cols.len(), 9);
        for (&j, &v) in cols.iter().zip(vals) {
            assert_eq!(v, if j == 4 { 8.0 } else { -1.0 });
        }
        let corner: f64 = a.row(0).1.iter().sum();
        assert_eq!(corner, 5.0);
        assert!(laplace_bilinear(2).is_err());
    }

    #[test]
    fn grid_is_an_m_matrix() {
        for n_grid in [3, 7, 12] {
            let p = laplace_bilinear(n_grid).unwrap();
            let a = &p.matrix;
            assert!(a.gershgorin_bound() <= 16.0);
            assert!(assert_spd_sample(a, 4, 1));
            for i in 0..n_grid {
                for j in 0..n_grid {
                    let row = p.index(i, j);
                    let (cols, vals) = a.row(row);
                    assert!(cols.iter().zip(vals).all(|(&c, &v)| c == row || v <= 0.0));
                    let sum: f64 = vals.iter().sum();
                    let interior = i > 0 && j > 0 && i + 1 < n_grid && j + 1 < n_grid;
                    assert!(if interior { sum == 0.0 } else { sum > 0.0 });
                }
            }
        }
    }

    #[test]
    fn grid_spectrum_closed_form() {
        // Eigenvalues 9 - (1 + 2cos θ_i)(1 + 2cos θ_j) with θ_k = kπ/(N+1).
        let n_grid = 7;
        let h = std::f64::consts::PI / (n_grid + 1) as f64;
        let mut expected: Vec<f64> = (1..=n_grid)
            .flat_map(|i| (1..=n_grid).map(move |j| (i, j)))
            .map(|(i, j)| 9.0 - (1.0 + 2.0 * (i as f64 * h).cos()) * (1.0 + 2.0 * (j as f64 * h).cos()))
            .collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        let got = sym_eigvals(&laplace_bilinear(n_grid).unwrap().matrix.to_dense()).unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_matrix_frames() {
        let p = spectrum_matrix(&[1.0, 2.0], Frame::Diagonal).unwrap();
        assert_eq!(p.matrix.to_dense(), DenseMatrix::from_diagonal(&[1.0, 2.0]));
        assert!(spectrum_matrix(&[1.0, 0.0], Frame::Diagonal).is_err());

        let p = outlier_spectrum(Frame::RandomOrthogonal { seed: 3 }).unwrap();
        let vals = sym_eigvals(&p.matrix.to_dense()).unwrap();
        assert!((vals[0] / vals[99] - 100.0).abs() < 1e-8);
        for (i, &lam) in p.eigenvalues.iter().enumerate() {
            let q = p.eigenvectors.col(i);
            let aq = p.matrix.spmv(q).unwrap();
            let res: f64 = aq.iter().zip(q).map(|(x, y)| (x - lam * y).powi(2)).sum::<f64>().sqrt();
            assert!(res < 1e-13);
        }
        let again = outlier_spectrum(Frame::RandomOrthogonal { seed: 3 }).unwrap();
        assert_eq!(again.matrix, p.matrix);
    }

    #[test]
    fn manufactured_solution() {
        let a = laplace_bilinear(5).unwrap().matrix;
        let s = random_unit_solution_rhs(&a, 9).unwrap();
        assert!((norm2(&s.x_true) - 1.0).abs() <= 1e-15);
        assert_eq!(s.b, a.spmv(&s.x_true).unwrap());
        assert_eq!(random_unit_solution_rhs(&a, 9).unwrap(), s);
    }
}
