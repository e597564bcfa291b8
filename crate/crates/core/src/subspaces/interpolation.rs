use serde::{Deserialize, Serialize};

use crate::dense_eig::{spectral_norm, Cholesky};
use crate::error::{check_len, Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix, SparseMatrix};
use crate::projection::{DeflationBasis, Provenance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CfPoint {
    C,
    F,
}

#[derive(Deserialize)]
struct CfSplittingRepr {
    flags: Vec<CfPoint>,
    #[serde(default)]
    grid_shape: Option<(usize, usize)>,
}

/// A coarse/fine partition of the variables with at least one C point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CfSplittingRepr")]
pub struct CfSplitting {
    flags: Vec<CfPoint>,
    grid_shape: Option<(usize, usize)>,
}

impl TryFrom<CfSplittingRepr> for CfSplitting {
    type Error = Error;

    fn try_from(r: CfSplittingRepr) -> Result<Self> {
        Self::new(r.flags, r.grid_shape)
    }
}

impl CfSplitting {
    pub fn new(flags: Vec<CfPoint>, grid_shape: Option<(usize, usize)>) -> Result<Self> {
        if !flags.contains(&CfPoint::C) {
            return Err(Error::InvalidArgument("splitting has no C point".into()));
        }
        if let Some((r, c)) = grid_shape {
            check_len("splitting grid shape", r * c, flags.len())?;
        }
        Ok(Self { flags, grid_shape })
    }

    /// Marks exactly the listed variables as C points.
    pub fn from_coarse(n: usize, coarse: &[usize]) -> Result<Self> {
        let mut flags = vec![CfPoint::F; n];
        for &i in coarse {
            if i >= n {
                return Err(Error::InvalidArgument(format!("coarse point {i} outside 0..{n}")));
            }
            flags[i] = CfPoint::C;
        }
        Self::new(flags, None)
    }

    pub fn n(&self) -> usize {
        self.flags.len()
    }

    pub fn flags(&self) -> &[CfPoint] {
        &self.flags
    }

    pub fn grid_shape(&self) -> Option<(usize, usize)> {
        self.grid_shape
    }

    pub fn is_coarse(&self, i: usize) -> bool {
        self.flags[i] == CfPoint::C
    }

    /// C points in increasing order; the `k`-th one owns column `k` of the
    /// interpolation.
    pub fn coarse_points(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.is_coarse(i)).collect()
    }

    pub fn coarse_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f == CfPoint::C).count()
    }
}

/// Which grid coordinates count as "even".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseIndexing {
    /// `(i, j)` with `0 <= i, j < N` both even: `⌈N/2⌉²` C points, the
    /// boundary rows and columns included when `N` is odd.
    #[default]
    ZeroBasedEven,
    /// `(i, j)` with `1 <= i, j <= N` both even: `⌊N/2⌋²` C points.
    OneBasedEven,
}

pub fn full_coarsening(n_grid: usize) -> Result<CfSplitting> {
    full_coarsening_with(n_grid, CoarseIndexing::default())
}

pub fn full_coarsening_with(n_grid: usize, indexing: CoarseIndexing) -> Result<CfSplitting> {
    if n_grid < 3 {
        return Err(Error::InvalidArgument(format!(
            "grid size must be at least 3, got {n_grid}"
        )));
    }
    let even = |k: usize| match indexing {
        CoarseIndexing::ZeroBasedEven => k.is_multiple_of(2),
        CoarseIndexing::OneBasedEven => k % 2 == 1,
    };
    let flags = (0..n_grid * n_grid)
        .map(|k| {
            if even(k / n_grid) && even(k % n_grid) {
                CfPoint::C
            } else {
                CfPoint::F
            }
        })
        .collect();
    CfSplitting::new(flags, Some((n_grid, n_grid)))
}

/// Direct interpolation: C rows are unit rows; F row `i` interpolates from
/// `C_i = {j ∈ C : a_ij < 0}` with `w_ij = -α_i a_ij / a_ii` and
/// `α_i = Σ_{k≠i} a_ik / Σ_{j∈C_i} a_ij`.
pub fn direct_interpolation(a: &SparseMatrix, split: &CfSplitting) -> Result<DeflationBasis> {
    let n = a.n();
    check_len("direct_interpolation splitting", n, split.n())?;
    let mut column = vec![usize::MAX; n];
    for (k, &c) in split.coarse_points().iter().enumerate() {
        column[c] = k;
    }
    let m = split.coarse_count();
    let mut triplets = Vec::new();
    for i in 0..n {
        if split.is_coarse(i) {
            triplets.push((i, column[i], 1.0));
            continue;
        }
        let (cols, vals) = a.row(i);
        let mut diag = 0.0;
        let mut off_sum = 0.0;
        let mut coarse_sum = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                diag = v;
            } else if v > 0.0 {
                return Err(Error::InvalidMatrix(format!("positive off-diagonal a[{i},{j}] = {v}")));
            } else {
                off_sum += v;
                if v < 0.0 && split.is_coarse(j) {
                    coarse_sum += v;
                }
            }
        }
        if coarse_sum == 0.0 {
            return Err(Error::InvalidArgument(format!("F point {i} has no coarse neighbour")));
        }
        if !(diag > 0.0) {
            return Err(Error::InvalidMatrix(format!(
                "diagonal a[{i},{i}] = {diag} is not positive"
            )));
        }
        let alpha = off_sum / coarse_sum;
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i && v < 0.0 && split.is_coarse(j) {
                triplets.push((i, column[j], -alpha * v / diag));
            }
        }
    }
    DeflationBasis::sparse(
        CsrMatrix::from_triplets(n, m, &triplets)?,
        Provenance::DirectInterpolation,
    )
}

/// The smallest `τ` with `‖e - V R e‖_D² ≤ τ ‖e‖_A²` for all `e`, where `R`
/// picks the values at the C points (in order) and `D = diag(A)`:
/// `τ = ‖D^{1/2} (I - V R) L⁻ᵀ‖₂²` with `A = L Lᵀ`. Dense.
pub fn verify_wap_tau(a: &SparseMatrix, split: &CfSplitting, basis: &DeflationBasis) -> Result<f64> {
    let n = a.n();
    let limit = crate::analysis::dense_limit();
    if n > limit {
        return Err(Error::SizeLimit { n, limit });
    }
    check_len("verify_wap_tau splitting", n, split.n())?;
    check_len("verify_wap_tau basis rows", n, basis.n())?;
    let coarse = split.coarse_points();
    check_len("verify_wap_tau basis columns", coarse.len(), basis.m())?;
    let v = basis.to_dense();
    let d_sqrt: Vec<f64> = a.diagonal().iter().map(|d| d.sqrt()).collect();
    // Bᵀ with B = D^{1/2} (I - V R); (V R)_{ij} = v_{i,k} when j = coarse[k].
    let mut bt = DenseMatrix::zeros(n, n);
    for (i, &d) in d_sqrt.iter().enumerate() {
        bt.col_mut(i)[i] = d;
    }
    for (k, &j) in coarse.iter().enumerate() {
        for i in 0..n {
            let vik = v[(i, k)];
            if vik != 0.0 {
                bt.col_mut(i)[j] -= d_sqrt[i] * vik;
            }
        }
    }
    let chol = Cholesky::factor(&a.to_dense())?;
    let s = spectral_norm(&chol.forward_matrix(&bt)?);
    Ok(s * s)
}
