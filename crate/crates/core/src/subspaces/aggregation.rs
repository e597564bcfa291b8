use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::projection::{DeflationBasis, Provenance};

#[derive(Deserialize)]
struct AggregateSetRepr {
    assignments: Vec<usize>,
}

/// A partition of `0..n` into `count` non-empty aggregates; variable `i`
/// belongs to aggregate `assignments[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AggregateSetRepr")]
pub struct AggregateSet {
    assignments: Vec<usize>,
    count: usize,
}

impl TryFrom<AggregateSetRepr> for AggregateSet {
    type Error = Error;

    fn try_from(r: AggregateSetRepr) -> Result<Self> {
        Self::new(r.assignments)
    }
}

impl AggregateSet {
    pub fn new(assignments: Vec<usize>) -> Result<Self> {
        if assignments.is_empty() {
            return Err(Error::InvalidArgument("no variables to aggregate".into()));
        }
        let count = assignments.iter().max().map_or(0, |&m| m + 1);
        let mut sizes = vec![0usize; count];
        for &a in &assignments {
            sizes[a] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidArgument(format!("aggregate {empty} is empty")));
        }
        Ok(Self { assignments, count })
    }

    /// Builds from explicit member lists, which must partition `0..n`.
    pub fn from_members(n: usize, members: &[Vec<usize>]) -> Result<Self> {
        let mut assignments = vec![usize::MAX; n];
        for (a, list) in members.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::InvalidArgument(format!("aggregate {a} is empty")));
            }
            for &i in list {
                if i >= n {
                    return Err(Error::InvalidArgument(format!("variable {i} outside 0..{n}")));
                }
                if assignments[i] != usize::MAX {
                    return Err(Error::InvalidArgument(format!("variable {i} assigned twice")));
                }
                assignments[i] = a;
            }
        }
        if let Some(i) = assignments.iter().position(|&a| a == usize::MAX) {
            return Err(Error::InvalidArgument(format!("variable {i} is not assigned")));
        }
        Self::new(assignments)
    }

    /// Square `block x block` tiles of an `N x N` grid (edge tiles may be
    /// smaller), numbered row-major.
    pub fn grid_blocks(n_grid: usize, block: usize) -> Result<Self> {
        if block == 0 || n_grid == 0 {
            return Err(Error::InvalidArgument("grid and block sizes must be positive".into()));
        }
        let per_side = n_grid.div_ceil(block);
        let assignments = (0..n_grid * n_grid)
            .map(|k| (k / n_grid / block) * per_side + (k % n_grid) / block)
            .collect();
        Self::new(assignments)
    }

    /// Consecutive runs of `size` variables.
    pub fn contiguous(n: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("aggregate size must be positive".into()));
        }
        Self::new((0..n).map(|i| i / size).collect())
    }

    pub fn n(&self) -> usize {
        self.assignments.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.count];
        for (i, &a) in self.assignments.iter().enumerate() {
            m[a].push(i);
        }
        m
    }
}

/// Indicator vectors of the aggregates.
pub fn aggregation_basis(agg: &AggregateSet) -> Result<DeflationBasis> {
    let t: Vec<_> = agg.assignments.iter().enumerate().map(|(i, &a)| (i, a, 1.0)).collect();
    DeflationBasis::sparse(
        CsrMatrix::from_triplets(agg.n(), agg.count, &t)?,
        Provenance::Aggregation,
    )
}

/// For every aggregate and every column `w_j`, the restriction of `w_j` to
/// the aggregate. Zero restrictions are dropped. A block of restrictions
/// that is numerically dependent is replaced by an orthonormal basis of its
/// span (modified Gram-Schmidt with truncation at the rank tolerance).
pub fn aggregate_restricted_eigen_basis(agg: &AggregateSet, w: &DenseMatrix) -> Result<DeflationBasis> {
    check_len("aggregate_restricted_eigen_basis", agg.n(), w.rows())?;
    let tol = crate::dense_eig::TOLERANCES.rank;
    let mut triplets = Vec::new();
    let mut col = 0;
    for members in agg.members() {
        let raw: Vec<Vec<f64>> = (0..w.cols())
            .map(|j| members.iter().map(|&i| w[(i, j)]).collect::<Vec<f64>>())
            .filter(|v| v.iter().any(|&x| x != 0.0))
            .collect();
        let scale = raw.iter().map(|v| crate::linalg::norm2(v)).fold(0.0, f64::max);
        let mut ortho: Vec<Vec<f64>> = Vec::new();
        for v in &raw {
            let mut u = v.clone();
            for q in &ortho {
                let c = crate::linalg::dot_unchecked(q, &u);
                crate::linalg::axpy(-c, q, &mut u);
            }
            let norm = crate::linalg::norm2(&u);
            if norm > tol * scale {
                u.iter_mut().for_each(|x| *x /= norm);
                ortho.push(u);
            }
        }
        let block = if ortho.len() == raw.len() { raw } else { ortho };
        for v in block {
            for (&i, &x) in members.iter().zip(&v) {
                if x != 0.0 {
                    triplets.push((i, col, x));
                }
            }
            col += 1;
        }
    }
    DeflationBasis::sparse(
        CsrMatrix::from_triplets(agg.n(), col, &triplets)?,
        Provenance::AggregateRestrictedEigen,
    )
}
