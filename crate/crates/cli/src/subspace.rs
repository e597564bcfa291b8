use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use deflatron::analysis::DenseAnalysis;
use deflatron::linalg::mm::{read_file, MmData};
use deflatron::linalg::SparseMatrix;
use deflatron::projection::{BasisMatrix, DeflationBasis, Provenance};
use deflatron::subspaces::{
    aggregation_basis, direct_interpolation, eigen_basis, full_coarsening_with, AggregateSet, CoarseIndexing,
};

/// `aggregation:<json or path>`, `interpolation:full_coarsening:<N>`,
/// `eigen:<k>` or `basis_file:<path>`.
#[derive(Clone, Debug, PartialEq)]
pub enum SubspaceSpec {
    Aggregation(String),
    FullCoarsening(usize),
    Eigen(usize),
    BasisFile(PathBuf),
}

impl FromStr for SubspaceSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("expected <kind>:<value>, got '{s}'"))?;
        match kind {
            "aggregation" => Ok(Self::Aggregation(rest.to_owned())),
            "interpolation" => {
                let n = rest
                    .strip_prefix("full_coarsening:")
                    .ok_or_else(|| format!("expected interpolation:full_coarsening:<N>, got '{s}'"))?;
                n.parse()
                    .map(Self::FullCoarsening)
                    .map_err(|e| format!("grid size '{n}': {e}"))
            }
            "eigen" => rest.parse().map(Self::Eigen).map_err(|e| format!("k '{rest}': {e}")),
            "basis_file" => Ok(Self::BasisFile(rest.into())),
            other => Err(format!(
                "unknown subspace kind '{other}' (aggregation, interpolation, eigen, basis_file)"
            )),
        }
    }
}

impl fmt::Display for SubspaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Aggregation(j) => write!(f, "aggregation:{j}"),
            Self::FullCoarsening(n) => write!(f, "interpolation:full_coarsening:{n}"),
            Self::Eigen(k) => write!(f, "eigen:{k}"),
            Self::BasisFile(p) => write!(f, "basis_file:{}", p.display()),
        }
    }
}

impl SubspaceSpec {
    pub fn build(&self, a: &SparseMatrix, indexing: CoarseIndexing) -> Result<DeflationBasis> {
        match self {
            Self::Aggregation(src) => {
                let text = if src.trim_start().starts_with('{') {
                    src.clone()
                } else {
                    std::fs::read_to_string(src).with_context(|| format!("cannot read aggregate file {src}"))?
                };
                let agg: AggregateSet = serde_json::from_str(&text).context("invalid aggregate set")?;
                Ok(aggregation_basis(&agg)?)
            }
            &Self::FullCoarsening(n_grid) => {
                if n_grid * n_grid != a.n() {
                    bail!(
                        "full_coarsening:{n_grid} needs a matrix of order {}, got {}",
                        n_grid * n_grid,
                        a.n()
                    );
                }
                Ok(direct_interpolation(a, &full_coarsening_with(n_grid, indexing)?)?)
            }
            &Self::Eigen(k) => {
                let analysis = DenseAnalysis::new(a)?;
                Ok(eigen_basis(analysis.eig()?, k)?)
            }
            Self::BasisFile(path) => {
                let v = match read_file(path).with_context(|| format!("cannot read basis {}", path.display()))? {
                    MmData::Coordinate(m) => BasisMatrix::Sparse(m),
                    MmData::Array(d) => BasisMatrix::Dense(d),
                };
                Ok(DeflationBasis::new(v, Provenance::UserSupplied)?)
            }
        }
    }
}
