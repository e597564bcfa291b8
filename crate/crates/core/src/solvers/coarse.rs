use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cg::{recurrence, CgConfig};
use crate::dense_eig::Cholesky;
use crate::error::{Error, Result};
use crate::linalg::{norm2, LinearOperator};
use crate::projection::CoarseOperator;

/// Largest coarse dimension factored densely by [`CoarsePolicy::Direct`].
pub const DIRECT_MAX_DIM: usize = 4000;

/// Relative tolerance of inner solves outside the outer iteration (setup,
/// reconstruction and the public projector API).
pub const STRICT_INNER_TOL: f64 = 1e-12;

/// How `(VᵀAV) z = rhs` is solved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoarsePolicy {
    /// Dense Cholesky factor formed once.
    Direct,
    /// Inner CG to a fixed relative tolerance.
    InnerCgFixed { tol: f64 },
    /// Inner CG to `τ_c = max{ε/‖r_i‖, ε}·c`, capped at `c`, with `ε` the
    /// absolute outer residual target and `r_i` the current outer residual.
    InnerCgAdaptive { c: f64 },
}

impl CoarsePolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Direct => Ok(()),
            Self::InnerCgFixed { tol } if tol > 0.0 && tol < 1.0 => Ok(()),
            Self::InnerCgAdaptive { c } if c > 0.0 && c <= 1.0 => Ok(()),
            other => Err(Error::InvalidArgument(format!("invalid coarse policy {other}"))),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Direct)
    }
}

impl fmt::Display for CoarsePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Direct => write!(f, "direct"),
            Self::InnerCgFixed { tol } => write!(f, "fixed:{tol:e}"),
            Self::InnerCgAdaptive { c } => write!(f, "adaptive:{c}"),
        }
    }
}

impl FromStr for CoarsePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected direct, fixed:<tol> or adaptive:<c>, got '{s}'"));
        let policy = match s.split_once(':') {
            None if s == "direct" => Self::Direct,
            Some(("fixed", v)) => Self::InnerCgFixed {
                tol: v.parse().map_err(|_| bad())?,
            },
            Some(("adaptive", v)) => Self::InnerCgAdaptive {
                c: v.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        policy.validate()?;
        Ok(policy)
    }
}

/// `max{ε/‖r‖, ε}·c`, capped at `c`.
pub fn adaptive_tolerance(c: f64, epsilon: f64, outer_residual: f64) -> f64 {
    ((epsilon / outer_residual).max(epsilon) * c).min(c)
}

/// Where an inner solve happens.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InnerContext {
    /// Setup and reconstruction solves, held to [`STRICT_INNER_TOL`] (or
    /// the policy's own tolerance when that is tighter).
    Strict,
    /// Inside outer iteration `i`: `residual = ‖r_i‖`, `epsilon` the outer
    /// absolute target.
    Outer { residual: f64, epsilon: f64 },
}

impl InnerContext {
    pub fn strict() -> Self {
        Self::Strict
    }
}

#[derive(Clone, Debug)]
pub struct InnerSolve {
    pub z: Vec<f64>,
    pub iterations: usize,
    /// Relative tolerance the solve was held to (0 for direct solves).
    pub tolerance: f64,
}

#[derive(Debug)]
pub struct CoarseSolver {
    policy: CoarsePolicy,
    op: CoarseOperator,
    factor: Option<Cholesky>,
    max_inner_iter: usize,
}

impl CoarseSolver {
    pub fn new(policy: CoarsePolicy, op: CoarseOperator) -> Result<Self> {
        policy.validate()?;
        let m = op.dim();
        let factor = match policy {
            CoarsePolicy::Direct => {
                if m > DIRECT_MAX_DIM {
                    return Err(Error::InvalidArgument(format!(
                        "coarse dimension {m} exceeds the direct-solve limit {DIRECT_MAX_DIM}; use an inner CG policy"
                    )));
                }
                Some(Cholesky::factor(&op.to_dense())?)
            }
            _ => None,
        };
        Ok(Self {
            policy,
            op,
            factor,
            max_inner_iter: 20 * m + 100,
        })
    }

    pub fn policy(&self) -> CoarsePolicy {
        self.policy
    }

    pub fn operator(&self) -> &CoarseOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// The relative tolerance a solve in `ctx` is held to.
    pub fn tolerance(&self, ctx: InnerContext) -> f64 {
        match (self.policy, ctx) {
            (CoarsePolicy::Direct, _) => 0.0,
            (CoarsePolicy::InnerCgFixed { tol }, InnerContext::Strict) => tol.min(STRICT_INNER_TOL),
            (CoarsePolicy::InnerCgAdaptive { .. }, InnerContext::Strict) => STRICT_INNER_TOL,
            (CoarsePolicy::InnerCgFixed { tol }, InnerContext::Outer { .. }) => tol,
            (CoarsePolicy::InnerCgAdaptive { c }, InnerContext::Outer { residual, epsilon }) => {
                adaptive_tolerance(c, epsilon, residual)
            }
        }
    }

    pub fn solve(&self, rhs: &[f64], ctx: InnerContext) -> Result<InnerSolve> {
        crate::error::check_len("coarse solve", self.dim(), rhs.len())?;
        if let Some(f) = &self.factor {
            return Ok(InnerSolve {
                z: f.solve(rhs)?,
                iterations: 0,
                tolerance: 0.0,
            });
        }
        let tol = self.tolerance(ctx);
        let cfg = CgConfig::new(tol, self.max_inner_iter)?.with_history(false);
        let m = self.dim();
        let mut apply = |p: &[f64], _: f64| {
            let mut y = vec![0.0; m];
            self.op.apply(p, &mut y)?;
            Ok((y, 0))
        };
        let rhs_norm = norm2(rhs);
        let rep = recurrence(vec![0.0; m], rhs.to_vec(), tol * rhs_norm, &cfg, &mut apply, None, None)?;
        if !rep.converged {
            return Err(Error::InnerSolveFailed {
                tolerance: tol,
                iterations: rep.iterations,
                residual: rep.final_residual / rhs_norm,
            });
        }
        Ok(InnerSolve {
            z: rep.x,
            iterations: rep.iterations,
            tolerance: tol,
        })
    }
}

/// Solves `(VᵀAV) z = rhs` as the `i`-th outer iteration would, with
/// `outer_residual_norm = ‖r_i‖` and `epsilon` the outer target.
pub fn coarse_solve(solver: &CoarseSolver, rhs: &[f64], outer_residual_norm: f64, epsilon: f64) -> Result<Vec<f64>> {
    solver
        .solve(
            rhs,
            InnerContext::Outer {
                residual: outer_residual_norm,
                epsilon,
            },
        )
        .map(|s| s.z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CsrMatrix, DenseMatrix, SparseMatrix};

    fn two_by_two() -> CoarseOperator {
        CoarseOperator::Dense(DenseMatrix::from_rows(&[&[4.0, 2.0], &[2.0, 5.0]]).unwrap())
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("direct".parse::<CoarsePolicy>().unwrap(), CoarsePolicy::Direct);
        assert_eq!(
            "fixed:1e-6".parse::<CoarsePolicy>().unwrap(),
            CoarsePolicy::InnerCgFixed { tol: 1e-6 }
        );
        assert_eq!(
            "adaptive:0.5".parse::<CoarsePolicy>().unwrap(),
            CoarsePolicy::InnerCgAdaptive { c: 0.5 }
        );
        for bad in [
            "",
            "exact",
            "fixed:",
            "fixed:2",
            "adaptive:0",
            "adaptive:1.5",
            "direct:1",
        ] {
            assert!(bad.parse::<CoarsePolicy>().is_err(), "{bad}");
        }
        for p in [
            CoarsePolicy::Direct,
            CoarsePolicy::InnerCgFixed { tol: 1e-6 },
            CoarsePolicy::InnerCgAdaptive { c: 1.0 },
        ] {
            assert_eq!(p.to_string().parse::<CoarsePolicy>().unwrap(), p);
        }
    }

    #[test]
    fn direct_hand_solve() {
        let s = CoarseSolver::new(CoarsePolicy::Direct, two_by_two()).unwrap();
        let z = coarse_solve(&s, &[2.0, 7.0], 1.0, 1e-6).unwrap();
        // 4 z0 + 2 z1 = 2, 2 z0 + 5 z1 = 7  =>  z = (-1/4, 3/2)
        assert!((z[0] + 0.25).abs() < 1e-12 && (z[1] - 1.5).abs() < 1e-12);
        assert_eq!(coarse_solve(&s, &[0.0, 0.0], 1.0, 1e-6).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn inner_cg_meets_declared_tolerance() {
        let a = crate::problems::laplace_1d(50).unwrap();
        let op = CoarseOperator::Sparse(a.clone());
        let rhs: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        for policy in [
            CoarsePolicy::InnerCgFixed { tol: 1e-8 },
            CoarsePolicy::InnerCgAdaptive { c: 1.0 },
        ] {
            let s = CoarseSolver::new(policy, op.clone()).unwrap();
            let ctx = InnerContext::Outer {
                residual: 1e-3,
                epsilon: 1e-6,
            };
            let sol = s.solve(&rhs, ctx).unwrap();
            let res = crate::linalg::sub(&rhs, &a.spmv(&sol.z).unwrap());
            assert!(norm2(&res) <= sol.tolerance * norm2(&rhs));
            assert!(sol.iterations > 0);
        }
        let s = CoarseSolver::new(CoarsePolicy::InnerCgFixed { tol: 0.5 }, op).unwrap();
        assert_eq!(s.solve(&vec![0.0; 50], InnerContext::Strict).unwrap().z, vec![0.0; 50]);
    }

    #[test]
    fn adaptive_tolerance_extremes() {
        let eps = 1e-6;
        // Large outer residual: the inner solve is held to ε·c.
        assert_eq!(adaptive_tolerance(1.0, eps, 1e3), eps);
        assert_eq!(adaptive_tolerance(0.5, eps, 1e3), 0.5 * eps);
        // Relaxes as ‖r_i‖ approaches ε.
        assert!((adaptive_tolerance(1.0, eps, 1e-3) - 1e-3).abs() < 1e-18);
        assert_eq!(adaptive_tolerance(0.5, eps, eps), 0.5);
        assert_eq!(adaptive_tolerance(1.0, eps, 1e-9), 1.0);
    }

    #[test]
    fn direct_rejects_indefinite() {
        let m = CsrMatrix::from_diagonal(&[1.0, -1.0]);
        let op = CoarseOperator::Sparse(SparseMatrix::new(m).unwrap());
        assert!(matches!(
            CoarseSolver::new(CoarsePolicy::Direct, op),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
