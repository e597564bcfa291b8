use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{axpy, dot_unchecked, norm2, LinearOperator};

/// How the residual target is derived from `tol`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// `‖r_i‖ ≤ tol ‖b‖`
    Relative,
    /// `‖r_i‖ ≤ tol`
    Absolute,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgConfig {
    pub tol: f64,
    pub stop_rule: StopRule,
    pub max_iter: usize,
    pub record_history: bool,
}

impl CgConfig {
    /// Relative stopping rule with history recording; requires
    /// `0 < tol < 1` and `max_iter ≥ 1`.
    pub fn new(tol: f64, max_iter: usize) -> Result<Self> {
        Self::with_rule(tol, StopRule::Relative, max_iter)
    }

    /// Absolute stopping rule; requires `tol > 0` and `max_iter ≥ 1`.
    pub fn absolute(tol: f64, max_iter: usize) -> Result<Self> {
        Self::with_rule(tol, StopRule::Absolute, max_iter)
    }

    pub fn with_rule(tol: f64, stop_rule: StopRule, max_iter: usize) -> Result<Self> {
        let valid = match stop_rule {
            StopRule::Relative => tol > 0.0 && tol < 1.0,
            StopRule::Absolute => tol > 0.0 && tol.is_finite(),
        };
        if !valid {
            return Err(Error::InvalidArgument(format!(
                "tolerance {tol:e} is out of range for {stop_rule:?}"
            )));
        }
        if max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(Self {
            tol,
            stop_rule,
            max_iter,
            record_history: true,
        })
    }

    pub fn with_history(mut self, record_history: bool) -> Self {
        self.record_history = record_history;
        self
    }

    /// The absolute residual target for a right-hand side of norm `b_norm`.
    pub fn threshold(&self, b_norm: f64) -> f64 {
        match self.stop_rule {
            StopRule::Relative => self.tol * b_norm,
            StopRule::Absolute => self.tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// Outer iterations.
    pub iterations: usize,
    /// `‖r_i‖₂` for `i = 0..=iterations`; empty unless recorded.
    pub residual_history: Vec<f64>,
    pub inner_iterations_total: usize,
    pub converged: bool,
    /// Last residual norm of the recurrence.
    pub final_residual: f64,
    /// `‖b - A x‖₂` recomputed from the returned `x`.
    pub true_residual: f64,
    /// Absolute residual target the run stopped against.
    pub threshold: f64,
    /// Set when the run checked the energy-norm error bound.
    pub error_bound_satisfied: Option<bool>,
}

/// Maps a vector to a vector, given the current residual norm, and reports
/// the inner iterations it spent.
pub(crate) type Step<'f> = &'f mut dyn FnMut(&[f64], f64) -> Result<(Vec<f64>, usize)>;
pub(crate) type Monitor<'f> = &'f mut dyn FnMut(usize, &[f64], f64) -> Result<()>;

/// The conjugate gradient recurrence from a given iterate and residual.
///
/// `direction` maps a residual to the vector added to the search
/// direction (identity for plain CG), while `beta` always uses residual
/// norms. On exit `true_residual` is left equal to `final_residual`.
pub(crate) fn recurrence(
    mut x: Vec<f64>,
    mut r: Vec<f64>,
    threshold: f64,
    cfg: &CgConfig,
    apply: Step<'_>,
    mut direction: Option<Step<'_>>,
    mut monitor: Option<Monitor<'_>>,
) -> Result<SolveReport> {
    let mut inner = 0;
    let mut history = Vec::new();
    let mut rr = dot_unchecked(&r, &r);
    let mut rnorm = rr.sqrt();
    if cfg.record_history {
        history.push(rnorm);
    }
    if let Some(m) = monitor.as_mut() {
        m(0, &x, rnorm)?;
    }
    let mut converged = rnorm <= threshold;
    let mut iterations = 0;
    if !converged {
        let mut p = match direction.as_mut() {
            Some(d) => {
                let (w, k) = d(&r, rnorm)?;
                inner += k;
                w
            }
            None => r.clone(),
        };
        for it in 1..=cfg.max_iter {
            let (ap, k) = apply(&p, rnorm)?;
            inner += k;
            let pap = dot_unchecked(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::IndefiniteOperator {
                    iteration: it,
                    curvature: pap,
                });
            }
            let alpha = rr / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            let rr_new = dot_unchecked(&r, &r);
            rnorm = rr_new.sqrt();
            iterations = it;
            if !rnorm.is_finite() {
                return Err(Error::NonFinite("conjugate gradient residual"));
            }
            if cfg.record_history {
                history.push(rnorm);
            }
            if let Some(m) = monitor.as_mut() {
                m(it, &x, rnorm)?;
            }
            if rnorm <= threshold {
                converged = true;
                break;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            let w = match direction.as_mut() {
                Some(d) => {
                    let (w, k) = d(&r, rnorm)?;
                    inner += k;
                    w
                }
                None => r.clone(),
            };
            p.iter_mut().zip(&w).for_each(|(pi, wi)| *pi = wi + beta * *pi);
        }
    }
    Ok(SolveReport {
        x,
        iterations,
        residual_history: history,
        inner_iterations_total: inner,
        converged,
        final_residual: rnorm,
        true_residual: rnorm,
        threshold,
        error_bound_satisfied: None,
    })
}

fn initial_residual<Op: LinearOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    x0: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = op.dim();
    check_len("cg right-hand side", n, b.len())?;
    match x0 {
        Some(x0) => {
            check_len("cg initial guess", n, x0.len())?;
            let mut ax = vec![0.0; n];
            op.apply(x0, &mut ax)?;
            Ok((x0.to_vec(), crate::linalg::sub(b, &ax)))
        }
        None => Ok((vec![0.0; n], b.to_vec())),
    }
}

/// Conjugate gradients on an SPD operator; `x0 = None` starts from zero.
pub fn cg<Op: LinearOperator + ?Sized>(op: &Op, b: &[f64], x0: Option<&[f64]>, cfg: &CgConfig) -> Result<SolveReport> {
    cg_with_monitor(op, b, x0, cfg, |_, _, _| {})
}

/// As [`cg`], calling `monitor(i, x_i, ‖r_i‖)` after every iteration and
/// once for the initial guess.
pub fn cg_with_monitor<Op: LinearOperator + ?Sized>(
    op: &Op,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &CgConfig,
    mut monitor: impl FnMut(usize, &[f64], f64),
) -> Result<SolveReport> {
    let (x, r) = initial_residual(op, b, x0)?;
    let threshold = cfg.threshold(norm2(b));
    let n = op.dim();
    let mut apply = |p: &[f64], _: f64| {
        let mut y = vec![0.0; n];
        op.apply(p, &mut y)?;
        Ok((y, 0))
    };
    let mut mon = |i: usize, x: &[f64], r: f64| {
        monitor(i, x, r);
        Ok(())
    };
    let mut report = recurrence(x, r, threshold, cfg, &mut apply, None, Some(&mut mon))?;
    let mut ax = vec![0.0; n];
    op.apply(&report.x, &mut ax)?;
    report.true_residual = norm2(&crate::linalg::sub(b, &ax));
    Ok(report)
}
