use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

use super::TOLERANCES;

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for j in 0..n {
        for (i, v) in a.col(j).iter().enumerate() {
            if i != j {
                s += v * v;
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi. Returns unsorted eigenvalues and, on request, the
/// accumulated rotations (eigenvectors by column).
///
/// Each rotation updates columns `p, q` in place and mirrors them into rows
/// `p, q`; the `2 x 2` pivot block is set from the closed form.
pub(crate) fn jacobi(m: &DenseMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<DenseMatrix>)> {
    let n = m.rows();
    let mut a = m.symmetrized();
    let mut v = want_vectors.then(|| DenseMatrix::identity(n));
    let target = TOLERANCES.eig_offdiag * a.frobenius_norm();
    let mut converged = false;
    for sweep in 0..TOLERANCES.eig_max_sweeps {
        if off_diagonal_norm(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                let tiny = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + tiny == app.abs() && aqq.abs() + tiny == aqq.abs() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let (cp, cq) = a.col_pair_mut(p, q);
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (g, h) = (*x, *y);
                    *x = c * g - s * h;
                    *y = s * g + c * h;
                }
                for k in 0..n {
                    if k != p && k != q {
                        a[(p, k)] = a[(k, p)];
                        a[(q, k)] = a[(k, q)];
                    }
                }
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;

                if let Some(v) = v.as_mut() {
                    let (vp, vq) = v.col_pair_mut(p, q);
                    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                        let (g, h) = (*x, *y);
                        *x = c * g - s * h;
                        *y = s * g + c * h;
                    }
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > target {
        return Err(Error::Precondition(format!(
            "Jacobi did not converge within {} sweeps",
            TOLERANCES.eig_max_sweeps
        )));
    }
    Ok(((0..n).map(|i| a[(i, i)]).collect(), v))
}
