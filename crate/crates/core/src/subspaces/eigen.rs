use crate::dense_eig::{qr, spectral_norm, EigenDecomposition};
use crate::error::{check_len, Error, Result};
use crate::linalg::DenseMatrix;
use crate::projection::{DeflationBasis, Provenance};

/// A perturbation `E₁ = magnitude · direction` with `‖direction‖_F = 1`.
#[derive(Clone, Debug)]
pub struct PerturbationSpec {
    direction: DenseMatrix,
    magnitude: f64,
}

impl PerturbationSpec {
    /// Normalizes `direction` to unit Frobenius norm.
    pub fn new(direction: &DenseMatrix, magnitude: f64) -> Result<Self> {
        let norm = direction.frobenius_norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidArgument(
                "perturbation direction must be nonzero and finite".into(),
            ));
        }
        if !(magnitude >= 0.0 && magnitude.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "perturbation magnitude {magnitude} is negative"
            )));
        }
        Ok(Self {
            direction: direction.scaled(1.0 / norm),
            magnitude,
        })
    }

    pub fn direction(&self) -> &DenseMatrix {
        &self.direction
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn e1(&self) -> DenseMatrix {
        self.direction.scaled(self.magnitude)
    }
}

/// `‖E‖₂`, exact for a single column.
fn two_norm(e: &DenseMatrix) -> f64 {
    if e.cols() == 1 {
        e.frobenius_norm()
    } else {
        spectral_norm(e)
    }
}

fn check_k(eig: &EigenDecomposition, k: usize) -> Result<usize> {
    let n = eig.values.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("k = {k} must satisfy 1 <= k < n = {n}")));
    }
    Ok(n)
}

/// `Q₁`: the eigenvectors of the `n - k` smallest eigenvalues, in the
/// descending order of `eig`.
pub fn deflation_eigenvectors(eig: &EigenDecomposition, k: usize) -> Result<DenseMatrix> {
    let n = check_k(eig, k)?;
    Ok(eig.vectors.columns(k..n))
}

pub fn eigen_basis(eig: &EigenDecomposition, k: usize) -> Result<DeflationBasis> {
    DeflationBasis::dense(deflation_eigenvectors(eig, k)?, Provenance::ExactEigen)
}

/// `range(Q₁ + E₁)`; requires `‖E₁‖₂ < 1`.
pub fn perturbed_eigen_basis(eig: &EigenDecomposition, k: usize, spec: &PerturbationSpec) -> Result<DeflationBasis> {
    let q1 = deflation_eigenvectors(eig, k)?;
    check_len("perturbation rows", q1.rows(), spec.direction.rows())?;
    check_len("perturbation columns", q1.cols(), spec.direction.cols())?;
    let e1 = spec.e1();
    let e1_norm = two_norm(&e1);
    if !(e1_norm < 1.0) {
        return Err(Error::Precondition(format!("‖E₁‖₂ = {e1_norm} must be below 1")));
    }
    DeflationBasis::dense(q1.add(&e1)?, Provenance::PerturbedEigen)
}

/// The orthonormal pair for a perturbed basis: `Q̃ R = Q + [E₁ | 0]` with
/// `R` having a positive diagonal, so `Q̃ = [Q₁ + W₁ | Q₂ + W₂]` spans
/// `S̃` and `S̃⊥`.
#[derive(Clone, Debug)]
pub struct OrthonormalCompletion {
    pub q_tilde: DenseMatrix,
    /// Number of leading columns spanning the perturbed subspace.
    pub m1: usize,
    pub w1_norm: f64,
    pub w2_norm: f64,
    /// `max{‖W₁‖₂, ‖W₂‖₂}`
    pub delta: f64,
    pub e1_spectral: f64,
    pub e1_frobenius: f64,
    /// `(1 + √2)/(1 - ‖E₁‖₂) · ‖E₁‖_F`, defined while `‖E₁‖₂ < 1`.
    pub delta_bound: Option<f64>,
}

/// `q = [Q₁ | Q₂]` orthogonal with `Q₁` the first `e1.cols()` columns.
/// Requires `‖E₁‖₂ < 1`.
pub fn orthonormal_completion(q: &DenseMatrix, e1: &DenseMatrix) -> Result<OrthonormalCompletion> {
    let c = completion(q, e1)?;
    if c.delta_bound.is_none() {
        return Err(Error::Precondition(format!(
            "‖E₁‖₂ = {} must be below 1",
            c.e1_spectral
        )));
    }
    Ok(c)
}

/// As [`orthonormal_completion`] but also defined for `‖E₁‖₂ ≥ 1` (as long
/// as `Q + [E₁ | 0]` is nonsingular), with no bound reported there.
pub(crate) fn completion(q: &DenseMatrix, e1: &DenseMatrix) -> Result<OrthonormalCompletion> {
    let n = q.rows();
    check_len("orthonormal_completion square", n, q.cols())?;
    check_len("orthonormal_completion rows", n, e1.rows())?;
    let m1 = e1.cols();
    if m1 == 0 || m1 >= n {
        return Err(Error::InvalidArgument(format!("E₁ must have 1..{n} columns, got {m1}")));
    }
    let padded = e1.hcat(&DenseMatrix::zeros(n, n - m1))?;
    let q_tilde = qr(&q.add(&padded)?)?.q;
    let w = q_tilde.sub(q)?;
    let w1_norm = spectral_norm(&w.columns(0..m1));
    let w2_norm = spectral_norm(&w.columns(m1..n));
    let e1_spectral = two_norm(e1);
    let e1_frobenius = e1.frobenius_norm();
    let delta_bound = (e1_spectral < 1.0).then(|| (1.0 + 2f64.sqrt()) / (1.0 - e1_spectral) * e1_frobenius);
    Ok(OrthonormalCompletion {
        q_tilde,
        m1,
        w1_norm,
        w2_norm,
        delta: w1_norm.max(w2_norm),
        e1_spectral,
        e1_frobenius,
        delta_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense_eig::sym_eig;
    use crate::rng::Stream;
    use proptest::prelude::*;

    #[test]
    fn eigen_basis_picks_smallest() {
        let eig = sym_eig(&DenseMatrix::from_diagonal(&[3.0, 2.0, 1.0])).unwrap();
        let b = eigen_basis(&eig, 2).unwrap();
        assert_eq!(b.to_dense().col(0), &[0.0, 0.0, 1.0]);
        assert!(eigen_basis(&eig, 0).is_err());
        assert!(eigen_basis(&eig, 3).is_err());
    }

    #[test]
    fn zero_magnitude_is_exact() {
        let eig = sym_eig(&DenseMatrix::from_diagonal(&[3.0, 2.0, 1.0])).unwrap();
        let dir = DenseMatrix::from_column_major(3, 1, vec![1.0, 0.0, 0.0]).unwrap();
        let spec = PerturbationSpec::new(&dir, 0.0).unwrap();
        let b = perturbed_eigen_basis(&eig, 2, &spec).unwrap();
        assert_eq!(b.to_dense(), eigen_basis(&eig, 2).unwrap().to_dense());
        let too_big = PerturbationSpec::new(&dir, 1.0).unwrap();
        assert!(matches!(
            perturbed_eigen_basis(&eig, 2, &too_big),
            Err(Error::Precondition(_))
        ));
        assert!(PerturbationSpec::new(&DenseMatrix::zeros(3, 1), 0.1).is_err());
        assert!(PerturbationSpec::new(&dir, -0.1).is_err());
    }

    #[test]
    fn unperturbed_completion_is_identity() {
        let q = crate::problems::random_orthogonal(8, 4).unwrap();
        let c = orthonormal_completion(&q, &DenseMatrix::zeros(8, 3)).unwrap();
        assert!(c.delta < 1e-14);
        assert_eq!(c.delta_bound, Some(0.0));
    }

    #[test]
    fn two_dimensional_rotation() {
        // E₁ turns e₁ into (cos θ, sin θ); the completion is the rotation.
        for theta in [0.01f64, 0.3, 1.0, -0.7] {
            let e1 = DenseMatrix::from_column_major(2, 1, vec![theta.cos() - 1.0, theta.sin()]).unwrap();
            let c = completion(&DenseMatrix::identity(2), &e1).unwrap();
            let expected = 2.0 * (theta / 2.0).sin().abs();
            assert!((c.delta - expected).abs() < 1e-14, "{theta}");
            assert!((c.w1_norm - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn subspace_angle_grows_with_magnitude() {
        let mut s = Stream::new(17);
        let n = 12;
        let a = DenseMatrix::from_column_major(n, n, s.normals(n * n))
            .unwrap()
            .symmetrized();
        let eig = sym_eig(&a).unwrap();
        let dir = DenseMatrix::from_column_major(n, 3, s.normals(3 * n)).unwrap();
        let q1 = deflation_eigenvectors(&eig, n - 3).unwrap();
        let mut last = -1.0;
        for mag in [1e-6, 1e-4, 1e-2, 0.1, 0.3, 0.6] {
            let spec = PerturbationSpec::new(&dir, mag).unwrap();
            let b = perturbed_eigen_basis(&eig, n - 3, &spec).unwrap();
            let u = qr(&b.to_dense()).unwrap().q;
            // Sine of the largest principal angle between range(Q₁) and S̃.
            let cosines = crate::dense_eig::svd_values(&q1.tr_matmul(&u).unwrap());
            let c_min = cosines.last().copied().unwrap().min(1.0);
            let sine = (1.0 - c_min * c_min).max(0.0).sqrt();
            assert!(sine > last);
            last = sine;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn delta_within_bound(n in 3usize..20, seed in 0u64..10_000, frac in 0.01f64..0.45) {
            let mut s = Stream::new(seed);
            let q = crate::problems::random_orthogonal(n, seed).unwrap();
            let m1 = 1 + s.below(n - 1);
            let dir = DenseMatrix::from_column_major(n, m1, s.normals(n * m1)).unwrap();
            let e1 = dir.scaled(frac / spectral_norm(&dir));
            let c = orthonormal_completion(&q, &e1).unwrap();
            prop_assert!(c.delta <= c.delta_bound.unwrap() + 1e-12);
            let orth = c.q_tilde.gram().sub(&DenseMatrix::identity(n)).unwrap().max_abs();
            prop_assert!(orth < 1e-13);
        }
    }
}
