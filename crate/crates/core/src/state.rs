use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::operator::OperatorMatrix;
use crate::real::Real;

/// Hermitian, unit-trace, positive semidefinite state of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T> {
    mat: CMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates hermiticity and unit trace to the exact tolerance and
    /// positivity to the PSD tolerance (`1e-12` / `-1e-10` for `f64`).
    pub fn new(mat: CMatrix<T>) -> Result<Self> {
        let tol = T::exact_tol();
        if !mat.is_hermitian(tol) {
            return Err(Error::InvalidState("density matrix is not Hermitian".into()));
        }
        let tr = mat.trace();
        if (tr - Complex::new(T::one(), T::zero())).norm() > tol {
            return Err(Error::InvalidState(format!(
                "density matrix trace {} differs from 1",
                tr.re
            )));
        }
        if !mat.cholesky_succeeds(T::psd_tol()) {
            return Err(Error::InvalidState(
                "density matrix has an eigenvalue below the PSD tolerance".into(),
            ));
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix the caller has already established to be a state.
    pub(crate) fn new_unchecked(mat: CMatrix<T>) -> Self {
        Self { mat }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let w = T::one() / T::from_count(dim);
        Self {
            mat: CMatrix::from_real_diagonal(&vec![w; dim]),
        }
    }

    /// Diagonal state with the given probabilities.
    pub fn from_probabilities(p: &[T]) -> Result<Self> {
        Self::new(CMatrix::from_real_diagonal(p))
    }

    /// `|psi><psi|` for a normalized vector.
    pub fn from_pure(psi: &[Complex<T>]) -> Result<Self> {
        let norm: T = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - T::one()).abs() > T::exact_tol() {
            return Err(Error::InvalidState(format!("state vector norm^2 {norm} differs from 1")));
        }
        let mat = CMatrix::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj());
        Ok(Self { mat })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.mat
    }

    pub fn as_operator(&self) -> OperatorMatrix<T> {
        OperatorMatrix::new(self.mat.clone())
    }

    /// Real diagonal (occupation-basis populations).
    pub fn populations(&self) -> Vec<T> {
        self.mat.diagonal().into_iter().map(|z| z.re).collect()
    }

    pub fn off_diagonal_max_abs(&self) -> T {
        self.mat.off_diagonal_max_abs()
    }

    pub fn trace(&self) -> Complex<T> {
        self.mat.trace()
    }

    pub fn is_diagonal(&self, tol: T) -> bool {
        self.mat.is_diagonal(tol)
    }

    /// Smallest eigenvalue; dense eigensolve, intended for small chains.
    pub fn min_eigenvalue(&self) -> T {
        self.mat
            .hermitian_eigenvalues()
            .into_iter()
            .fold(T::infinity(), T::min)
    }

    pub fn purity(&self) -> T {
        let n = self.dim();
        let mut acc = Complex::zero();
        for i in 0..n {
            for j in 0..n {
                acc = acc + self.mat[(i, j)] * self.mat[(j, i)];
            }
        }
        acc.re
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_unit_trace() {
        let m = CMatrix::<f64>::from_real_diagonal(&[0.5, 0.4]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::InvalidState(_))));
    }

    #[test]
    fn rejects_negative_population() {
        let m = CMatrix::<f64>::from_real_diagonal(&[1.1, -0.1]);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::<f64>::from_real_diagonal(&[0.5, 0.5]);
        m[(0, 1)] = Complex::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn pure_state_has_unit_purity() {
        let s = 0.5f64.sqrt();
        let rho = DensityMatrix::from_pure(&[Complex::new(s, 0.0), Complex::new(0.0, s)]).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-14);
        assert!(rho.min_eigenvalue().abs() < 1e-14);
    }
}
