//! Dense system operators with cached structural flags.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;

use crate::linalg::CMatrix;
use crate::real::Real;

/// A square complex operator on the chain Hilbert space.
///
/// `is_hermitian` and `is_diagonal` are computed once at construction with
/// the scalar's exact tolerance (`1e-12` for `f64`).
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix<T> {
    mat: CMatrix<T>,
    hermitian: bool,
    diagonal: bool,
}

impl<T: Real> OperatorMatrix<T> {
    pub fn new(mat: CMatrix<T>) -> Self {
        let tol = T::exact_tol();
        let diagonal = mat.is_diagonal(tol);
        let hermitian = if diagonal {
            mat.diagonal().iter().all(|z| z.im.abs() <= tol)
        } else {
            mat.is_hermitian(tol)
        };
        Self {
            mat,
            hermitian,
            diagonal,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros(dim),
            hermitian: true,
            diagonal: true,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim),
            hermitian: true,
            diagonal: true,
        }
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        Self {
            mat: CMatrix::from_real_diagonal(diag),
            hermitian: true,
            diagonal: true,
        }
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

    #[inline]
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    #[inline]
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.mat[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
            hermitian: self.hermitian,
            diagonal: self.diagonal,
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self::new(self.mat.scale(s))
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self {
            mat: self.mat.scale_real(s),
            hermitian: self.hermitian,
            diagonal: self.diagonal,
        }
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        Self::new(self.mat.commutator(&rhs.mat))
    }

    pub fn anticommutator(&self, rhs: &Self) -> Self {
        Self::new(self.mat.anticommutator(&rhs.mat))
    }

    pub fn trace(&self) -> Complex<T> {
        self.mat.trace()
    }

    /// Real parts of the diagonal.
    pub fn real_diagonal(&self) -> Vec<T> {
        self.mat.diagonal().into_iter().map(|z| z.re).collect()
    }

    /// Applies `f` to the diagonal of a diagonal operator (functional calculus).
    pub fn map_diagonal(&self, f: impl Fn(T) -> T) -> Self {
        debug_assert!(self.diagonal, "map_diagonal on a non-diagonal operator");
        let d: Vec<T> = self.real_diagonal().into_iter().map(f).collect();
        Self::from_real_diagonal(&d)
    }

    pub fn frobenius_norm(&self) -> T {
        self.mat.frobenius_norm()
    }

    pub fn max_abs(&self) -> T {
        self.mat.max_abs()
    }

    pub fn frobenius_distance(&self, other: &Self) -> T {
        self.mat.sub(&other.mat).frobenius_norm()
    }

    /// `P O P^dagger` for the basis permutation `b -> perm(b)`.
    pub fn permuted(&self, perm: impl Fn(usize) -> usize) -> Self {
        let n = self.dim();
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(perm(i), perm(j))] = self.mat[(i, j)];
            }
        }
        Self {
            mat: out,
            hermitian: self.hermitian,
            diagonal: self.diagonal,
        }
    }
}

impl<'a, T: Real> Mul<&'a OperatorMatrix<T>> for &'a OperatorMatrix<T> {
    type Output = OperatorMatrix<T>;

    fn mul(self, rhs: &'a OperatorMatrix<T>) -> OperatorMatrix<T> {
        let mat = self.mat.matmul(&rhs.mat);
        if self.diagonal && rhs.diagonal {
            OperatorMatrix {
                mat,
                hermitian: self.hermitian && rhs.hermitian,
                diagonal: true,
            }
        } else {
            OperatorMatrix::new(mat)
        }
    }
}

impl<'a, T: Real> Add<&'a OperatorMatrix<T>> for &'a OperatorMatrix<T> {
    type Output = OperatorMatrix<T>;

    fn add(self, rhs: &'a OperatorMatrix<T>) -> OperatorMatrix<T> {
        OperatorMatrix::new(self.mat.add(&rhs.mat))
    }
}

impl<'a, T: Real> Sub<&'a OperatorMatrix<T>> for &'a OperatorMatrix<T> {
    type Output = OperatorMatrix<T>;

    fn sub(self, rhs: &'a OperatorMatrix<T>) -> OperatorMatrix<T> {
        OperatorMatrix::new(self.mat.sub(&rhs.mat))
    }
}

impl<T: Real> Neg for &OperatorMatrix<T> {
    type Output = OperatorMatrix<T>;

    fn neg(self) -> OperatorMatrix<T> {
        self.scale_real(-T::one())
    }
}
