//! Dense square complex matrices and the few factorizations the crate needs.
//!
//! Dimensions stay at exact-diagonalization scale (at most a few thousand),
//! so everything here is plain row-major storage with straightforward loops.
//! Products skip zero entries of the left factor, which makes the many
//! diagonal and monomial operators of the chain algebra cheap to multiply.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, T::zero());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major data. Panics if the length is not a square.
    pub fn from_row_major(dim: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), dim * dim, "row-major data must be dim*dim");
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        assert_eq!(self.dim, rhs.dim, "elementwise dimension mismatch");
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
    }

    /// `self += s * rhs`
    pub fn axpy(&mut self, s: Complex<T>, rhs: &Self) {
        assert_eq!(self.dim, rhs.dim, "axpy dimension mismatch");
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a = *a + s * b;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn diagonal(&self) -> Vec<Complex<T>> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Largest modulus among off-diagonal entries.
    pub fn off_diagonal_max_abs(&self) -> T {
        let n = self.dim;
        let mut m = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m = m.max(self[(i, j)].norm());
                }
            }
        }
        m
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        let n = self.dim;
        for i in 0..n {
            for j in i..n {
                if (self[(i, j)] - self[(j, i)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_diagonal(&self, tol: T) -> bool {
        self.off_diagonal_max_abs() <= tol
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        self.matmul(rhs).sub(&rhs.matmul(self))
    }

    pub fn anticommutator(&self, rhs: &Self) -> Self {
        self.matmul(rhs).add(&rhs.matmul(self))
    }

    /// Real block embedding `[[A, -B], [B, A]]` of `A + iB`.
    fn real_embedding(&self) -> Vec<T> {
        let n = self.dim;
        let m = 2 * n;
        let mut out = vec![T::zero(); m * m];
        for i in 0..n {
            for j in 0..n {
                let z = self[(i, j)];
                out[i * m + j] = z.re;
                out[(i + n) * m + (j + n)] = z.re;
                out[i * m + (j + n)] = -z.im;
                out[(i + n) * m + j] = z.im;
            }
        }
        out
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    ///
    /// Computed from the real symmetric embedding, where every eigenvalue
    /// appears twice; every second one is kept.
    pub fn hermitian_eigenvalues(&self) -> Vec<T> {
        let (vals, _) = symmetric_eigen(&self.real_embedding(), 2 * self.dim);
        let mut vals = vals;
        vals.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        vals.into_iter().step_by(2).collect()
    }

    /// `exp(-i t H)` for Hermitian `H`, exact up to the eigensolver accuracy.
    pub fn hermitian_unitary(&self, t: T) -> Self {
        let n = self.dim;
        let m = 2 * n;
        let (vals, vecs) = symmetric_eigen(&self.real_embedding(), m);
        // cos(tM) and sin(tM) carry the block structure of cos(tH), sin(tH).
        let mut cos_m = vec![T::zero(); m * m];
        let mut sin_m = vec![T::zero(); m * m];
        for (k, &lambda) in vals.iter().enumerate() {
            let (s, c) = (lambda * t).sin_cos();
            for i in 0..m {
                let vik = vecs[i * m + k];
                if vik == T::zero() {
                    continue;
                }
                for j in 0..m {
                    let w = vik * vecs[j * m + k];
                    cos_m[i * m + j] = cos_m[i * m + j] + c * w;
                    sin_m[i * m + j] = sin_m[i * m + j] + s * w;
                }
            }
        }
        // U = cos(tH) - i sin(tH); Re f(H) is the upper-left block, Im f(H) the lower-left.
        Self::from_fn(n, |i, j| {
            let c_re = cos_m[i * m + j];
            let c_im = cos_m[(i + n) * m + j];
            let s_re = sin_m[i * m + j];
            let s_im = sin_m[(i + n) * m + j];
            Complex::new(c_re + s_im, c_im - s_re)
        })
    }

    /// Whether `self + shift * I` admits a Cholesky factorization, i.e. whether
    /// the Hermitian matrix has no eigenvalue below `-shift`.
    pub fn cholesky_succeeds(&self, shift: T) -> bool {
        let n = self.dim;
        let mut l = vec![Complex::<T>::zero(); n * n];
        for j in 0..n {
            let mut d = self[(j, j)].re + shift;
            for k in 0..j {
                d = d - l[j * n + k].norm_sqr();
            }
            if !(d > T::zero()) {
                return false;
            }
            let ljj = d.sqrt();
            l[j * n + j] = Complex::new(ljj, T::zero());
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / ljj;
            }
        }
        true
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

/// Cyclic Jacobi eigendecomposition of a real symmetric `n x n` matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors stored as columns
/// of a row-major `n x n` array. Eigenvalues are not sorted.
pub fn symmetric_eigen<T: Real>(a: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    assert_eq!(a.len(), n * n);
    let mut a = a.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let total: T = a.iter().map(|&x| x * x).sum::<T>();
    let target = T::epsilon() * T::epsilon() * total;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[p * n + q] * a[p * n + q];
            }
        }
        if off <= target || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (T::two() * apq);
                let t = if theta.abs() > T::lit(1e150) {
                    T::half() / theta
                } else {
                    let mag = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    if theta < T::zero() {
                        -mag
                    } else {
                        mag
                    }
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = T::zero();
                a[q * n + p] = T::zero();
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| a[i * n + i]).collect();
    (vals, v)
}
