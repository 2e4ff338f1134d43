//! Sparse monomial operators: at most one non-zero entry per column.
//!
//! Jordan-Wigner fermion operators and all their products are monomial in
//! the occupation basis, which lets the Lindblad generator act on density
//! matrices in `O(dim^2)` per jump instead of dense `O(dim^3)` products.

use num_complex::Complex;
use num_traits::Zero;

use crate::linalg::CMatrix;
use crate::operator::OperatorMatrix;
use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct MonomialOp<T> {
    /// `columns[b] = Some((row, coeff))` means `op |b> = coeff |row>`.
    columns: Vec<Option<(usize, T)>>,
}

impl<T: Real> MonomialOp<T> {
    pub fn from_columns(columns: Vec<Option<(usize, T)>>) -> Self {
        Self { columns }
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn apply(&self, b: usize) -> Option<(usize, T)> {
        self.columns[b]
    }

    /// Basis states not annihilated by the operator, with their images.
    pub fn domain(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.columns
            .iter()
            .enumerate()
            .filter_map(|(b, e)| e.map(|(r, c)| (b, r, c)))
    }

    /// `self * rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Self) -> Self {
        let columns = rhs
            .columns
            .iter()
            .map(|e| {
                e.and_then(|(mid, c1)| self.columns[mid].map(|(row, c2)| (row, c1 * c2)))
            })
            .collect();
        Self { columns }
    }

    pub fn adjoint(&self) -> Self {
        let mut columns = vec![None; self.dim()];
        for (b, row, c) in self.domain() {
            debug_assert!(columns[row].is_none(), "monomial operator must be injective");
            columns[row] = Some((b, c));
        }
        Self { columns }
    }

    /// Diagonal of `op^dagger op`: the squared column norms.
    pub fn column_weights(&self) -> Vec<T> {
        self.columns
            .iter()
            .map(|e| e.map_or(T::zero(), |(_, c)| c * c))
            .collect()
    }

    pub fn to_operator(&self) -> OperatorMatrix<T> {
        let mut m = CMatrix::zeros(self.dim());
        for (b, row, c) in self.domain() {
            m[(row, b)] = Complex::new(c, T::zero());
        }
        OperatorMatrix::new(m)
    }

    /// Dense-equivalent test against an operator matrix.
    pub fn matches(&self, op: &OperatorMatrix<T>) -> bool {
        let n = self.dim();
        if op.dim() != n {
            return false;
        }
        for b in 0..n {
            for r in 0..n {
                let want = match self.columns[b] {
                    Some((row, c)) if row == r => Complex::new(c, T::zero()),
                    _ => Complex::zero(),
                };
                if op.get(r, b) != want {
                    return false;
                }
            }
        }
        true
    }
}
