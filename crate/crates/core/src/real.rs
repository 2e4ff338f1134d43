//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar the operator algebra is written against.
///
/// The tolerance constants scale the exact-identity thresholds with the
/// precision of the type, so `f32` runs use looser (but still meaningful)
/// gates than `f64` runs.
pub trait Real:
    Float + FloatConst + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Flag consistency, trace and hermiticity tolerance.
    const EXACT_TOL: f64;
    /// Lowest admissible eigenvalue of a density matrix.
    const PSD_TOL: f64;
    /// Max-norm below which an Ito coefficient is dropped.
    const PRUNE_TOL: f64;
    /// Residual threshold for an operator identity to count as exact.
    const IDENTITY_TOL: f64;

    /// Converts an `f64` literal. Every literal used in this crate is
    /// representable (possibly rounded) in both `f32` and `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    fn exact_tol() -> Self {
        Self::lit(Self::EXACT_TOL)
    }

    fn psd_tol() -> Self {
        Self::lit(Self::PSD_TOL)
    }

    fn prune_tol() -> Self {
        Self::lit(Self::PRUNE_TOL)
    }

    fn identity_tol() -> Self {
        Self::lit(Self::IDENTITY_TOL)
    }

    fn half() -> Self {
        Self::lit(0.5)
    }

    fn two() -> Self {
        Self::lit(2.0)
    }
}

impl Real for f64 {
    const EXACT_TOL: f64 = 1e-12;
    const PSD_TOL: f64 = 1e-10;
    const PRUNE_TOL: f64 = 1e-14;
    const IDENTITY_TOL: f64 = 1e-10;
}

impl Real for f32 {
    const EXACT_TOL: f64 = 1e-5;
    const PSD_TOL: f64 = 1e-5;
    const PRUNE_TOL: f64 = 1e-7;
    const IDENTITY_TOL: f64 = 1e-4;
}
