//! Quantum asymmetric exclusion on a fermionic chain: operator algebra,
//! quantum Ito calculus, Lindblad evolution, exact lattice identities,
//! a collision-model discretization, classical ASEP references and analytic
//! oracles.
//!
//! Numerical modules are generic over a [`Real`] scalar; the aliases below
//! fix it to `f64`, which is what the experiments use.

pub mod chain;
pub mod classical;
pub mod collision;
pub mod error;
pub mod identities;
pub mod ito;
pub mod lindblad;
pub mod linalg;
pub mod monomial;
pub mod operator;
pub mod oracles;
pub mod real;
pub mod state;

pub use chain::{Chain, ColeHopfParams, OccupationConfig};
pub use error::{Error, Result};
pub use identities::IdentityReport;
pub use real::Real;

pub type Complex64 = num_complex::Complex<f64>;
pub type Matrix = linalg::CMatrix<f64>;
pub type Operator = operator::OperatorMatrix<f64>;
pub type Density = state::DensityMatrix<f64>;
pub type Expression = ito::ItoExpression<f64>;
pub type Generator = lindblad::GeneratorSpec<f64>;
pub type RateMatrix = classical::RateMatrix<f64>;
