//! Quasiautomorphic forms on Hecke triangle groups: q-expansions of the
//! canonical forms, Hecke vector-forms and their transformation laws, and
//! q-Frobenius solutions of Hecke automorphic differential equations.

pub mod cli;
pub mod formexpr;
pub mod forms;
pub mod frobenius;
pub mod hecke;
pub mod matrixkit;
pub mod scalar;
pub mod series;
pub mod vectorform;

pub use hecke::{context, HeckeContext};
pub use scalar::Scalar;
pub use series::{QSeries, TauPoly};

/// Exact coefficient field.
pub type Rational = num_rational::BigRational;
/// Rational exponents of q.
pub type Exponent = num_rational::Rational64;
pub type ExactSeries = QSeries<Rational>;
pub type FloatSeries = QSeries<num_complex::Complex64>;
pub type ExactTauPoly = TauPoly<Rational>;
