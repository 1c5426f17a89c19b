//! Numerical laboratory for Berezin-Toeplitz quantization on truncated
//! Segal-Bargmann spaces: Toeplitz matrices for scalar and matrix-valued
//! symbols, heat/Berezin transforms, Berger-Coburn estimates and
//! self-adjointness diagnostics at truncation scale, and classical-vs-
//! quantum dynamics experiments.
//!
//! Everything is generic over the real scalar (`f32`/`f64`); the
//! `*64` aliases below are the concrete types the CLI uses.

pub mod criteria;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod heat;
pub mod linalg;
pub mod phase;
pub mod quad;
pub mod scalar;
pub mod symbol;
pub mod toeplitz;

pub use error::{Error, Result};
pub use scalar::Real;

/// Concrete aliases for the default double-precision lane.
pub type C64 = num_complex::Complex<f64>;
pub type Ctx64 = phase::QuantizationContext<f64>;
pub type Point64 = phase::PhasePoint<f64>;
pub type Trunc64 = fock::TruncationSpec<f64>;
pub type Matrix64 = linalg::CMatrix<f64>;
