//! Recurrent ternary logic gate networks for causal STL monitoring.
//!
//! The crate covers the whole pipeline: the ternary gate algebra and its two
//! orderings, bounded STL semantics (oracle, causal interval, ternary), the
//! polynomial surrogate neuron, a trainable recurrent cell, hardening by
//! trajectory distillation, the hard ternary circuit runtime, degradation
//! metrics, and a synthetic navigation data generator.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); exact rational
//! arithmetic is used where bit-stability matters (the Vandermonde inverse).
//! The aliases below fix the scalar to `f64`, which is what the CLI uses.

pub mod circuit;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod harden;
pub mod matrix;
pub mod optim;
pub mod pst;
pub mod rdtlgn;
pub mod scalar;
pub mod stl;
pub mod ternary;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use scalar::Scalar;
pub use ternary::{GateId, GateTable, Trit};

/// Polynomial neuron coefficients in double precision.
pub type Coeffs = pst::PolyCoeffs<f64>;
/// Trainable recurrent cell in double precision.
pub type Cell = rdtlgn::SoftCell<f64>;
/// Predicate signals, one row per predicate, one column per timestep.
pub type Signals = Matrix<f64>;
/// Ternary predicate signals.
pub type TritSignals = Matrix<Trit>;
/// Elman baseline in double precision.
pub type Elman = eval::elman::ElmanBaseline<f64>;
/// Exact rational used for the Vandermonde inverse.
pub type Exact = num_rational::Rational64;
