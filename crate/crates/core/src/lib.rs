//! Pseudospectral laboratory for the generalized derivative nonlinear
//! Schrödinger equation
//!
//! ```text
//! u_t = i u_xx + mu |u|^a u_x,    |mu| = 1,  0 < a <= 1,
//! ```
//!
//! on a truncated periodic box. The crate provides the spectral calculus,
//! exact solitary waves and decaying data, time steppers, the
//! frozen-coefficient propagator with its Duhamel integral, Picard iteration
//! for the associated fixed-point map, and numerical probes of the weighted
//! norms and smoothing estimates attached to the problem.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod picard;
pub mod profiles;
pub mod spectral;

pub use error::{Error, Result};
pub use evolution::{EquationSpec, Form, FrozenCoefficient, Stepper, Trajectory, MU_STAR};
pub use profiles::{ClassExponents, ClassParams, WaveParams};
pub use spectral::{make_grid, Field, Grid};

pub use num_complex::Complex64;
