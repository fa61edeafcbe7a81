//! Hybrid reverse-mode differentiation.
//!
//! Classical layers record onto a [`Tape`]; circuit evaluations are tape nodes
//! whose backward pass uses the parameter-shift rule for both weight and
//! feature slots.

pub mod kernels;
mod params;
mod shift;
mod tape;

pub use params::{sgd_step, Init, Param, ParamId, ParamStore};
pub use shift::{circuit_jacobian, param_shift_partial, CircuitJacobian};
pub use tape::{Tape, Var};
