//! Safe output regulation of coupled 2x2 hyperbolic PDE-ODE systems.
//!
//! The crate designs and simulates nonovershooting backstepping controllers
//! that keep a barrier `h(y - r, t)` nonnegative while tracking a reference
//! generated by a marginally stable exosystem.

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod barrier;
pub mod chain_transform;
pub mod error;
pub mod exo_model;
pub mod kernels;
pub mod linalg;
pub mod observer;
pub mod plant;
pub mod predictor;
pub mod regulator;
pub mod simkit;

pub use error::{Error, Result};
