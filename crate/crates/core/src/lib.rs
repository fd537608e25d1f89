//! Positivity-preserving truncated Euler–Maruyama integration for SDEs whose
//! solutions live in the open positive cone.
//!
//! The scheme takes an explicit Euler–Maruyama step from a strictly positive
//! state and then clamps every component into `[1/L(Δ), L(Δ)]`, where the
//! bound `L(Δ)` grows without limit as the step size shrinks. The clamp keeps
//! iterates strictly positive and tames superlinear coefficients; in the limit
//! `Δ → 0` it becomes the identity.
//!
//! The crate is `no_std` (with `alloc`). It provides:
//!
//! - [`ModelSpec`], the drift/diffusion abstraction every scheme consumes;
//! - [`truncation`], the bound functions and the componentwise clamp;
//! - [`noise`], keyed per-path Brownian increments with exact coarsening;
//! - [`scheme`], the PPTEM, EM and norm-truncated EM integrators;
//! - [`models`], the benchmark catalog;
//! - [`assumptions`], sampling/grid checkers for the coefficient hypotheses.
//!
//! Floating point functions come from `std` by default. Build with
//! `default-features = false, features = ["libm"]` for targets without `std`.
#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]
// Negated comparisons are used on purpose so that NaN takes the failing branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("pptem-core needs either the `std` or the `libm` feature for float math");

pub mod assumptions;
mod error;
pub(crate) mod math;
mod model;
pub mod models;
pub mod noise;
pub mod scheme;
mod state;
pub mod truncation;

pub use error::{Error, Result};
pub use model::{Coefficients, GrowthExponents, ModelSpec, NegativeArgument};
pub use noise::IncrementGrid;
pub use scheme::{Diverged, SchemeKind, Trajectory};
pub use state::{in_positive_cone, StateVector};
pub use truncation::{ClampInterval, TruncationPolicy};
