//! Backstepping boundary observer for the one-dimensional quasilinear heat
//! equation `c(T) T_t = (κ(T) T_x)_x` with Neumann walls and the boundary
//! output `T(1, t)`.
//!
//! The observer reuses the gains of the linear design with constant
//! diffusivity `a` and decay gain `σ`. The crate is split along the
//! pipeline:
//!
//! - [`kernel`]: closed-form backstepping kernel, inverse kernel, observer
//!   gains, kernel norms and the Volterra state transformations.
//! - [`nonlinearity`] and [`material`]: the diffusivity `α` (directly, or
//!   derived from `c`, `κ` through the enthalpy transformation).
//! - [`certificate`]: the Lyapunov constants, feasibility conditions, the
//!   region-of-attraction radius `ω*` and the certified rate `σ*`.
//! - [`sim`]: plant/observer co-simulation, error norms, decay-rate fits,
//!   the target-system residual oracle and trajectory audits.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod error;
pub mod kernel;
pub mod material;
pub mod nonlinearity;
pub mod numeric;
pub mod series;
pub mod sim;

pub use error::{Error, Result};
