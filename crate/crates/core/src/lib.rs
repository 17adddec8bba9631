//! Fast Krasnosel'skiĭ-Mann iteration for fixed points of averaged operators.
//!
//! The crate is split into
//!
//! - [`operators`]: vectors, averaged operators, projections, the rotation
//!   resolvent and the Douglas-Rachford / forward-backward / Davis-Yin
//!   splitting operators;
//! - [`schemes`]: Banach-Picard, KM, Halpern, APPM, Fast KM and Fast OGDA,
//!   plus the run loop producing a [`schemes::Trace`];
//! - [`diagnostics`]: the discrete energy, its ω constants, the λ window,
//!   the threshold index, summability sums and rate fits;
//! - [`experiments`]: the rotation and hyperplane-feasibility experiment
//!   drivers.

// Parameter checks are written as `!(x > 0.0)` on purpose so NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod operators;
pub mod output;
pub mod schemes;

pub use error::{Error, Result};
pub use operators::{AveragedOperator, Vector};
pub use schemes::{run, Method, SchemeConfig, Trace};

/// Version string recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
