//! Explicit solutions of Lagrangian mean curvature flow in C^2 and numerical
//! probes of the identities, barriers and blow-down limits around them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ambient;
pub mod curves;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod solitons;
pub mod surface;

pub use ambient::{AmbientVector, TwoFrame};
pub use error::{Error, Result};
