//! Quasilocal energy-momentum of axisymmetric spacelike 2-surfaces.
//!
//! The pipeline for one radius of a surface family is
//! [`spacetime`] metric → [`surface`] geometry (σ, H, J, normal connection)
//! → [`embedding`] into R³ (u, v, H₀) → [`quasilocal`] integrals. The
//! [`adm`] module computes ADM energy-momentum of the matching
//! asymptotically flat slice for cross-validation.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod adm;
pub mod dsl;
pub mod embedding;
pub mod error;
pub mod grid;
pub mod quasilocal;
pub mod spacetime;
pub mod surface;

pub use error::{Error, Result};
