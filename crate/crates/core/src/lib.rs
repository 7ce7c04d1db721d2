//! Finite-dimensional laboratory for isometric and unitary asymptotes.
//!
//! Builds truncations of weighted bilateral shifts, operators diagonal in a
//! biorthogonal eigenbasis, model-space multiplier operators and block
//! contractions, then probes them with exact algebraic identities and with
//! trend measurements across ladders of truncation sizes.
//!
//! Modules:
//! - [`linalg`]: index windows, coefficient vectors, dense complex operators
//! - [`asymptote`]: Cesaro Gram limits, power bounds, Riesz bounds, verdicts
//! - [`eigenbasis`]: biorthogonal systems, skew projections, diagonal operators
//! - [`model_space`]: Clark measures, rational inner functions, model spaces
//! - [`weighted_shift`]: weights, weighted shifts, eigenvectors, Gram components

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptote;
pub mod eigenbasis;
pub mod error;
pub mod linalg;
pub mod model_space;
pub mod par;
pub mod poly;
pub mod tol;
pub mod weighted_shift;

pub use error::{Error, Result};
pub use linalg::{CMatrix, FourierVector, IndexWindow, MatrixOperator, C64};
