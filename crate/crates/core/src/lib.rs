//! Stratified complex Lie groups, their holomorphic polynomial calculus, and
//! Monte Carlo sampling of the hypoelliptic heat kernel.
//!
//! The crate is organized bottom-up:
//!
//! * [`lie`]: structure constants, BCH group law, dilations, homogeneous norm, H-type test.
//! * [`holo`]: sparse weighted-homogeneous holomorphic polynomials, the Euler
//!   operator `Z`, `B = (2/a) Z` and its semigroup, left-invariant derivatives.
//! * [`mc`]: heat-kernel sampling and Monte Carlo estimators.
//! * [`kernel`]: quadrature evaluation of the heat kernel on Heisenberg–Weyl groups.
//! * [`verify`]: declarative experiments producing machine-readable reports.

// `!(x > 0.0)` style range checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod holo;
pub mod kernel;
pub mod lie;
pub mod mc;
pub mod verify;

pub use error::{Error, Result};
pub use lie::{GroupElement, HorizontalFrame, RealInnerProduct, StratifiedAlgebra};
pub use num_complex::Complex64;
