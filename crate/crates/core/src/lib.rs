//! Numerical toolkit for cyclicity of the atomic singular inner function in
//! weighted Bergman-type spaces.
//!
//! The crate evaluates weights `Λ(t) = 1/(t w(t)²)`, boundary sets `E` given by
//! their complementary arcs, the implicit boundary `γ(θ)` of the domain
//! `Ω_{Λ,E}`, the Ahlfors–Carleman integrals, the auxiliary outer functions
//! built on Privalov shadows, and the arc-classification criterion together
//! with a numerical divergence verdict.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auxfun;
pub mod boundary;
pub mod criterion;
pub mod error;
pub mod geometry;
pub mod phragmen;
pub mod quad;
pub mod roots;
pub mod weights;

pub use error::{Error, Result};
