//! Numerical Melnikov analysis for two-zone piecewise-smooth autonomous
//! systems with a switching manifold of the form z = g(x, y).
//!
//! Given a seed manifold of crossing periodic orbits of the unperturbed
//! field, the crate computes the first-order bifurcation function M(u),
//! certifies its simple zeros, and validates each predicted limit cycle by
//! refining the perturbed displacement map at small nonzero perturbation
//! strength.

pub mod error;
pub mod expr;
pub mod flow;
pub mod model;

pub use error::{Error, Result};
