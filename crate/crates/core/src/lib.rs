//! Numerical laboratory for multi-bump solutions of the coupled cubic Schrödinger system
//!
//! ```text
//! -Δu + P(|x|) u = μ₁ u³ + β u v²
//! -Δv + Q(|x|) v = μ₂ v³ + β u² v        in R³
//! ```
//!
//! Bumps are placed on the top and bottom circles of a cylinder inscribed in the sphere of
//! radius `r`. The crate computes the scalar ground state, assembles the ansatz, evaluates the
//! energy by direct quadrature, fits the asymptotic expansion of that energy, and locates
//! critical points of the reduced energy in `(r, h)` or `(r, ρ, h)`.

pub mod energy;
pub mod error;
pub mod expansion;
pub mod ansatz;
pub mod coupling;
pub mod fitting;
pub mod geometry;
pub mod ground_state;
pub mod harness;
pub mod ode;
pub mod potential;
pub mod quadrature;
pub mod reduced;

pub use error::{Error, Result};
