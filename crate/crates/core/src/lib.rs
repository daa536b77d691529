//! Conformally invariant functionals of tori immersed in R^3.
//!
//! The pipeline goes from a torus (given as a profile of revolution or as a
//! sampled immersion) to a spinor pair solving a Dirac equation with a real
//! potential `U`, and from `U` to a hierarchy of integral invariants `h_k`,
//! zero-energy Bloch spectral data and an MKdV-type flow on `U`.

pub mod bloch;
pub mod cli;
pub mod conformal;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod invariants;
pub mod mkdv;
pub mod trig;
pub mod weierstrass;

pub use error::{Error, Result};
pub use grid::{ScalarField, TorusGrid};
