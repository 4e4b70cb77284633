//! Spectral time integration of the Kadomtsev-Petviashvili and Davey-Stewartson II
//! equations on a periodic rectangle.
//!
//! States live in Fourier space; each equation is written as `v_t = L v + N(v)`
//! with diagonal `L`, and a family of fourth-order exponential, implicit and
//! splitting schemes advances it. The harness module runs convergence studies
//! against exact solutions or high-resolution references.

pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod grid;
pub mod harness;
pub mod integrators;
pub mod models;
pub mod phi;

pub use error::{Error, Result};
pub use grid::{Grid2D, PhysicalField, SpectralField};
pub use integrators::{evolve, EvolveConfig, Scheme, Semilinear, Stepper};
pub use models::{Equation, ModelSpec};
