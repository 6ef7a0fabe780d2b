//! Numerical laboratory for the coupled cubic Schrödinger system
//!
//! ```text
//! i u_t         + Δu - u   + F1(u, v) = 0
//! i γ v_t       + Δv - μ v + F2(u, v) = 0
//! ```
//!
//! on radial, Cartesian and cylindrical grids.

pub mod classify;
pub mod cli;
pub mod config;
pub mod error;
pub mod evolution;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod groundstate;
pub mod output;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};
pub use field::{ComplexField, Params, StatePair};
pub use grid::{GeometryMode, GridSpec};
