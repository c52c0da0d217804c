//! Littlewood-Paley analysis on periodic grids and the relaxed compressible
//! Euler / porous medium solvers built on it.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the double-precision instantiation used by the drivers.

pub mod besov;
pub mod commutator;
pub mod ensemble;
pub mod error;
pub mod euler;
pub mod fit;
pub mod golden;
pub mod io;
pub mod paraproduct;
pub mod pme;
pub mod relax;
pub mod report;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid64 = spectral::TorusGrid<f64>;
pub type Field64 = spectral::Field<f64>;
pub type VectorField64 = spectral::VectorField<f64>;
pub type Grid32 = spectral::TorusGrid<f32>;
pub type Field32 = spectral::Field<f32>;
