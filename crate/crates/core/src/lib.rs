//! Heat transfer across wavy falling liquid films.
//!
//! Reduced (depth-averaged) thermal models riding on Saint-Venant
//! hydrodynamics, a mapped Fourier-equation reference solver, and a sweep
//! harness that maps where the reduced models stay accurate.

pub mod banded;
pub mod chebyshev;
pub mod closure;
pub mod diagnostics;
pub mod domain;
mod error;
pub mod fd;
pub mod fourier;
pub mod hydro;
pub mod integrate;
pub mod io;
pub mod linear;
pub mod model;
pub mod par;
pub mod params;
pub mod sweep;
pub mod thermal;

pub use error::{FilmError, Result};
pub use model::{HydroModel, ModelSpec, ThermalModel};
pub use params::DimensionlessGroups;
