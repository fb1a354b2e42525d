//! Viscous Helmholtz-resonator liner toolkit.
//!
//! * [`physics`]: gas and liner configuration, porosity, end corrections, chamber poles.
//! * [`aperture`]: axisymmetric Stokes solver for the Rayleigh conductivity of one aperture.
//! * [`impedance`]: AHM-3v and Guess impedance models, resonances and wall admittance.
//! * [`duct`]: mode-matching scattering by a lined segment of a circular duct.

pub mod bessel;
pub mod config;
pub mod duct;
pub mod error;
pub mod aperture;
pub mod impedance;
pub mod output;
pub mod physics;
pub mod roots;
pub mod validation;

#[cfg(test)]
mod end_to_end;

pub use error::{LinerError, Result};
