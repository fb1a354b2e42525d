//! Rayleigh conductivity of a single aperture from the truncated, axisymmetric
//! instationary Stokes problem.
//!
//! The hole (diameter `d_ap`, length `h_ap`) joins two half-spaces truncated by
//! hemispheres of radius `S·d_ap`. Pressure ±1/2 Pa is imposed weakly on the
//! hemispheres, and the conductivity follows from the volume fluxes.

pub mod cache;
pub mod extrapolate;
pub mod fem;
pub mod mesh;
pub mod pipeline;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LinerError, Result};

pub use extrapolate::{extrapolate_kr, Extrapolation};
pub use fem::{flux_through, rayleigh_single_hole, solve_aperture, StokesSolution, StokesSystem};
pub use mesh::{build_mesh, tube_mesh, BoundaryTag, MeridianMesh, MeshOptions};
pub use cache::{KrLookup, KrRow, KrTable};
pub use pipeline::{compute_kr, compute_kr_sweep, default_kr_frequencies, fill_kr_table, FillReport, KrSettings};

/// Truncated aperture domain in the meridian half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApertureDomain {
    /// Aperture diameter [m].
    pub d_ap: f64,
    /// Plate thickness [m].
    pub h_ap: f64,
    /// Truncation radius in aperture diameters.
    pub s: f64,
}

impl ApertureDomain {
    pub fn new(d_ap: f64, h_ap: f64, s: f64) -> Result<Self> {
        if !(d_ap > 0.0 && h_ap > 0.0 && d_ap.is_finite() && h_ap.is_finite()) {
            return Err(LinerError::invalid("aperture diameter and height must be positive"));
        }
        if !(s.is_finite() && s * d_ap > 0.5 * d_ap) {
            return Err(LinerError::invalid(format!(
                "truncation radius S·d_ap = {:.3e} m must exceed the aperture radius",
                s * d_ap
            )));
        }
        Ok(Self { d_ap, h_ap, s })
    }

    /// Truncation radius [m].
    pub fn truncation_radius(&self) -> f64 {
        self.s * self.d_ap
    }
}

/// How a conductivity value was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Fitted in 1/S from single-hole conductivities `(S, K_R(S))`.
    Extrapolated { samples: Vec<(f64, Complex64)>, warning: Option<String> },
    SingleS(f64),
    /// Loaded from a cache or supplied by the caller.
    External(String),
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Extrapolated { .. } => "extrapolated",
            Provenance::SingleS(_) => "single_s",
            Provenance::External(_) => "external",
        }
    }
}

/// Effective Rayleigh conductivity k_R [1/m] at one angular frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct RayleighConductivity {
    pub k_r: Complex64,
    pub omega: f64,
    pub provenance: Provenance,
}

impl RayleighConductivity {
    /// Validates the sign pattern Re k_R > 0, Im k_R < 0.
    pub fn new(k_r: Complex64, omega: f64, provenance: Provenance) -> Result<Self> {
        check_signs(k_r)?;
        Ok(Self { k_r, omega, provenance })
    }
}

pub(crate) fn check_signs(k: Complex64) -> Result<()> {
    if k.re > 0.0 && k.im < 0.0 && k.re.is_finite() && k.im.is_finite() {
        Ok(())
    } else {
        Err(LinerError::SignViolation { re: k.re, im: k.im })
    }
}
