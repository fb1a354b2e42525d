//! Gas and liner configuration plus the closed-form scalars derived from them.
//!
//! All complex amplitudes in this crate use the `exp(-i ω t)` time dependence.
//! The sign constraints `Re k_R > 0`, `Im k_R < 0` and `Re ζ > 0` all rely on
//! that choice, so it is fixed here once and never taken as a parameter.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LinerError, Result};

/// Time dependence of every complex amplitude: `exp(sign · i ω t)`.
pub const TIME_HARMONIC_SIGN: f64 = -1.0;

/// Quiescent gas properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParameters {
    /// Mean density [kg/m³].
    pub rho0: f64,
    /// Sound speed [m/s].
    pub c: f64,
    /// Kinematic viscosity [m²/s].
    pub nu: f64,
}

impl GasParameters {
    pub fn new(rho0: f64, c: f64, nu: f64) -> Result<Self> {
        let gas = Self { rho0, c, nu };
        gas.validate()?;
        Ok(gas)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho0", self.rho0), ("c", self.c), ("nu", self.nu)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(LinerError::invalid(format!("gas parameter {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Dynamic viscosity μ = ρ₀ν [Pa·s].
    pub fn dynamic_viscosity(&self) -> f64 {
        self.rho0 * self.nu
    }

    /// Characteristic impedance ρ₀c [Pa·s/m].
    pub fn characteristic_impedance(&self) -> f64 {
        self.rho0 * self.c
    }

    /// Viscous (Stokes) layer thickness √(2ν/ω).
    pub fn viscous_thickness(&self, omega: f64) -> f64 {
        (2.0 * self.nu / omega).sqrt()
    }

    pub fn with_viscosity(self, nu: f64) -> Self {
        Self { nu, ..self }
    }
}

impl Default for GasParameters {
    /// Air at 101.325 kPa and 288.15 K.
    fn default() -> Self {
        Self { rho0: 1.2252, c: 340.45, nu: 14.66e-6 }
    }
}

/// Perforated plate backed by an array of resonator chambers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinerGeometry {
    /// Inter-hole period δ [m].
    pub delta: f64,
    /// Aperture diameter [m].
    pub d_ap: f64,
    /// Aperture height (plate thickness) [m].
    pub h_ap: f64,
    /// Chamber cross-section as a fraction of the periodicity cell.
    pub a_c: f64,
    /// Chamber depth L [m].
    pub depth: f64,
}

impl LinerGeometry {
    pub fn new(delta: f64, d_ap: f64, h_ap: f64, a_c: f64, depth: f64) -> Result<Self> {
        let g = Self { delta, d_ap, h_ap, a_c, depth };
        g.validate()?;
        Ok(g)
    }

    /// The DC006★ liner with the given chamber depth.
    pub fn dc006_star(depth: f64) -> Result<Self> {
        Self::new(8.5e-3, 1e-3, 1e-3, 0.9, depth)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("delta", self.delta),
            ("d_ap", self.d_ap),
            ("h_ap", self.h_ap),
            ("depth", self.depth),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(LinerError::invalid(format!("geometry parameter {name} must be positive, got {v}")));
            }
        }
        if !(self.a_c > 0.0 && self.a_c < 1.0) {
            return Err(LinerError::invalid(format!("chamber area fraction must lie in (0, 1), got {}", self.a_c)));
        }
        let hole = PI * self.d_ap * self.d_ap / 4.0;
        if hole >= self.a_c * self.delta * self.delta {
            return Err(LinerError::invalid(format!(
                "aperture area {hole:.4e} m² does not fit inside the chamber cross-section {:.4e} m²",
                self.a_c * self.delta * self.delta
            )));
        }
        Ok(())
    }

    pub fn with_depth(self, depth: f64) -> Result<Self> {
        Self { depth, ..self }.validate_into()
    }

    /// Uniform scaling of all lengths.
    pub fn scaled(self, s: f64) -> Result<Self> {
        Self {
            delta: self.delta * s,
            d_ap: self.d_ap * s,
            h_ap: self.h_ap * s,
            depth: self.depth * s,
            ..self
        }
        .validate_into()
    }

    fn validate_into(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Area of one periodicity cell δ² [m²].
    pub fn cell_area(&self) -> f64 {
        self.delta * self.delta
    }
}

/// Open-area fraction σ = π d² / (4 δ²).
pub fn porosity(geom: &LinerGeometry) -> f64 {
    PI * geom.d_ap * geom.d_ap / (4.0 * geom.delta * geom.delta)
}

/// A positive frequency together with its angular counterpart.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Frequency {
    hz: f64,
}

impl Frequency {
    pub fn from_hz(hz: f64) -> Result<Self> {
        if !(hz.is_finite() && hz > 0.0) {
            return Err(LinerError::invalid(format!("frequency must be positive, got {hz} Hz")));
        }
        Ok(Self { hz })
    }

    pub fn from_omega(omega: f64) -> Result<Self> {
        Self::from_hz(omega / (2.0 * PI))
    }

    pub fn hz(self) -> f64 {
        self.hz
    }

    pub fn omega(self) -> f64 {
        2.0 * PI * self.hz
    }
}

/// End-point correction model for the neck length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EndCorrection {
    /// δ_cor = 8d/(3π).
    Morse,
    /// Two-term chamber-interaction approximation.
    IngardTwoTerm,
    /// A caller-supplied correction length [m].
    UserValue(f64),
}

impl EndCorrection {
    /// Ingard's series-expansion value for DC006★ (0.709 mm).
    pub const INGARD_DC006_STAR: EndCorrection = EndCorrection::UserValue(0.709e-3);
}

/// Effective added neck length [m].
pub fn end_correction(geom: &LinerGeometry, kind: EndCorrection) -> Result<f64> {
    let morse = 8.0 * geom.d_ap / (3.0 * PI);
    let value = match kind {
        EndCorrection::Morse => morse,
        EndCorrection::IngardTwoTerm => {
            let sigma = porosity(geom);
            morse * (1.0 - 1.25 * (sigma / PI).sqrt() * (1.0 + 1.0 / geom.a_c.sqrt()))
        }
        EndCorrection::UserValue(v) => v,
    };
    if !(value.is_finite() && value > 0.0) {
        return Err(LinerError::EndCorrectionInvalid { value_m: value });
    }
    Ok(value)
}

/// Base spacing c/(2L) of the chamber poles [Hz].
pub fn pole_spacing(geom: &LinerGeometry, gas: &GasParameters) -> f64 {
    gas.c / (2.0 * geom.depth)
}

/// Frequencies where ωL/c is a positive multiple of π, up to and including `f_max`.
pub fn pole_frequencies(geom: &LinerGeometry, gas: &GasParameters, f_max: f64) -> Vec<f64> {
    let base = pole_spacing(geom, gas);
    (1..)
        .map(|k| k as f64 * base)
        .take_while(|&f| f <= f_max)
        .collect()
}

/// Nearest pole to `f_hz` and its distance [Hz].
pub fn nearest_pole(geom: &LinerGeometry, gas: &GasParameters, f_hz: f64) -> (f64, f64) {
    let base = pole_spacing(geom, gas);
    let k = (f_hz / base).round().max(1.0);
    let pole = k * base;
    (pole, (f_hz - pole).abs())
}

/// Single-hole conductivity K_R [m] divided by the cell area: k_R [1/m].
pub fn effective_from_single_hole(k_single: Complex64, geom: &LinerGeometry) -> Complex64 {
    k_single / geom.cell_area()
}
