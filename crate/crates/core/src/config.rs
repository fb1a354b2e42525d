//! TOML configuration with unit-suffixed keys; converted to SI on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aperture::KrSettings;
use crate::duct::DuctConfig;
use crate::error::{LinerError, Result};
use crate::physics::{EndCorrection, GasParameters, LinerGeometry};

/// The shipped DC006★ configuration.
pub const DC006STAR: &str = include_str!("../configs/dc006star.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSection {
    pub rho0_kg_m3: f64,
    pub c_m_s: f64,
    pub nu_m2_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub delta_mm: f64,
    pub d_ap_mm: f64,
    pub h_ap_mm: f64,
    pub a_c: f64,
    pub depth_mm: f64,
    #[serde(default)]
    pub ingard_end_correction_mm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuctSection {
    pub radius_mm: f64,
    pub length_mm: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_modes() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Truncation radii in aperture diameters.
    pub s_list: Vec<f64>,
    pub target_h_mm: f64,
    pub bl_layers: usize,
    #[serde(default = "default_degree")]
    pub max_degree: usize,
}

fn default_degree() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub gas: GasSection,
    pub geometry: GeometrySection,
    pub duct: DuctSection,
    pub solver: Option<SolverSection>,
}

/// Validated configuration in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct LinerConfig {
    pub gas: GasParameters,
    pub geometry: LinerGeometry,
    pub duct: DuctConfig,
    /// Ingard series value [m], if supplied.
    pub ingard_end_correction: Option<f64>,
    /// Paper-fidelity conductivity settings.
    pub solver: KrSettings,
}

fn config_err(e: impl std::fmt::Display) -> LinerError {
    LinerError::Config(e.to_string())
}

impl LinerConfig {
    pub fn dc006star() -> Self {
        Self::from_toml(DC006STAR).expect("shipped configuration is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(config_err)?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LinerError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_file(f: ConfigFile) -> Result<Self> {
        let mm = 1e-3;
        let gas = GasParameters::new(f.gas.rho0_kg_m3, f.gas.c_m_s, f.gas.nu_m2_s).map_err(config_err)?;
        let g = &f.geometry;
        let geometry = LinerGeometry::new(g.delta_mm * mm, g.d_ap_mm * mm, g.h_ap_mm * mm, g.a_c, g.depth_mm * mm)
            .map_err(config_err)?;
        let duct = DuctConfig::new(f.duct.radius_mm * mm, f.duct.length_mm * mm, f.duct.modes, gas.c).map_err(config_err)?;
        let ingard_end_correction = match g.ingard_end_correction_mm {
            Some(v) if !(v > 0.0 && v.is_finite()) => {
                return Err(LinerError::Config(format!("ingard_end_correction_mm = {v} must be positive")))
            }
            v => v.map(|v| v * mm),
        };
        let solver = match f.solver {
            Some(s) => {
                if !(s.target_h_mm > 0.0) || s.bl_layers == 0 {
                    return Err(LinerError::Config("solver target_h_mm and bl_layers must be positive".into()));
                }
                let k = KrSettings {
                    s_list: s.s_list,
                    target_h: s.target_h_mm * mm,
                    bl_layers: s.bl_layers,
                    max_degree: s.max_degree,
                    solver: None,
                };
                k.validate().map_err(config_err)?;
                k
            }
            None => KrSettings::full(&geometry),
        };
        Ok(Self { gas, geometry, duct, ingard_end_correction, solver })
    }

    /// Ingard end correction: the configured series value, else the two-term approximation.
    pub fn ingard(&self) -> EndCorrection {
        match self.ingard_end_correction {
            Some(v) => EndCorrection::UserValue(v),
            None => EndCorrection::IngardTwoTerm,
        }
    }

    /// Conductivity settings: the configured ones, or the coarse variant
    /// (S ∈ {40, 60}, three wall layers) at the configured element size.
    pub fn kr_settings(&self, full: bool) -> KrSettings {
        if full {
            self.solver.clone()
        } else {
            KrSettings { s_list: vec![40.0, 60.0], bl_layers: 3, ..self.solver.clone() }
        }
    }

    pub fn with_depth(&self, depth: f64) -> Result<Self> {
        Ok(Self { geometry: self.geometry.with_depth(depth)?, ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config() {
        let c = LinerConfig::dc006star();
        assert_eq!(c.geometry, LinerGeometry::dc006_star(0.1).unwrap());
        assert_eq!(c.gas, GasParameters::default());
        assert_eq!(c.duct, DuctConfig::new(0.07, 0.069, 5, 340.45).unwrap());
        assert_eq!(c.ingard(), EndCorrection::INGARD_DC006_STAR);
        assert_eq!(c.solver, KrSettings::full(&c.geometry));
        assert_eq!(c.kr_settings(false), KrSettings::coarse(&c.geometry));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(LinerConfig::from_toml("[gas]\n"), Err(LinerError::Config(_))));
        let typo = DC006STAR.replace("delta_mm", "delta");
        assert!(LinerConfig::from_toml(&typo).is_err());
        let neg = DC006STAR.replace("depth_mm = 100.0", "depth_mm = -1.0");
        assert!(matches!(LinerConfig::from_toml(&neg), Err(LinerError::Config(_))));
        let dup = DC006STAR.replace("[40.0, 45.0", "[40.0, 40.0");
        assert!(LinerConfig::from_toml(&dup).is_err());
    }

    #[test]
    fn optional_sections() {
        let text: String = DC006STAR.lines().take_while(|l| !l.starts_with("[solver]")).collect::<Vec<_>>().join("\n");
        let text = text.replace("ingard_end_correction_mm = 0.709", "").replace("modes = 5", "");
        let c = LinerConfig::from_toml(&text).unwrap();
        assert_eq!(c.ingard(), EndCorrection::IngardTwoTerm);
        assert_eq!(c.duct.modes, 5);
        assert_eq!(c.solver, KrSettings::full(&c.geometry));
    }
}
