//! Mesh → solve → flux → extrapolate, per truncation radius and frequency.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{KrRow, KrTable};
use super::extrapolate::extrapolate_with_degree;
use super::fem::{rayleigh_single_hole, SolverOptions, StokesSystem};
use super::mesh::{build_mesh, MeshOptions};
use super::{check_signs, ApertureDomain, Provenance, RayleighConductivity};
use crate::error::{LinerError, Result};
use crate::physics::{effective_from_single_hole, GasParameters, LinerGeometry};

pub const DEFAULT_S_LIST: [f64; 5] = [40.0, 45.0, 50.0, 55.0, 60.0];

/// Discretisation settings for the conductivity pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrSettings {
    /// Truncation radii in aperture diameters.
    pub s_list: Vec<f64>,
    /// Core element size [m].
    pub target_h: f64,
    pub bl_layers: usize,
    /// Upper bound on the degree of the 1/S polynomial.
    pub max_degree: usize,
    #[serde(skip)]
    pub solver: Option<SolverOptions>,
}

impl KrSettings {
    /// Five truncation radii, core size d_ap/10, four wall layers.
    pub fn full(geom: &LinerGeometry) -> Self {
        Self { s_list: DEFAULT_S_LIST.to_vec(), target_h: geom.d_ap / 10.0, bl_layers: 4, max_degree: 2, solver: None }
    }

    /// Two truncation radii and three wall layers at the same core size.
    pub fn coarse(geom: &LinerGeometry) -> Self {
        Self { s_list: vec![40.0, 60.0], target_h: geom.d_ap / 10.0, bl_layers: 3, max_degree: 2, solver: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_list.is_empty() {
            return Err(LinerError::invalid("S list is empty"));
        }
        for (i, s) in self.s_list.iter().enumerate() {
            if self.s_list[..i].contains(s) {
                return Err(LinerError::Extrapolation(format!("S = {s} appears more than once")));
            }
        }
        Ok(())
    }

    fn mesh_options(&self, gas: &GasParameters) -> MeshOptions {
        MeshOptions::new(self.target_h, self.bl_layers, gas.nu)
    }

    pub fn s_list_label(&self) -> String {
        self.s_list.iter().map(|s| format!("{s}")).collect::<Vec<_>>().join(";")
    }
}

fn finish(
    geom: &LinerGeometry,
    omega: f64,
    samples: Vec<(f64, Complex64)>,
    max_degree: usize,
) -> Result<RayleighConductivity> {
    let (k_single, provenance) = if samples.len() == 1 {
        (samples[0].1, Provenance::SingleS(samples[0].0))
    } else {
        let fit = extrapolate_with_degree(&samples, max_degree)?;
        if let Some(w) = &fit.warning {
            log::warn!("f = {:.3} Hz: {w}", omega / (2.0 * PI));
        }
        (fit.value, Provenance::Extrapolated { samples, warning: fit.warning })
    };
    let k = effective_from_single_hole(k_single, geom);
    check_signs(k)?;
    RayleighConductivity::new(k, omega, provenance)
}

fn single_s(geom: &LinerGeometry, s: f64) -> Result<ApertureDomain> {
    ApertureDomain::new(geom.d_ap, geom.h_ap, s)
}

/// Effective Rayleigh conductivity at one angular frequency.
pub fn compute_kr(
    geom: &LinerGeometry,
    gas: &GasParameters,
    omega: f64,
    settings: &KrSettings,
) -> Result<RayleighConductivity> {
    settings.validate()?;
    let solver = settings.solver.unwrap_or_default();
    let mut samples = Vec::with_capacity(settings.s_list.len());
    for &s in &settings.s_list {
        let stage = || -> Result<Complex64> {
            let dom = single_s(geom, s)?;
            let mesh = build_mesh(&dom, &settings.mesh_options(gas), omega)?;
            let sys = StokesSystem::new(mesh, Some(dom))?;
            let half = Complex64::new(0.5, 0.0);
            let sol = sys.solve_with(gas, omega, half, -half, &solver)?;
            Ok(rayleigh_single_hole(&sol, gas))
        };
        let k = stage().map_err(|e| LinerError::AtTruncation { s, source: Box::new(e) })?;
        samples.push((s, k));
    }
    finish(geom, omega, samples, settings.max_degree)
}

/// Conductivities at several frequencies [Hz].
///
/// One mesh per truncation radius, designed for the highest frequency (thinnest
/// viscous layer), serves the whole sweep; the symbolic factorisation is shared.
/// Failures are reported per frequency.
pub fn compute_kr_sweep(
    geom: &LinerGeometry,
    gas: &GasParameters,
    freqs_hz: &[f64],
    settings: &KrSettings,
) -> Vec<Result<RayleighConductivity>> {
    if let Err(e) = settings.validate() {
        return freqs_hz.iter().map(|_| Err(LinerError::invalid(e.to_string()))).collect();
    }
    if let Some(&f) = freqs_hz.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
        return freqs_hz.iter().map(|_| Err(LinerError::invalid(format!("frequency {f} Hz is not positive")))).collect();
    }
    if freqs_hz.is_empty() {
        return Vec::new();
    }
    let f_max = freqs_hz.iter().copied().fold(0.0, f64::max);
    let solver = settings.solver.unwrap_or_default();
    let half = Complex64::new(0.5, 0.0);
    // per_s[j][i]: K_R at S_j and frequency i
    let mut per_s: Vec<Vec<Result<Complex64>>> = Vec::with_capacity(settings.s_list.len());
    for &s in &settings.s_list {
        let system = single_s(geom, s)
            .and_then(|dom| Ok((dom, build_mesh(&dom, &settings.mesh_options(gas), 2.0 * PI * f_max)?)))
            .and_then(|(dom, mesh)| StokesSystem::new(mesh, Some(dom)));
        let row = match system {
            Ok(sys) => {
                log::info!("S = {s}: {} unknowns, {} frequencies", sys.unknowns(), freqs_hz.len());
                freqs_hz
                    .par_iter()
                    .map(|&f| {
                        let omega = 2.0 * PI * f;
                        sys.solve_with(gas, omega, half, -half, &solver).map(|sol| rayleigh_single_hole(&sol, gas))
                    })
                    .collect()
            }
            Err(e) => {
                let msg = e.to_string();
                freqs_hz.iter().map(|_| Err(LinerError::Mesh(msg.clone()))).collect()
            }
        };
        per_s.push(row);
    }
    (0..freqs_hz.len())
        .map(|i| {
            let mut samples = Vec::with_capacity(settings.s_list.len());
            for (j, &s) in settings.s_list.iter().enumerate() {
                match std::mem::replace(&mut per_s[j][i], Ok(Complex64::new(0.0, 0.0))) {
                    Ok(k) => samples.push((s, k)),
                    Err(e) => return Err(LinerError::AtTruncation { s, source: Box::new(e) }),
                }
            }
            finish(geom, 2.0 * PI * freqs_hz[i], samples, settings.max_degree)
        })
        .collect()
}

/// Default solver frequencies [Hz]: dense below 100 Hz, every 50 Hz up to 2 kHz.
pub fn default_kr_frequencies() -> Vec<f64> {
    let mut f = vec![10.0, 20.0, 30.0, 50.0, 75.0];
    f.extend((2..=40).map(|i| 50.0 * i as f64));
    f
}

/// Outcome of [`fill_kr_table`].
#[derive(Debug, Default)]
pub struct FillReport {
    pub reused: usize,
    pub solved: usize,
    pub failures: Vec<(f64, LinerError)>,
}

/// Ensures `table` holds a row for each of `freqs_hz` computed with `settings`.
///
/// Rows with the same S list and element size are reused unless `force`;
/// the rest are solved in one sweep and inserted.
pub fn fill_kr_table(
    table: &mut KrTable,
    geom: &LinerGeometry,
    gas: &GasParameters,
    freqs_hz: &[f64],
    settings: &KrSettings,
    force: bool,
) -> FillReport {
    let label = settings.s_list_label();
    let mut report = FillReport::default();
    let mut todo = Vec::new();
    for &f in freqs_hz {
        let hit = table.get(f).is_some_and(|r| r.s_list == label && r.mesh_h == settings.target_h);
        if hit && !force {
            report.reused += 1;
        } else if !todo.contains(&f) {
            todo.push(f);
        }
    }
    for (f, res) in todo.iter().zip(compute_kr_sweep(geom, gas, &todo, settings)) {
        match res.and_then(|k| table.insert(KrRow::new(*f, &k, &label, settings.target_h))) {
            Ok(()) => report.solved += 1,
            Err(e) => report.failures.push((*f, e)),
        }
    }
    report
}
