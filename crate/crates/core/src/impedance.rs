//! Normalised wall impedance of a resonator liner: the homogenised model built
//! on the effective Rayleigh conductivity (AHM-3v) and Guess's semi-empirical
//! formula. Resonances, chamber poles and the ζ ↔ β map used by the duct solver.
//!
//! With the e^{−iωt} convention used throughout, a passive wall has Re ζ ≥ 0 and
//! Im β ≥ 0.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::aperture::cache::KrTable;
use crate::aperture::{compute_kr, KrSettings};
use crate::error::{LinerError, Result};
use crate::physics::{end_correction, nearest_pole, porosity, EndCorrection, GasParameters, LinerGeometry};
use crate::roots::brent;

/// Half-width of the excluded band around each chamber pole [Hz].
pub const POLE_GUARD_HZ: f64 = 0.5;

/// |ζ| below which the wall is treated as pressure-release.
pub const MIN_IMPEDANCE: f64 = 1e-12;

/// Source of k_R(f) for the homogenised model.
pub trait KrProvider: Send + Sync {
    /// Effective Rayleigh conductivity [1/m] at `f_hz`.
    fn k_r(&self, f_hz: f64) -> Result<Complex64>;

    /// Frequency interval covered, if bounded.
    fn coverage(&self) -> Option<(f64, f64)> {
        None
    }
}

impl KrProvider for KrTable {
    fn k_r(&self, f_hz: f64) -> Result<Complex64> {
        Ok(self.lookup(f_hz)?.k_r)
    }

    fn coverage(&self) -> Option<(f64, f64)> {
        self.range()
    }
}

/// Runs the Stokes pipeline on demand, remembering every frequency solved.
pub struct SolverKr {
    geom: LinerGeometry,
    gas: GasParameters,
    settings: KrSettings,
    memo: Mutex<BTreeMap<u64, Complex64>>,
}

impl SolverKr {
    pub fn new(geom: LinerGeometry, gas: GasParameters, settings: KrSettings) -> Self {
        Self { geom, gas, settings, memo: Mutex::new(BTreeMap::new()) }
    }
}

impl KrProvider for SolverKr {
    fn k_r(&self, f_hz: f64) -> Result<Complex64> {
        if let Some(k) = self.memo.lock().unwrap().get(&f_hz.to_bits()) {
            return Ok(*k);
        }
        let k = compute_kr(&self.geom, &self.gas, 2.0 * PI * f_hz, &self.settings)?.k_r;
        self.memo.lock().unwrap().insert(f_hz.to_bits(), k);
        Ok(k)
    }
}

/// Wraps a closure, e.g. a synthetic conductivity law.
pub struct FnKr<F>(pub F);

impl<F: Fn(f64) -> Complex64 + Send + Sync> KrProvider for FnKr<F> {
    fn k_r(&self, f_hz: f64) -> Result<Complex64> {
        Ok((self.0)(f_hz))
    }
}

/// Model identifier used in reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Ahm3v,
    Guess(EndCorrection),
}

/// An impedance model bound to a liner and gas.
#[derive(Clone)]
pub struct ImpedanceModel {
    pub kind: ModelKind,
    pub geom: LinerGeometry,
    pub gas: GasParameters,
    pub label: String,
    kr: Option<Arc<dyn KrProvider>>,
}

impl fmt::Debug for ImpedanceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImpedanceModel").field("kind", &self.kind).field("label", &self.label).finish()
    }
}

impl ImpedanceModel {
    pub fn ahm3v(geom: LinerGeometry, gas: GasParameters, kr: Arc<dyn KrProvider>) -> Self {
        Self { kind: ModelKind::Ahm3v, geom, gas, label: "ahm3v".into(), kr: Some(kr) }
    }

    pub fn guess(geom: LinerGeometry, gas: GasParameters, correction: EndCorrection, label: impl Into<String>) -> Self {
        Self { kind: ModelKind::Guess(correction), geom, gas, label: label.into(), kr: None }
    }

    /// Same model with a different chamber depth.
    pub fn with_depth(&self, depth: f64) -> Result<Self> {
        let mut m = self.clone();
        m.geom = self.geom.with_depth(depth)?;
        Ok(m)
    }

    pub fn kr_provider(&self) -> Option<&Arc<dyn KrProvider>> {
        self.kr.as_ref()
    }

    /// Checks that the k_R provider covers [f_min, f_max].
    pub fn check_coverage(&self, f_min: f64, f_max: f64) -> Result<()> {
        if let (ModelKind::Ahm3v, Some(kr)) = (self.kind, &self.kr) {
            if let Some((lo, hi)) = kr.coverage() {
                if f_min < lo {
                    return Err(LinerError::CoverageGap { f_hz: f_min, min_hz: lo, max_hz: hi });
                }
                if f_max > hi {
                    return Err(LinerError::CoverageGap { f_hz: f_max, min_hz: lo, max_hz: hi });
                }
            }
        }
        Ok(())
    }

    fn conductivity(&self, f_hz: f64) -> Result<Complex64> {
        let kr = self.kr.as_ref().ok_or_else(|| LinerError::invalid("AHM-3v model without a k_R provider"))?;
        let k = kr.k_r(f_hz)?;
        crate::aperture::check_signs(k)?;
        Ok(k)
    }

    pub fn zeta(&self, f_hz: f64) -> Result<ImpedanceSample> {
        let omega = 2.0 * PI * f_hz;
        let zeta = match self.kind {
            ModelKind::Ahm3v => zeta_ahm3v(self.conductivity(f_hz)?, &self.geom, &self.gas, omega)?,
            ModelKind::Guess(corr) => zeta_guess(&self.geom, &self.gas, omega, corr)?,
        };
        Ok(ImpedanceSample { f_hz, zeta, model: self.label.clone() })
    }

    /// Wall admittance; exactly zero at chamber poles.
    pub fn admittance(&self, f_hz: f64) -> Result<WallAdmittance> {
        let omega = 2.0 * PI * f_hz;
        match self.kind {
            ModelKind::Ahm3v => admittance_from_limit_problem(self.conductivity(f_hz)?, &self.geom, &self.gas, omega),
            ModelKind::Guess(_) => {
                let (pole, dist) = nearest_pole(&self.geom, &self.gas, f_hz);
                if dist == 0.0 && pole > 0.0 {
                    return Ok(WallAdmittance { beta: Complex64::new(0.0, 0.0), f_hz });
                }
                let z = self.zeta(f_hz)?;
                admittance_from_zeta(&z, &self.gas, omega)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceSample {
    pub f_hz: f64,
    pub zeta: Complex64,
    pub model: String,
}

/// Robin coefficient β [1/m] in ∇p·n = β p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallAdmittance {
    pub beta: Complex64,
    pub f_hz: f64,
}

fn check_guard(geom: &LinerGeometry, gas: &GasParameters, omega: f64) -> Result<()> {
    let f = omega / (2.0 * PI);
    let (pole, dist) = nearest_pole(geom, gas, f);
    if pole > 0.0 && dist <= POLE_GUARD_HZ {
        return Err(LinerError::PoleProximity { f_hz: f, pole_hz: pole });
    }
    Ok(())
}

/// Chamber reactance cot(ωL/c)/a_C.
fn chamber_term(geom: &LinerGeometry, gas: &GasParameters, omega: f64) -> f64 {
    1.0 / (omega * geom.depth / gas.c).tan() / geom.a_c
}

/// Aperture part i(ω/c)/conj(k_R) of the homogenised impedance (independent of L).
pub fn aperture_impedance(k_r: Complex64, gas: &GasParameters, omega: f64) -> Complex64 {
    let s = omega / (gas.c * k_r.norm_sqr());
    Complex64::new(-s * k_r.im, s * k_r.re)
}

/// ζ = −ω Im k_R/(c|k_R|²) + i(ω Re k_R/(c|k_R|²) − cot(ωL/c)/a_C).
pub fn zeta_ahm3v(k_r: Complex64, geom: &LinerGeometry, gas: &GasParameters, omega: f64) -> Result<Complex64> {
    check_guard(geom, gas, omega)?;
    let ap = aperture_impedance(k_r, gas, omega);
    Ok(Complex64::new(ap.re, ap.im - chamber_term(geom, gas, omega)))
}

/// Guess's impedance with the chosen end correction.
pub fn zeta_guess(geom: &LinerGeometry, gas: &GasParameters, omega: f64, correction: EndCorrection) -> Result<Complex64> {
    check_guard(geom, gas, omega)?;
    let dcor = end_correction(geom, correction)?;
    let sigma = porosity(geom);
    let c = gas.c;
    let (d, h) = (geom.d_ap, geom.h_ap);
    let visc = (8.0 * omega * gas.nu).sqrt() / (c * sigma) * (1.0 + h / d);
    let radiation = omega * omega * d * d / (8.0 * c * c * sigma);
    let mass = omega * (h + dcor) / (c * sigma);
    // the chamber term carries 1/(1 − ε) with 1 − ε = a_C
    Ok(Complex64::new(visc + radiation, visc + mass - chamber_term(geom, gas, omega)))
}

/// β = sin(ωL/c) / (c cos(ωL/c)/(ω a_C) − sin(ωL/c)/k_R).
pub fn admittance_from_limit_problem(
    k_r: Complex64,
    geom: &LinerGeometry,
    gas: &GasParameters,
    omega: f64,
) -> Result<WallAdmittance> {
    let f_hz = omega / (2.0 * PI);
    let x = omega * geom.depth / gas.c;
    let (s, c) = x.sin_cos();
    let a = gas.c * c / (omega * geom.a_c);
    let b = s / k_r;
    let den = a - b;
    if den.norm() <= 1e-14 * (a.abs() + b.norm()) {
        return Err(LinerError::DegenerateAdmittance { f_hz });
    }
    Ok(WallAdmittance { beta: s / den, f_hz })
}

/// β = i(ω/c)/conj(ζ).
pub fn admittance_from_zeta(zeta: &ImpedanceSample, gas: &GasParameters, omega: f64) -> Result<WallAdmittance> {
    let m = zeta.zeta.norm();
    if !(m >= MIN_IMPEDANCE) {
        return Err(LinerError::VanishingImpedance { f_hz: zeta.f_hz, magnitude: m });
    }
    Ok(WallAdmittance { beta: Complex64::new(0.0, omega / gas.c) / zeta.zeta.conj(), f_hz: zeta.f_hz })
}

/// Zeros of Im ζ in [f_min, f_max] [Hz].
///
/// A 1 Hz scan brackets sign changes; brackets that contain a chamber pole or
/// touch its guard band are skipped, the rest are refined with Brent's method.
pub fn resonance_frequencies(model: &ImpedanceModel, f_min: f64, f_max: f64, tol_hz: f64) -> Result<Vec<f64>> {
    if !(f_min > 0.0 && f_max > f_min && tol_hz > 0.0) {
        return Err(LinerError::invalid("resonance search needs 0 < f_min < f_max and tol > 0"));
    }
    model.check_coverage(f_min, f_max)?;
    let reactance = |f: f64| -> Result<f64> { Ok(model.zeta(f)?.zeta.im) };
    let n = ((f_max - f_min) / 1.0).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (f_min + i as f64).min(f_max)).collect();
    let mut values = Vec::with_capacity(grid.len());
    for &f in &grid {
        let (_, dist) = nearest_pole(&model.geom, &model.gas, f);
        values.push(if dist <= POLE_GUARD_HZ { None } else { Some(reactance(f)?) });
    }
    let spacing = crate::physics::pole_spacing(&model.geom, &model.gas);
    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        let (a, b) = (grid[i], grid[i + 1]);
        let (Some(va), Some(vb)) = (values[i], values[i + 1]) else { continue };
        // a pole strictly inside the bracket also flips the sign
        if (a / spacing).floor() != (b / spacing).floor() {
            continue;
        }
        if va == 0.0 {
            roots.push(a);
            continue;
        }
        if va * vb < 0.0 {
            roots.push(brent(reactance, a, b, tol_hz, 200)?);
        }
    }
    if let Some(&last) = values.last() {
        if last == Some(0.0) {
            roots.push(*grid.last().unwrap());
        }
    }
    roots.dedup_by(|x, y| (*x - *y).abs() < tol_hz);
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geom(depth: f64) -> LinerGeometry {
        LinerGeometry::dc006_star(depth).unwrap()
    }

    fn gas() -> GasParameters {
        GasParameters::default()
    }

    fn omega(f: f64) -> f64 {
        2.0 * PI * f
    }

    fn guess(depth: f64, corr: EndCorrection) -> ImpedanceModel {
        ImpedanceModel::guess(geom(depth), gas(), corr, "guess")
    }

    #[test]
    fn guess_resonances_table() {
        let roots = resonance_frequencies(&guess(0.1, EndCorrection::Morse), 1.0, 2000.0, 0.01).unwrap();
        assert_eq!(roots.len(), 2, "{roots:?}");
        assert!((roots[0] - 362.0).abs() <= 1.0 && (roots[1] - 1797.0).abs() <= 1.0, "{roots:?}");
        let roots = resonance_frequencies(&guess(0.1, EndCorrection::INGARD_DC006_STAR), 1.0, 2000.0, 0.01).unwrap();
        assert!((roots[0] - 371.0).abs() <= 1.0 && (roots[1] - 1804.0).abs() <= 1.0, "{roots:?}");
    }

    #[test]
    fn roots_bracket_sign_changes() {
        let m = guess(0.1, EndCorrection::Morse);
        for r in resonance_frequencies(&m, 1.0, 4000.0, 0.01).unwrap() {
            let a = m.zeta(r - 0.01).unwrap().zeta.im;
            let b = m.zeta(r + 0.01).unwrap().zeta.im;
            assert!(a * b < 0.0);
            let (_, d) = nearest_pole(&m.geom, &m.gas, r);
            assert!(d > POLE_GUARD_HZ);
        }
    }

    #[test]
    fn guess_resistance_independent_of_correction() {
        let g = geom(0.1);
        for f in [5.0, 100.0, 367.0, 1234.5, 1999.0] {
            let a = zeta_guess(&g, &gas(), omega(f), EndCorrection::Morse).unwrap();
            let b = zeta_guess(&g, &gas(), omega(f), EndCorrection::IngardTwoTerm).unwrap();
            let c = zeta_guess(&g, &gas(), omega(f), EndCorrection::INGARD_DC006_STAR).unwrap();
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.re.to_bits(), c.re.to_bits());
        }
        let low = zeta_guess(&g, &gas(), omega(1e-4), EndCorrection::Morse).unwrap();
        assert!(low.re < 1e-3);
    }

    #[test]
    fn pole_guard() {
        let g = geom(0.1);
        let err = zeta_guess(&g, &gas(), omega(1702.25 + 0.3), EndCorrection::Morse);
        assert!(matches!(err, Err(LinerError::PoleProximity { .. })));
        assert!(zeta_ahm3v(Complex64::new(5.0, -1.0), &g, &gas(), omega(1702.0)).is_err());
        assert!(zeta_ahm3v(Complex64::new(5.0, -1.0), &g, &gas(), omega(1701.0)).is_ok());
        // Im ζ → +∞ just below a pole and −∞ just above it
        let below = zeta_guess(&g, &gas(), omega(1701.7), EndCorrection::Morse).unwrap().im;
        let above = zeta_guess(&g, &gas(), omega(1702.8), EndCorrection::Morse).unwrap().im;
        assert!(below > 50.0 && above < -50.0, "{below} {above}");
    }

    #[test]
    fn ahm_structure() {
        let k = Complex64::new(4.6, -1.15);
        let w = omega(367.0);
        let a = zeta_ahm3v(k, &geom(0.05), &gas(), w).unwrap();
        let b = zeta_ahm3v(k, &geom(0.2), &gas(), w).unwrap();
        assert_eq!(a.re, b.re);
        assert!(a.re > 0.0);
        let real_k = zeta_ahm3v(Complex64::new(4.6, 0.0), &geom(0.1), &gas(), w).unwrap();
        assert_eq!(real_k.re, 0.0);
        // aperture reactance separates from the chamber term
        let sep = |g: &LinerGeometry, z: Complex64| z.im + chamber_term(g, &gas(), w);
        assert!((sep(&geom(0.05), a) - sep(&geom(0.2), b)).abs() < 1e-12);
    }

    #[test]
    fn hard_wall_at_pole() {
        let k = Complex64::new(4.6, -1.15);
        let beta = admittance_from_limit_problem(k, &geom(0.1), &gas(), omega(1702.25)).unwrap();
        assert!(beta.beta.norm() < 1e-12);
        let beta = admittance_from_limit_problem(k, &geom(1e-12), &gas(), omega(500.0)).unwrap();
        assert!(beta.beta.norm() < 1e-9);
    }

    #[test]
    fn conjugation_identity_sweep() {
        let g = geom(0.1);
        for i in 1..400 {
            let f = 5.0 * i as f64;
            let w = omega(f);
            if nearest_pole(&g, &gas(), f).1 <= POLE_GUARD_HZ {
                continue;
            }
            let k = Complex64::new(4.0 + f / 2000.0, -1.5 / (1.0 + f / 300.0).sqrt());
            let z = zeta_ahm3v(k, &g, &gas(), w).unwrap();
            let sample = ImpedanceSample { f_hz: f, zeta: z, model: "ahm3v".into() };
            let b1 = admittance_from_zeta(&sample, &gas(), w).unwrap().beta;
            let b2 = admittance_from_limit_problem(k, &g, &gas(), w).unwrap().beta;
            assert!((b1 - b2).norm() <= 1e-12 * b2.norm().max(1e-300), "f = {f}: {b1} vs {b2}");
        }
    }

    #[test]
    fn admittance_rejects_vanishing_impedance() {
        let s = ImpedanceSample { f_hz: 100.0, zeta: Complex64::new(0.0, 0.0), model: "x".into() };
        assert!(matches!(admittance_from_zeta(&s, &gas(), omega(100.0)), Err(LinerError::VanishingImpedance { .. })));
    }

    proptest! {
        #[test]
        fn positive_resistance_gives_absorbing_wall(re in 1e-4..10.0f64, im in -50.0..50.0f64, f in 1.0..3000.0f64) {
            let s = ImpedanceSample { f_hz: f, zeta: Complex64::new(re, im), model: "x".into() };
            let beta = admittance_from_zeta(&s, &gas(), omega(f)).unwrap().beta;
            prop_assert!(beta.im > 0.0);
            let expected = omega(f) / gas().c * re / (re * re + im * im);
            prop_assert!((beta.im - expected).abs() <= 1e-12 * expected);
        }

        #[test]
        fn reactive_impedance_gives_real_admittance(im in 1e-3..50.0f64, f in 1.0..3000.0f64) {
            let s = ImpedanceSample { f_hz: f, zeta: Complex64::new(0.0, im), model: "x".into() };
            let beta = admittance_from_zeta(&s, &gas(), omega(f)).unwrap().beta;
            prop_assert_eq!(beta.im, 0.0);
        }

        #[test]
        fn ahm_resistance_positive(kre in 0.01..50.0f64, kim in -50.0..-1e-6f64, f in 1.0..1700.0f64) {
            let z = zeta_ahm3v(Complex64::new(kre, kim), &geom(0.1), &gas(), omega(f));
            if let Ok(z) = z {
                prop_assert!(z.re > 0.0);
            }
        }
    }
}
