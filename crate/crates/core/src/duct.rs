//! Axisymmetric mode matching for a plane wave crossing a lined segment of a
//! hard circular duct (hard | lined | hard), and the energy split T, R, D.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{j0, j1, j1_over_z, j1_zeros};
use crate::error::{LinerError, Result};
use crate::impedance::{ImpedanceModel, POLE_GUARD_HZ};
use crate::physics::{nearest_pole, pole_frequencies};

/// Condition estimate above which a matching solve is rejected.
pub const CONDITION_LIMIT: f64 = 1e10;

/// Minimum number of continuation steps from the hard-wall spectrum to the target admittance.
pub const HOMOTOPY_STEPS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuctConfig {
    /// Duct radius [m].
    pub radius: f64,
    /// Length of the lined segment [m].
    pub length: f64,
    /// Radial modes per region.
    pub modes: usize,
    /// Sound speed [m/s].
    pub c: f64,
}

impl DuctConfig {
    pub fn new(radius: f64, length: f64, modes: usize, c: f64) -> Result<Self> {
        let cfg = Self { radius, length, modes, c };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.length > 0.0 && self.c > 0.0) || self.modes == 0 {
            return Err(LinerError::invalid("duct radius, length, sound speed and mode count must be positive"));
        }
        Ok(())
    }

    pub fn with_modes(self, modes: usize) -> Self {
        Self { modes, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WallKind {
    Hard,
    Lined(Complex64),
}

/// Radial eigenmodes J₀(α r) of one duct section.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialModeSet {
    pub alphas: Vec<Complex64>,
    /// Axial wavenumbers, Im μ ≥ 0 (and Re μ ≥ 0 when real).
    pub mus: Vec<Complex64>,
    /// ∫₀^R J₀(α r)² 2πr dr (unconjugated).
    pub norms: Vec<Complex64>,
    pub wall: WallKind,
}

/// √(k² − α²) on the branch that decays or propagates in +z under e^{−iωt}.
pub fn axial_wavenumber(k: f64, alpha: Complex64) -> Complex64 {
    let m = (Complex64::new(k * k, 0.0) - alpha * alpha).sqrt();
    if m.im < 0.0 || (m.im == 0.0 && m.re < 0.0) {
        -m
    } else {
        m
    }
}

fn modal_norm(alpha: Complex64, radius: f64) -> Complex64 {
    let x = alpha * radius;
    PI * radius * radius * (j0(x) * j0(x) + j1(x) * j1(x))
}

pub fn hard_modes(radius: f64, omega: f64, c: f64, n: usize) -> RadialModeSet {
    let k = omega / c;
    let mut alphas = vec![Complex64::new(0.0, 0.0)];
    alphas.extend(j1_zeros(n.saturating_sub(1)).into_iter().map(|z| Complex64::new(z / radius, 0.0)));
    alphas.truncate(n);
    let mus = alphas.iter().map(|&a| axial_wavenumber(k, a)).collect();
    let norms = alphas.iter().map(|&a| modal_norm(a, radius)).collect();
    RadialModeSet { alphas, mus, norms, wall: WallKind::Hard }
}

/// Roots of x J₁(x) + βR J₀(x) = 0 (x = αR), continued from the hard-wall roots.
pub fn lined_modes(radius: f64, omega: f64, c: f64, beta: Complex64, n: usize) -> Result<RadialModeSet> {
    if !(beta.re.is_finite() && beta.im.is_finite()) {
        return Err(LinerError::invalid("wall admittance is not finite"));
    }
    let hard = hard_modes(radius, omega, c, n);
    if beta == Complex64::new(0.0, 0.0) {
        return Ok(hard);
    }
    let br = beta * radius;
    // Newton in w = x², where both terms are entire functions of w.
    // Steps of at most 1/HOMOTOPY_STEPS are halved whenever a root fails to
    // converge, collides, or strays from its linear predictor.
    let newton = |w0: Complex64, b: Complex64| -> Option<Complex64> {
        let mut w = w0;
        for _ in 0..40 {
            let x = w.sqrt();
            let g = x * j1(x) + b * j0(x);
            let dg = 0.5 * j0(x) - 0.5 * b * j1_over_z(x);
            let dw = g / dg;
            w -= dw;
            if !(w.re.is_finite() && w.im.is_finite()) {
                return None;
            }
            if dw.norm() <= 1e-13 * (1.0 + w.norm()) {
                return Some(w);
            }
        }
        None
    };
    let max_dt = 1.0 / HOMOTOPY_STEPS as f64;
    let mut ws: Vec<Complex64> = hard.alphas.iter().map(|a| (a * radius) * (a * radius)).collect();
    let mut slope = vec![Complex64::new(0.0, 0.0); n];
    let (mut t, mut dt, mut step) = (0.0f64, max_dt, 1usize);
    while t < 1.0 {
        let t_next = (t + dt).min(1.0);
        let h = t_next - t;
        let b = br * t_next;
        let mut next = Vec::with_capacity(n);
        let mut failure = None;
        for (mode, &w) in ws.iter().enumerate() {
            let pred = w + slope[mode] * h;
            let spacing = ws
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != mode)
                .map(|(_, &v)| (v - w).norm())
                .fold(f64::INFINITY, f64::min);
            match newton(pred, b) {
                Some(v) if (v - pred).norm() <= 0.25 * spacing => next.push(v),
                Some(_) => {
                    failure = Some(LinerError::ModeCollision { first: mode, second: mode, step });
                    break;
                }
                None => {
                    failure = Some(LinerError::ModeNewton { mode, step, steps: HOMOTOPY_STEPS });
                    break;
                }
            }
        }
        if failure.is_none() {
            'pairs: for i in 0..next.len() {
                for j in 0..i {
                    if (next[i] - next[j]).norm() <= 1e-8 * (1.0 + next[i].norm()) {
                        failure = Some(LinerError::ModeCollision { first: j, second: i, step });
                        break 'pairs;
                    }
                }
            }
        }
        match failure {
            None => {
                for (k, v) in next.iter().enumerate() {
                    slope[k] = (v - ws[k]) / h;
                }
                ws = next;
                t = t_next;
                step += 1;
                dt = (2.0 * dt).min(max_dt);
            }
            Some(e) => {
                dt *= 0.5;
                if dt < max_dt * 1e-6 {
                    return Err(e);
                }
            }
        }
    }
    let k = omega / c;
    let alphas: Vec<Complex64> = ws.iter().map(|w| w.sqrt() / radius).collect();
    let mus = alphas.iter().map(|&a| axial_wavenumber(k, a)).collect();
    let norms = alphas.iter().map(|&a| modal_norm(a, radius)).collect();
    Ok(RadialModeSet { alphas, mus, norms, wall: WallKind::Lined(beta) })
}

/// Side from which the plane wave arrives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Incidence {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringResult {
    pub f_hz: f64,
    /// Outgoing hard-mode amplitudes on the incidence side.
    pub reflected: Vec<Complex64>,
    /// Outgoing hard-mode amplitudes on the far side.
    pub transmitted: Vec<Complex64>,
    pub t_energy: f64,
    pub r_energy: f64,
    pub dissipation: f64,
    /// Condition estimate of the equilibrated matching matrix.
    pub condition: f64,
}

impl ScatteringResult {
    /// Hard wall: full transmission, as inserted at chamber poles.
    pub fn hard_wall(f_hz: f64, modes: usize) -> Self {
        let mut transmitted = vec![Complex64::new(0.0, 0.0); modes];
        transmitted[0] = Complex64::new(1.0, 0.0);
        Self {
            f_hz,
            reflected: vec![Complex64::new(0.0, 0.0); modes],
            transmitted,
            t_energy: 1.0,
            r_energy: 0.0,
            dissipation: 0.0,
            condition: 1.0,
        }
    }
}

fn projections(hard: &RadialModeSet, lined: &RadialModeSet, radius: f64) -> DMatrix<Complex64> {
    let n = hard.alphas.len();
    let quad = GaussLegendre::new(NonZeroUsize::new(80).unwrap());
    let nodes: Vec<(f64, f64)> = quad.iter().map(|(x, w)| (0.5 * radius * (x + 1.0), 0.5 * radius * w)).collect();
    // c[(m, n)] = ∫ J₀(α_m r) J₀(α_n^hard r) 2πr dr
    DMatrix::from_fn(n, n, |m, k| {
        nodes
            .iter()
            .map(|&(r, w)| w * 2.0 * PI * r * j0(lined.alphas[m] * r) * j0(hard.alphas[k] * r))
            .sum()
    })
}

fn condition_number(a: &DMatrix<Complex64>) -> f64 {
    let mut m = a.clone();
    for i in 0..m.nrows() {
        let s = m.row(i).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            m.row_mut(i).scale_mut(1.0 / s);
        }
    }
    for j in 0..m.ncols() {
        let s = m.column(j).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            m.column_mut(j).scale_mut(1.0 / s);
        }
    }
    let sv = m.singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Scattering of the plane wave e^{iωz/c} by the lined segment [0, Z].
pub fn mode_match(config: &DuctConfig, omega: f64, beta: Complex64) -> Result<ScatteringResult> {
    mode_match_from(config, omega, beta, Incidence::Left)
}

pub fn mode_match_from(config: &DuctConfig, omega: f64, beta: Complex64, side: Incidence) -> Result<ScatteringResult> {
    config.validate()?;
    if !(omega > 0.0) {
        return Err(LinerError::invalid("angular frequency must be positive"));
    }
    let n = config.modes;
    let (rad, len) = (config.radius, config.length);
    let hard = hard_modes(rad, omega, config.c, n);
    let lined = lined_modes(rad, omega, config.c, beta, n)?;
    let cm = projections(&hard, &lined, rad);
    let i = Complex64::i();
    let e: Vec<Complex64> = lined.mus.iter().map(|&m| (i * m * len).exp()).collect();
    let (inc_l, inc_r) = match side {
        Incidence::Left => (1.0, 0.0),
        Incidence::Right => (0.0, 1.0),
    };
    let mut a = DMatrix::<Complex64>::zeros(4 * n, 4 * n);
    let mut rhs = DVector::<Complex64>::zeros(4 * n);
    let (nh, mh, ml) = (&hard.norms, &hard.mus, &lined.mus);
    // unknowns: r (left outgoing), t (right outgoing), a (lined, +z), b (lined, −z)
    for k in 0..n {
        let delta = if k == 0 { 1.0 } else { 0.0 };
        // pressure at z = 0
        a[(k, k)] = nh[k];
        for m in 0..n {
            a[(k, 2 * n + m)] = -cm[(m, k)];
            a[(k, 3 * n + m)] = -cm[(m, k)] * e[m];
        }
        rhs[k] = -inc_l * delta * nh[k];
        // ∂p/∂z at z = 0
        a[(n + k, k)] = -i * mh[k] * nh[k];
        for m in 0..n {
            a[(n + k, 2 * n + m)] = -i * ml[m] * cm[(m, k)];
            a[(n + k, 3 * n + m)] = i * ml[m] * e[m] * cm[(m, k)];
        }
        rhs[n + k] = -inc_l * delta * i * mh[k] * nh[k];
        // pressure at z = Z
        a[(2 * n + k, n + k)] = nh[k];
        for m in 0..n {
            a[(2 * n + k, 2 * n + m)] = -cm[(m, k)] * e[m];
            a[(2 * n + k, 3 * n + m)] = -cm[(m, k)];
        }
        rhs[2 * n + k] = -inc_r * delta * nh[k];
        // ∂p/∂z at z = Z
        a[(3 * n + k, n + k)] = i * mh[k] * nh[k];
        for m in 0..n {
            a[(3 * n + k, 2 * n + m)] = -i * ml[m] * e[m] * cm[(m, k)];
            a[(3 * n + k, 3 * n + m)] = i * ml[m] * cm[(m, k)];
        }
        rhs[3 * n + k] = inc_r * delta * i * mh[k] * nh[k];
    }
    let condition = condition_number(&a);
    if !(condition <= CONDITION_LIMIT) {
        return Err(LinerError::MatchingIllConditioned { condition });
    }
    let x = a.lu().solve(&rhs).ok_or(LinerError::MatchingIllConditioned { condition: f64::INFINITY })?;
    let left: Vec<Complex64> = (0..n).map(|k| x[k]).collect();
    let right: Vec<Complex64> = (0..n).map(|k| x[n + k]).collect();
    let (reflected, transmitted) = match side {
        Incidence::Left => (left, right),
        Incidence::Right => (right, left),
    };
    let energy = |amp: &[Complex64]| -> f64 {
        let ref_flux = mh[0].re * nh[0].re;
        (0..n)
            .filter(|&k| mh[k].im == 0.0 && mh[k].re > 0.0)
            .map(|k| amp[k].norm_sqr() * mh[k].re * nh[k].re / ref_flux)
            .sum()
    };
    let t_energy = energy(&transmitted);
    let r_energy = energy(&reflected);
    Ok(ScatteringResult {
        f_hz: omega / (2.0 * PI),
        reflected,
        transmitted,
        t_energy,
        r_energy,
        dissipation: 1.0 - t_energy - r_energy,
        condition,
    })
}

/// One row of a dissipation sweep.
#[derive(Debug)]
pub struct SweepRow {
    pub f_hz: f64,
    /// True for rows inserted at exact chamber poles.
    pub at_pole: bool,
    pub result: Result<ScatteringResult>,
}

/// Frequencies of `f_grid` outside the pole guard bands, plus the exact poles in range.
pub fn puncture_grid(model: &ImpedanceModel, f_grid: &[f64]) -> Vec<(f64, bool)> {
    let mut out: Vec<(f64, bool)> = f_grid
        .iter()
        .filter(|&&f| nearest_pole(&model.geom, &model.gas, f).1 > POLE_GUARD_HZ)
        .map(|&f| (f, false))
        .collect();
    if let (Some(lo), Some(hi)) = (
        f_grid.iter().copied().reduce(f64::min),
        f_grid.iter().copied().reduce(f64::max),
    ) {
        out.extend(pole_frequencies(&model.geom, &model.gas, hi).into_iter().filter(|&p| p >= lo).map(|p| (p, true)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.dedup_by(|a, b| a.0 == b.0);
    out
}

/// T, R, D over `f_grid` for the wall admittance of `model`.
///
/// Frequencies inside a pole guard band are dropped; the exact pole frequencies
/// are inserted with the hard-wall result (β = 0, D = 0). Failures stay in their row.
pub fn dissipation_sweep(config: &DuctConfig, model: &ImpedanceModel, f_grid: &[f64]) -> Vec<SweepRow> {
    puncture_grid(model, f_grid)
        .into_par_iter()
        .map(|(f_hz, at_pole)| {
            let result = if at_pole {
                Ok(ScatteringResult::hard_wall(f_hz, config.modes))
            } else {
                model.admittance(f_hz).and_then(|b| mode_match(config, 2.0 * PI * f_hz, b.beta))
            };
            SweepRow { f_hz, at_pole, result }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub f_hz: f64,
    pub d: f64,
    pub kind: ExtremumKind,
}

/// Interior local extrema of (f, D) by neighbour comparison, refined by the
/// parabola through the three surrounding samples (D kept within [0, 1]).
pub fn find_dissipation_extrema(curve: &[(f64, f64)]) -> Vec<Extremum> {
    let mut out = Vec::new();
    for i in 1..curve.len().saturating_sub(1) {
        let (x0, y0) = curve[i - 1];
        let (x1, y1) = curve[i];
        let (x2, y2) = curve[i + 1];
        let kind = if y1 > y0 && y1 > y2 {
            ExtremumKind::Max
        } else if y1 < y0 && y1 < y2 {
            ExtremumKind::Min
        } else {
            continue;
        };
        // vertex of the interpolating parabola (divided differences)
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let a = (d12 - d01) / (x2 - x0);
        let (f, d) = if a != 0.0 {
            let b = d01 - a * (x0 + x1);
            let xv = (-b / (2.0 * a)).clamp(x0, x2);
            (xv, y0 + d01 * (xv - x0) + a * (xv - x0) * (xv - x1))
        } else {
            (x1, y1)
        };
        out.push(Extremum { f_hz: f, d: d.clamp(0.0, 1.0), kind });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impedance::FnKr;
    use crate::physics::{EndCorrection, GasParameters, LinerGeometry};
    use proptest::prelude::*;
    use std::sync::Arc;

    const C: f64 = 340.45;

    fn cfg(n: usize) -> DuctConfig {
        DuctConfig::new(0.07, 0.069, n, C).unwrap()
    }

    fn w(f: f64) -> f64 {
        2.0 * PI * f
    }

    #[test]
    fn hard_spectrum() {
        let m = hard_modes(0.07, w(1000.0), C, 5);
        assert_eq!(m.alphas[0], Complex64::new(0.0, 0.0));
        assert_eq!(m.mus[0], Complex64::new(w(1000.0) / C, 0.0));
        let cutoff = m.alphas[1].re * C / (2.0 * PI);
        assert!((cutoff - 3.8317059702075123 * C / (2.0 * PI * 0.07)).abs() < 1e-9);
        assert!((cutoff - 2966.0).abs() < 1.0, "{cutoff}");
        assert!(m.mus[1].re == 0.0 && m.mus[1].im > 0.0);
        let above = hard_modes(0.07, w(3100.0), C, 5);
        assert!(above.mus[1].im == 0.0 && above.mus[1].re > 0.0);
        // modal norms against quadrature
        let quad = GaussLegendre::new(NonZeroUsize::new(80).unwrap());
        for (a, nrm) in m.alphas.iter().zip(&m.norms) {
            let q: f64 = quad.integrate(0.0, 0.07, |r| 2.0 * PI * r * j0(a * r).re.powi(2));
            assert!((nrm.re - q).abs() < 1e-12 * q);
        }
    }

    #[test]
    fn lined_reduces_to_hard() {
        let h = hard_modes(0.07, w(500.0), C, 5);
        let l = lined_modes(0.07, w(500.0), C, Complex64::new(0.0, 0.0), 5).unwrap();
        assert_eq!(h, l);
    }

    #[test]
    fn small_admittance_perturbation() {
        let r = 0.07;
        let beta = Complex64::new(0.0, 1e-2 / r);
        let l = lined_modes(r, w(500.0), C, beta, 5).unwrap();
        let predicted = -2.0 * beta / r;
        let got = l.alphas[0] * l.alphas[0];
        assert!((got - predicted).norm() < 0.01 * predicted.norm(), "{got} vs {predicted}");
        for (a, _) in l.alphas.iter().zip(0..) {
            let x = a * r;
            let res = -a * j1(x) - beta * j0(x);
            assert!(res.norm() < 1e-10 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn continuation_handles_stiff_walls() {
        let r = 0.07;
        for beta in [Complex64::new(3e3, 0.0), Complex64::new(-400.0, 0.0), Complex64::new(300.0, 900.0)] {
            let l = lined_modes(r, w(1000.0), C, beta, 5).unwrap();
            for a in &l.alphas {
                let x = a * r;
                let res = (x * j1(x) + beta * r * j0(x)) / ((x * j1(x)).norm() + (beta * r * j0(x)).norm());
                assert!(res.norm() < 1e-10, "beta {beta}: residual {res}");
            }
            for i in 0..5 {
                for j in 0..i {
                    assert!((l.alphas[i] - l.alphas[j]).norm() > 1e-6);
                }
            }
        }
    }

    #[test]
    fn hard_duct_transmits_everything() {
        for f in [50.0, 700.0, 1999.0] {
            let s = mode_match(&cfg(5), w(f), Complex64::new(0.0, 0.0)).unwrap();
            assert!((s.t_energy - 1.0).abs() < 1e-12 && s.r_energy < 1e-24 && s.dissipation.abs() < 1e-12);
        }
    }

    #[test]
    fn reversal_symmetry() {
        let beta = Complex64::new(3.0, 5.0);
        for f in [200.0, 900.0, 1800.0] {
            let l = mode_match_from(&cfg(5), w(f), beta, Incidence::Left).unwrap();
            let r = mode_match_from(&cfg(5), w(f), beta, Incidence::Right).unwrap();
            assert!((l.transmitted[0] - r.transmitted[0]).norm() < 1e-11, "{} {}", l.transmitted[0], r.transmitted[0]);
            assert!((l.reflected[0] - r.reflected[0]).norm() < 1e-11);
        }
    }

    #[test]
    fn branch_flip_breaks_matching() {
        let n = 5;
        let f = w(800.0);
        let lined = lined_modes(0.07, f, C, Complex64::new(1.0, 4.0), n).unwrap();
        for (a, m) in lined.alphas.iter().zip(&lined.mus) {
            assert!(m.im >= 0.0);
            assert!((m * m - (f / C) * (f / C) + a * a).norm() < 1e-9 * (1.0 + m.norm_sqr()));
            // the chosen branch decays: |e^{iμZ}| ≤ 1
            assert!((Complex64::i() * m * 0.069).exp().norm() <= 1.0 + 1e-15);
            assert!((Complex64::i() * (-m) * 0.069).exp().norm() >= 1.0 - 1e-15);
        }
    }

    fn ahm_like(depth: f64) -> ImpedanceModel {
        let geom = LinerGeometry::dc006_star(depth).unwrap();
        let kr = FnKr(|f: f64| Complex64::new(4.3 + f * 6e-4, -0.87 / (1.0 + f / 150.0).sqrt()));
        ImpedanceModel::ahm3v(geom, GasParameters::default(), Arc::new(kr))
    }

    #[test]
    fn pole_insertion_and_low_frequency_limit() {
        let model = ahm_like(0.1);
        let grid: Vec<f64> = (1..=1000).map(|i| 2.0 * i as f64).collect();
        let rows = dissipation_sweep(&cfg(5), &model, &grid);
        let pole = rows.iter().find(|r| r.at_pole).unwrap();
        assert!((pole.f_hz - 1702.25).abs() < 1e-9);
        assert!(pole.result.as_ref().unwrap().dissipation.abs() < 1e-6);
        assert!(rows.iter().all(|r| r.at_pole || nearest_pole(&model.geom, &model.gas, r.f_hz).1 > POLE_GUARD_HZ));
        let beta = model.admittance(1702.25).unwrap().beta;
        assert!(mode_match(&cfg(5), w(1702.25), beta).unwrap().dissipation.abs() < 1e-6);
        let low = model.admittance(2.0).unwrap().beta;
        assert!(mode_match(&cfg(5), w(2.0), low).unwrap().dissipation < 1e-3);
    }

    #[test]
    fn mode_count_convergence_shallow_chamber() {
        let geom = LinerGeometry::dc006_star(0.05).unwrap();
        let model = ImpedanceModel::guess(geom, GasParameters::default(), EndCorrection::Morse, "guess-morse");
        let grid: Vec<f64> = (1..=200).map(|i| 10.0 * i as f64).collect();
        let a = dissipation_sweep(&cfg(5), &model, &grid);
        let b = dissipation_sweep(&cfg(8), &model, &grid);
        for (x, y) in a.iter().zip(&b) {
            let (dx, dy) = (x.result.as_ref().unwrap().dissipation, y.result.as_ref().unwrap().dissipation);
            assert!((dx - dy).abs() <= 1e-3, "{} Hz: {dx} vs {dy}", x.f_hz);
        }
    }

    #[test]
    fn more_modes_approach_a_limit() {
        // strongly absorbing wall near the second resonance: slow but monotone convergence
        let beta = Complex64::new(-13.7, 48.4);
        let d: Vec<f64> = [5, 8, 12, 20].iter().map(|&n| mode_match(&cfg(n), w(1800.0), beta).unwrap().dissipation).collect();
        for k in 1..d.len() - 1 {
            assert!((d[k + 1] - d[k]).abs() < (d[k] - d[k - 1]).abs());
        }
    }

    #[test]
    fn extrema_detection() {
        let curve: Vec<(f64, f64)> = (0..200).map(|i| {
            let f = 2.0 * i as f64;
            (f, (-(f - 101.3f64).powi(2) / 500.0).exp())
        }).collect();
        let e = find_dissipation_extrema(&curve);
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].kind, ExtremumKind::Max);
        assert!((e[0].f_hz - 101.3).abs() < 0.05);
        let mono: Vec<(f64, f64)> = (0..50).map(|i| (i as f64, (i as f64).sqrt())).collect();
        assert!(find_dissipation_extrema(&mono).is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn lossless_wall_conserves_energy(b in -30.0..30.0f64, f in 10.0..2000.0f64) {
            let s = mode_match(&cfg(5), w(f), Complex64::new(b, 0.0)).unwrap();
            prop_assert!((s.t_energy + s.r_energy - 1.0).abs() < 1e-6, "T + R = {}", s.t_energy + s.r_energy);
        }

        #[test]
        fn absorbing_wall_is_passive(bre in -30.0..30.0f64, bim in 1e-3..30.0f64, f in 10.0..2000.0f64) {
            let s = mode_match(&cfg(5), w(f), Complex64::new(bre, bim)).unwrap();
            prop_assert!(s.t_energy >= 0.0 && s.r_energy >= 0.0);
            prop_assert!(s.dissipation >= 0.0 && s.dissipation <= 1.0, "D = {}", s.dissipation);
        }

        #[test]
        fn absorbing_wall_damps_lined_modes(bre in -30.0..30.0f64, bim in 1e-2..30.0f64, f in 10.0..2000.0f64) {
            let l = lined_modes(0.07, w(f), C, Complex64::new(bre, bim), 5).unwrap();
            for m in &l.mus {
                prop_assert!(m.im > 0.0);
            }
        }
    }
}
