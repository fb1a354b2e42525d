//! Bessel functions J₀ and J₁ of complex argument, and the zeros of J₁.
//!
//! Ascending series for |z| ≤ 12, Hankel asymptotic expansion beyond.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

const SERIES_RADIUS: f64 = 12.0;

/// J₀(z).
pub fn j0(z: Complex64) -> Complex64 {
    if z.norm() <= SERIES_RADIUS {
        series(z, 0)
    } else if z.re < 0.0 {
        asymptotic(-z, 0)
    } else {
        asymptotic(z, 0)
    }
}

/// J₁(z).
pub fn j1(z: Complex64) -> Complex64 {
    if z.norm() <= SERIES_RADIUS {
        series(z, 1)
    } else if z.re < 0.0 {
        -asymptotic(-z, 1)
    } else {
        asymptotic(z, 1)
    }
}

/// J₁(z)/z, regular at the origin (value 1/2).
pub fn j1_over_z(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        let w = z * z;
        // 1/2 - z²/16 + z⁴/384
        Complex64::new(0.5, 0.0) - w / 16.0 + w * w / 384.0
    } else {
        j1(z) / z
    }
}

fn series(z: Complex64, order: u32) -> Complex64 {
    let q = -(z * z) / 4.0;
    let mut term = if order == 0 { Complex64::new(1.0, 0.0) } else { z / 2.0 };
    let mut sum = term;
    let n = order as f64;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + n));
        sum += term;
        if term.norm() <= 1e-17 * sum.norm().max(1e-300) && kf > z.norm() {
            break;
        }
    }
    sum
}

fn asymptotic(z: Complex64, order: u32) -> Complex64 {
    let mu = 4.0 * (order * order) as f64;
    let mut p = Complex64::new(1.0, 0.0);
    let mut q = Complex64::new(0.0, 0.0);
    let mut coeff = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..80 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        coeff *= (mu - odd * odd) / (kf * 8.0) / z;
        let mag = coeff.norm();
        if mag > last {
            break;
        }
        last = mag;
        // a_k / z^k enters P (even k) or Q (odd k) with alternating signs
        match k % 4 {
            1 => q += coeff,
            2 => p -= coeff,
            3 => q -= coeff,
            _ => p += coeff,
        }
        if mag < 1e-18 {
            break;
        }
    }
    let chi = z - (order as f64) * PI / 2.0 - FRAC_PI_4;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// The first `count` positive zeros of J₁ (equivalently of J₀′).
pub fn j1_zeros(count: usize) -> Vec<f64> {
    (1..=count)
        .map(|n| {
            let beta = (n as f64 + 0.25) * PI;
            let mut x = beta - 3.0 / (8.0 * beta) + 3.0 / (128.0 * beta.powi(3));
            for _ in 0..50 {
                let xc = Complex64::new(x, 0.0);
                let f = j1(xc).re;
                let df = j0(xc).re - f / x;
                let dx = f / df;
                x -= dx;
                if dx.abs() < 1e-15 * x {
                    break;
                }
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Trapezoidal rule on the Bessel integral, spectrally accurate for periodic integrands.
    fn integral_oracle(z: Complex64, order: i32) -> Complex64 {
        let m = 256;
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..m {
            let t = 2.0 * PI * k as f64 / m as f64;
            s += (Complex64::i() * (z * t.sin() - order as f64 * t)).exp();
        }
        s / m as f64
    }

    // reference values computed with mpmath at 30 digits
    #[test]
    fn tabulated_values() {
        let cases = [
            (c(1.0, 0.0), c(0.765197686557966551, 0.0), c(0.440050585744933516, 0.0)),
            (c(3.8317059702075123, 0.0), c(-0.402759395702552972, 0.0), c(0.0, 0.0)),
            (c(2.0, 1.0), c(0.187853728082461716, -0.646169435153980716), c(0.790623392553428336, -0.0799326941677760539)),
            (c(15.0, 0.5), c(-0.0178196985318941917, -0.106818871854495516), c(0.230912697792411002, -0.0148173929211611953)),
            (c(-20.0, 2.0), c(0.615110409328958095, 0.257749234549236437), c(-0.279765370845627149, 0.584450560484821493)),
        ];
        for (z, r0, r1) in cases {
            assert!((j0(z) - r0).norm() < 2e-12, "J0({z}) = {}", j0(z));
            assert!((j1(z) - r1).norm() < 2e-12, "J1({z}) = {}", j1(z));
        }
    }

    #[test]
    fn matches_integral_representation() {
        for &re in &[0.1, 2.7, 7.0, 11.9, 12.1, 18.0, 25.0, 40.0] {
            for &im in &[-3.0, -0.2, 0.0, 0.7, 4.0] {
                let z = c(re, im);
                let scale = z.im.abs().exp();
                assert!((j0(z) - integral_oracle(z, 0)).norm() < 3e-12 * scale, "J0 at {z}");
                assert!((j1(z) - integral_oracle(z, 1)).norm() < 3e-12 * scale, "J1 at {z}");
            }
        }
    }

    #[test]
    fn branches_agree_at_crossover() {
        for k in 0..32 {
            let theta = k as f64 * PI / 16.0 + 0.05;
            let z = Complex64::from_polar(SERIES_RADIUS, theta);
            let w = if z.re < 0.0 { -z } else { z };
            let sign = if z.re < 0.0 { -1.0 } else { 1.0 };
            let scale = z.im.abs().exp();
            assert!((series(z, 0) - asymptotic(w, 0)).norm() < 5e-12 * scale, "J0 at {z}");
            assert!((series(z, 1) - sign * asymptotic(w, 1)).norm() < 5e-12 * scale, "J1 at {z}");
        }
    }

    #[test]
    fn j1_zeros_known() {
        let z = j1_zeros(5);
        let known = [3.8317059702075123, 7.0155866698156188, 10.173468135062722, 13.323691936314223, 16.470630050877633];
        for (a, b) in z.iter().zip(known) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn j1_over_z_regular() {
        assert!((j1_over_z(c(0.0, 0.0)) - c(0.5, 0.0)).norm() < 1e-16);
        let z = c(1e-3, 1e-3);
        assert!((j1_over_z(z) - j1(z) / z).norm() < 1e-13);
    }
}
