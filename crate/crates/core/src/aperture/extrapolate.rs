//! Least-squares extrapolation of K_R(S) to S → ∞ with a polynomial in 1/S.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{LinerError, Result};

/// Relative fit residual above which a warning is attached.
pub const RESIDUAL_WARNING: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolation {
    /// Value at 1/S = 0.
    pub value: Complex64,
    /// Fitted coefficients of 1/S, 1/S², … .
    pub coefficients: Vec<Complex64>,
    pub degree: usize,
    /// ‖fit − data‖ / ‖data‖.
    pub relative_residual: f64,
    pub warning: Option<String>,
}

/// Fits K(S) = K∞ + a₁/S + … + a_m/S^m with m = min(n − 1, 2).
pub fn extrapolate_kr(samples: &[(f64, Complex64)]) -> Result<Extrapolation> {
    extrapolate_with_degree(samples, 2)
}

/// As [`extrapolate_kr`] with an upper bound `max_degree` on m.
pub fn extrapolate_with_degree(samples: &[(f64, Complex64)], max_degree: usize) -> Result<Extrapolation> {
    if samples.is_empty() {
        return Err(LinerError::Extrapolation("no samples".into()));
    }
    for (i, a) in samples.iter().enumerate() {
        if !(a.0 > 0.0 && a.0.is_finite()) {
            return Err(LinerError::Extrapolation(format!("S = {} is not positive", a.0)));
        }
        if samples[..i].iter().any(|b| b.0 == a.0) {
            return Err(LinerError::Extrapolation(format!("S = {} appears more than once", a.0)));
        }
    }
    let n = samples.len();
    if n == 1 {
        return Ok(Extrapolation {
            value: samples[0].1,
            coefficients: Vec::new(),
            degree: 0,
            relative_residual: 0.0,
            warning: Some(format!("single truncation radius S = {}; no extrapolation", samples[0].0)),
        });
    }
    let degree = (n - 1).min(max_degree);
    // scaled abscissa keeps the Vandermonde block well conditioned
    let s_min = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let x: Vec<f64> = samples.iter().map(|s| s_min / s.0).collect();
    let a = DMatrix::from_fn(n, degree + 1, |i, j| x[i].powi(j as i32));
    let svd = a.clone().svd(true, true);
    let solve = |rhs: DVector<f64>| {
        svd.solve(&rhs, 1e-14).map_err(|e| LinerError::Extrapolation(e.to_string()))
    };
    let re = solve(DVector::from_iterator(n, samples.iter().map(|s| s.1.re)))?;
    let im = solve(DVector::from_iterator(n, samples.iter().map(|s| s.1.im)))?;
    let coef: Vec<Complex64> = (0..=degree).map(|j| Complex64::new(re[j], im[j])).collect();
    let mut res2 = 0.0;
    let mut norm2 = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let fit: Complex64 = (0..=degree).map(|j| coef[j] * x[i].powi(j as i32)).sum();
        res2 += (fit - s.1).norm_sqr();
        norm2 += s.1.norm_sqr();
    }
    let relative_residual = if norm2 > 0.0 { (res2 / norm2).sqrt() } else { res2.sqrt() };
    let warning = (relative_residual > RESIDUAL_WARNING)
        .then(|| format!("extrapolation residual {relative_residual:.2e} exceeds {RESIDUAL_WARNING:.0e}"));
    let coefficients = (1..=degree).map(|j| coef[j] * s_min.powi(j as i32)).collect();
    Ok(Extrapolation { value: coef[0], coefficients, degree, relative_residual, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    const S: [f64; 5] = [40.0, 45.0, 50.0, 55.0, 60.0];

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_samples() {
        let k = c(1.3e-3, -2.0e-4);
        let s: Vec<_> = S.iter().map(|&x| (x, k)).collect();
        let e = extrapolate_kr(&s).unwrap();
        assert!((e.value - k).norm() <= 1e-13 * k.norm());
        assert!(e.warning.is_none());
    }

    #[test]
    fn exact_first_order() {
        let k = c(0.8, -0.1);
        let s: Vec<_> = S.iter().map(|&x| (x, k + 1.0 / x)).collect();
        let e = extrapolate_kr(&s).unwrap();
        assert!((e.value - k).norm() < 1e-14, "{}", e.value - k);
        assert!((e.coefficients[0] - 1.0).norm() < 1e-11);
    }

    #[test]
    fn noisy_second_order() {
        let k = c(0.8, -0.1);
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let s: Vec<_> = S
            .iter()
            .map(|&x| {
                let noise = c(rng.gen_range(-1e-6..1e-6), rng.gen_range(-1e-6..1e-6));
                (x, k + 1.0 / x + 3.0 / (x * x) + noise)
            })
            .collect();
        let e = extrapolate_kr(&s).unwrap();
        assert!((e.value - k).norm() < 1e-4 * k.norm());
    }

    #[test]
    fn degree_follows_sample_count() {
        let k = c(1.0, -1.0);
        assert_eq!(extrapolate_kr(&[(40.0, k), (60.0, k)]).unwrap().degree, 1);
        assert_eq!(extrapolate_kr(&[(40.0, k)]).unwrap().degree, 0);
    }

    #[test]
    fn duplicates_rejected() {
        let k = c(1.0, -1.0);
        assert!(extrapolate_kr(&[(40.0, k), (40.0, k)]).is_err());
        assert!(extrapolate_kr(&[]).is_err());
    }

    #[test]
    fn residual_warning() {
        let s: Vec<_> = S.iter().enumerate().map(|(i, &x)| (x, c(1.0 + 0.01 * (i % 2) as f64, 0.0))).collect();
        assert!(extrapolate_kr(&s).unwrap().warning.is_some());
    }

    proptest! {
        #[test]
        fn recovers_quadratic(k_re in -5.0..5.0f64, k_im in -5.0..5.0f64, a in -50.0..50.0f64, b in -500.0..500.0f64) {
            let k = c(k_re, k_im);
            let s: Vec<_> = S.iter().map(|&x| (x, k + a / x + b / (x * x))).collect();
            let e = extrapolate_kr(&s).unwrap();
            prop_assert!((e.value - k).norm() < 1e-10 * (1.0 + a.abs() + b.abs()));
        }
    }
}
