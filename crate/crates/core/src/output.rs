//! Result tables as CSV: header row, comma separator, 9 significant digits.

use std::io::Write;

use crate::duct::{Extremum, ExtremumKind, SweepRow};
use crate::error::{LinerError, Result};
use crate::impedance::ImpedanceSample;

/// Formats `x` with 9 significant digits, fixed notation for moderate
/// magnitudes and scientific otherwise; trailing zeros are dropped.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..9).contains(&exp) {
        let s = format!("{:.*}", (8 - exp).max(0) as usize, x);
        trim_zeros(&s).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn mm(x_m: f64) -> String {
    fmt_sig(x_m * 1e3)
}

fn csv_err(e: csv::Error) -> LinerError {
    LinerError::Io(std::io::Error::other(e))
}

fn write_table<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row of an impedance curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceRow {
    pub sample: ImpedanceSample,
    pub depth: f64,
    /// k_R came from interpolation between cached samples.
    pub kr_interpolated: bool,
}

pub fn write_impedance<W: Write>(out: W, rows: &[ImpedanceRow]) -> Result<()> {
    write_table(
        out,
        &["f_hz", "re_zeta", "im_zeta", "model", "L_mm", "kr_interpolated"],
        rows.iter().map(|r| {
            vec![
                fmt_sig(r.sample.f_hz),
                fmt_sig(r.sample.zeta.re),
                fmt_sig(r.sample.zeta.im),
                r.sample.model.clone(),
                mm(r.depth),
                r.kr_interpolated.to_string(),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceRow {
    pub model: String,
    pub depth: f64,
    pub root_index: usize,
    pub f_hz: f64,
}

pub fn write_resonances<W: Write>(out: W, rows: &[ResonanceRow]) -> Result<()> {
    write_table(
        out,
        &["model", "L_mm", "root_index", "f_hz"],
        rows.iter().map(|r| vec![r.model.clone(), mm(r.depth), r.root_index.to_string(), fmt_sig(r.f_hz)]),
    )
}

/// Dissipation sweep; the `status` column is `ok`, `pole` (inserted hard-wall
/// row) or `failed: <reason>` with empty numeric fields.
pub fn write_dissipation<W: Write>(out: W, model: &str, depth: f64, modes: usize, rows: &[SweepRow]) -> Result<()> {
    write_table(
        out,
        &["f_hz", "T", "R", "D", "model", "L_mm", "N_modes", "status"],
        rows.iter().map(|r| {
            let (t, rr, d, status) = match &r.result {
                Ok(s) => (
                    fmt_sig(s.t_energy),
                    fmt_sig(s.r_energy),
                    fmt_sig(s.dissipation),
                    if r.at_pole { "pole".to_string() } else { "ok".to_string() },
                ),
                Err(e) => (String::new(), String::new(), String::new(), format!("failed: {e}")),
            };
            vec![fmt_sig(r.f_hz), t, rr, d, model.to_string(), mm(depth), modes.to_string(), status]
        }),
    )
}

pub fn write_extrema<W: Write>(out: W, rows: &[(String, f64, Extremum)]) -> Result<()> {
    write_table(
        out,
        &["model", "L_mm", "kind", "f_hz", "D"],
        rows.iter().map(|(model, depth, e)| {
            let kind = match e.kind {
                ExtremumKind::Max => "max",
                ExtremumKind::Min => "min",
            };
            vec![model.clone(), mm(*depth), kind.to_string(), fmt_sig(e.f_hz), fmt_sig(e.d)]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(367.0), "367");
        assert_eq!(fmt_sig(1702.25), "1702.25");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig(-2.0 / 3.0 * 1e-7), "-6.66666667e-8");
        assert_eq!(fmt_sig(123456789012.0), "1.23456789e11");
        assert_eq!(fmt_sig(99999999.99), "100000000");
        assert_eq!(fmt_sig(0.1947), "0.1947");
    }

    #[test]
    fn impedance_table() {
        let rows = vec![ImpedanceRow {
            sample: ImpedanceSample { f_hz: 10.0, zeta: Complex64::new(0.2, -3.5), model: "guess-morse".into() },
            depth: 0.1,
            kr_interpolated: false,
        }];
        let mut buf = Vec::new();
        write_impedance(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "f_hz,re_zeta,im_zeta,model,L_mm,kr_interpolated\n10,0.2,-3.5,guess-morse,100,false\n"
        );
    }
}
