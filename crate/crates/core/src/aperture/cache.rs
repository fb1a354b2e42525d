//! CSV cache of effective Rayleigh conductivities, with linear interpolation in f.
//!
//! Values are written with shortest round-trip formatting so a reloaded table
//! reproduces the computed numbers exactly.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::RayleighConductivity;
use crate::error::{LinerError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrRow {
    pub f_hz: f64,
    pub re_kr_per_m: f64,
    pub im_kr_per_m: f64,
    pub provenance: String,
    #[serde(rename = "S_list")]
    pub s_list: String,
    pub mesh_h: f64,
}

impl KrRow {
    pub fn new(f_hz: f64, k: &RayleighConductivity, s_list: &str, mesh_h: f64) -> Self {
        Self {
            f_hz,
            re_kr_per_m: k.k_r.re,
            im_kr_per_m: k.k_r.im,
            provenance: k.provenance.label().to_string(),
            s_list: s_list.to_string(),
            mesh_h,
        }
    }

    pub fn k_r(&self) -> Complex64 {
        Complex64::new(self.re_kr_per_m, self.im_kr_per_m)
    }

    fn check(&self) -> Result<()> {
        if !(self.f_hz > 0.0 && self.f_hz.is_finite()) {
            return Err(LinerError::Cache(format!("row with invalid frequency {}", self.f_hz)));
        }
        if !(self.re_kr_per_m > 0.0 && self.im_kr_per_m < 0.0) {
            return Err(LinerError::Cache(format!(
                "row at {} Hz has k_R = {} {:+}i, violating Re > 0, Im < 0",
                self.f_hz, self.re_kr_per_m, self.im_kr_per_m
            )));
        }
        Ok(())
    }
}

/// Rows sorted by frequency, at most one per frequency.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KrTable {
    rows: Vec<KrRow>,
}

/// Result of a table lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrLookup {
    pub k_r: Complex64,
    /// True when the value lies between two samples.
    pub interpolated: bool,
}

impl KrTable {
    pub fn new(rows: Vec<KrRow>) -> Result<Self> {
        let mut t = Self::default();
        for r in rows {
            t.insert(r)?;
        }
        Ok(t)
    }

    pub fn rows(&self) -> &[KrRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Adds or replaces the row at the same frequency.
    pub fn insert(&mut self, row: KrRow) -> Result<()> {
        row.check()?;
        match self.rows.binary_search_by(|r| r.f_hz.total_cmp(&row.f_hz)) {
            Ok(i) => self.rows[i] = row,
            Err(i) => self.rows.insert(i, row),
        }
        Ok(())
    }

    pub fn get(&self, f_hz: f64) -> Option<&KrRow> {
        self.rows.binary_search_by(|r| r.f_hz.total_cmp(&f_hz)).ok().map(|i| &self.rows[i])
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        Some((self.rows.first()?.f_hz, self.rows.last()?.f_hz))
    }

    /// k_R at `f_hz`, linear in f between neighbouring samples.
    pub fn lookup(&self, f_hz: f64) -> Result<KrLookup> {
        let (lo, hi) = self.range().ok_or(LinerError::CoverageGap { f_hz, min_hz: f64::NAN, max_hz: f64::NAN })?;
        if !(f_hz >= lo && f_hz <= hi) {
            return Err(LinerError::CoverageGap { f_hz, min_hz: lo, max_hz: hi });
        }
        match self.rows.binary_search_by(|r| r.f_hz.total_cmp(&f_hz)) {
            Ok(i) => Ok(KrLookup { k_r: self.rows[i].k_r(), interpolated: false }),
            Err(i) => {
                let (a, b) = (&self.rows[i - 1], &self.rows[i]);
                let t = (f_hz - a.f_hz) / (b.f_hz - a.f_hz);
                Ok(KrLookup { k_r: a.k_r() * (1.0 - t) + b.k_r() * t, interpolated: true })
            }
        }
    }

    pub fn read_from<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.deserialize() {
            let row: KrRow = rec.map_err(|e| LinerError::Cache(e.to_string()))?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn write_to<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r).map_err(|e| LinerError::Cache(e.to_string()))?;
        }
        if self.rows.is_empty() {
            w.write_record(["f_hz", "re_kr_per_m", "im_kr_per_m", "provenance", "S_list", "mesh_h"])
                .map_err(|e| LinerError::Cache(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Loads `path`, or returns an empty table if it does not exist.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::File::open(path) {
            Ok(f) => Self::read_from(std::io::BufReader::new(f)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes atomically through a temporary file in the same directory.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let tmp = path.with_extension("csv.tmp");
        {
            let f = std::fs::File::create(&tmp)?;
            self.write_to(std::io::BufWriter::new(f))?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(f: f64, re: f64, im: f64) -> KrRow {
        KrRow { f_hz: f, re_kr_per_m: re, im_kr_per_m: im, provenance: "extrapolated".into(), s_list: "40;60".into(), mesh_h: 1e-4 }
    }

    #[test]
    fn roundtrip_is_exact() {
        let t = KrTable::new(vec![row(200.0, 4.6123456789012345, -1.1e-1 / 3.0), row(100.0, 4.0, -1.5)]).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("f_hz,re_kr_per_m,im_kr_per_m,provenance,S_list,mesh_h"));
        let back = KrTable::read_from(&buf[..]).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.rows()[0].f_hz, 100.0);
    }

    #[test]
    fn refuses_wrong_signs() {
        let bad = "f_hz,re_kr_per_m,im_kr_per_m,provenance,S_list,mesh_h\n100,4.0,0.5,external,40,0.0001\n";
        assert!(matches!(KrTable::read_from(bad.as_bytes()), Err(LinerError::Cache(_))));
        assert!(KrTable::new(vec![row(1.0, -1.0, -1.0)]).is_err());
    }

    #[test]
    fn interpolation_and_coverage() {
        let t = KrTable::new(vec![row(100.0, 4.0, -2.0), row(200.0, 6.0, -1.0)]).unwrap();
        let l = t.lookup(150.0).unwrap();
        assert!(l.interpolated);
        assert!((l.k_r - Complex64::new(5.0, -1.5)).norm() < 1e-15);
        assert!(!t.lookup(200.0).unwrap().interpolated);
        assert!(matches!(t.lookup(250.0), Err(LinerError::CoverageGap { .. })));
        assert!(KrTable::default().lookup(1.0).is_err());
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("kr.csv");
        assert!(KrTable::load(&p).unwrap().is_empty());
        let t = KrTable::new(vec![row(100.0, 4.0, -2.0)]).unwrap();
        t.save(&p).unwrap();
        assert_eq!(KrTable::load(&p).unwrap(), t);
    }
}
