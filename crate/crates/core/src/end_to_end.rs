//! End-to-end: Stokes sweep → k_R table → impedance, on a cheap discretisation.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use crate::aperture::{compute_kr, fill_kr_table, KrSettings, KrTable};
use crate::duct::{dissipation_sweep, DuctConfig};
use crate::impedance::{admittance_from_zeta, resonance_frequencies, ImpedanceModel, KrProvider};
use crate::physics::{GasParameters, LinerGeometry};

fn settings() -> KrSettings {
    KrSettings { s_list: vec![8.0, 12.0], target_h: 0.2e-3, bl_layers: 2, max_degree: 2, solver: None }
}

fn geom(depth: f64) -> LinerGeometry {
    LinerGeometry::dc006_star(depth).unwrap()
}

fn table() -> &'static KrTable {
    static T: OnceLock<KrTable> = OnceLock::new();
    T.get_or_init(|| {
        let mut t = KrTable::default();
        let r = fill_kr_table(&mut t, &geom(0.1), &GasParameters::default(), &[100.0, 300.0, 500.0], &settings(), false);
        assert!(r.failures.is_empty() && r.solved == 3);
        t
    })
}

fn ahm(depth: f64, t: KrTable) -> ImpedanceModel {
    ImpedanceModel::ahm3v(geom(depth), GasParameters::default(), Arc::new(t) as Arc<dyn KrProvider>)
}

#[test]
fn sweep_matches_single_frequency_solve() {
    let gas = GasParameters::default();
    let single = compute_kr(&geom(0.1), &gas, 2.0 * PI * 300.0, &settings()).unwrap().k_r;
    let swept = table().get(300.0).unwrap().k_r();
    // the sweep mesh is designed for its highest frequency
    assert!((single - swept).norm() < 5e-3 * single.norm(), "{single} vs {swept}");
    assert!(single.re > 0.0 && single.im < 0.0);
}

#[test]
fn cached_table_reproduces_results() {
    let mut buf = Vec::new();
    table().write_to(&mut buf).unwrap();
    let back = KrTable::read_from(&buf[..]).unwrap();
    let (a, b) = (ahm(0.1, table().clone()), ahm(0.1, back));
    for f in [100.0, 217.0, 300.0, 499.0] {
        assert_eq!(a.zeta(f).unwrap().zeta, b.zeta(f).unwrap().zeta);
    }
}

#[test]
fn impedance_identities_with_solver_data() {
    let gas = GasParameters::default();
    let (short, deep) = (ahm(0.05, table().clone()), ahm(0.2, table().clone()));
    for f in [100.0, 250.0, 300.0, 450.0] {
        let w = 2.0 * PI * f;
        let chamber = |d: f64| 1.0 / (w * d / gas.c).tan() / 0.9;
        let (zs, zd) = (short.zeta(f).unwrap().zeta, deep.zeta(f).unwrap().zeta);
        assert!(zs.re > 0.0 && zd.re == zs.re);
        assert!((zs.im + chamber(0.05) - zd.im - chamber(0.2)).abs() < 1e-12);
        let a = deep.admittance(f).unwrap().beta;
        let b = admittance_from_zeta(&deep.zeta(f).unwrap(), &gas, w).unwrap().beta;
        assert!((a - b).norm() < 1e-12 * a.norm());
        assert!(a.im > 0.0);
    }
}

#[test]
fn resonance_and_dissipation_from_solver_data() {
    let model = ahm(0.1, table().clone());
    let roots = resonance_frequencies(&model, 100.0, 500.0, 0.01).unwrap();
    assert_eq!(roots.len(), 1);
    let (below, above) = (model.zeta(roots[0] - 0.01).unwrap().zeta.im, model.zeta(roots[0] + 0.01).unwrap().zeta.im);
    assert!(below * above <= 0.0, "{roots:?}");
    let duct = DuctConfig::new(0.07, 0.069, 5, 340.45).unwrap();
    let grid: Vec<f64> = (50..=250).map(|i| 2.0 * i as f64).collect();
    let rows = dissipation_sweep(&duct, &model, &grid);
    assert!(rows.iter().all(|r| r.result.as_ref().is_ok_and(|s| (0.0..=1.0).contains(&s.dissipation))));
}
