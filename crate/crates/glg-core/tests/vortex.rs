use glg_core::grid_field::{residual, Grid2D};
use glg_core::stability::{find_critical_points, morse_bott_check};
use glg_core::vortex::{
    embed_vortex, solve_radial_vortex, vortex_decay_fit, vortex_energy, vortex_energy_grid,
    VortexProfile,
};
use glg_core::{Error, LgModel64};
use num_complex::Complex64 as C;
use std::f64::consts::PI;

fn profile(n: u32) -> VortexProfile<f64> {
    solve_radial_vortex(n, 1e-3, 20.0, 2000).unwrap()
}

#[test]
fn winding_zero_is_the_vacuum() {
    let p = profile(0);
    assert!(p.u.iter().all(|u| u.abs() < 1e-12));
    assert!(vortex_energy(&p).abs() < 1e-12);
    let rep = vortex_decay_fit(&p, (6.0, 10.0)).unwrap();
    assert!(rep.passed);
    let g = Grid2D::plane(5.0, 11).unwrap();
    let cfg = embed_vortex(&p, &g).unwrap();
    let norms = residual(&LgModel64::vortex(), &g, &cfg).unwrap().norms(&g, 1, 1, 0);
    assert!(norms.max < 1e-12);
}

#[test]
fn unit_vortex_profile_shape() {
    let p = profile(1);
    assert!(p.u.iter().all(|&u| u <= 0.0));
    for i in 1..p.len() {
        assert!(p.abs_p(i) >= p.abs_p(i - 1));
    }
    assert!(p.u.last().unwrap().abs() < 1e-6);
    // 1 - |P(0+)|^2 = 1
    assert!((2.0 * p.curvature(0) - 1.0).abs() < 1e-5);
    // regular part bounded near the core
    let v0 = p.u[0] - 2.0 * p.x[0];
    let v1 = p.u[50] - 2.0 * p.x[50];
    assert!(v0.is_finite() && (v0 - v1).abs() < 1e-2);
    assert!(p.residual < 1e-10, "{}", p.residual);
}

#[test]
fn double_vortex_has_quartic_log_core() {
    let p = profile(2);
    let slope = (p.u[20] - p.u[0]) / (p.x[20] - p.x[0]);
    assert!((slope - 4.0).abs() < 1e-4, "{slope}");
}

#[test]
fn energy_is_quantized() {
    for n in 1..=3u32 {
        let e = vortex_energy(&profile(n));
        let target = 2.0 * PI * n as f64;
        assert!(((e - target) / target).abs() < 0.01, "n={n}: {e}");
    }
}

#[test]
fn core_field_decays_at_unit_rate() {
    for n in 1..=2u32 {
        let p = profile(n);
        let rep = vortex_decay_fit(&p, (6.0, 10.0)).unwrap();
        assert!(rep.passed, "{}", rep.to_json());
        assert!(rep.get("rate") >= 0.9);
        assert!(rep.get("min_curvature") >= 0.0);
    }
}

#[test]
fn fit_window_without_data_is_unstable() {
    let p = profile(1);
    assert!(matches!(vortex_decay_fit(&p, (30.0, 40.0)), Err(Error::FitUnstable(_))));
}

#[test]
fn embedded_vortex_solves_the_equations_to_second_order() {
    let m = LgModel64::vortex();
    let p = profile(1);
    let mut l2 = vec![];
    let mut moment = vec![];
    for nodes in [81, 161] {
        let g = Grid2D::plane(12.0, nodes).unwrap();
        let cfg = embed_vortex(&p, &g).unwrap();
        let r = residual(&m, &g, &cfg).unwrap();
        l2.push(r.norms(&g, 1, 1, 0).l2);
        moment.push(r.moment.iter().fold(0.0f64, |a, x| a.max(x.abs())));
    }
    let order = (l2[0] / l2[1]).log2();
    assert!(order > 1.8, "{l2:?}");
    assert!((moment[0] / moment[1]).log2() > 1.8, "{moment:?}");
    // residual bounded by C h^2 with a modest constant
    let h = 24.0 / 160.0;
    assert!(l2[1] < 5.0 * h * h, "{l2:?}");
}

#[test]
fn embedded_energy_matches_radial_quadrature() {
    let m = LgModel64::vortex();
    let p = profile(1);
    let g = Grid2D::plane(12.0, 161).unwrap();
    let cfg = embed_vortex(&p, &g).unwrap();
    let e = vortex_energy_grid(&m, &g, &cfg).unwrap();
    assert!((e / (2.0 * PI) - 1.0).abs() < 0.01, "{e}");
}

#[test]
fn grid_larger_than_profile_is_rejected() {
    let p = solve_radial_vortex(1, 1e-3, 12.0, 1000).unwrap();
    let g = Grid2D::plane(12.0, 41).unwrap();
    assert!(matches!(embed_vortex(&p, &g), Err(Error::GridExceedsProfile)));
}

#[test]
fn vortex_model_is_not_stable_yet_has_a_finite_energy_solution() {
    // W = 0: all of C is critical, including the non-free origin
    let m = LgModel64::vortex();
    let q = vec![C::new(1.0, 0.0)];
    assert!(morse_bott_check(&m, &q).is_ok());
    let crit = find_critical_points(&m, &[vec![C::new(1e-3, 0.0)], vec![C::new(0.0, 0.0)], vec![C::new(2.0, 1.0)]]);
    assert!(crit.points.iter().any(|p| !p.is_free_orbit));
    assert!(crit.points.iter().any(|p| p.is_free_orbit));
    // nontrivial solution with energy 2 pi
    assert!(vortex_energy(&profile(1)) > 6.0);
}

#[test]
fn invalid_radii_are_rejected() {
    assert!(solve_radial_vortex(1, 0.0, 20.0, 100).is_err());
    assert!(solve_radial_vortex(1, 1.0, 0.5, 100).is_err());
}

#[test]
fn single_precision_profile() {
    let p = solve_radial_vortex::<f32>(1, 1e-3, 20.0, 2000).unwrap();
    let e = vortex_energy(&p);
    assert!((e / (2.0 * PI) - 1.0).abs() < 0.01, "{e}");
}

#[test]
fn profile_csv_has_documented_columns() {
    let p = profile(1);
    let csv = p.to_csv();
    assert!(csv.starts_with("r,u,abs_p,curvature\n"));
    assert_eq!(csv.lines().count(), p.len() + 1);
}
