use glg_core::grid_field::{
    apply_gauge, covariant_derivatives, covariant_vector_derivative, energies, energy_density,
    read_snapshot, residual, u_gamma_csv, write_snapshot, Dir, FieldConfig, Grid2D, GridKind,
    Region,
};
use glg_core::scalar::jmul;
use glg_core::{Error, LgModel64};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn fundamental() -> LgModel64 {
    LgModel64::fundamental(C::new(1.0, 0.0))
}

fn q1() -> Vec<C> {
    vec![C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0)]
}

fn unit_grid(nodes: usize) -> Grid2D<f64> {
    Grid2D::new(GridKind::Strip, (0.0, 1.0), (0.0, 1.0), nodes, nodes).unwrap()
}

/// Smooth non-solution configuration for consistency studies.
fn smooth_config(m: &LgModel64, g: &Grid2D<f64>) -> FieldConfig<f64> {
    let mut cfg = FieldConfig::constant(g, m.k, &q1());
    for j in 0..g.ns {
        for i in 0..g.nt {
            let (t, s) = (g.t(i), g.s(j));
            let node = g.idx(i, j);
            cfg.p[node * 3] = C::new((t + 2.0 * s).sin(), (t * s).cos());
            cfg.p[node * 3 + 1] = C::new(1.0 + 0.3 * t * t, s.sin());
            cfg.p[node * 3 + 2] = C::new(0.2 * (t - s).cos(), 0.1 * t);
            cfg.a_t[node] = (s + 0.5 * t).sin();
            cfg.a_s[node] = (t * s).cos() + t;
        }
    }
    cfg
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

#[test]
fn grid_requires_square_cells_and_three_nodes() {
    assert!(matches!(
        Grid2D::new(GridKind::Plane, (0.0, 1.0), (0.0, 2.0), 11, 11),
        Err(Error::ShapeMismatch(_))
    ));
    assert!(Grid2D::new(GridKind::Plane, (0.0, 1.0), (0.0, 1.0), 2, 2).is_err());
    let g = Grid2D::with_spacing_of_t(GridKind::HalfPlane, (-2.0, 2.0), (0.0, 12.0), 21).unwrap();
    assert_eq!(g.ns, 61);
    assert!((g.h * (g.ns - 1) as f64 - 12.0).abs() < 1e-12);
}

#[test]
fn constant_configuration_has_vanishing_derived_fields() {
    let m = fundamental();
    let g = unit_grid(9);
    let cfg = FieldConfig::constant(&g, 1, &q1());
    let d = covariant_derivatives(&m, &g, &cfg).unwrap();
    assert!(d.t.iter().chain(&d.s).all(|z| z.norm() == 0.0));
    assert!(d.f.iter().all(|&x| x == 0.0));
    let r = residual(&m, &g, &cfg).unwrap();
    let norms = r.norms(&g, 3, 1, 0);
    assert_eq!(norms.max, 0.0);
    let e = energies(&m, &g, &cfg, None).unwrap();
    assert_eq!(e.total, 0.0);
    assert_eq!(e.total_plane, 0.0);
}

#[test]
fn linear_connection_has_unit_curvature() {
    let m = LgModel64::vortex();
    let g = unit_grid(7);
    let mut cfg = FieldConfig::constant(&g, 1, &[C::new(0.3, 0.1)]);
    for j in 0..g.ns {
        for i in 0..g.nt {
            cfg.a_t[g.idx(i, j)] = g.s(j);
        }
    }
    let d = covariant_derivatives(&m, &g, &cfg).unwrap();
    for x in &d.f {
        assert!((x - 1.0).abs() < 1e-12);
    }
}

#[test]
fn shape_mismatch_is_reported() {
    let m = fundamental();
    let g = unit_grid(9);
    let cfg = FieldConfig::constant(&unit_grid(7), 1, &q1());
    assert!(matches!(covariant_derivatives(&m, &g, &cfg), Err(Error::ShapeMismatch(_))));
    assert!(matches!(residual(&m, &g, &cfg), Err(Error::ShapeMismatch(_))));
}

#[test]
fn random_configuration_has_positive_residual() {
    let m = fundamental();
    let g = unit_grid(9);
    let cfg = smooth_config(&m, &g);
    assert!(residual(&m, &g, &cfg).unwrap().norms(&g, 3, 1, 0).l2 > 1e-2);
}

#[test]
fn pure_gauge_configuration_is_covariantly_constant_to_second_order() {
    let m = fundamental();
    let mut errs = vec![];
    for nodes in [17, 33, 65] {
        let g = unit_grid(nodes);
        let base = FieldConfig::constant(&g, 1, &q1());
        let u: Vec<f64> = (0..g.len())
            .map(|node| {
                let (i, j) = (node % g.nt, node / g.nt);
                (2.0 * g.t(i)).sin() * (g.s(j) + 0.3).cos()
            })
            .collect();
        let cfg = apply_gauge(&m, &g, &base, &u).unwrap();
        let d = covariant_derivatives(&m, &g, &cfg).unwrap();
        let e = d.t.iter().chain(&d.s).fold(0.0f64, |a, z| a.max(z.norm()));
        errs.push(e);
    }
    assert!(order(errs[0], errs[1]) > 1.8, "{errs:?}");
    assert!(order(errs[1], errs[2]) > 1.8, "{errs:?}");
}

#[test]
fn gauge_round_trip_is_identity() {
    let m = fundamental();
    let g = unit_grid(21);
    let cfg = smooth_config(&m, &g);
    let u: Vec<f64> = (0..g.len()).map(|node| 0.7 * (node as f64 * 0.37).sin()).collect();
    let minus: Vec<f64> = u.iter().map(|x| -x).collect();
    let back = apply_gauge(&m, &g, &apply_gauge(&m, &g, &cfg, &u).unwrap(), &minus).unwrap();
    assert!(back.max_diff(&cfg) < 1e-12);
    let same = apply_gauge(&m, &g, &cfg, &vec![0.0; g.len()]).unwrap();
    assert_eq!(same, cfg);
}

#[test]
fn energies_and_residual_are_gauge_invariant_to_second_order() {
    let m = fundamental();
    let mut de = vec![];
    let mut dr = vec![];
    for nodes in [17, 33, 65] {
        let g = unit_grid(nodes);
        let cfg = smooth_config(&m, &g);
        let u: Vec<f64> = (0..g.len())
            .map(|node| {
                let (i, j) = (node % g.nt, node / g.nt);
                (g.t(i) * 1.5).cos() * g.s(j)
            })
            .collect();
        let gcfg = apply_gauge(&m, &g, &cfg, &u).unwrap();
        let e0 = energies(&m, &g, &cfg, None).unwrap();
        let e1 = energies(&m, &g, &gcfg, None).unwrap();
        de.push((e0.total - e1.total).abs());
        let r0 = residual(&m, &g, &cfg).unwrap().norms(&g, 3, 1, 0).l2;
        let r1 = residual(&m, &g, &gcfg).unwrap().norms(&g, 3, 1, 0).l2;
        dr.push((r0 - r1).abs());
    }
    assert!(order(de[1], de[2]) > 1.8, "{de:?}");
    assert!(order(dr[1], dr[2]) > 1.8, "{dr:?}");
}

#[test]
fn covariant_commutator_matches_curvature() {
    // (grad_t grad_s - grad_s grad_t) P + J <grad mu, F> = O(h^2) on a flat target
    let m = fundamental();
    let mut errs = vec![];
    for nodes in [17, 33, 65] {
        let g = unit_grid(nodes);
        let cfg = smooth_config(&m, &g);
        let d = covariant_derivatives(&m, &g, &cfg).unwrap();
        let ts = covariant_vector_derivative(&m, &g, &cfg, &d.s, Dir::T).unwrap();
        let st = covariant_vector_derivative(&m, &g, &cfg, &d.t, Dir::S).unwrap();
        let mut e = 0.0f64;
        for node in 0..g.len() {
            let p = cfg.p_at(node);
            let corr = m.grad_mu_pair(p, &d.f[node..node + 1]);
            for q in 0..3 {
                e = e.max((ts[node * 3 + q] - st[node * 3 + q] + jmul(corr[q])).norm());
            }
        }
        errs.push(e);
    }
    assert!(order(errs[0], errs[1]) >= 1.8, "{errs:?}");
    assert!(order(errs[1], errs[2]) >= 1.8, "{errs:?}");
}

#[test]
fn vector_derivative_of_grad_h_follows_the_chain_rule() {
    let m = fundamental();
    let mut errs = vec![];
    for nodes in [17, 33] {
        let g = unit_grid(nodes);
        let mut cfg = smooth_config(&m, &g);
        cfg.a_t.iter_mut().for_each(|x| *x = 0.0);
        cfg.a_s.iter_mut().for_each(|x| *x = 0.0);
        let v: Vec<C> = (0..g.len()).flat_map(|node| m.grad_h(cfg.p_at(node))).collect();
        let dv = covariant_vector_derivative(&m, &g, &cfg, &v, Dir::T).unwrap();
        let d = covariant_derivatives(&m, &g, &cfg).unwrap();
        let mut e = 0.0f64;
        for node in 0..g.len() {
            let oracle = m.hess_h_apply(cfg.p_at(node), &d.t[node * 3..node * 3 + 3]);
            for q in 0..3 {
                e = e.max((dv[node * 3 + q] - oracle[q]).norm());
            }
        }
        errs.push(e);
    }
    assert!(order(errs[0], errs[1]) > 1.8, "{errs:?}");
    let g = unit_grid(9);
    let cfg = FieldConfig::constant(&g, 1, &q1());
    let v = vec![C::new(0.4, -0.2); g.len() * 3];
    let dv = covariant_vector_derivative(&m, &g, &cfg, &v, Dir::S).unwrap();
    assert!(dv.iter().all(|z| z.norm() < 1e-14));
}

#[test]
fn windows_add_up_and_reject_out_of_bounds() {
    let m = fundamental();
    let g = Grid2D::new(GridKind::HalfPlane, (-4.0, 4.0), (0.0, 8.0), 41, 41).unwrap();
    let cfg = smooth_config(&m, &g);
    let left = Region::window(&g, -2, 0.0).unwrap();
    let right = Region::window(&g, 2, 0.0).unwrap();
    let both = Region::from_coords(&g, (-4.0, 4.0), (0.0, 4.0)).unwrap();
    let el = energies(&m, &g, &cfg, Some(left)).unwrap().total;
    let er = energies(&m, &g, &cfg, Some(right)).unwrap().total;
    let eb = energies(&m, &g, &cfg, Some(both)).unwrap().total;
    assert!((el + er - eb).abs() < 1e-10 * eb.abs().max(1.0));
    assert!(el >= 0.0 && er >= 0.0);
    assert!(matches!(Region::window(&g, 5, 0.0), Err(Error::RegionOutOfBounds)));
    assert!(matches!(Region::window(&g, 0, 6.0), Err(Error::RegionOutOfBounds)));
}

#[test]
fn snapshot_and_csv_round_trip() {
    let m = fundamental();
    let g = unit_grid(9);
    let cfg = smooth_config(&m, &g);
    let dir = std::env::temp_dir().join(format!("glg_snapshot_{}", std::process::id()));
    let stem = dir.join("field");
    write_snapshot(&stem, &m, &g, &cfg).unwrap();
    let (header, back) = read_snapshot::<f64>(&stem).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(header.model_hash, m.hash());
    assert_eq!(header.grid, g.spec());
    let csv = u_gamma_csv(&g, &energy_density(&m, &g, &cfg).unwrap());
    assert_eq!(csv.lines().count(), g.len() + 1);
    assert!(csv.starts_with("t,s,u_gamma\n"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn single_precision_grid_calculus() {
    let m = glg_core::LgModel32::vortex();
    let g = Grid2D::<f32>::new(GridKind::Plane, (0.0, 1.0), (0.0, 1.0), 9, 9).unwrap();
    let mut cfg = FieldConfig::constant(&g, 1, &[num_complex::Complex32::new(1.0, 0.0)]);
    for j in 0..g.ns {
        for i in 0..g.nt {
            cfg.a_t[g.idx(i, j)] = 2.0 * g.s(j);
        }
    }
    let d = covariant_derivatives(&m, &g, &cfg).unwrap();
    assert!(d.f.iter().all(|&x| (x - 2.0).abs() < 1e-5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energies_are_nonnegative_and_sum(seed in 0u64..1000, amp in 0.0f64..2.0) {
        let m = fundamental();
        let g = unit_grid(7);
        let mut cfg = smooth_config(&m, &g);
        for (idx, z) in cfg.p.iter_mut().enumerate() {
            *z *= amp * ((idx as u64 * 7919 + seed) as f64).sin();
        }
        let e = energies(&m, &g, &cfg, None).unwrap();
        prop_assert!(e.e_t >= 0.0 && e.e_jsh >= 0.0 && e.e_f >= 0.0 && e.e_mu >= 0.0);
        prop_assert!((e.total - (e.e_t + e.e_jsh + e.e_f + e.e_mu)).abs() <= 1e-12 * e.total.max(1.0));
    }

    #[test]
    fn gauge_round_trip_random(scale in 0.0f64..3.0, phase in 0.0f64..6.0) {
        let m = fundamental();
        let g = unit_grid(9);
        let cfg = smooth_config(&m, &g);
        let u: Vec<f64> = (0..g.len()).map(|n| scale * (n as f64 * 0.21 + phase).cos()).collect();
        let minus: Vec<f64> = u.iter().map(|x| -x).collect();
        let back = apply_gauge(&m, &g, &apply_gauge(&m, &g, &cfg, &u).unwrap(), &minus).unwrap();
        prop_assert!(back.max_diff(&cfg) < 1e-12);
    }
}
