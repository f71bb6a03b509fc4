use glg_core::surface_reduction::sphere_zeros::{eval_form, numerator};
use glg_core::surface_reduction::{
    count_critical_orbits, critical_orbit_slice, enumerate_zero_partitions, eta, goodness_check,
    kazdan_warner_solve, punctured_sphere_zeros, residue_check, torus_constant_solution,
    HSurfaceTorus, TorusGrid, WeightFields,
};
use glg_core::Error;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn torus() -> TorusGrid<f64> {
    TorusGrid::unit(64).unwrap()
}

fn weights(g: &TorusGrid<f64>) -> WeightFields<f64> {
    let mut w = WeightFields::constant(g, 1.0, 1.0);
    for k in 0..g.len() {
        let (x, y) = g.coords(k);
        w.w_plus[k] = 1.0 + 0.5 * (2.0 * PI * x).sin();
        w.w_minus[k] = 0.8 + 0.3 * (2.0 * PI * y).cos() * (2.0 * PI * x).cos();
    }
    w
}

fn rhs(g: &TorusGrid<f64>, amp: f64) -> Vec<f64> {
    (0..g.len())
        .map(|k| {
            let (x, y) = g.coords(k);
            amp * ((2.0 * PI * x).sin() * (2.0 * PI * y).cos() + 0.4)
        })
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn kazdan_warner_newton_converges_quadratically() {
    let g = torus();
    let w = weights(&g);
    let (sol, rep) = kazdan_warner_solve(&g, &w, &rhs(&g, 0.7), None, 1e-10).unwrap();
    assert!(sol.residual < 1e-10);
    let direct = eta(&g, &w, &sol.alpha);
    let target = rhs(&g, 0.7);
    assert!(max_diff(&direct, &target) < 1e-10);
    assert!(rep.get("last_ratio") <= 0.1, "{:?}", sol.history);
    assert!(rep.get("second_last_ratio") <= 0.1, "{:?}", sol.history);
    assert!(rep.passed);
}

#[test]
fn kazdan_warner_solution_is_unique() {
    let g = torus();
    let w = weights(&g);
    let target = rhs(&g, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let base = kazdan_warner_solve(&g, &w, &target, None, 1e-10).unwrap().0.alpha;
    for _ in 0..5 {
        let init: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sol = kazdan_warner_solve(&g, &w, &target, Some(&init), 1e-10).unwrap().0;
        assert!(max_diff(&sol.alpha, &base) < 1e-8);
    }
}

#[test]
fn zero_right_hand_side_gives_zero() {
    let g = torus();
    let w = weights(&g);
    let zero = vec![0.0; g.len()];
    let (sol, _) = kazdan_warner_solve(&g, &w, &zero, None, 1e-10).unwrap();
    assert_eq!(sol.iterations, 0);
    assert!(sol.alpha.iter().all(|a| *a == 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let init: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (sol, _) = kazdan_warner_solve(&g, &w, &zero, Some(&init), 1e-13).unwrap();
    assert!(sol.alpha.iter().all(|a| a.abs() < 1e-12));
}

#[test]
fn constant_mode_matches_asinh() {
    let g = torus();
    let w = WeightFields::constant(&g, 1.0, 1.0);
    for cval in [-2.0, -0.3, 0.25, 1.5, 4.0] {
        let (sol, _) = kazdan_warner_solve(&g, &w, &vec![cval; g.len()], None, 1e-12).unwrap();
        let oracle = 0.5 * f64::asinh(cval);
        assert!(sol.alpha.iter().all(|a| (a - oracle).abs() < 1e-10), "{cval}");
    }
}

#[test]
fn solutions_are_monotone_in_the_right_hand_side() {
    let g = torus();
    let w = weights(&g);
    let g1 = rhs(&g, 0.5);
    let g2: Vec<f64> = g1
        .iter()
        .enumerate()
        .map(|(k, x)| x - 0.2 * (1.0 + (k as f64 * 0.1).sin()))
        .collect();
    let a1 = kazdan_warner_solve(&g, &w, &g1, None, 1e-10).unwrap().0.alpha;
    let a2 = kazdan_warner_solve(&g, &w, &g2, None, 1e-10).unwrap().0.alpha;
    assert!(a1.iter().zip(&a2).all(|(x, y)| x - y >= -1e-8));
}

#[test]
fn weights_must_not_vanish_identically() {
    let g = TorusGrid::unit(8).unwrap();
    let w = WeightFields::constant(&g, 1.0, 0.0);
    assert!(matches!(
        kazdan_warner_solve(&g, &w, &vec![0.0; g.len()], None, 1e-10),
        Err(Error::OutOfRange(_))
    ));
    assert!(TorusGrid::<f64>::new((1.0, 2.0), 8, 8).is_err());
}

#[test]
fn critical_orbit_slice_cases() {
    let g = torus();
    let w = weights(&g);
    let curv = vec![0.0; g.len()];
    // matching level
    let level: Vec<f64> = (0..g.len())
        .map(|k| 0.5 * (w.w_plus[k].powi(2) - w.w_minus[k].powi(2)))
        .collect();
    let (sol, _) = critical_orbit_slice(&g, &w, &level, &curv, 1e-10).unwrap();
    assert!(sol.alpha.iter().all(|a| a.abs() < 1e-12));
    // shifted constant level with unit weights
    let ones = WeightFields::constant(&g, 1.0, 1.0);
    let (sol, _) = critical_orbit_slice(&g, &ones, &vec![0.6; g.len()], &curv, 1e-12).unwrap();
    assert!(sol.alpha.iter().all(|a| (a - 0.5 * f64::asinh(0.6)).abs() < 1e-10));
    // varying level: substitute into the original equation
    let delta = rhs(&g, 0.8);
    let (sol, _) = critical_orbit_slice(&g, &w, &delta, &curv, 1e-11).unwrap();
    let lap = g.laplacian(&sol.alpha);
    let worst = (0..g.len()).fold(0.0f64, |m, k| {
        let a = sol.alpha[k];
        let lhs = lap[k]
            + 0.5 * ((2.0 * a).exp() * w.w_plus[k].powi(2) - (-2.0 * a).exp() * w.w_minus[k].powi(2));
        m.max((lhs - delta[k]).abs())
    });
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn torus_constant_symmetric_case_is_exact() {
    let a = C::new(0.6, -0.8);
    let s = torus_constant_solution(a, 0.0).unwrap();
    let cval = 2f64.sqrt();
    assert!((s.p - cval).abs() < 1e-15 && (s.q - cval).abs() < 1e-15);
    assert!(s.rejected_root < 0.0);
    assert!(matches!(torus_constant_solution(C::new(0.0, 0.0), 1.0), Err(Error::DegenerateForm)));
}

#[test]
fn torus_constant_substitution() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let a = C::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let delta = rng.gen_range(-3.0..3.0);
        let s = torus_constant_solution(a, delta).unwrap();
        assert!(s.residual_product < 1e-12 && s.residual_level < 1e-12);
        // independent substitution
        let prod = s.psi_plus.conj() * s.psi_minus - a.conj() * 2f64.sqrt();
        let lvl = 0.5 * (s.psi_plus.norm_sqr() - s.psi_minus.norm_sqr()) - delta;
        assert!(prod.norm() < 1e-12 && lvl.abs() < 1e-12);
        assert!(s.p > 0.0 && s.q > 0.0 && s.rejected_root < 0.0);
    }
}

#[test]
fn orbit_counts_match_enumeration() {
    assert_eq!(count_critical_orbits(2, 1, 0).unwrap(), 2);
    assert_eq!(count_critical_orbits(1, 0, 0).unwrap(), 1);
    assert_eq!(count_critical_orbits(0, 1, 3).unwrap(), 1);
    for g in 0..=4u32 {
        for n in 0..=4u32 {
            let Ok(_) = count_critical_orbits(g, 0, n) else { continue };
            let total = 2 * g + n - 2;
            for d in 0..=total {
                let count = count_critical_orbits(g, d, n).unwrap();
                let subsets = enumerate_zero_partitions(g, d, n).unwrap();
                assert_eq!(count as usize, subsets.len(), "g={g} d={d} n={n}");
            }
            assert!(matches!(count_critical_orbits(g, total + 1, n), Err(Error::OutOfRange(_))));
        }
    }
    assert!(count_critical_orbits(0, 0, 0).is_err());
    assert!(count_critical_orbits(0, 0, 1).is_err());
}

#[test]
fn three_punctures_single_midpoint_zero() {
    let p = [C::new(0.0, 0.0), C::new(1.0, 0.0)];
    let a = [C::new(1.0, 0.0), C::new(1.0, 0.0)];
    let z = punctured_sphere_zeros(&p, &a).unwrap();
    assert_eq!(z.zeros.len(), 1);
    assert!((z.zeros[0] - C::new(0.5, 0.0)).norm() < 1e-14);
    assert!(z.all_simple);
}

#[test]
fn random_punctured_spheres_have_simple_zeros() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in 3..=5usize {
        for _ in 0..20 {
            let p: Vec<C> = (0..n - 1).map(|_| C::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
            let a: Vec<C> = (0..n - 1).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let z = punctured_sphere_zeros(&p, &a).unwrap();
            assert_eq!(z.zeros.len(), n - 2);
            assert!(z.all_simple);
            for root in &z.zeros {
                assert!(eval_form(&p, &a, *root).norm() < 1e-8 * (1.0 + root.norm()));
            }
            assert!(residue_check(&p, &a, 256) < 1e-8);
        }
    }
}

#[test]
fn constructed_double_zero_is_flagged() {
    // N(z) = a1 (z-p2)(z-p3) + a2 (z-p1)(z-p3) + a3 (z-p1)(z-p2); choose a3 so the discriminant vanishes
    let p = [C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 1.0)];
    let (a1, a2) = (C::new(1.0, 0.0), C::new(0.5, 0.3));
    let coeffs = |a3: C| numerator(&p, &[a1, a2, a3]);
    let n0 = coeffs(C::new(0.0, 0.0));
    let n1: Vec<C> = coeffs(C::new(1.0, 0.0)).iter().zip(&n0).map(|(x, y)| x - y).collect();
    // disc(a3) = (B0 + a3 B1)^2 - 4 (A0 + a3 A1)(C0 + a3 C1), ascending coefficients (C, B, A)
    let (c0, b0, aa0) = (n0[0], n0[1], n0[2]);
    let (c1, b1, aa1) = (n1[0], n1[1], n1[2]);
    let qa = b1 * b1 - 4.0 * aa1 * c1;
    let qb = 2.0 * b0 * b1 - 4.0 * (aa0 * c1 + aa1 * c0);
    let qc = b0 * b0 - 4.0 * aa0 * c0;
    let a3 = (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
    let z = punctured_sphere_zeros(&p, &[a1, a2, a3]).unwrap();
    assert_eq!(z.zeros.len(), 2);
    assert!(!z.all_simple, "{z:?}");
}

#[test]
fn vanishing_total_residue_is_degenerate() {
    let p = [C::new(0.0, 0.0), C::new(1.0, 0.0)];
    let a = [C::new(1.0, 0.0), C::new(-1.0, 0.0)];
    assert!(matches!(punctured_sphere_zeros(&p, &a), Err(Error::DegenerateResidues)));
}

#[test]
fn goodness_examples() {
    let h = |l1: f64, l2: f64| HSurfaceTorus { lambda_periods: (l1, l2), nu: 0.0, delta: 0.0 };
    let bad = goodness_check(&h(2.0, 4.0), 10_000);
    assert!(!bad.good);
    assert_eq!(bad.witness, Some((2, -1)));
    let axis = goodness_check(&h(1.0, 0.0), 10_000);
    assert_eq!(axis.witness, Some((0, 1)));
    let good = goodness_check(&h(1.0, 2f64.sqrt()), 10_000);
    assert!(good.good);
    assert!(good.best_pairing.abs() > 0.0);
}

#[test]
fn lambda_coefficient_from_periods() {
    let h = HSurfaceTorus { lambda_periods: (1.0, 3.0), nu: 0.0, delta: 0.0 };
    assert_eq!(h.a(), C::new(1.5, 0.5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn torus_constant_roots(re in -5.0f64..5.0, im in -5.0f64..5.0, delta in -10.0f64..10.0) {
        prop_assume!(re.hypot(im) > 1e-3);
        let s = torus_constant_solution(C::new(re, im), delta).unwrap();
        prop_assert!(s.residual_product < 1e-12 * (1.0 + re.hypot(im)));
        prop_assert!(s.residual_level < 1e-12 * (1.0 + delta.abs()));
        prop_assert!(s.rejected_root <= 0.0);
    }

    #[test]
    fn rational_periods_are_never_good(p in 1i64..50, q in 1i64..50, s in 0.1f64..3.0) {
        let h = HSurfaceTorus { lambda_periods: (s * p as f64, s * q as f64), nu: 0.0, delta: 0.0 };
        let r = goodness_check(&h, 100);
        prop_assert!(!r.good);
        let (c1, c2) = r.witness.unwrap();
        prop_assert_eq!(c1 * p + c2 * q, 0);
    }

    #[test]
    fn constant_mode_oracle(cval in -3.0f64..3.0) {
        let g = TorusGrid::unit(8).unwrap();
        let w = WeightFields::constant(&g, 1.0, 1.0);
        let (sol, _) = kazdan_warner_solve(&g, &w, &vec![cval; g.len()], None, 1e-12).unwrap();
        prop_assert!((sol.alpha[0] - 0.5 * cval.asinh()).abs() < 1e-10);
    }
}
