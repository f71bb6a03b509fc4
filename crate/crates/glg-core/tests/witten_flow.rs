use glg_core::grid_field::{FieldConfig, Grid2D, GridKind};
use glg_core::stability::spectral_gap;
use glg_core::vortex::{embed_vortex, solve_radial_vortex, VortexProfile};
use glg_core::witten_flow::action::{action_gradient, endpoint_defect};
use glg_core::witten_flow::decay::solved_strip;
use glg_core::witten_flow::identities::bochner_fields;
use glg_core::witten_flow::triviality::{disc_mask, random_inits};
use glg_core::witten_flow::*;
use glg_core::{Error, LgModel64, Path1D64};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn fundamental() -> LgModel64 {
    LgModel64::fundamental(C::new(1.0, 0.0))
}

fn q1() -> Vec<C> {
    vec![C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0)]
}

fn unit_vortex() -> &'static VortexProfile<f64> {
    static P: OnceLock<VortexProfile<f64>> = OnceLock::new();
    P.get_or_init(|| solve_radial_vortex(1, 1e-3, 20.0, 2000).unwrap())
}

/// Plane grid with `ns` odd nodes on `[-2, 2]` in `s` and `ns - 1` in `t`.
fn vortex_grid(ns: usize) -> Grid2D<f64> {
    let h = 4.0 / (ns - 1) as f64;
    let th = 0.5 * h * (ns - 2) as f64;
    Grid2D::new(GridKind::Plane, (-th, th), (-2.0, 2.0), ns - 1, ns).unwrap()
}

fn random_config(m: &LgModel64, g: &Grid2D<f64>, seed: u64) -> FieldConfig<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = FieldConfig::constant(g, m.k, &vec![C::new(0.0, 0.0); m.n]);
    for z in cfg.p.iter_mut() {
        *z = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    for a in cfg.a_t.iter_mut().chain(cfg.a_s.iter_mut()) {
        *a = rng.gen_range(-1.0..1.0);
    }
    cfg
}

// ---------------------------------------------------------------- solver

#[test]
fn trivial_boundary_needs_no_iterations() {
    let m = fundamental();
    let g = Grid2D::new(GridKind::Strip, (-0.9, 0.9), (0.0, 2.0), 10, 11).unwrap();
    let cfg = FieldConfig::constant(&g, 1, &q1());
    let (out, rep) = solve_witten(&m, &g, &Dirichlet::edges(&g, cfg.clone()), &cfg, &SolveOptions::default()).unwrap();
    assert_eq!(rep.get("iterations"), 0.0);
    assert_eq!(rep.get("total_l2"), 0.0);
    assert_eq!(out, cfg);
}

#[test]
fn vortex_boundary_data_recovers_the_vortex_at_second_order() {
    let m = LgModel64::vortex();
    let mut errs = Vec::new();
    for ns in [21, 41] {
        let g = vortex_grid(ns);
        let exact = embed_vortex(unit_vortex(), &g).unwrap();
        let init = FieldConfig::constant(&g, 1, &[C::new(1.0, 0.0)]);
        let (cfg, rep) = solve_witten(&m, &g, &Dirichlet::edges(&g, exact.clone()), &init, &SolveOptions::default()).unwrap();
        assert!(rep.passed);
        assert!(rep.get("total_l2") < 1e-10);
        errs.push(cfg.max_diff(&exact));
    }
    // measured 1.91e-3 and 4.79e-4
    assert!(errs[0] < 3e-3, "{errs:?}");
    let order = (errs[0] / errs[1]).log2();
    assert!(order > 1.8, "order {order}");
}

#[test]
fn direct_and_iterative_linear_solves_agree() {
    let m = LgModel64::vortex();
    let g = vortex_grid(65);
    let exact = embed_vortex(unit_vortex(), &g).unwrap();
    let init = FieldConfig::constant(&g, 1, &[C::new(1.0, 0.0)]);
    let b = Dirichlet::edges(&g, exact);
    let run = |linear| {
        let opts = SolveOptions { linear, tol: 1e-11, ..SolveOptions::default() };
        solve_witten(&m, &g, &b, &init, &opts).unwrap()
    };
    let (direct, rd) = run(LinearSolver::Direct);
    let (iter, ri) = run(LinearSolver::Iterative);
    assert!(rd.passed && ri.passed);
    assert!(ri.get("cg_iterations") > 0.0);
    assert!(direct.max_diff(&iter) < 1e-8, "{}", direct.max_diff(&iter));
}

#[test]
fn unconverged_solve_is_an_error_but_best_iterate_is_available() {
    let m = LgModel64::vortex();
    let g = vortex_grid(21);
    let exact = embed_vortex(unit_vortex(), &g).unwrap();
    let init = FieldConfig::constant(&g, 1, &[C::new(1.0, 0.0)]);
    let b = Dirichlet::edges(&g, exact);
    let opts = SolveOptions { max_iter: 1, ..SolveOptions::default() };
    match solve_witten(&m, &g, &b, &init, &opts) {
        Err(Error::NonConvergence { iterations, residual }) => {
            assert_eq!(iterations, 1);
            assert!(residual > 1e-10);
        }
        other => panic!("expected NonConvergence, got {other:?}"),
    }
    let (_, rep) = solve_witten_best(&m, &g, &b, &init, &opts).unwrap();
    assert!(!rep.passed);
    assert!(rep.convergence[1] < rep.convergence[0]);
}

#[test]
fn descent_lowers_the_residual() {
    let m = LgModel64::vortex();
    let g = vortex_grid(21);
    let exact = embed_vortex(unit_vortex(), &g).unwrap();
    let init = FieldConfig::constant(&g, 1, &[C::new(1.0, 0.0)]);
    let opts = SolveOptions { method: Method::Descent, max_iter: 30, ..SolveOptions::default() };
    let (_, rep) = solve_witten_best(&m, &g, &Dirichlet::edges(&g, exact), &init, &opts).unwrap();
    let h = &rep.convergence;
    assert!(h.windows(2).all(|w| w[1] <= w[0]));
    assert!(*h.last().unwrap() < 0.5 * h[0]);
}

#[test]
fn temporal_gauge_also_converges() {
    let m = LgModel64::vortex();
    let g = vortex_grid(21);
    let exact = embed_vortex(unit_vortex(), &g).unwrap();
    let init = FieldConfig::constant(&g, 1, &[C::new(1.0, 0.0)]);
    // a_t of the embedded vortex is not zero, so only the Witten part can vanish
    let opts = SolveOptions { gauge_fix: GaugeFix::None, ..SolveOptions::default() };
    let (_, rep) = solve_witten_best(&m, &g, &Dirichlet::edges(&g, exact), &init, &opts).unwrap();
    assert!(rep.get("residual_l2") < 1e-8, "{}", rep.get("residual_l2"));
}

#[test]
fn solver_rejects_bad_inputs() {
    let m = fundamental();
    let g = Grid2D::new(GridKind::Strip, (-0.9, 0.9), (0.0, 2.0), 10, 11).unwrap();
    let cfg = FieldConfig::constant(&g, 1, &q1());
    let mut b = Dirichlet::edges(&g, cfg.clone());
    b.fixed[0] = false;
    assert!(matches!(solve_witten(&m, &g, &b, &cfg, &SolveOptions::default()), Err(Error::ShapeMismatch(_))));
    let b = Dirichlet::edges(&g, cfg.clone());
    let opts = SolveOptions { tol: 0.0, ..SolveOptions::default() };
    assert!(matches!(solve_witten(&m, &g, &b, &cfg, &opts), Err(Error::Config(_))));
    let mut bad = cfg.clone();
    bad.p[40] = C::new(f64::NAN, 0.0);
    assert!(solve_witten(&m, &g, &b, &bad, &SolveOptions::default()).is_err());
}

#[test]
fn solve_options_deserialize_with_defaults() {
    let o: SolveOptions = serde_json::from_str(r#"{"method":"descent","gauge_fix":"temporal"}"#).unwrap();
    assert_eq!(o.method, Method::Descent);
    assert_eq!(o.gauge_fix, GaugeFix::Temporal);
    assert_eq!(o.tol, SolveOptions::default().tol);
}

// ------------------------------------------------------------ triviality

#[test]
fn triviality_default_experiment_passes() {
    let rep = TrivialityParams::default().run(&fundamental(), &q1()).unwrap();
    assert!(rep.passed, "{}", rep.to_json());
    assert!(rep.get("max_sup_alpha") < 1e-6);
    assert_eq!(rep.series["sup_alpha"].len(), 10);
    assert!(rep.flags["max_principle"]);
}

#[test]
fn zero_initial_field_is_a_fixed_point() {
    let g = Grid2D::plane(10.0, 65).unwrap();
    let fixed = disc_mask(&g, 10.0);
    let rep = triviality_experiment(&fundamental(), &q1(), &g, 10.0, &[vec![0.0; g.len()]], 1e-10).unwrap();
    assert_eq!(rep.series["iterations"], vec![0.0]);
    assert_eq!(rep.get("max_sup_alpha"), 0.0);
    assert!(fixed.iter().filter(|x| !**x).count() > 0);
}

#[test]
fn disc_mask_and_inits_respect_the_disc() {
    let g = Grid2D::plane(10.0, 33).unwrap();
    let fixed = disc_mask(&g, 10.0);
    for j in 0..g.ns {
        for i in 0..g.nt {
            let (t, s): (f64, f64) = (g.t(i), g.s(j));
            let r = (t * t + s * s).sqrt();
            assert_eq!(fixed[g.idx(i, j)], g.is_boundary(i, j) || r >= 10.0 - 1e-9);
        }
    }
    let inits = random_inits::<f64>(&fixed, 3, 0.5, 7);
    for init in &inits {
        assert!(init.iter().all(|a| a.abs() <= 0.5));
        assert!(init.iter().zip(&fixed).all(|(a, &fx)| !fx || *a == 0.0));
    }
    assert_ne!(inits[0], inits[1]);
    assert_eq!(inits, random_inits::<f64>(&fixed, 3, 0.5, 7));
}

#[test]
fn triviality_preconditions() {
    let g = Grid2D::plane(10.0, 17).unwrap();
    let ungauged = LgModel64::ungauged_power(2, C::new(1.0, 0.0));
    assert!(matches!(
        triviality_experiment(&ungauged, &[C::new(0.0, 0.0)], &g, 10.0, &[], 1e-10),
        Err(Error::InvalidModel(_))
    ));
    let off = vec![C::new(2.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0)];
    assert!(matches!(triviality_experiment(&fundamental(), &off, &g, 10.0, &[], 1e-10), Err(Error::NotCritical(_))));
    let short = vec![vec![0.0; 3]];
    assert!(matches!(
        triviality_experiment(&fundamental(), &q1(), &g, 10.0, &short, 1e-10),
        Err(Error::ShapeMismatch(_))
    ));
}

// ----------------------------------------------------------------- decay

#[test]
fn decay_experiment_meets_the_rate_and_envelope() {
    let m = fundamental();
    let rep = decay_experiment(&m, &q1(), &DecayParams::default()).unwrap();
    assert!(rep.passed, "{}", rep.to_json());
    let zeta = spectral_gap(&m, &q1()).unwrap().zeta;
    assert!((rep.get("zeta") - zeta).abs() < 1e-12);
    assert!(rep.get("r2") >= 0.99);
    assert!(rep.get("rate") >= 0.85 * zeta);
    // U is quadratic in a perturbation decaying at kappa = sqrt 2
    assert!((rep.get("rate") - 2.0 * std::f64::consts::SQRT_2).abs() < 0.1, "{}", rep.get("rate"));
    assert!(rep.get("envelope_min_margin") >= -1e-8);
    assert!(rep.get("hypothesis_max") <= 1e-8);
    assert!(rep.get("solve_residual") < 1e-12);
}

#[test]
fn zero_amplitude_gives_trivial_decay() {
    let p = DecayParams { amplitude: 0.0, ..DecayParams::default() };
    let rep = decay_experiment(&fundamental(), &q1(), &p).unwrap();
    assert!(rep.passed);
    assert!(rep.flags["trivial_decay"]);
    assert_eq!(rep.get("max_u_gamma"), 0.0);
}

#[test]
fn even_strip_grids() {
    let g: Grid2D<f64> = even_strip(2.0, 12.0, 0.2).unwrap();
    assert_eq!((g.nt % 2, g.ns), (0, 61));
    assert!((g.h - 0.2).abs() < 1e-12);
    assert!(g.t_range.1 >= 2.0);
    let f = refined_strip(&g).unwrap();
    assert!((f.h - 0.1).abs() < 1e-12);
    assert_eq!(f.nt % 2, 0);
    assert_eq!(f.s_range, g.s_range);
    assert!(even_strip::<f64>(2.0, 12.0, 0.0).is_err());
}

#[test]
fn stable_manifold_strip_is_a_solution_up_to_discretization() {
    let m = fundamental();
    let mut res = Vec::new();
    for (nt, ns) in [(11, 21), (21, 41), (41, 81)] {
        let g = Grid2D::new(GridKind::Strip, (-1.0, 1.0), (0.0, 4.0), nt, ns).unwrap();
        let ex = stable_manifold_strip(&m, &q1(), &g, 0.05, 0.05).unwrap();
        assert!((ex.kappa - std::f64::consts::SQRT_2).abs() < 1e-12);
        res.push(glg_core::grid_field::residual(&m, &g, &ex.cfg).unwrap().norms(&g, 3, 1, 1).l2);
    }
    // second order, reached from below as the grid is refined
    assert!((res[0] / res[1]).log2() > 1.5, "{res:?}");
    assert!((res[1] / res[2]).log2() > 1.75, "{res:?}");
}

// ----------------------------------------------------- maximum principle

fn strip(ns: usize, s_max: f64) -> Grid2D<f64> {
    let h = s_max / (ns - 1) as f64;
    Grid2D::new(GridKind::Strip, (-10.0 * h, 10.0 * h), (0.0, s_max), 21, ns).unwrap()
}

#[test]
fn exponential_is_its_own_envelope() {
    let g = strip(61, 6.0);
    let (zeta, k) = (1.3, 2.0);
    let u: Vec<f64> = (0..g.len()).map(|n| k * (-zeta * g.s(n / g.nt)).exp()).collect();
    let rep = max_principle_envelope(&g, &u, zeta, k, EnvelopeKind::HalfPlane { s0: 0.0 }, 1e-12).unwrap();
    assert!(rep.passed);
    assert!(rep.get("min_margin").abs() < 1e-14);
    // discrete Laplacian of the exponential overshoots by zeta^4 h^2 / 12
    assert!(rep.get("max_hypothesis") <= 0.0);
}

#[test]
fn cosh_envelope_on_a_strip() {
    let g = strip(81, 8.0);
    let (zeta, k, r) = (0.7, 1.5, 4.0);
    let faster = 1.1;
    let u: Vec<f64> =
        (0..g.len()).map(|n| k * (faster * (g.s(n / g.nt) - r)).cosh() / (faster * r).cosh()).collect();
    let rep = max_principle_envelope(&g, &u, zeta, k, EnvelopeKind::Strip { r }, 1e-10).unwrap();
    assert!(rep.passed);
    assert!(rep.get("min_margin") >= -1e-12);
    // the envelope itself is tight at the edges
    let tight: Vec<f64> = (0..g.len()).map(|n| k * (zeta * (g.s(n / g.nt) - r)).cosh() / (zeta * r).cosh()).collect();
    let m = envelope_margins(&g, &tight, zeta, k, EnvelopeKind::Strip { r }).unwrap();
    assert!(m.min_margin.abs() < 1e-14);
}

#[test]
fn slow_decay_violates_the_hypothesis() {
    let g = strip(61, 6.0);
    let zeta = 1.0;
    let u: Vec<f64> = (0..g.len()).map(|n| (-0.5 * g.s(n / g.nt)).exp()).collect();
    match max_principle_envelope(&g, &u, zeta, 1.0, EnvelopeKind::HalfPlane { s0: 0.0 }, 1e-8) {
        Err(Error::HypothesisViolated { excess, .. }) => assert!(excess > 0.5),
        other => panic!("expected HypothesisViolated, got {other:?}"),
    }
}

#[test]
fn envelope_rejects_bad_parameters() {
    let g = strip(11, 1.0);
    let u = vec![0.0; g.len()];
    assert!(envelope_margins(&g, &u, 0.0, 1.0, EnvelopeKind::HalfPlane { s0: 0.0 }).is_err());
    assert!(envelope_margins(&g, &u, 1.0, -1.0, EnvelopeKind::HalfPlane { s0: 0.0 }).is_err());
    assert!(envelope_margins(&g, &u[1..], 1.0, 1.0, EnvelopeKind::HalfPlane { s0: 0.0 }).is_err());
}

// ---------------------------------------------- Bochner and holomorphy

#[test]
fn constant_solution_satisfies_the_identities_exactly() {
    let m = fundamental();
    let g = Grid2D::new(GridKind::Strip, (-1.0, 1.0), (0.0, 2.0), 21, 21).unwrap();
    let cfg = FieldConfig::constant(&g, 1, &q1());
    let b = bochner_fields(&m, &g, &cfg).unwrap();
    assert!(b.total.iter().all(|x| *x == 0.0));
    let rep = bochner_verify(&m, &g, &cfg, &IdentityOptions::default()).unwrap();
    assert!(rep.passed);
    let rep = holomorphy_check(&m, &g, &cfg, &IdentityOptions::default()).unwrap();
    assert!(rep.passed);
    assert_eq!(rep.get("l2_h2"), 0.0);
}

#[test]
fn vortex_bochner_residual_converges() {
    let m = LgModel64::vortex();
    let g = Grid2D::plane(4.0, 81).unwrap();
    let cfg = embed_vortex(unit_vortex(), &g).unwrap();
    let rep = bochner_verify(&m, &g, &cfg, &IdentityOptions::default()).unwrap();
    assert!(rep.passed, "{}", rep.to_json());
    for part in ["total", "t_part", "s_part", "f_part"] {
        assert!(rep.get(&format!("{part}_order")) >= 1.0, "{part}");
    }
    // W = 0: the holomorphy residual vanishes identically
    let rep = holomorphy_check(&m, &g, &cfg, &IdentityOptions::default()).unwrap();
    assert!(rep.passed);
}

#[test]
fn solved_strip_satisfies_the_identities_to_discretization_order() {
    let m = fundamental();
    let opts = SolveOptions { tol: 1e-12, ..SolveOptions::default() };
    let g0: Grid2D<f64> = even_strip(1.0, 4.0, 0.2).unwrap();
    let g1 = refined_strip(&g0).unwrap();
    let (c0, _, r0) = solved_strip(&m, &q1(), &g0, 0.05, 0.05, &opts).unwrap();
    let (c1, _, r1) = solved_strip(&m, &q1(), &g1, 0.05, 0.05, &opts).unwrap();
    assert!(r0.passed && r1.passed);
    let io = IdentityOptions::default();
    let rep = bochner_verify_pair(&m, (&g0, &c0), (&g1, &c1), &io).unwrap();
    assert!(rep.passed, "{}", rep.to_json());
    assert!(rep.get("total_order") >= 1.0);
    let rep = holomorphy_check_pair(&m, (&g0, &c0), (&g1, &c1), &io).unwrap();
    assert!(rep.passed, "{}", rep.to_json());
    assert!(rep.get("order") >= 1.5);
}

#[test]
fn random_configuration_is_rejected_and_has_order_one_residuals() {
    let m = fundamental();
    let g = Grid2D::new(GridKind::Strip, (-1.0, 1.0), (0.0, 2.0), 21, 21).unwrap();
    let cfg = random_config(&m, &g, 3);
    let io = IdentityOptions::default();
    assert!(matches!(bochner_verify(&m, &g, &cfg, &io), Err(Error::InputNotSolution(_))));
    assert!(matches!(holomorphy_check(&m, &g, &cfg, &io), Err(Error::InputNotSolution(_))));
    let b = bochner_fields(&m, &g, &cfg).unwrap();
    let worst = b.total.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    assert!(worst > 1.0, "{worst}");
    let hol = holomorphy_field(&m, &g, &cfg).unwrap();
    assert!(hol.iter().map(|z| z.norm()).fold(0.0, f64::max) > 1.0);
}

#[test]
fn refinement_pair_must_halve_the_spacing() {
    let m = fundamental();
    let g0 = Grid2D::new(GridKind::Strip, (-1.0, 1.0), (0.0, 2.0), 11, 11).unwrap();
    let c0 = FieldConfig::constant(&g0, 1, &q1());
    assert!(matches!(
        bochner_verify_pair(&m, (&g0, &c0), (&g0, &c0), &IdentityOptions::default()),
        Err(Error::ShapeMismatch(_))
    ));
}

// ---------------------------------------------------------------- action

fn delta0() -> Vec<f64> {
    vec![0.0]
}

#[test]
fn constant_path_at_a_critical_point_has_zero_gradient() {
    let m = fundamental();
    let path = Path1D64::constant(&q1(), 1, 6.0, 61).unwrap();
    let (ga, gp) = action_gradient(&m, &path, &delta0()).unwrap();
    assert!(ga.iter().all(|x| x.abs() < 1e-14));
    assert!(gp.iter().all(|z| z.norm() < 1e-14));
    assert_eq!(action_functional(&m, &path, &delta0()).unwrap(), 0.0);
    // the formula gives exactly zero; differences of the discrete action only
    // see its O(h^4) truncation
    let rep = action_gradient_check(&m, &path, &delta0(), 1).unwrap();
    assert!(rep.get("max_absolute_error") < 1e-5);
    assert_eq!(rep.get("gauge_change"), 0.0);
}

#[test]
fn gradient_formula_matches_finite_differences() {
    let m = fundamental();
    for seed in 0..3 {
        let path = Path1D64::perturbed(&q1(), 1, 6.0, 1201, 0.2, seed).unwrap();
        let rep = action_gradient_check(&m, &path, &delta0(), seed).unwrap();
        assert!(rep.passed, "{}", rep.to_json());
        assert!(rep.get("max_relative_error") < 1e-5);
        assert!(rep.get("gauge_change") < 1e-8);
        assert!(rep.get("gradient_sup") > 1e-3);
    }
}

#[test]
fn gauge_transformation_matches_the_group_action() {
    let m = fundamental();
    let path = Path1D64::perturbed(&q1(), 1, 6.0, 61, 0.2, 4).unwrap();
    let u = vec![0.3; path.len()];
    let du = vec![0.0; path.len()];
    let moved = path.gauge(&m, &u, &du).unwrap();
    for i in 0..path.len() {
        let expect = m.gauge_act(&[0.3], path.p_at(i));
        for (a, b) in moved.p_at(i).iter().zip(&expect) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}

#[test]
fn undecayed_endpoint_is_rejected() {
    let m = fundamental();
    let mut path = Path1D64::constant(&q1(), 1, 6.0, 61).unwrap();
    let last = path.len() - 1;
    path.p[last * 3] = C::new(1.5, 0.0);
    assert!(endpoint_defect(&m, &path, &delta0()) > 0.1);
    assert!(matches!(action_gradient_check(&m, &path, &delta0(), 0), Err(Error::EndpointNotDecayed(_))));
}

#[test]
fn paths_need_odd_uniform_grids() {
    assert!(Path1D64::constant(&q1(), 1, 6.0, 60).is_err());
    assert!(Path1D64::constant(&q1(), 1, 6.0, 3).is_err());
    let s = vec![0.0, 1.0, 2.0, 3.5, 4.0];
    assert!(Path1D64::new(s, 1, 1, vec![C::new(0.0, 0.0); 5], vec![0.0; 5]).is_err());
}

// -------------------------------------------------------------- flowline

#[test]
fn quadratic_flow_matches_the_closed_form() {
    let m = LgModel64::ungauged_power(2, C::new(1.0, 0.0));
    let (traj, rep) = gradient_flowline(&m, &[C::new(1.0, 0.0)], 5.0, 1e-3).unwrap();
    assert!(rep.passed);
    for (s, p) in traj.s.iter().zip(&traj.p) {
        assert!((p[0].re - (-2.0 * s).exp()).abs() < 1e-12);
        assert_eq!(p[0].im, 0.0);
    }
    assert!(traj.h.iter().all(|h| *h == 0.0));
}

#[test]
fn critical_start_stays_put() {
    let m = fundamental();
    let (traj, rep) = gradient_flowline(&m, &q1(), 2.0, 1e-2).unwrap();
    assert!(rep.passed);
    assert!(traj.p.iter().all(|p| p == &q1()));
}

#[test]
fn flowlines_conserve_h_in_three_models() {
    let cases: Vec<(LgModel64, Vec<C>)> = vec![
        // L is unbounded below, so starting points sit close to stable directions
        (fundamental(), vec![C::new(1.0 + 1e-4, 2e-5), C::new(1.0 - 3e-5, 1e-4), C::new(-4e-5, 7e-5)]),
        (LgModel64::xy(), vec![C::new(0.8, 0.3), C::new(0.8 + 1e-3, -0.3 + 2e-3)]),
        (LgModel64::ungauged_power(3, C::new(1.0, 0.0)), vec![C::new(0.4, 4e-5)]),
    ];
    for (m, p0) in cases {
        let (_, rep) = gradient_flowline(&m, &p0, 5.0, 1e-3).unwrap_or_else(|e| panic!("{p0:?}: {e}"));
        assert!(rep.passed, "{}", rep.to_json());
        assert!(rep.get("max_delta_h") < 1e-8);
        assert!(rep.get("l_drop") > 0.0);
    }
}

#[test]
fn coarse_step_is_refused() {
    let m = LgModel64::ungauged_power(2, C::new(1.0, 0.0));
    assert!(matches!(gradient_flowline(&m, &[C::new(1.0, 0.0)], 1.0, 0.1), Err(Error::StepTooLarge(_))));
    assert!(gradient_flowline(&m, &[C::new(1.0, 0.0), C::new(0.0, 0.0)], 1.0, 1e-3).is_err());
}

// ----------------------------------------------------------- determinism

#[test]
fn reports_are_reproducible() {
    let m = fundamental();
    let p = TrivialityParams { nodes: 33, inits: 3, ..TrivialityParams::default() };
    assert_eq!(p.run(&m, &q1()).unwrap().to_json(), p.run(&m, &q1()).unwrap().to_json());
    let path = Path1D64::perturbed(&q1(), 1, 6.0, 61, 0.2, 9).unwrap();
    assert_eq!(
        action_gradient_check(&m, &path, &delta0(), 9).unwrap().to_json(),
        action_gradient_check(&m, &path, &delta0(), 9).unwrap().to_json()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prop_l_never_increases_along_quartic_flow(re in -0.2f64..0.2, im in -0.2f64..0.2) {
        let m = LgModel64::ungauged_power(4, C::new(1.0, 0.0));
        let (traj, rep) = gradient_flowline(&m, &[C::new(re, im)], 1.0, 1e-3).unwrap();
        prop_assert!(rep.passed);
        prop_assert!(traj.l.windows(2).all(|w| w[1] <= w[0] + 1e-10));
    }

    #[test]
    fn prop_action_is_gauge_invariant(seed in 0u64..1000, amp in 0.05f64..0.3) {
        let m = fundamental();
        let path = Path1D64::perturbed(&q1(), 1, 4.0, 1201, amp, seed).unwrap();
        let rep = action_gradient_check(&m, &path, &delta0(), seed).unwrap();
        prop_assert!(rep.get("gauge_change") < 1e-8);
    }

    #[test]
    fn prop_exponentials_sit_under_their_envelope(zeta in 0.2f64..2.0, k in 0.1f64..10.0, extra in 0.0f64..1.0) {
        let g = strip(41, 4.0);
        let u: Vec<f64> = (0..g.len()).map(|n| k * (-(zeta + extra) * g.s(n / g.nt)).exp()).collect();
        let m = envelope_margins(&g, &u, zeta, k, EnvelopeKind::HalfPlane { s0: 0.0 }).unwrap();
        prop_assert!(m.min_margin >= -1e-12);
        prop_assert!(m.max_hypothesis <= 1e-12);
    }
}
