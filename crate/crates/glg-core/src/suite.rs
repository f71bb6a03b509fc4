//! The acceptance battery: thirteen criteria, each producing one report whose
//! flags are the pass conditions. Reports carry no timings; the runner measures
//! wall time separately so that reports stay byte-identical across runs.

use crate::error::{Error, Result};
use crate::grid_field::{FieldConfig, Grid2D, GridKind};
use crate::lg_core::{identity_suite, random_samples, LgModel};
use crate::report::ExperimentReport;
use crate::stability::{assemble_extended_hessian, spectral_gap, spectrum_asymmetry};
use crate::surface_reduction::{
    count_critical_orbits, enumerate_zero_partitions, eta, goodness_check, kazdan_warner_solve,
    punctured_sphere_zeros, residue_check, torus_constant_solution, HSurfaceTorus, TorusGrid, WeightFields,
};
use crate::vortex::{embed_vortex, solve_radial_vortex, vortex_decay_fit, vortex_energy};
use crate::witten_flow::decay::solved_strip;
use crate::witten_flow::identities::{bochner_fields, holomorphy_field};
use crate::witten_flow::{
    action_gradient_check, bochner_verify, bochner_verify_pair, decay_experiment, even_strip, gradient_flowline,
    holomorphy_check, holomorphy_check_pair, refined_strip, DecayParams, IdentityOptions, SolveOptions,
    TrivialityParams,
};
use crate::{LgModel64, Path1D64, TOOL_VERSION};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Halved grids.
    Quick,
    Full,
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Profile::Quick),
            "full" => Ok(Profile::Full),
            other => Err(Error::Config(format!("unknown profile `{other}` (quick | full)"))),
        }
    }
}

impl Profile {
    fn pick<X>(self, quick: X, full: X) -> X {
        match self {
            Profile::Quick => quick,
            Profile::Full => full,
        }
    }
}

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    /// Runtime budget in seconds for the full profile.
    pub budget: f64,
    run: fn(Profile) -> Result<ExperimentReport>,
}

impl Criterion {
    /// Never fails: errors become a failed report carrying the message.
    pub fn report(&self, profile: Profile) -> ExperimentReport {
        let name = format!("criterion_{:02}_{}", self.id, self.name);
        match (self.run)(profile) {
            Ok(mut rep) => {
                rep.name = name;
                rep
            }
            Err(e) => {
                let mut rep = ExperimentReport::new(&name, &(self.id, profile));
                rep.note(e.to_string());
                rep.flag("completed", false);
                rep
            }
        }
    }
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, name: "identities", budget: 1.0, run: identities },
        Criterion { id: 2, name: "extended_hessian", budget: 1.0, run: extended_hessian },
        Criterion { id: 3, name: "derivative_oracles", budget: 5.0, run: derivative_oracles },
        Criterion { id: 4, name: "triviality", budget: 30.0, run: triviality },
        Criterion { id: 5, name: "decay", budget: 60.0, run: decay },
        Criterion { id: 6, name: "vortex", budget: 10.0, run: vortex },
        Criterion { id: 7, name: "bochner_holomorphy", budget: 60.0, run: bochner_holomorphy },
        Criterion { id: 8, name: "kazdan_warner", budget: 20.0, run: kazdan_warner },
        Criterion { id: 9, name: "torus_constant", budget: 1.0, run: torus_constant },
        Criterion { id: 10, name: "counting", budget: 5.0, run: counting },
        Criterion { id: 11, name: "flow_conservation", budget: 5.0, run: flow_conservation },
        Criterion { id: 12, name: "goodness", budget: 1.0, run: goodness },
        Criterion { id: 13, name: "determinism", budget: f64::INFINITY, run: determinism },
    ]
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub report: ExperimentReport,
    pub seconds: f64,
    pub budget: f64,
}

impl Outcome {
    pub fn within_budget(&self) -> bool {
        self.seconds <= self.budget
    }

    /// Budgets only bind the full profile.
    pub fn passed(&self, profile: Profile) -> bool {
        self.report.passed && (profile == Profile::Quick || self.within_budget())
    }

    pub fn line(&self, profile: Profile) -> String {
        let verdict = if self.passed(profile) { "PASS" } else { "FAIL" };
        let failed: Vec<&str> = self.report.flags.iter().filter(|(_, &ok)| !ok).map(|(k, _)| k.as_str()).collect();
        let budget = if self.budget.is_finite() { format!(", budget {} s", self.budget) } else { String::new() };
        let mut line = format!("{verdict} {:>2} {} ({:.2} s{budget})", self.id, self.name, self.seconds);
        if !failed.is_empty() {
            line.push_str(&format!(" failed: {}", failed.join(", ")));
        }
        if profile == Profile::Full && !self.within_budget() {
            line.push_str(" over budget");
        }
        line
    }
}

pub fn run_criterion(c: &Criterion, profile: Profile) -> Outcome {
    let start = Instant::now();
    let report = c.report(profile);
    Outcome { id: c.id, name: c.name, report, seconds: start.elapsed().as_secs_f64(), budget: c.budget }
}

/// Runs the criteria whose ids are in `only` (all when empty), in order, or
/// concurrently when `parallel` is set (timings then include contention). The
/// determinism criterion reruns each member that already ran once and compares
/// against the first report.
pub fn run_suite(profile: Profile, only: &[u8], parallel: bool) -> Vec<Outcome> {
    let all = criteria();
    let selected = |id: u8| only.is_empty() || only.contains(&id);
    let members: Vec<&Criterion> = all.iter().filter(|c| c.id != 13 && selected(c.id)).collect();
    let mut out: Vec<Outcome> = if parallel {
        members.par_iter().map(|c| run_criterion(c, profile)).collect()
    } else {
        members.iter().map(|c| run_criterion(c, profile)).collect()
    };
    if selected(13) {
        let start = Instant::now();
        let mut report = if out.is_empty() {
            determinism(profile).unwrap_or_else(|e| {
                let mut r = ExperimentReport::new("determinism", &profile);
                r.note(e.to_string());
                r.flag("completed", false);
                r
            })
        } else {
            let mut rep = ExperimentReport::new("determinism", &profile);
            for o in &out {
                let c = &all[(o.id - 1) as usize];
                let again = c.report(profile).to_json();
                rep.flag(&format!("{:02}_{}_identical", c.id, c.name), again == o.report.to_json());
            }
            rep
        };
        report.name = "criterion_13_determinism".into();
        out.push(Outcome { id: 13, name: "determinism", report, seconds: start.elapsed().as_secs_f64(), budget: f64::INFINITY });
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct Scorecard {
    pub tool_version: String,
    pub profile: Profile,
    pub passed: bool,
    pub members: Vec<ScorecardEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScorecardEntry {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub report: ExperimentReport,
}

/// Consolidated scorecard; verdicts ignore budgets so the JSON is reproducible.
pub fn scorecard(profile: Profile, outcomes: &[Outcome]) -> Scorecard {
    let members: Vec<ScorecardEntry> = outcomes
        .iter()
        .map(|o| ScorecardEntry { id: o.id, name: o.name.to_string(), passed: o.report.passed, report: o.report.clone() })
        .collect();
    Scorecard {
        tool_version: TOOL_VERSION.to_string(),
        profile,
        passed: members.iter().all(|m| m.passed),
        members,
    }
}

// ---------------------------------------------------------------------------

const SEED: u64 = 20_240_601;

fn fundamental(lambda: f64) -> LgModel64 {
    LgModel::fundamental(C::new(lambda, 0.0))
}

fn q1() -> Vec<C> {
    vec![C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0)]
}

/// Copies scalars and flags of `member` under `prefix`.
fn absorb(rep: &mut ExperimentReport, prefix: &str, member: &ExperimentReport) {
    for (k, v) in &member.scalars {
        rep.scalar(&format!("{prefix}.{k}"), *v);
    }
    for (k, v) in &member.flags {
        rep.flag(&format!("{prefix}.{k}"), *v);
    }
    for n in &member.notes {
        rep.note(format!("{prefix}: {n}"));
    }
}

fn presets() -> Vec<(&'static str, LgModel64)> {
    vec![
        ("vortex", LgModel::vortex()),
        ("xy", LgModel::xy()),
        ("fundamental_1", fundamental(1.0)),
        ("fundamental_0", fundamental(0.0)),
    ]
}

fn identities(_: Profile) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("identities", &(SEED, 100, 2.0)).seed(SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for (name, m) in presets() {
        let r = identity_suite(&m, &random_samples(&m, &mut rng, 100, 2.0));
        rep.scalar(&format!("{name}_max_residual"), r.max());
        rep.flag(&format!("{name}_below_1e-10"), r.max() < 1e-10);
    }
    Ok(rep)
}

fn extended_hessian(_: Profile) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("extended_hessian", &());
    let cases = [
        ("fundamental_1_critical", fundamental(1.0), q1()),
        ("fundamental_1_generic", fundamental(1.0), vec![C::new(0.3, 0.2), C::new(-0.7, 1.1), C::new(0.4, -0.9)]),
        ("fundamental_0_origin", fundamental(0.0), vec![C::new(0.0, 0.0); 3]),
        ("xy_generic", LgModel::xy(), vec![C::new(0.5, 0.1), C::new(0.2, -0.3)]),
        ("vortex_unit", LgModel::vortex(), vec![C::new(1.0, 0.0)]),
    ];
    for (name, m, q) in cases {
        let e = assemble_extended_hessian(&m, &q);
        let ev = e.eigenvalues();
        let min_abs = ev.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
        rep.scalar(&format!("{name}.sigma_square_defect"), e.sigma_square_defect());
        rep.scalar(&format!("{name}.anticommutator_defect"), e.anticommutator_defect());
        rep.scalar(&format!("{name}.spectrum_asymmetry"), spectrum_asymmetry(&ev));
        rep.scalar(&format!("{name}.min_abs_eigenvalue"), min_abs);
        rep.flag(&format!("{name}.sigma_squared_is_minus_identity"), e.sigma_square_defect() == 0.0);
        rep.flag(&format!("{name}.anticommutes_1e-12"), e.anticommutator_defect() < 1e-12);
        rep.flag(&format!("{name}.spectrum_symmetric_1e-9"), spectrum_asymmetry(&ev) < 1e-9);
        match name {
            "fundamental_1_critical" => rep.flag("fundamental_1_critical.invertible", min_abs > 1e-8),
            "fundamental_0_origin" => rep.flag("fundamental_0_origin.singular", min_abs < 1e-12),
            _ => {}
        }
    }
    Ok(rep)
}

fn unit(n: usize, col: usize) -> Vec<C> {
    let mut v = vec![C::new(0.0, 0.0); n];
    if col % 2 == 0 {
        v[col / 2].re = 1.0;
    } else {
        v[col / 2].im = 1.0;
    }
    v
}

fn shift(q: &[C], v: &[C], s: f64) -> Vec<C> {
    q.iter().zip(v).map(|(a, b)| a + b * s).collect()
}

fn rel(a: &[C], b: &[C]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

/// Extended Hessian rebuilt from central differences of `mu` and `grad L`.
fn fd_extended_hessian(m: &LgModel64, q: &[C], h: f64) -> DMatrix<f64> {
    let (k, n) = (m.k, m.n);
    let mut d = DMatrix::zeros(2 * k + 2 * n, 2 * k + 2 * n);
    let dmu = |v: &[C], a: usize| (m.moment_map(&shift(q, v, h))[a] - m.moment_map(&shift(q, v, -h))[a]) / (2.0 * h);
    for col in 0..2 * n {
        let v = unit(n, col);
        let jv: Vec<C> = v.iter().map(|x| C::new(-x.im, x.re)).collect();
        for a in 0..k {
            let g = dmu(&v, a);
            d[(a, 2 * k + col)] = g;
            d[(2 * k + col, a)] = g;
            d[(k + a, 2 * k + col)] = -dmu(&jv, a);
            d[(2 * k + col, k + a)] = -dmu(&jv, a);
        }
        let (gp, gm) = (m.grad_l(&shift(q, &v, h)), m.grad_l(&shift(q, &v, -h)));
        for j in 0..n {
            let dd = (gp[j] - gm[j]) / (2.0 * h);
            d[(2 * k + 2 * j, 2 * k + col)] = dd.re;
            d[(2 * k + 2 * j + 1, 2 * k + col)] = dd.im;
        }
    }
    d
}

fn derivative_oracles(_: Profile) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("derivative_oracles", &SEED).seed(SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let models = [
        ("fundamental_1", fundamental(1.0)),
        ("xy", LgModel::xy()),
        ("cubic", LgModel::ungauged_power(3, C::new(1.0, 0.0))),
    ];
    let h = 1e-5;
    for (name, m) in &models {
        let (mut worst_grad, mut worst_hess, mut worst_d) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..20 {
            let z = m.random_point(&mut rng, 1.0);
            let v = m.random_point(&mut rng, 1.0);
            let fd_grad: Vec<C> = (0..m.n)
                .map(|j| {
                    let d = |col| (m.eval_l(&shift(&z, &unit(m.n, col), h)) - m.eval_l(&shift(&z, &unit(m.n, col), -h))) / (2.0 * h);
                    C::new(d(2 * j), d(2 * j + 1))
                })
                .collect();
            worst_grad = worst_grad.max(rel(&fd_grad, &m.grad_l(&z)));
            let (gp, gm) = (m.grad_l(&shift(&z, &v, h)), m.grad_l(&shift(&z, &v, -h)));
            let fd_hess: Vec<C> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            worst_hess = worst_hess.max(rel(&fd_hess, &m.hess_l_apply(&z, &v)));
            let exact = assemble_extended_hessian(m, &z).matrix;
            worst_d = worst_d.max((&exact - fd_extended_hessian(m, &z, h)).norm() / exact.norm().max(1e-300));
        }
        rep.scalar(&format!("{name}.grad_l_rel"), worst_grad);
        rep.scalar(&format!("{name}.hess_l_rel"), worst_hess);
        rep.scalar(&format!("{name}.extended_hessian_rel"), worst_d);
        rep.flag(&format!("{name}.grad_l_1e-6"), worst_grad < 1e-6);
        rep.flag(&format!("{name}.hess_l_1e-6"), worst_hess < 1e-6);
        rep.flag(&format!("{name}.extended_hessian_1e-6"), worst_d < 1e-6);
    }
    let m = fundamental(1.0);
    let mut worst = 0.0f64;
    let mut gauge = 0.0f64;
    for seed in 0..3 {
        let path = Path1D64::perturbed(&q1(), 1, 6.0, 1201, 0.2, seed)?;
        let r = action_gradient_check(&m, &path, &[0.0], seed)?;
        worst = worst.max(r.get("max_relative_error"));
        gauge = gauge.max(r.get("gauge_change"));
    }
    rep.scalar("action.max_relative_error", worst);
    rep.scalar("action.gauge_change", gauge);
    rep.flag("action.gradient_1e-5", worst < 1e-5);
    rep.flag("action.gauge_invariant_1e-8", gauge < 1e-8);
    Ok(rep)
}

fn triviality(p: Profile) -> Result<ExperimentReport> {
    let params = TrivialityParams { nodes: p.pick(65, 129), ..TrivialityParams::default() };
    let member = params.run(&fundamental(1.0), &q1())?;
    let mut rep = ExperimentReport::new("triviality", &params).seed(params.seed);
    absorb(&mut rep, "triviality", &member);
    rep.flag("sup_alpha_below_1e-6", member.get("max_sup_alpha") < 1e-6);
    Ok(rep)
}

fn decay(p: Profile) -> Result<ExperimentReport> {
    let params = DecayParams { h: p.pick(0.4, 0.2), ..DecayParams::default() };
    let m = fundamental(1.0);
    let member = decay_experiment(&m, &q1(), &params)?;
    let zeta = spectral_gap(&m, &q1())?.zeta;
    let mut rep = ExperimentReport::new("decay", &params);
    absorb(&mut rep, "decay", &member);
    rep.scalar("zeta", zeta);
    rep.flag("r2_at_least_0.99", member.get("r2") >= 0.99);
    rep.flag("rate_at_least_0.85_zeta", member.get("rate") >= 0.85 * zeta);
    rep.flag("envelope_margin_at_least_-1e-8", member.get("envelope_min_margin") >= -1e-8);
    Ok(rep)
}

fn vortex(p: Profile) -> Result<ExperimentReport> {
    let nodes = p.pick(1000, 2000);
    let mut rep = ExperimentReport::new("vortex", &nodes);
    for n in 1..=3u32 {
        let prof = solve_radial_vortex(n, 1e-3, 20.0, nodes)?;
        let target = 2.0 * PI * n as f64;
        let err = ((vortex_energy(&prof) - target) / target).abs();
        rep.scalar(&format!("n{n}.energy_rel_error"), err);
        rep.flag(&format!("n{n}.energy_within_1pc"), err < 0.01);
        let fit = vortex_decay_fit(&prof, (6.0, 10.0))?;
        rep.scalar(&format!("n{n}.rate"), fit.get("rate"));
        rep.scalar(&format!("n{n}.min_curvature"), fit.get("min_curvature"));
        rep.flag(&format!("n{n}.rate_at_least_0.9"), fit.get("rate") >= 0.9);
        rep.flag(&format!("n{n}.curvature_nonnegative"), fit.get("min_curvature") >= 0.0);
    }
    Ok(rep)
}

fn bochner_holomorphy(p: Profile) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("bochner_holomorphy", &SEED).seed(SEED);
    let io = IdentityOptions::default();
    // embedded unit vortex
    let m = LgModel::vortex();
    let prof = solve_radial_vortex(1, 1e-3, 20.0, 2000)?;
    let g = Grid2D::plane(4.0, p.pick(41, 81))?;
    let cfg = embed_vortex(&prof, &g)?;
    absorb(&mut rep, "vortex.bochner", &bochner_verify(&m, &g, &cfg, &io)?);
    absorb(&mut rep, "vortex.holomorphy", &holomorphy_check(&m, &g, &cfg, &io)?);
    // solved strip
    let m = fundamental(1.0);
    let opts = SolveOptions { tol: 1e-12, ..SolveOptions::default() };
    let g0: Grid2D<f64> = even_strip(1.0, 4.0, p.pick(0.4, 0.2))?;
    let g1 = refined_strip(&g0)?;
    let (c0, _, _) = solved_strip(&m, &q1(), &g0, 0.05, 0.05, &opts)?;
    let (c1, _, _) = solved_strip(&m, &q1(), &g1, 0.05, 0.05, &opts)?;
    absorb(&mut rep, "strip.bochner", &bochner_verify_pair(&m, (&g0, &c0), (&g1, &c1), &io)?);
    absorb(&mut rep, "strip.holomorphy", &holomorphy_check_pair(&m, (&g0, &c0), (&g1, &c1), &io)?);
    // random non-solution
    let g = Grid2D::new(GridKind::Strip, (-1.0, 1.0), (0.0, 2.0), 21, 21)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut cfg = FieldConfig::constant(&g, m.k, &[C::new(0.0, 0.0); 3]);
    for z in cfg.p.iter_mut() {
        *z = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    for a in cfg.a_t.iter_mut().chain(cfg.a_s.iter_mut()) {
        *a = rng.gen_range(-1.0..1.0);
    }
    let bochner_sup = bochner_fields(&m, &g, &cfg)?.total.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let holo_sup = holomorphy_field(&m, &g, &cfg)?.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    rep.scalar("control.bochner_sup", bochner_sup);
    rep.scalar("control.holomorphy_sup", holo_sup);
    rep.flag("control.bochner_order_one", bochner_sup > 0.1);
    rep.flag("control.holomorphy_order_one", holo_sup > 0.1);
    rep.flag("control.rejected", matches!(bochner_verify(&m, &g, &cfg, &io), Err(Error::InputNotSolution(_))));
    Ok(rep)
}

fn kazdan_warner(p: Profile) -> Result<ExperimentReport> {
    let g = TorusGrid::unit(p.pick(32, 64))?;
    let mut w = WeightFields::constant(&g, 1.0, 1.0);
    let mut rhs = vec![0.0; g.len()];
    for k in 0..g.len() {
        let (x, y) = g.coords(k);
        w.w_plus[k] = 1.0 + 0.5 * (2.0 * PI * x).sin();
        w.w_minus[k] = 0.8 + 0.3 * (2.0 * PI * y).cos() * (2.0 * PI * x).cos();
        rhs[k] = 0.7 * ((2.0 * PI * x).sin() * (2.0 * PI * y).cos() + 0.4);
    }
    let mut rep = ExperimentReport::new("kazdan_warner", &(g.n1, SEED)).seed(SEED);
    let (base, member) = kazdan_warner_solve(&g, &w, &rhs, None, 1e-10)?;
    absorb(&mut rep, "newton", &member);
    let direct = eta(&g, &w, &base.alpha).iter().zip(&rhs).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    rep.scalar("substituted_residual", direct);
    rep.flag("residual_below_1e-10", direct < 1e-10);
    rep.flag("quadratic_contraction", member.get("last_ratio") <= 0.1 && member.get("second_last_ratio") <= 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut spread = 0.0f64;
    for _ in 0..5 {
        let init: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sol = kazdan_warner_solve(&g, &w, &rhs, Some(&init), 1e-10)?.0;
        spread = spread.max(sol.alpha.iter().zip(&base.alpha).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())));
    }
    rep.scalar("uniqueness_spread", spread);
    rep.flag("unique_1e-8", spread < 1e-8);
    let init: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let zero = kazdan_warner_solve(&g, &w, &vec![0.0; g.len()], Some(&init), 1e-13)?.0;
    let zero_sup = zero.alpha.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    rep.scalar("zero_rhs_sup", zero_sup);
    rep.flag("zero_rhs_gives_zero_1e-12", zero_sup < 1e-12);
    let ones = WeightFields::constant(&g, 1.0, 1.0);
    let mut worst = 0.0f64;
    for cval in [-2.0, -0.3, 0.25, 1.5, 4.0] {
        let sol = kazdan_warner_solve(&g, &ones, &vec![cval; g.len()], None, 1e-12)?.0;
        let oracle = 0.5 * f64::asinh(cval);
        worst = worst.max(sol.alpha.iter().fold(0.0f64, |a, x| a.max((x - oracle).abs())));
    }
    rep.scalar("constant_mode_error", worst);
    rep.flag("constant_mode_asinh_1e-10", worst < 1e-10);
    Ok(rep)
}

fn torus_constant(_: Profile) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("torus_constant", &SEED).seed(SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut roots_ok = true;
    for _ in 0..50 {
        let a = C::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let delta = rng.gen_range(-3.0..3.0);
        let s = torus_constant_solution(a, delta)?;
        let prod = (s.psi_plus.conj() * s.psi_minus - a.conj() * 2f64.sqrt()).norm();
        let lvl = (0.5 * (s.psi_plus.norm_sqr() - s.psi_minus.norm_sqr()) - delta).abs();
        worst = worst.max(prod).max(lvl);
        roots_ok &= s.p > 0.0 && s.q > 0.0 && s.rejected_root < 0.0;
    }
    rep.scalar("max_substitution_residual", worst);
    rep.flag("substitution_1e-12", worst < 1e-12);
    rep.flag("unique_positive_root", roots_ok);
    let s = torus_constant_solution(C::new(0.6, -0.8), 0.0)?;
    let cval = 2f64.sqrt();
    rep.scalar("symmetric_error", (s.p - cval).abs().max((s.q - cval).abs()));
    rep.flag("symmetric_case_exact", s.p == s.q && (s.p - cval).abs() < 1e-15);
    Ok(rep)
}

fn counting(_: Profile) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("counting", &SEED).seed(SEED);
    let mut checked = 0usize;
    let mut agree = true;
    for g in 0..=4u32 {
        for n in 0..=4u32 {
            let Ok(_) = count_critical_orbits(g, 0, n) else { continue };
            let total = 2 * g + n - 2;
            for d in 0..=total {
                agree &= count_critical_orbits(g, d, n)? as usize == enumerate_zero_partitions(g, d, n)?.len();
                checked += 1;
            }
        }
    }
    rep.scalar("binomial_cases", checked as f64);
    rep.flag("binomial_matches_enumeration", agree);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut counts_ok, mut simple, mut worst_residue) = (true, true, 0.0f64);
    for n in 3..=5usize {
        for _ in 0..20 {
            let p: Vec<C> = (0..n - 1).map(|_| C::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
            let a: Vec<C> = (0..n - 1).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let z = punctured_sphere_zeros(&p, &a)?;
            counts_ok &= z.zeros.len() == n - 2;
            simple &= z.all_simple;
            worst_residue = worst_residue.max(residue_check(&p, &a, 256));
        }
    }
    rep.flag("sphere_zero_count_n_minus_2", counts_ok);
    rep.flag("sphere_zeros_simple", simple);
    rep.scalar("max_residue_error", worst_residue);
    rep.flag("residue_check_1e-8", worst_residue < 1e-8);
    Ok(rep)
}

fn flow_conservation(_: Profile) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("flow_conservation", &());
    // L is unbounded below; starting points sit near stable directions so
    // the flow stays bounded on [0, 5]
    let cases = [
        ("fundamental_1", fundamental(1.0), vec![C::new(1.0 + 1e-4, 2e-5), C::new(1.0 - 3e-5, 1e-4), C::new(-4e-5, 7e-5)]),
        ("xy", LgModel::xy(), vec![C::new(0.8, 0.3), C::new(0.8 + 1e-3, -0.3 + 2e-3)]),
        ("cubic", LgModel::ungauged_power(3, C::new(1.0, 0.0)), vec![C::new(0.4, 4e-5)]),
    ];
    for (name, m, p0) in cases {
        let (_, member) = gradient_flowline(&m, &p0, 5.0, 1e-3)?;
        absorb(&mut rep, name, &member);
    }
    Ok(rep)
}

fn goodness(_: Profile) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("goodness", &10_000);
    let h = |l1: f64, l2: f64| HSurfaceTorus { lambda_periods: (l1, l2), nu: 0.0, delta: 0.0 };
    let bad = goodness_check(&h(2.0, 4.0), 10_000);
    rep.flag("periods_2_4_not_good", !bad.good);
    rep.flag("periods_2_4_witness", bad.witness == Some((2, -1)));
    let good = goodness_check(&h(1.0, 2f64.sqrt()), 10_000);
    rep.scalar("periods_1_sqrt2_best_pairing", good.best_pairing);
    rep.flag("periods_1_sqrt2_good", good.good);
    Ok(rep)
}

/// Reruns every other member twice and compares the report bytes.
fn determinism(p: Profile) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("determinism", &p);
    for c in criteria().iter().filter(|c| c.id != 13) {
        let (a, b) = (c.report(p).to_json(), c.report(p).to_json());
        rep.flag(&format!("{:02}_{}_identical", c.id, c.name), a == b);
    }
    Ok(rep)
}
