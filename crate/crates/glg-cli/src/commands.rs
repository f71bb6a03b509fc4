use crate::output::{load_params, CliResult, Output};
use crate::{ModelArgs, OutArgs};
use clap::Args;
use glg_core::grid_field::{energy_density, read_snapshot, u_gamma_csv, write_snapshot, Grid2D};
use glg_core::lg_core::{identity_suite, random_samples};
use glg_core::report::{write_atomic, ExperimentReport};
use glg_core::stability::{
    assemble_extended_hessian, find_critical_points, morse_bott_check, solve_delta_slice, spectral_gap,
    spectrum_asymmetry,
};
use glg_core::suite::{run_suite, scorecard, Profile};
use glg_core::surface_reduction::{
    count_critical_orbits, critical_orbit_slice, enumerate_zero_partitions, goodness_check, kazdan_warner_solve,
    punctured_sphere_zeros, residue_check, torus_constant_solution, HSurfaceTorus, TorusGrid, WeightFields,
};
use glg_core::vortex::{embed_vortex, solve_radial_vortex, vortex_decay_fit, vortex_energy, VortexParams};
use glg_core::witten_flow::decay::solved_strip;
use glg_core::witten_flow::{
    action_gradient_check, bochner_verify, bochner_verify_pair, decay_experiment, even_strip, gradient_flowline,
    holomorphy_check, holomorphy_check_pair, refined_strip, DecayParams, IdentityOptions, SolveOptions,
    TrivialityParams,
};
use glg_core::{Error, LgModel64, Path1D64};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::PathBuf;

fn output(o: &OutArgs) -> Output {
    Output { dir: o.out.clone(), csv: o.csv, print: o.print }
}

fn parse_points(s: &str, what: &str) -> CliResult<Vec<C>> {
    let raw: Vec<(f64, f64)> =
        serde_json::from_str(s).map_err(|e| Error::Config(format!("{what}: expected [[re, im], ...]: {e}")))?;
    Ok(raw.into_iter().map(|(re, im)| C::new(re, im)).collect())
}

fn load_model(a: &ModelArgs) -> CliResult<LgModel64> {
    let path = PathBuf::from(&a.model);
    if path.extension().is_some_and(|e| e == "json") || path.is_file() {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        LgModel64::from_json(&text)
    } else {
        LgModel64::preset(&a.model, a.lambda)
    }
}

/// The given point, or the first free critical orbit found from seeded random
/// starts, moved onto the model's moment level.
fn critical_point(m: &LgModel64, a: &ModelArgs) -> CliResult<Vec<C>> {
    if let Some(s) = &a.point {
        let q = parse_points(s, "--point")?;
        if q.len() != m.n {
            return Err(Error::Config(format!("--point has {} entries, the model has {}", q.len(), m.n)));
        }
        return Ok(q);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let seeds: Vec<Vec<C>> = (0..16).map(|_| m.random_point(&mut rng, 1.5)).collect();
    let search = find_critical_points(m, &seeds);
    let point = search
        .points
        .iter()
        .find(|p| m.k == 0 || p.is_free_orbit)
        .ok_or_else(|| Error::Unattainable("no free critical orbit found from 16 seeded starts".into()))?;
    if m.k == 0 {
        Ok(point.z.clone())
    } else {
        solve_delta_slice(m, &point.z, &m.delta)
    }
}

fn points_json(q: &[C]) -> Vec<(f64, f64)> {
    q.iter().map(|z| (z.re, z.im)).collect()
}

// ------------------------------------------------------------------- identities

#[derive(Args, Debug)]
pub struct IdentitiesCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coordinates are drawn from `[-scale, scale]`.
    #[arg(long, default_value_t = 2.0)]
    scale: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

impl IdentitiesCmd {
    pub fn run(self) -> CliResult<u8> {
        let m = load_model(&self.model)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let r = identity_suite(&m, &random_samples(&m, &mut rng, self.samples, self.scale));
        let inputs = (self.samples, self.seed, self.scale, self.tol);
        let mut rep = ExperimentReport::new("check_identities", &inputs).model(m.hash()).seed(self.seed);
        let names = ["grad_pair", "hess_pair", "hess_h_antilinear", "hess_mu_linear", "mu_h_orthogonal", "mu_orbit_orthogonal"];
        for (name, v) in names.iter().zip(r.as_array()) {
            rep.scalar(name, v);
            rep.flag(&format!("{name}_within_tol"), v < self.tol);
        }
        output(&self.out).finish(&rep, "check_identities")
    }
}

// -------------------------------------------------------------------- stability

#[derive(Args, Debug)]
pub struct StabilityCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
}

impl StabilityCmd {
    pub fn run(self) -> CliResult<u8> {
        let m = load_model(&self.model)?;
        let q = critical_point(&m, &self.model)?;
        let mut rep = ExperimentReport::new("stability", &points_json(&q)).model(m.hash());
        let mb = morse_bott_check(&m, &q)?;
        rep.scalar("kernel_dim", mb.kernel_dim as f64);
        rep.scalar("orbit_dim", mb.orbit_dim as f64);
        rep.flag("morse_bott", mb.is_morse_bott);
        let eh = assemble_extended_hessian(&m, &q);
        let ev = eh.eigenvalues();
        rep.scalar("sigma_square_defect", eh.sigma_square_defect());
        rep.scalar("anticommutator_defect", eh.anticommutator_defect());
        rep.scalar("spectrum_asymmetry", spectrum_asymmetry(&ev));
        rep.flag("anticommutes", eh.anticommutator_defect() < 1e-12);
        rep.flag("spectrum_symmetric", spectrum_asymmetry(&ev) < 1e-9);
        rep.series("eigenvalues", ev);
        match spectral_gap(&m, &q) {
            Ok(sg) => {
                if let Some(z1) = sg.zeta1 {
                    rep.scalar("zeta1", z1);
                }
                rep.scalar("zeta2", sg.zeta2);
                rep.scalar("zeta", sg.zeta);
                rep.scalar("lambda1", sg.lambda1);
                rep.flag("extended_hessian_invertible", sg.lambda1 > 1e-8);
            }
            Err(Error::NotFreeOrbit) => {
                rep.note("orbit is not free; spectral constants undefined");
                rep.flag("extended_hessian_invertible", false);
            }
            Err(e) => return Err(e),
        }
        rep.series("point", q.iter().flat_map(|z| [z.re, z.im]).collect());
        output(&self.out).finish(&rep, "stability")
    }
}

// ------------------------------------------------------------------ solve-witten

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct StripParams {
    pub t_half: f64,
    pub s_max: f64,
    pub h: f64,
    pub amplitude: f64,
    pub gauge_amplitude: f64,
    pub solve: SolveOptions,
}

impl Default for StripParams {
    fn default() -> Self {
        Self {
            t_half: 1.0,
            s_max: 4.0,
            h: 0.2,
            amplitude: 0.05,
            gauge_amplitude: 0.05,
            solve: SolveOptions { tol: 1e-12, ..SolveOptions::default() },
        }
    }
}

#[derive(Args, Debug)]
pub struct SolveCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long)]
    t_half: Option<f64>,
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    /// Size of the stable-manifold perturbation at `s = 0`.
    #[arg(long)]
    amplitude: Option<f64>,
    /// Write the solution as `<out>/solution.json` + `.bin`.
    #[arg(long)]
    snapshot: bool,
}

impl SolveCmd {
    pub fn run(self) -> CliResult<u8> {
        let mut p: StripParams = load_params(self.out.config.as_deref())?;
        if let Some(v) = self.t_half {
            p.t_half = v;
        }
        if let Some(v) = self.s_max {
            p.s_max = v;
        }
        if let Some(v) = self.h {
            p.h = v;
        }
        if let Some(v) = self.amplitude {
            p.amplitude = v;
        }
        let m = load_model(&self.model)?;
        let q = critical_point(&m, &self.model)?;
        let g: Grid2D<f64> = even_strip(p.t_half, p.s_max, p.h)?;
        let (cfg, exact, member) = solved_strip(&m, &q, &g, p.amplitude, p.gauge_amplitude, &p.solve)?;
        let mut rep = member;
        rep.name = "solve_witten".into();
        rep.scalar("kappa", exact.kappa);
        rep.scalar("max_diff_to_exact", cfg.max_diff(&exact.cfg));
        let out = output(&self.out);
        if self.snapshot {
            write_snapshot(&out.dir.join("solution"), &m, &g, &cfg)?;
        }
        out.csv("solution_energy_density", &u_gamma_csv(&g, &energy_density(&m, &g, &cfg)?))?;
        out.finish(&rep, "solve_witten")
    }
}

// -------------------------------------------------------------------- triviality

#[derive(Args, Debug)]
pub struct TrivialityCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Grid nodes per direction.
    #[arg(long)]
    grid: Option<usize>,
    /// Disc truncation radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Number of random initial fields.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    amplitude: Option<f64>,
    /// Base seed of the initial fields.
    #[arg(long)]
    seed: Option<u64>,
}

impl TrivialityCmd {
    pub fn run(self) -> CliResult<u8> {
        let mut p: TrivialityParams = load_params(self.out.config.as_deref())?;
        if let Some(v) = self.grid {
            p.nodes = v;
        }
        if let Some(v) = self.radius {
            p.radius = v;
        }
        if let Some(v) = self.seeds {
            p.inits = v;
        }
        if let Some(v) = self.amplitude {
            p.amplitude = v;
        }
        if let Some(v) = self.seed {
            p.seed = v;
        }
        let m = load_model(&self.model)?;
        let q = critical_point(&m, &self.model)?;
        let rep = p.run(&m, &q)?;
        output(&self.out).finish(&rep, "triviality")
    }
}

// ------------------------------------------------------------------------- decay

#[derive(Args, Debug)]
pub struct DecayCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long)]
    t_half: Option<f64>,
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    /// Boundary perturbation amplitude.
    #[arg(long)]
    amplitude: Option<f64>,
}

impl DecayCmd {
    pub fn run(self) -> CliResult<u8> {
        let mut p: DecayParams = load_params(self.out.config.as_deref())?;
        if let Some(v) = self.t_half {
            p.t_half = v;
        }
        if let Some(v) = self.s_max {
            p.s_max = v;
        }
        if let Some(v) = self.h {
            p.h = v;
        }
        if let Some(v) = self.amplitude {
            p.amplitude = v;
        }
        let m = load_model(&self.model)?;
        let q = critical_point(&m, &self.model)?;
        let rep = decay_experiment(&m, &q, &p)?;
        let out = output(&self.out);
        if let (Some(s), Some(u)) = (rep.series.get("s"), rep.series.get("max_t_u_gamma")) {
            let mut csv = String::from("s,max_t_u_gamma\n");
            for (a, b) in s.iter().zip(u) {
                csv.push_str(&format!("{a:.12e},{b:.12e}\n"));
            }
            out.csv("decay_profile", &csv)?;
        }
        out.finish(&rep, "decay")
    }
}

// ------------------------------------------------------------ bochner/holomorphy

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentityParams {
    /// `vortex`, `strip` or `snapshot`.
    pub source: String,
    /// Plane grid nodes per direction for the vortex (odd).
    pub nodes: usize,
    pub radius: f64,
    /// Coarse strip spacing.
    pub h: f64,
    pub snapshot: Option<PathBuf>,
    pub options: IdentityOptions,
}

impl Default for IdentityParams {
    fn default() -> Self {
        Self { source: "vortex".into(), nodes: 81, radius: 4.0, h: 0.2, snapshot: None, options: IdentityOptions::default() }
    }
}

#[derive(Args, Debug)]
pub struct IdentityCheckCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
    /// `vortex` (embedded unit vortex, vortex model), `strip` (solved strip
    /// pair for --model) or `snapshot` (a field written by solve-witten).
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    /// Snapshot stem, e.g. `glg-out/solution`.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

impl IdentityCheckCmd {
    pub fn run(self, holomorphy: bool) -> CliResult<u8> {
        let mut p: IdentityParams = load_params(self.out.config.as_deref())?;
        if let Some(v) = self.source {
            p.source = v;
        }
        if let Some(v) = self.nodes {
            p.nodes = v;
        }
        if let Some(v) = self.h {
            p.h = v;
        }
        if let Some(v) = self.snapshot {
            p.snapshot = Some(v);
            p.source = "snapshot".into();
        }
        let io = &p.options;
        let rep = match p.source.as_str() {
            "vortex" => {
                let m = LgModel64::vortex();
                let prof = solve_radial_vortex(1, 1e-3, 20.0, 2000)?;
                let g = Grid2D::plane(p.radius, p.nodes)?;
                let cfg = embed_vortex(&prof, &g)?;
                if holomorphy {
                    holomorphy_check(&m, &g, &cfg, io)?
                } else {
                    bochner_verify(&m, &g, &cfg, io)?
                }
            }
            "strip" => {
                let m = load_model(&self.model)?;
                let q = critical_point(&m, &self.model)?;
                let opts = SolveOptions { tol: 1e-12, ..SolveOptions::default() };
                let g0: Grid2D<f64> = even_strip(1.0, 4.0, p.h)?;
                let g1 = refined_strip(&g0)?;
                let (c0, _, _) = solved_strip(&m, &q, &g0, 0.05, 0.05, &opts)?;
                let (c1, _, _) = solved_strip(&m, &q, &g1, 0.05, 0.05, &opts)?;
                if holomorphy {
                    holomorphy_check_pair(&m, (&g0, &c0), (&g1, &c1), io)?
                } else {
                    bochner_verify_pair(&m, (&g0, &c0), (&g1, &c1), io)?
                }
            }
            "snapshot" => {
                let stem = p.snapshot.clone().ok_or_else(|| Error::Config("snapshot source needs --snapshot".into()))?;
                let m = load_model(&self.model)?;
                let (header, cfg) = read_snapshot::<f64>(&stem)?;
                if header.model_hash != m.hash() {
                    return Err(Error::Config("snapshot was written for a different model".into()));
                }
                let gs = header.grid;
                if gs.nt % 2 == 0 || gs.ns % 2 == 0 {
                    return Err(Error::Config(
                        "a single field needs odd node counts for the refinement check; use --source strip".into(),
                    ));
                }
                let g = Grid2D::new(gs.kind, gs.t_range, gs.s_range, gs.nt, gs.ns)?;
                if holomorphy {
                    holomorphy_check(&m, &g, &cfg, io)?
                } else {
                    bochner_verify(&m, &g, &cfg, io)?
                }
            }
            other => return Err(Error::Config(format!("unknown source `{other}` (vortex | strip | snapshot)"))),
        };
        output(&self.out).finish(&rep, if holomorphy { "holomorphy" } else { "bochner" })
    }
}

// ------------------------------------------------------------------ action-check

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ActionParams {
    pub nodes: usize,
    pub s_max: f64,
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for ActionParams {
    fn default() -> Self {
        Self { nodes: 1201, s_max: 6.0, amplitude: 0.2, seed: 0 }
    }
}

#[derive(Args, Debug)]
pub struct ActionCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Path nodes (odd).
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    s_max: Option<f64>,
    /// Size of the path perturbation.
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ActionCmd {
    pub fn run(self) -> CliResult<u8> {
        let mut p: ActionParams = load_params(self.out.config.as_deref())?;
        if let Some(v) = self.nodes {
            p.nodes = v;
        }
        if let Some(v) = self.s_max {
            p.s_max = v;
        }
        if let Some(v) = self.amplitude {
            p.amplitude = v;
        }
        if let Some(v) = self.seed {
            p.seed = v;
        }
        let m = load_model(&self.model)?;
        let q = critical_point(&m, &self.model)?;
        let path = Path1D64::perturbed(&q, m.k, p.s_max, p.nodes, p.amplitude, p.seed)?;
        let rep = action_gradient_check(&m, &path, &m.delta, p.seed)?;
        output(&self.out).finish(&rep, "action_check")
    }
}

// ---------------------------------------------------------------------- flowline

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowParams {
    pub p0: Option<Vec<(f64, f64)>>,
    pub s_max: f64,
    pub dt: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self { p0: None, s_max: 5.0, dt: 1e-3 }
    }
}

#[derive(Args, Debug)]
pub struct FlowCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Start as JSON `[[re, im], ...]`; defaults to a critical point moved by 1e-4.
    #[arg(long)]
    p0: Option<String>,
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
}

impl FlowCmd {
    pub fn run(self) -> CliResult<u8> {
        let mut p: FlowParams = load_params(self.out.config.as_deref())?;
        if let Some(s) = &self.p0 {
            p.p0 = Some(points_json(&parse_points(s, "--p0")?));
        }
        if let Some(v) = self.s_max {
            p.s_max = v;
        }
        if let Some(v) = self.dt {
            p.dt = v;
        }
        let m = load_model(&self.model)?;
        let p0: Vec<C> = match &p.p0 {
            Some(v) => v.iter().map(|&(re, im)| C::new(re, im)).collect(),
            None => {
                let q = critical_point(&m, &self.model)?;
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                q.iter().map(|z| z + C::new(rng.gen_range(-1e-4..1e-4), rng.gen_range(-1e-4..1e-4))).collect()
            }
        };
        let (traj, rep) = gradient_flowline(&m, &p0, p.s_max, p.dt)?;
        let out = output(&self.out);
        let mut csv = String::from("s,L,H");
        for j in 0..m.n {
            csv.push_str(&format!(",re_p{j},im_p{j}"));
        }
        csv.push('\n');
        for i in 0..traj.s.len() {
            csv.push_str(&format!("{:.12e},{:.12e},{:.12e}", traj.s[i], traj.l[i], traj.h[i]));
            for z in &traj.p[i] {
                csv.push_str(&format!(",{:.12e},{:.12e}", z.re, z.im));
            }
            csv.push('\n');
        }
        out.csv("flowline", &csv)?;
        out.finish(&rep, "flowline")
    }
}

// ------------------------------------------------------------------------ vortex

#[derive(Args, Debug)]
pub struct VortexCmd {
    #[command(flatten)]
    out: OutArgs,
    /// Winding number.
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Radial window of the decay fit.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [6.0, 10.0])]
    window: Vec<f64>,
}

impl VortexCmd {
    pub fn run(self) -> CliResult<u8> {
        let mut p: VortexParams = load_params(self.out.config.as_deref())?;
        if let Some(v) = self.n {
            p.n = v;
        }
        if let Some(v) = self.r_min {
            p.r_min = v;
        }
        if let Some(v) = self.r_max {
            p.r_max = v;
        }
        if let Some(v) = self.nodes {
            p.nodes = v;
        }
        let prof = solve_radial_vortex(p.n, p.r_min, p.r_max, p.nodes)?;
        let mut rep = vortex_decay_fit(&prof, (self.window[0], self.window[1]))?;
        rep.name = "vortex".into();
        let e = vortex_energy(&prof);
        rep.scalar("energy", e);
        rep.scalar("ode_residual", prof.residual);
        if p.n > 0 {
            let target = 2.0 * PI * p.n as f64;
            rep.scalar("energy_rel_error", ((e - target) / target).abs());
            rep.flag("energy_within_1pc", ((e - target) / target).abs() < 0.01);
        }
        let out = output(&self.out);
        out.csv("vortex_profile", &prof.to_csv())?;
        out.finish(&rep, "vortex")
    }
}

// ---------------------------------------------------------------------- kw-solve

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct KwParams {
    pub nodes: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Adds smooth positive modulations to both weights.
    pub varying_weights: bool,
    /// Constant right-hand side; otherwise a smooth sample scaled by `rhs_amplitude`.
    pub rhs_constant: Option<f64>,
    pub rhs_amplitude: f64,
    /// Solve for the critical-orbit slice at this constant level instead.
    pub level: Option<f64>,
    pub tol: f64,
}

impl Default for KwParams {
    fn default() -> Self {
        Self {
            nodes: 64,
            w_plus: 1.0,
            w_minus: 1.0,
            varying_weights: true,
            rhs_constant: None,
            rhs_amplitude: 0.7,
            level: None,
            tol: 1e-10,
        }
    }
}

#[derive(Args, Debug)]
pub struct KwCmd {
    #[command(flatten)]
    out: OutArgs,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    w_plus: Option<f64>,
    #[arg(long)]
    w_minus: Option<f64>,
    /// Use constant weights.
    #[arg(long)]
    constant_weights: bool,
    #[arg(long)]
    rhs: Option<f64>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
}

impl KwCmd {
    pub fn run(self) -> CliResult<u8> {
        let mut p: KwParams = load_params(self.out.config.as_deref())?;
        if let Some(v) = self.nodes {
            p.nodes = v;
        }
        if let Some(v) = self.w_plus {
            p.w_plus = v;
        }
        if let Some(v) = self.w_minus {
            p.w_minus = v;
        }
        if self.constant_weights {
            p.varying_weights = false;
        }
        if self.rhs.is_some() {
            p.rhs_constant = self.rhs;
        }
        if self.level.is_some() {
            p.level = self.level;
        }
        if let Some(v) = self.tol {
            p.tol = v;
        }
        let g = TorusGrid::unit(p.nodes)?;
        let mut w = WeightFields::constant(&g, p.w_plus, p.w_minus);
        let mut rhs = vec![0.0; g.len()];
        for k in 0..g.len() {
            let (x, y) = g.coords(k);
            if p.varying_weights {
                w.w_plus[k] *= 1.0 + 0.5 * (2.0 * PI * x).sin();
                w.w_minus[k] *= 0.8 + 0.3 * (2.0 * PI * y).cos() * (2.0 * PI * x).cos();
            }
            rhs[k] = match p.rhs_constant {
                Some(cval) => cval,
                None => p.rhs_amplitude * ((2.0 * PI * x).sin() * (2.0 * PI * y).cos() + 0.4),
            };
        }
        let (sol, mut rep) = match p.level {
            Some(level) => critical_orbit_slice(&g, &w, &vec![level; g.len()], &vec![0.0; g.len()], p.tol)?,
            None => kazdan_warner_solve(&g, &w, &rhs, None, p.tol)?,
        };
        rep.name = "kw_solve".into();
        let out = output(&self.out);
        let mut csv = String::from("x,y,alpha\n");
        for k in 0..g.len() {
            let (x, y) = g.coords(k);
            csv.push_str(&format!("{x:.12e},{y:.12e},{:.12e}\n", sol.alpha[k]));
        }
        out.csv("kw_alpha", &csv)?;
        out.finish(&rep, "kw_solve")
    }
}

// -------------------------------------------------------------------- torus-crit

#[derive(Args, Debug)]
pub struct TorusCritCmd {
    #[command(flatten)]
    out: OutArgs,
    /// Coefficient `a` of `lambda^{1,0} = a dz` as `re im`.
    #[arg(long, num_args = 2, value_names = ["RE", "IM"], allow_hyphen_values = true, conflicts_with = "periods")]
    a: Option<Vec<f64>>,
    /// Periods of `lambda / i` over the two cycles (sets `a`).
    #[arg(long, num_args = 2, value_names = ["L1", "L2"], allow_hyphen_values = true)]
    periods: Option<Vec<f64>>,
    /// Moment level.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    delta: f64,
}

impl TorusCritCmd {
    pub fn run(self) -> CliResult<u8> {
        let a = match (&self.a, &self.periods) {
            (Some(v), _) => C::new(v[0], v[1]),
            (None, Some(l)) => HSurfaceTorus { lambda_periods: (l[0], l[1]), nu: 0.0, delta: self.delta }.a(),
            (None, None) => return Err(Error::Config("give --a or --periods".into())),
        };
        let s = torus_constant_solution(a, self.delta)?;
        let mut rep = ExperimentReport::new("torus_crit", &((a.re, a.im), self.delta));
        rep.scalar("abs_psi_plus_sq", s.p);
        rep.scalar("abs_psi_minus_sq", s.q);
        rep.scalar("rejected_root", s.rejected_root);
        rep.series("psi_plus", vec![s.psi_plus.re, s.psi_plus.im]);
        rep.series("psi_minus", vec![s.psi_minus.re, s.psi_minus.im]);
        rep.scalar("residual_product", s.residual_product);
        rep.scalar("residual_level", s.residual_level);
        rep.flag("residuals_below_1e-12", s.residual_product < 1e-12 && s.residual_level < 1e-12);
        output(&self.out).finish(&rep, "torus_crit")
    }
}

// ------------------------------------------------------------------ count-orbits

#[derive(Args, Debug)]
pub struct CountCmd {
    #[command(flatten)]
    out: OutArgs,
    #[arg(long)]
    genus: u32,
    /// Degree `d`.
    #[arg(long)]
    degree: u32,
    #[arg(long, default_value_t = 0)]
    punctures: u32,
    /// Cross-check against the explicit subset enumeration.
    #[arg(long)]
    enumerate: bool,
}

impl CountCmd {
    pub fn run(self) -> CliResult<u8> {
        let count = count_critical_orbits(self.genus, self.degree, self.punctures)?;
        let mut rep = ExperimentReport::new("count_orbits", &(self.genus, self.degree, self.punctures));
        rep.scalar("count", count as f64);
        if self.enumerate {
            let subsets = enumerate_zero_partitions(self.genus, self.degree, self.punctures)?;
            rep.scalar("enumerated", subsets.len() as f64);
            rep.flag("count_matches_enumeration", subsets.len() as u64 == count);
        }
        output(&self.out).finish(&rep, "count_orbits")
    }
}

// ------------------------------------------------------------------ sphere-zeros

#[derive(Args, Debug)]
pub struct SphereCmd {
    #[command(flatten)]
    out: OutArgs,
    /// Finite punctures as JSON `[[re, im], ...]`; the last puncture is at infinity.
    #[arg(long)]
    punctures: String,
    /// Residues at the finite punctures, same format.
    #[arg(long)]
    residues: String,
}

impl SphereCmd {
    pub fn run(self) -> CliResult<u8> {
        let p = parse_points(&self.punctures, "--punctures")?;
        let a = parse_points(&self.residues, "--residues")?;
        if p.len() != a.len() {
            return Err(Error::Config("punctures and residues differ in length".into()));
        }
        let z = punctured_sphere_zeros(&p, &a)?;
        let mut rep = ExperimentReport::new("sphere_zeros", &(points_json(&p), points_json(&a)));
        rep.series("zeros_re", z.zeros.iter().map(|w| w.re).collect());
        rep.series("zeros_im", z.zeros.iter().map(|w| w.im).collect());
        rep.series("derivative_abs", z.derivative_abs.clone());
        rep.scalar("min_pairwise_distance", z.min_pairwise_distance);
        rep.scalar("min_puncture_distance", z.min_puncture_distance);
        rep.flag("zero_count_n_minus_2", z.zeros.len() + 1 == p.len());
        rep.flag("all_simple", z.all_simple);
        let res = residue_check(&p, &a, 256);
        rep.scalar("residue_error", res);
        rep.flag("residues_1e-8", res < 1e-8);
        output(&self.out).finish(&rep, "sphere_zeros")
    }
}

// ---------------------------------------------------------------------- goodness

#[derive(Args, Debug)]
pub struct GoodnessCmd {
    #[command(flatten)]
    out: OutArgs,
    /// Periods of `lambda / i` over the two cycles.
    #[arg(long, num_args = 2, value_names = ["L1", "L2"], allow_hyphen_values = true, required = true)]
    periods: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    max_denominator: i64,
}

impl GoodnessCmd {
    /// Fails (exit 2) when the surface is not good.
    pub fn run(self) -> CliResult<u8> {
        let h = HSurfaceTorus { lambda_periods: (self.periods[0], self.periods[1]), nu: 0.0, delta: 0.0 };
        let g = goodness_check(&h, self.max_denominator);
        let mut rep = ExperimentReport::new("goodness", &(h, self.max_denominator));
        rep.scalar("best_pairing", g.best_pairing);
        rep.series("best_class", vec![g.best_class.0 as f64, g.best_class.1 as f64]);
        if let Some((c1, c2)) = g.witness {
            rep.series("witness", vec![c1 as f64, c2 as f64]);
            rep.note(format!("integral class ({c1}, {c2}) pairs to zero"));
        } else {
            rep.note(format!("no vanishing pairing up to denominator {}", self.max_denominator));
        }
        rep.flag("good", g.good);
        output(&self.out).finish(&rep, "goodness")
    }
}

// ------------------------------------------------------------------------- suite

#[derive(Args, Debug)]
pub struct SuiteCmd {
    /// `quick` (halved grids) or `full`.
    #[arg(default_value = "quick")]
    profile: String,
    /// Criterion ids to run (all when absent).
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
    /// Run members concurrently.
    #[arg(long)]
    parallel: bool,
    #[arg(long, default_value = "glg-out")]
    out: PathBuf,
}

impl SuiteCmd {
    pub fn run(self) -> CliResult<u8> {
        let profile: Profile = self.profile.parse()?;
        if let Some(bad) = self.only.iter().find(|&&id| !(1..=13).contains(&id)) {
            return Err(Error::Config(format!("no criterion {bad} (ids are 1 to 13)")));
        }
        let outcomes = run_suite(profile, &self.only, self.parallel);
        for o in &outcomes {
            println!("{}", o.line(profile));
            o.report.write(&self.out.join(format!("{}.json", o.report.name)))?;
        }
        let card = scorecard(profile, &outcomes);
        let json = serde_json::to_string_pretty(&card)?;
        let path = self.out.join("scorecard.json");
        write_atomic(&path, json.as_bytes())?;
        let passed = outcomes.iter().all(|o| o.passed(profile));
        println!("{} suite {} -> {}", if passed { "PASS" } else { "FAIL" }, self.profile, path.display());
        Ok(if passed { 0 } else { 2 })
    }
}
