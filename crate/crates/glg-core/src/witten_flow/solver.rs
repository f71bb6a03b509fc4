//! Damped Gauss-Newton and gradient descent for the discretized equations.
//!
//! Free nodes carry the unknowns `(Re P, Im P, a_t, a_s)`; every grid edge node
//! is held at its Dirichlet value. At each free node the stacked residual has
//! `k` moment rows, `2n` Cauchy-Riemann rows and (unless the gauge is left
//! free) `k` gauge rows, all central differences and scaled by `h` so that the
//! Euclidean norm is the L2 norm over the grid.

use super::{GaugeFix, LinearSolver, Method, SolveOptions};
use crate::error::{Error, Result};
use crate::grid_field::{FieldConfig, Grid2D};
use crate::lg_core::LgModel;
use crate::linalg::{pcg, Csr};
use crate::report::ExperimentReport;
use crate::scalar::{c, f, Real};
use num_complex::Complex;
use serde::Serialize;

/// Prescribed values on the nodes marked `fixed`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dirichlet<T> {
    pub values: FieldConfig<T>,
    pub fixed: Vec<bool>,
}

impl<T: Real> Dirichlet<T> {
    /// Fixes every edge node of `grid` to the corresponding entry of `values`.
    pub fn edges(grid: &Grid2D<T>, values: FieldConfig<T>) -> Self {
        let fixed = (0..grid.len()).map(|node| grid.is_boundary(node % grid.nt, node / grid.nt)).collect();
        Self { values, fixed }
    }

    /// Edge nodes plus every node at depth below `depth`.
    pub fn layer(grid: &Grid2D<T>, values: FieldConfig<T>, depth: usize) -> Self {
        let fixed = (0..grid.len()).map(|node| grid.depth(node % grid.nt, node / grid.nt) < depth.max(1)).collect();
        Self { values, fixed }
    }
}

struct System<'a, T: Real> {
    m: &'a LgModel<T>,
    grid: &'a Grid2D<T>,
    gauge: GaugeFix,
    /// First unknown of each free node.
    base: Vec<Option<usize>>,
    free: Vec<usize>,
    per: usize,
}

struct Split<T> {
    rows: Vec<T>,
    witten_sq: T,
    gauge_sq: T,
}

impl<'a, T: Real> System<'a, T> {
    fn new(m: &'a LgModel<T>, grid: &'a Grid2D<T>, fixed: &[bool], gauge: GaugeFix) -> Self {
        let per = 2 * m.n + 2 * m.k;
        let mut base = vec![None; grid.len()];
        let mut free = Vec::new();
        for node in 0..grid.len() {
            if !fixed[node] {
                base[node] = Some(free.len() * per);
                free.push(node);
            }
        }
        Self { m, grid, gauge, base, free, per }
    }

    fn unknowns(&self) -> usize {
        self.free.len() * self.per
    }

    fn pack(&self, cfg: &FieldConfig<T>) -> Vec<T> {
        let mut x = Vec::with_capacity(self.unknowns());
        for &node in &self.free {
            for z in cfg.p_at(node) {
                x.push(z.re);
                x.push(z.im);
            }
            x.extend_from_slice(cfg.at_at(node));
            x.extend_from_slice(cfg.as_at(node));
        }
        x
    }

    fn unpack(&self, x: &[T], cfg: &mut FieldConfig<T>) {
        let (n, k) = (self.m.n, self.m.k);
        for (slot, &node) in self.free.iter().enumerate() {
            let b = slot * self.per;
            for q in 0..n {
                cfg.p[node * n + q] = Complex::new(x[b + 2 * q], x[b + 2 * q + 1]);
            }
            cfg.a_t[node * k..(node + 1) * k].copy_from_slice(&x[b + 2 * n..b + 2 * n + k]);
            cfg.a_s[node * k..(node + 1) * k].copy_from_slice(&x[b + 2 * n + k..b + 2 * n + 2 * k]);
        }
    }

    /// Stacked residual, and the Jacobian when `jac` is given.
    fn assemble(&self, cfg: &FieldConfig<T>, mut jac: Option<&mut Csr<T>>) -> Split<T> {
        let (m, grid) = (self.m, self.grid);
        let (n, k) = (m.n, m.k);
        let h = grid.h;
        let d = c::<T>(0.5) / h;
        let pcol = |node: usize, q: usize, comp: usize| self.base[node].map(|b| b + 2 * q + comp);
        let tcol = |node: usize, a: usize| self.base[node].map(|b| b + 2 * n + a);
        let scol = |node: usize, a: usize| self.base[node].map(|b| b + 2 * n + k + a);
        let mut rows = Vec::new();
        let (mut witten_sq, mut gauge_sq) = (T::zero(), T::zero());
        let mut e: Vec<(usize, T)> = Vec::with_capacity(32);
        let mut push = |val: T, entries: &mut Vec<(Option<usize>, T)>, rows: &mut Vec<T>, jac: &mut Option<&mut Csr<T>>| {
            rows.push(val * h);
            if let Some(j) = jac.as_deref_mut() {
                e.clear();
                e.extend(entries.iter().filter_map(|(col, v)| col.map(|cc| (cc, *v * h))));
                j.push_row(&mut e);
            }
            entries.clear();
        };
        let mut ent: Vec<(Option<usize>, T)> = Vec::with_capacity(32);
        for &node in &self.free {
            let (i, j) = (node % grid.nt, node / grid.nt);
            let (east, west, north, south) = (grid.idx(i + 1, j), grid.idx(i - 1, j), grid.idx(i, j + 1), grid.idx(i, j - 1));
            let p = cfg.p_at(node);
            let at = cfg.at_at(node);
            let as_ = cfg.as_at(node);
            let ct = m.charges(at);
            let cs = m.charges(as_);
            let mu = m.moment_map(p);
            let gh = m.grad_h(p);
            let w2 = m.w.d2w(p);
            for a in 0..k {
                let val = (cfg.a_t[north * k + a] - cfg.a_t[south * k + a]) * d
                    - (cfg.a_s[east * k + a] - cfg.a_s[west * k + a]) * d
                    + mu[a]
                    - m.delta[a];
                witten_sq += val * val;
                ent.push((tcol(north, a), d));
                ent.push((tcol(south, a), -d));
                ent.push((scol(east, a), -d));
                ent.push((scol(west, a), d));
                for q in 0..n {
                    let w: T = c(m.weights[a][q] as f64);
                    ent.push((pcol(node, q, 0), w * p[q].re));
                    ent.push((pcol(node, q, 1), w * p[q].im));
                }
                push(val, &mut ent, &mut rows, &mut jac);
            }
            for q in 0..n {
                let dt = (cfg.p[east * n + q] - cfg.p[west * n + q]) * d;
                let ds = (cfg.p[north * n + q] - cfg.p[south * n + q]) * d;
                let i_ds = Complex::new(-ds.im, ds.re);
                let cr = dt + i_ds + Complex::new(-p[q].im, p[q].re) * ct[q] - p[q] * cs[q] + gh[q];
                witten_sq += cr.norm_sqr();
                // real part
                ent.push((pcol(east, q, 0), d));
                ent.push((pcol(west, q, 0), -d));
                ent.push((pcol(north, q, 1), -d));
                ent.push((pcol(south, q, 1), d));
                ent.push((pcol(node, q, 0), -cs[q]));
                ent.push((pcol(node, q, 1), -ct[q]));
                for a in 0..k {
                    let w: T = c(m.weights[a][q] as f64);
                    ent.push((tcol(node, a), -w * p[q].im));
                    ent.push((scol(node, a), -w * p[q].re));
                }
                for l in 0..n {
                    let wql = w2[q * n + l];
                    ent.push((pcol(node, l, 0), wql.im));
                    ent.push((pcol(node, l, 1), wql.re));
                }
                push(cr.re, &mut ent, &mut rows, &mut jac);
                // imaginary part
                ent.push((pcol(east, q, 1), d));
                ent.push((pcol(west, q, 1), -d));
                ent.push((pcol(north, q, 0), d));
                ent.push((pcol(south, q, 0), -d));
                ent.push((pcol(node, q, 0), ct[q]));
                ent.push((pcol(node, q, 1), -cs[q]));
                for a in 0..k {
                    let w: T = c(m.weights[a][q] as f64);
                    ent.push((tcol(node, a), w * p[q].re));
                    ent.push((scol(node, a), -w * p[q].im));
                }
                for l in 0..n {
                    let wql = w2[q * n + l];
                    ent.push((pcol(node, l, 0), wql.re));
                    ent.push((pcol(node, l, 1), -wql.im));
                }
                push(cr.im, &mut ent, &mut rows, &mut jac);
            }
            match self.gauge {
                GaugeFix::Coulomb => {
                    for a in 0..k {
                        let val = (cfg.a_t[east * k + a] - cfg.a_t[west * k + a]) * d
                            + (cfg.a_s[north * k + a] - cfg.a_s[south * k + a]) * d;
                        gauge_sq += val * val;
                        ent.push((tcol(east, a), d));
                        ent.push((tcol(west, a), -d));
                        ent.push((scol(north, a), d));
                        ent.push((scol(south, a), -d));
                        push(val, &mut ent, &mut rows, &mut jac);
                    }
                }
                GaugeFix::Temporal => {
                    for a in 0..k {
                        let val = at[a];
                        gauge_sq += val * val;
                        ent.push((tcol(node, a), T::one()));
                        push(val, &mut ent, &mut rows, &mut jac);
                    }
                }
                GaugeFix::None => {}
            }
        }
        let h2 = h * h;
        Split { rows, witten_sq: witten_sq * h2, gauge_sq: gauge_sq * h2 }
    }
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc + *x * *x).sqrt()
}

#[derive(Serialize)]
struct SolveInputs<'a> {
    model: String,
    grid: crate::grid_field::GridSpec,
    opts: &'a SolveOptions,
    boundary_digest: String,
    init_digest: String,
}

fn digest<T: Real>(cfg: &FieldConfig<T>) -> String {
    let mut bytes = Vec::with_capacity(cfg.p.len() * 16 + cfg.a_t.len() * 16);
    for z in &cfg.p {
        bytes.extend_from_slice(&f(z.re).to_le_bytes());
        bytes.extend_from_slice(&f(z.im).to_le_bytes());
    }
    for x in cfg.a_t.iter().chain(&cfg.a_s) {
        bytes.extend_from_slice(&f(*x).to_le_bytes());
    }
    crate::report::sha256_hex(&bytes)
}

/// Solves with the given boundary values, returning the best iterate even
/// without convergence (`passed` is then false and the flag `converged` unset).
pub fn solve_witten_best<T: Real>(
    m: &LgModel<T>,
    grid: &Grid2D<T>,
    boundary: &Dirichlet<T>,
    init: &FieldConfig<T>,
    opts: &SolveOptions,
) -> Result<(FieldConfig<T>, ExperimentReport)> {
    opts.validate()?;
    init.check(m, grid)?;
    boundary.values.check(m, grid)?;
    if boundary.fixed.len() != grid.len() {
        return Err(Error::ShapeMismatch("fixed-node mask does not match the grid".into()));
    }
    for j in 0..grid.ns {
        for i in 0..grid.nt {
            if grid.is_boundary(i, j) && !boundary.fixed[grid.idx(i, j)] {
                return Err(Error::ShapeMismatch("every edge node must carry Dirichlet data".into()));
            }
        }
    }
    if !boundary.values.is_finite() || !init.is_finite() {
        return Err(Error::OutOfRange("boundary data and initial guess must be finite".into()));
    }
    let sys = System::new(m, grid, &boundary.fixed, opts.gauge_fix);
    let mut cfg = init.clone();
    for node in 0..grid.len() {
        if boundary.fixed[node] {
            let (n, k) = (m.n, m.k);
            cfg.p[node * n..(node + 1) * n].copy_from_slice(boundary.values.p_at(node));
            cfg.a_t[node * k..(node + 1) * k].copy_from_slice(boundary.values.at_at(node));
            cfg.a_s[node * k..(node + 1) * k].copy_from_slice(boundary.values.as_at(node));
        }
    }
    let linear = match opts.linear {
        LinearSolver::Auto if grid.len() <= 257 * 257 => LinearSolver::Direct,
        LinearSolver::Auto => LinearSolver::Iterative,
        other => other,
    };
    let mut x = sys.pack(&cfg);
    let mut split = sys.assemble(&cfg, None);
    let mut phi = norm(&split.rows);
    let mut history = vec![f(phi)];
    let mut lambda: T = c(opts.lambda0);
    let mut iterations = 0;
    let mut rejected = 0usize;
    let mut cg_iterations = 0usize;
    let mut stalled = false;
    let tol: T = c(opts.tol);
    while phi >= tol && iterations < opts.max_iter && !stalled {
        let mut jac = Csr::new(sys.unknowns());
        sys.assemble(&cfg, Some(&mut jac));
        let g = jac.tmul_vec(&split.rows);
        let mut accepted = false;
        match opts.method {
            Method::Newton => {
                let diag = jac.normal_diagonal();
                let floor = diag.iter().fold(T::zero(), |a, &v| a.max(v)) * c(1e-12);
                let rhs: Vec<T> = g.iter().map(|v| -*v).collect();
                for _ in 0..40 {
                    let shift: Vec<T> = diag.iter().map(|&v| lambda * v.max(floor)).collect();
                    let step = match linear {
                        LinearSolver::Direct => {
                            let mut a = jac.normal_matrix(&shift);
                            a.factor()?;
                            a.solve(&rhs)
                        }
                        _ => {
                            let pre: Vec<T> = diag.iter().zip(&shift).map(|(a, b)| (*a + *b).max(floor)).collect();
                            let apply = |v: &[T]| {
                                let mut out = jac.tmul_vec(&jac.mul_vec(v));
                                for (o, (vi, si)) in out.iter_mut().zip(v.iter().zip(&shift)) {
                                    *o += *si * *vi;
                                }
                                out
                            };
                            let (s, outcome) = pcg(apply, &rhs, &pre, None, opts.cg_tol, 20 * rhs.len().max(100))?;
                            cg_iterations += outcome.iterations;
                            s
                        }
                    };
                    let trial: Vec<T> = x.iter().zip(&step).map(|(a, b)| *a + *b).collect();
                    let mut tcfg = cfg.clone();
                    sys.unpack(&trial, &mut tcfg);
                    let tsplit = sys.assemble(&tcfg, None);
                    let tphi = norm(&tsplit.rows);
                    if tphi < phi {
                        x = trial;
                        cfg = tcfg;
                        split = tsplit;
                        phi = tphi;
                        lambda = (lambda * c(opts.lambda_down)).max(c(1e-15));
                        accepted = true;
                        break;
                    }
                    rejected += 1;
                    lambda = (lambda * c(opts.lambda_up)).max(c(1e-12));
                }
            }
            Method::Descent => {
                let gg = g.iter().fold(T::zero(), |a, v| a + *v * *v);
                if gg > T::zero() {
                    let half: T = c(0.5);
                    let mut t = phi * phi / gg;
                    for _ in 0..60 {
                        let trial: Vec<T> = x.iter().zip(&g).map(|(a, b)| *a - t * *b).collect();
                        let mut tcfg = cfg.clone();
                        sys.unpack(&trial, &mut tcfg);
                        let tsplit = sys.assemble(&tcfg, None);
                        let tphi = norm(&tsplit.rows);
                        if half * tphi * tphi <= half * phi * phi - c::<T>(1e-4) * t * gg {
                            x = trial;
                            cfg = tcfg;
                            split = tsplit;
                            phi = tphi;
                            accepted = true;
                            break;
                        }
                        rejected += 1;
                        t *= half;
                    }
                }
            }
        }
        if accepted {
            iterations += 1;
            history.push(f(phi));
        } else {
            stalled = true;
        }
    }
    let converged = phi < tol;
    let inputs = SolveInputs {
        model: m.hash(),
        grid: grid.spec(),
        opts,
        boundary_digest: digest(&boundary.values),
        init_digest: digest(init),
    };
    let mut rep = ExperimentReport::new("solve_witten", &inputs).model(m.hash()).grid(grid.spec());
    rep.scalar("residual_l2", f(split.witten_sq.sqrt()));
    rep.scalar("gauge_l2", f(split.gauge_sq.sqrt()));
    rep.scalar("total_l2", f(phi));
    rep.scalar("iterations", iterations as f64);
    rep.scalar("rejected_steps", rejected as f64);
    rep.scalar("unknowns", sys.unknowns() as f64);
    if cg_iterations > 0 {
        rep.scalar("cg_iterations", cg_iterations as f64);
    }
    rep.convergence = history;
    if stalled && !converged {
        rep.note("line search could not reduce the residual further");
    }
    rep.flag("converged", converged);
    Ok((cfg, rep))
}

/// As [`solve_witten_best`], but an unconverged solve is an error.
pub fn solve_witten<T: Real>(
    m: &LgModel<T>,
    grid: &Grid2D<T>,
    boundary: &Dirichlet<T>,
    init: &FieldConfig<T>,
    opts: &SolveOptions,
) -> Result<(FieldConfig<T>, ExperimentReport)> {
    let (cfg, rep) = solve_witten_best(m, grid, boundary, init, opts)?;
    if rep.passed {
        Ok((cfg, rep))
    } else {
        Err(Error::NonConvergence { iterations: rep.get("iterations") as usize, residual: rep.get("total_l2") })
    }
}
