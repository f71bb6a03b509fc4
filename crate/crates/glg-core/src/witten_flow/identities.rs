//! Pointwise identities satisfied by solutions, evaluated with finite differences.
//!
//! With `Delta = -(d_tt + d_ss)` and a flat target, solutions satisfy
//!
//! ```text
//! 0 = 1/2 Delta (|T|^2 + |S|^2 + |F|^2) + |Hess_A P|^2 + |grad F|^2 + |D(T)|^2 + |D(S)|^2
//!     + |<grad mu, F>|^2 + <(grad_T Hess H)(grad H), T> + <(grad_S Hess H)(grad H), S>
//!     + 6 <Hess mu(JS), T x F> - <Hess mu(T), T x F> - <Hess mu(S), S x F>
//! ```
//!
//! which is the sum of one identity each for `|T|^2`, `|S|^2` and `|F|^2`, and
//! `(d_t + i d_s)(W o P) = -i |grad H|^2`. On a pair of grids with spacings
//! `h` and `h/2` the residuals of exact solutions shrink at second order.
//!
//! The Laplacians are squares of the central difference, the operator the
//! solver discretizes with. Discrete solutions carry O(h^2) node-to-node
//! oscillations that central differences do not see; the five-point
//! Laplacian would amplify them by `1/h^2`.

use crate::error::{Error, Result};
use crate::grid_field::{covariant_derivatives, covariant_vector_derivative, energy_density, residual, Dir, FieldConfig, Grid2D, Region};
use crate::lg_core::LgModel;
use crate::report::ExperimentReport;
use crate::scalar::{c, czero, f, inner, jmul, norm_sq, Real};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentityOptions {
    /// Coarse-grid nodes excluded along every edge (at least 2).
    pub margin: usize,
    /// Largest accepted ratio of the input's equation residual to the square
    /// root of its energy over the comparison region.
    pub max_input_residual: f64,
    pub min_order: f64,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        Self { margin: 2, max_input_residual: 0.1, min_order: 1.0 }
    }
}

/// Node residuals of the three component identities and of their sum.
/// Only nodes at depth at least 2 are meaningful.
#[derive(Clone, Debug)]
pub struct BochnerFields<T> {
    pub t_part: Vec<T>,
    pub s_part: Vec<T>,
    pub f_part: Vec<T>,
    pub total: Vec<T>,
}

fn d_norm_sq<T: Real>(m: &LgModel<T>, p: &[Complex<T>], v: &[Complex<T>]) -> T {
    let (h, a, b) = m.d_operator(p, v);
    norm_sq(&h) + a.iter().chain(&b).fold(T::zero(), |acc, x| acc + *x * *x)
}

fn hess_mu_term<T: Real>(m: &LgModel<T>, p: &[Complex<T>], x: &[Complex<T>], y: &[Complex<T>], fv: &[T]) -> T {
    inner(&m.hess_mu_pair(p, x, fv), y)
}

pub fn bochner_fields<T: Real>(m: &LgModel<T>, grid: &Grid2D<T>, cfg: &FieldConfig<T>) -> Result<BochnerFields<T>> {
    let d = covariant_derivatives(m, grid, cfg)?;
    let (n, k) = (m.n, m.k);
    let tt = covariant_vector_derivative(m, grid, cfg, &d.t, Dir::T)?;
    let st = covariant_vector_derivative(m, grid, cfg, &d.t, Dir::S)?;
    let ts = covariant_vector_derivative(m, grid, cfg, &d.s, Dir::T)?;
    let ss = covariant_vector_derivative(m, grid, cfg, &d.s, Dir::S)?;
    let nodes = grid.len();
    let sq = |v: &[Complex<T>]| (0..nodes).map(|node| norm_sq(&v[node * n..(node + 1) * n])).collect::<Vec<T>>();
    let t2 = sq(&d.t);
    let s2 = sq(&d.s);
    let f2: Vec<T> = (0..nodes).map(|node| d.f[node * k..(node + 1) * k].iter().fold(T::zero(), |a, x| a + *x * *x)).collect();
    let half: T = c(0.5);
    let two: T = c(2.0);
    let mut out = BochnerFields {
        t_part: vec![T::zero(); nodes],
        s_part: vec![T::zero(); nodes],
        f_part: vec![T::zero(); nodes],
        total: vec![T::zero(); nodes],
    };
    for j in 0..grid.ns {
        for i in 0..grid.nt {
            if grid.depth(i, j) < 2 {
                continue;
            }
            let node = grid.idx(i, j);
            let r = node * n..(node + 1) * n;
            let p = cfg.p_at(node);
            let (tv, sv) = (&d.t[r.clone()], &d.s[r.clone()]);
            let fv = &d.f[node * k..(node + 1) * k];
            let gh = m.grad_h(p);
            let js: Vec<Complex<T>> = sv.iter().map(|z| jmul(*z)).collect();
            let jt: Vec<Complex<T>> = tv.iter().map(|z| jmul(*z)).collect();
            let comb_t: Vec<Complex<T>> = js.iter().zip(tv).map(|(a, b)| *a * two - *b).collect();
            let comb_s: Vec<Complex<T>> = jt.iter().zip(sv).map(|(a, b)| -(*a * two) - *b).collect();

            let rhs_t = norm_sq(&tt[r.clone()])
                + norm_sq(&st[r.clone()])
                + d_norm_sq(m, p, tv)
                + inner(&m.d_hess_h_apply(p, tv, &gh), tv)
                + hess_mu_term(m, p, &comb_t, tv, fv);
            let rhs_s = norm_sq(&ts[r.clone()])
                + norm_sq(&ss[r.clone()])
                + d_norm_sq(m, p, sv)
                + inner(&m.d_hess_h_apply(p, sv, &gh), sv)
                + hess_mu_term(m, p, &comb_s, sv, fv);
            let mut dfs = T::zero();
            for a in 0..k {
                let ft = grid.diff(&d.f, k, a, i, j, Dir::T);
                let fs = grid.diff(&d.f, k, a, i, j, Dir::S);
                dfs += ft * ft + fs * fs;
            }
            let rhs_f = dfs + norm_sq(&m.grad_mu_pair(p, fv)) + two * hess_mu_term(m, p, &js, tv, fv);
            let lt = grid.wide_laplacian_at(&t2, 1, 0, i, j);
            let ls = grid.wide_laplacian_at(&s2, 1, 0, i, j);
            let lf = grid.wide_laplacian_at(&f2, 1, 0, i, j);
            out.t_part[node] = half * lt - rhs_t;
            out.s_part[node] = half * ls - rhs_s;
            out.f_part[node] = half * lf - rhs_f;
            out.total[node] = -(out.t_part[node] + out.s_part[node] + out.f_part[node]);
        }
    }
    Ok(out)
}

/// `(d_t + i d_s)(W o P) + i |grad H|^2` at every node.
pub fn holomorphy_field<T: Real>(m: &LgModel<T>, grid: &Grid2D<T>, cfg: &FieldConfig<T>) -> Result<Vec<Complex<T>>> {
    cfg.check(m, grid)?;
    let w: Vec<Complex<T>> = (0..grid.len()).map(|node| m.eval_w(cfg.p_at(node))).collect();
    let mut out = vec![czero(); grid.len()];
    for j in 0..grid.ns {
        for i in 0..grid.nt {
            let node = grid.idx(i, j);
            let dt = grid.diff(&w, 1, 0, i, j, Dir::T);
            let ds = grid.diff(&w, 1, 0, i, j, Dir::S);
            let gh2 = norm_sq(&m.grad_h(cfg.p_at(node)));
            out[node] = dt + jmul(ds) + Complex::new(T::zero(), gh2);
        }
    }
    Ok(out)
}

fn l2<T: Real>(grid: &Grid2D<T>, region: &Region, v: &[T]) -> f64 {
    let sq: Vec<T> = v.iter().map(|x| *x * *x).collect();
    f(region.integrate(grid, &sq)).sqrt()
}

struct Level<'a, T: Real> {
    grid: &'a Grid2D<T>,
    cfg: &'a FieldConfig<T>,
    region: Region,
}

fn levels<'a, T: Real>(
    coarse: (&'a Grid2D<T>, &'a FieldConfig<T>),
    fine: (&'a Grid2D<T>, &'a FieldConfig<T>),
    opts: &IdentityOptions,
) -> Result<(Level<'a, T>, Level<'a, T>)> {
    let (gc, gf) = (coarse.0, fine.0);
    let ratio = f(gc.h / gf.h);
    if (ratio - 2.0).abs() > 1e-9 {
        return Err(Error::ShapeMismatch(format!("refinement pair must halve the spacing (ratio {ratio})")));
    }
    let margin = opts.margin.max(2);
    if gc.nt <= 2 * margin || gc.ns <= 2 * margin {
        return Err(Error::RegionOutOfBounds);
    }
    let rc = Region::interior(gc, margin);
    let rf = Region::from_coords(gf, (gc.t(rc.i0), gc.t(rc.i1)), (gc.s(rc.j0), gc.s(rc.j1)))?;
    if gf.depth(rf.i0, rf.j0) < 2 || gf.depth(rf.i1, rf.j1) < 2 {
        return Err(Error::RegionOutOfBounds);
    }
    Ok((Level { grid: gc, cfg: coarse.1, region: rc }, Level { grid: gf, cfg: fine.1, region: rf }))
}

/// Equation residual relative to the square root of the energy over the region.
fn input_quality<T: Real>(m: &LgModel<T>, lv: &Level<T>) -> Result<(f64, f64)> {
    let res = residual(m, lv.grid, lv.cfg)?;
    let sq: Vec<T> = (0..lv.grid.len()).map(|node| res.node_sq(node, m.n, m.k)).collect();
    let abs = f(lv.region.integrate(lv.grid, &sq)).sqrt();
    let energy = f(lv.region.integrate(lv.grid, &energy_density(m, lv.grid, lv.cfg)?)).max(0.0);
    Ok((abs, if abs <= 1e-10 { 0.0 } else { abs / energy.sqrt().max(1e-300) }))
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Both residuals at round-off level: nothing left to converge.
fn exact(coarse: f64, fine: f64) -> bool {
    coarse <= 1e-12 && fine <= 1e-12
}

#[derive(Serialize)]
struct PairInputs {
    model: String,
    coarse: crate::grid_field::GridSpec,
    fine: crate::grid_field::GridSpec,
    opts: IdentityOptions,
    digest: String,
}

fn pair_inputs<T: Real>(m: &LgModel<T>, c0: &Level<T>, c1: &Level<T>, opts: &IdentityOptions) -> PairInputs {
    let mut bytes = Vec::new();
    for cfg in [c0.cfg, c1.cfg] {
        for z in &cfg.p {
            bytes.extend_from_slice(&f(z.re).to_le_bytes());
            bytes.extend_from_slice(&f(z.im).to_le_bytes());
        }
        for x in cfg.a_t.iter().chain(&cfg.a_s) {
            bytes.extend_from_slice(&f(*x).to_le_bytes());
        }
    }
    PairInputs {
        model: m.hash(),
        coarse: c0.grid.spec(),
        fine: c1.grid.spec(),
        opts: opts.clone(),
        digest: crate::report::sha256_hex(&bytes),
    }
}

fn check_inputs<T: Real>(m: &LgModel<T>, c0: &Level<T>, c1: &Level<T>, opts: &IdentityOptions, rep: &mut ExperimentReport) -> Result<()> {
    for (name, lv) in [("coarse", c0), ("fine", c1)] {
        let (abs, rel) = input_quality(m, lv)?;
        rep.scalar(&format!("input_residual_{name}"), abs);
        rep.scalar(&format!("input_relative_residual_{name}"), rel);
        if rel > opts.max_input_residual {
            return Err(Error::InputNotSolution(rel));
        }
    }
    Ok(())
}

/// Bochner identities on a refinement pair (`fine` has half the spacing of `coarse`).
pub fn bochner_verify_pair<T: Real>(
    m: &LgModel<T>,
    coarse: (&Grid2D<T>, &FieldConfig<T>),
    fine: (&Grid2D<T>, &FieldConfig<T>),
    opts: &IdentityOptions,
) -> Result<ExperimentReport> {
    let (c0, c1) = levels(coarse, fine, opts)?;
    let mut rep = ExperimentReport::new("bochner", &pair_inputs(m, &c0, &c1, opts)).model(m.hash()).grid(c1.grid.spec());
    check_inputs(m, &c0, &c1, opts, &mut rep)?;
    let b0 = bochner_fields(m, c0.grid, c0.cfg)?;
    let b1 = bochner_fields(m, c1.grid, c1.cfg)?;
    for (name, v0, v1) in [
        ("total", &b0.total, &b1.total),
        ("t_part", &b0.t_part, &b1.t_part),
        ("s_part", &b0.s_part, &b1.s_part),
        ("f_part", &b0.f_part, &b1.f_part),
    ] {
        let (e0, e1) = (l2(c0.grid, &c0.region, v0), l2(c1.grid, &c1.region, v1));
        rep.scalar(&format!("{name}_l2_h"), e0);
        rep.scalar(&format!("{name}_l2_h2"), e1);
        let ex = exact(e0, e1);
        if !ex {
            rep.scalar(&format!("{name}_order"), order(e0, e1));
        }
        rep.flag(&format!("{name}_order_at_least_{}", opts.min_order), ex || order(e0, e1) >= opts.min_order);
    }
    if exact(rep.get("total_l2_h"), rep.get("total_l2_h2")) {
        rep.note("identity residual vanishes to round-off at both spacings");
    }
    Ok(rep)
}

/// Bochner check from one configuration: its restriction to every other node
/// supplies the coarse level. Node counts must be odd.
pub fn bochner_verify<T: Real>(m: &LgModel<T>, grid: &Grid2D<T>, cfg: &FieldConfig<T>, opts: &IdentityOptions) -> Result<ExperimentReport> {
    let coarse = grid.coarsened()?;
    let sub = cfg.subsample(grid)?;
    bochner_verify_pair(m, (&coarse, &sub), (grid, cfg), opts)
}

pub fn holomorphy_check_pair<T: Real>(
    m: &LgModel<T>,
    coarse: (&Grid2D<T>, &FieldConfig<T>),
    fine: (&Grid2D<T>, &FieldConfig<T>),
    opts: &IdentityOptions,
) -> Result<ExperimentReport> {
    let (c0, c1) = levels(coarse, fine, opts)?;
    let mut rep =
        ExperimentReport::new("holomorphy", &pair_inputs(m, &c0, &c1, opts)).model(m.hash()).grid(c1.grid.spec());
    check_inputs(m, &c0, &c1, opts, &mut rep)?;
    let abs = |lv: &Level<T>| -> Result<f64> {
        let hf = holomorphy_field(m, lv.grid, lv.cfg)?;
        let mag: Vec<T> = hf.iter().map(|z| z.norm_sqr().sqrt()).collect();
        Ok(l2(lv.grid, &lv.region, &mag))
    };
    let (e0, e1) = (abs(&c0)?, abs(&c1)?);
    rep.scalar("l2_h", e0);
    rep.scalar("l2_h2", e1);
    let ex = exact(e0, e1);
    if ex {
        rep.note("holomorphy residual vanishes to round-off at both spacings");
    } else {
        rep.scalar("order", order(e0, e1));
    }
    rep.flag(&format!("order_at_least_{}", opts.min_order), ex || order(e0, e1) >= opts.min_order);
    Ok(rep)
}

pub fn holomorphy_check<T: Real>(m: &LgModel<T>, grid: &Grid2D<T>, cfg: &FieldConfig<T>, opts: &IdentityOptions) -> Result<ExperimentReport> {
    let coarse = grid.coarsened()?;
    let sub = cfg.subsample(grid)?;
    holomorphy_check_pair(m, (&coarse, &sub), (grid, cfg), opts)
}
