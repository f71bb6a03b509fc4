//! Configurations `(A, P)` sampled on uniform rectangular grids, with their
//! covariant derivatives, curvature, residuals and energies.
//!
//! Node `(i, j)` sits at `(t_i, s_j)` and has linear index `j * nt + i`
//! (row-major, `t` fastest). Derivatives are second-order central differences
//! with one-sided second-order stencils on the boundary.

use crate::error::{Error, Result};
use crate::lg_core::LgModel;
use crate::report::write_atomic;
use crate::scalar::{c, cis, czero, f, jmul, Real};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Plane,
    HalfPlane,
    Strip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D<T> {
    pub kind: GridKind,
    pub t_range: (T, T),
    pub s_range: (T, T),
    pub nt: usize,
    pub ns: usize,
    pub h: T,
}

/// Serializable grid description embedded in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: GridKind,
    pub t_range: (f64, f64),
    pub s_range: (f64, f64),
    pub nt: usize,
    pub ns: usize,
    pub h: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    T,
    S,
}

impl<T: Real> Grid2D<T> {
    /// Grid with the given node counts; both extents must share one spacing.
    pub fn new(kind: GridKind, t_range: (T, T), s_range: (T, T), nt: usize, ns: usize) -> Result<Self> {
        if nt < 3 || ns < 3 {
            return Err(Error::ShapeMismatch("grids need at least 3 nodes per direction".into()));
        }
        let h = (t_range.1 - t_range.0) / c::<T>((nt - 1) as f64);
        let hs = (s_range.1 - s_range.0) / c::<T>((ns - 1) as f64);
        if !(h > T::zero()) || (h - hs).abs() > c::<T>(1e-12) * (T::one() + h) {
            return Err(Error::ShapeMismatch(format!(
                "cells are not square: h_t = {}, h_s = {}",
                f(h),
                f(hs)
            )));
        }
        Ok(Self { kind, t_range, s_range, nt, ns, h })
    }

    /// Grid with `nt` nodes in `t`; the node count in `s` follows from the spacing.
    pub fn with_spacing_of_t(kind: GridKind, t_range: (T, T), s_range: (T, T), nt: usize) -> Result<Self> {
        let h = (t_range.1 - t_range.0) / c::<T>((nt.max(2) - 1) as f64);
        let ns = f((s_range.1 - s_range.0) / h).round() as usize + 1;
        Self::new(kind, t_range, s_range, nt, ns)
    }

    /// Square plane truncation `[-r, r]^2` with `nodes` per side.
    pub fn plane(r: T, nodes: usize) -> Result<Self> {
        Self::new(GridKind::Plane, (-r, r), (-r, r), nodes, nodes)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nt * self.ns
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nt + i
    }

    #[inline]
    pub fn t(&self, i: usize) -> T {
        self.t_range.0 + self.h * c::<T>(i as f64)
    }

    #[inline]
    pub fn s(&self, j: usize) -> T {
        self.s_range.0 + self.h * c::<T>(j as f64)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nt || j + 1 == self.ns
    }

    /// Distance in nodes to the nearest edge.
    pub fn depth(&self, i: usize, j: usize) -> usize {
        i.min(j).min(self.nt - 1 - i).min(self.ns - 1 - j)
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            kind: self.kind,
            t_range: (f(self.t_range.0), f(self.t_range.1)),
            s_range: (f(self.s_range.0), f(self.s_range.1)),
            nt: self.nt,
            ns: self.ns,
            h: f(self.h),
        }
    }

    /// Every other node of this grid (node counts must be odd).
    pub fn coarsened(&self) -> Result<Self> {
        if self.nt % 2 == 0 || self.ns % 2 == 0 {
            return Err(Error::ShapeMismatch("coarsening needs odd node counts".into()));
        }
        Self::new(self.kind, self.t_range, self.s_range, self.nt / 2 + 1, self.ns / 2 + 1)
    }

    /// Second-order difference of component `comp` of a node-major field with `stride` entries per node.
    #[inline]
    pub fn diff<X>(&self, data: &[X], stride: usize, comp: usize, i: usize, j: usize, dir: Dir) -> X
    where
        X: Copy + Add<Output = X> + Sub<Output = X> + Mul<T, Output = X>,
    {
        let half: T = c(0.5);
        let inv = T::one() / self.h;
        let at = |a: usize, b: usize| data[(b * self.nt + a) * stride + comp];
        let (pos, count) = match dir {
            Dir::T => (i, self.nt),
            Dir::S => (j, self.ns),
        };
        let get = |p: usize| match dir {
            Dir::T => at(p, j),
            Dir::S => at(i, p),
        };
        if pos > 0 && pos + 1 < count {
            (get(pos + 1) - get(pos - 1)) * (half * inv)
        } else if pos == 0 {
            let three: T = c(3.0);
            let four: T = c(4.0);
            (get(1) * four - get(0) * three - get(2)) * (half * inv)
        } else {
            let three: T = c(3.0);
            let four: T = c(4.0);
            (get(pos) * three - get(pos - 1) * four + get(pos - 2)) * (half * inv)
        }
    }

    /// Five-point `d_tt + d_ss` at an interior node.
    #[inline]
    pub fn laplacian_at<X>(&self, data: &[X], stride: usize, comp: usize, i: usize, j: usize) -> X
    where
        X: Copy + Add<Output = X> + Sub<Output = X> + Mul<T, Output = X>,
    {
        let at = |a: usize, b: usize| data[(b * self.nt + a) * stride + comp];
        let inv2 = T::one() / (self.h * self.h);
        let four: T = c(4.0);
        (at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - at(i, j) * four) * inv2
    }

    /// `d_tt + d_ss` as the square of the central difference (stencil width
    /// `4h`); needs depth at least 2. Blind to node-to-node oscillations,
    /// like the first-order operators it is built from.
    #[inline]
    pub fn wide_laplacian_at<X>(&self, data: &[X], stride: usize, comp: usize, i: usize, j: usize) -> X
    where
        X: Copy + Add<Output = X> + Sub<Output = X> + Mul<T, Output = X>,
    {
        let at = |a: usize, b: usize| data[(b * self.nt + a) * stride + comp];
        let inv2 = T::one() / (c::<T>(4.0) * self.h * self.h);
        let four: T = c(4.0);
        (at(i + 2, j) + at(i - 2, j) + at(i, j + 2) + at(i, j - 2) - at(i, j) * four) * inv2
    }
}

/// Discrete configuration: section values and connection coefficients per node.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldConfig<T> {
    pub n: usize,
    pub k: usize,
    pub nt: usize,
    pub ns: usize,
    /// `n` complex values per node.
    pub p: Vec<Complex<T>>,
    /// `k` real coefficients per node.
    pub a_t: Vec<T>,
    pub a_s: Vec<T>,
}

impl<T: Real> FieldConfig<T> {
    pub fn constant(grid: &Grid2D<T>, k: usize, q: &[Complex<T>]) -> Self {
        let nodes = grid.len();
        let mut p = Vec::with_capacity(nodes * q.len());
        for _ in 0..nodes {
            p.extend_from_slice(q);
        }
        Self {
            n: q.len(),
            k,
            nt: grid.nt,
            ns: grid.ns,
            p,
            a_t: vec![T::zero(); nodes * k],
            a_s: vec![T::zero(); nodes * k],
        }
    }

    #[inline]
    pub fn p_at(&self, node: usize) -> &[Complex<T>] {
        &self.p[node * self.n..(node + 1) * self.n]
    }

    #[inline]
    pub fn at_at(&self, node: usize) -> &[T] {
        &self.a_t[node * self.k..(node + 1) * self.k]
    }

    #[inline]
    pub fn as_at(&self, node: usize) -> &[T] {
        &self.a_s[node * self.k..(node + 1) * self.k]
    }

    pub fn check(&self, m: &LgModel<T>, grid: &Grid2D<T>) -> Result<()> {
        let nodes = grid.len();
        if self.n != m.n
            || self.k != m.k
            || self.nt != grid.nt
            || self.ns != grid.ns
            || self.p.len() != nodes * m.n
            || self.a_t.len() != nodes * m.k
            || self.a_s.len() != nodes * m.k
        {
            return Err(Error::ShapeMismatch(format!(
                "config ({}x{}, n={}, k={}) does not match grid {}x{} and model n={}, k={}",
                self.nt, self.ns, self.n, self.k, grid.nt, grid.ns, m.n, m.k
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.a_t.iter().chain(&self.a_s).all(|x| x.is_finite())
    }

    /// Restriction to every other node of `fine` (see [`Grid2D::coarsened`]).
    pub fn subsample(&self, fine: &Grid2D<T>) -> Result<Self> {
        let coarse = fine.coarsened()?;
        let mut out = FieldConfig::constant(&coarse, self.k, &vec![czero(); self.n]);
        for j in 0..coarse.ns {
            for i in 0..coarse.nt {
                let (src, dst) = (fine.idx(2 * i, 2 * j), coarse.idx(i, j));
                out.p[dst * self.n..(dst + 1) * self.n].copy_from_slice(self.p_at(src));
                out.a_t[dst * self.k..(dst + 1) * self.k].copy_from_slice(self.at_at(src));
                out.a_s[dst * self.k..(dst + 1) * self.k].copy_from_slice(self.as_at(src));
            }
        }
        Ok(out)
    }

    /// Largest absolute difference over all stored values.
    pub fn max_diff(&self, other: &Self) -> T {
        let dp = self
            .p
            .iter()
            .zip(&other.p)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm_sqr().sqrt()));
        let da = self
            .a_t
            .iter()
            .zip(&other.a_t)
            .chain(self.a_s.iter().zip(&other.a_s))
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()));
        dp.max(da)
    }
}

/// Covariant derivatives, curvature and moment map at every node.
#[derive(Clone, Debug)]
pub struct DerivedFields<T> {
    pub t: Vec<Complex<T>>,
    pub s: Vec<Complex<T>>,
    /// `d_s a_t - d_t a_s`, `k` values per node.
    pub f: Vec<T>,
    pub mu: Vec<T>,
}

pub fn covariant_derivatives<T: Real>(
    m: &LgModel<T>,
    grid: &Grid2D<T>,
    cfg: &FieldConfig<T>,
) -> Result<DerivedFields<T>> {
    cfg.check(m, grid)?;
    let (n, k) = (m.n, m.k);
    let nodes = grid.len();
    let mut out = DerivedFields {
        t: vec![czero(); nodes * n],
        s: vec![czero(); nodes * n],
        f: vec![T::zero(); nodes * k],
        mu: vec![T::zero(); nodes * k],
    };
    for j in 0..grid.ns {
        for i in 0..grid.nt {
            let node = grid.idx(i, j);
            let p = cfg.p_at(node);
            let ct = m.charges(cfg.at_at(node));
            let cs = m.charges(cfg.as_at(node));
            for q in 0..n {
                let dt = grid.diff(&cfg.p, n, q, i, j, Dir::T);
                let ds = grid.diff(&cfg.p, n, q, i, j, Dir::S);
                out.t[node * n + q] = dt + jmul(p[q] * ct[q]);
                out.s[node * n + q] = ds + jmul(p[q] * cs[q]);
            }
            for a in 0..k {
                out.f[node * k + a] = grid.diff(&cfg.a_t, k, a, i, j, Dir::S)
                    - grid.diff(&cfg.a_s, k, a, i, j, Dir::T);
            }
            let mu = m.moment_map(p);
            out.mu[node * k..(node + 1) * k].copy_from_slice(&mu);
        }
    }
    Ok(out)
}

/// Per-node residual of the gauged Witten equations.
#[derive(Clone, Debug)]
pub struct ResidualField<T> {
    /// `F + mu - delta`, `k` per node.
    pub moment: Vec<T>,
    /// `T + J S + grad H`, `n` per node.
    pub cr: Vec<Complex<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualNorms {
    pub max: f64,
    pub l2: f64,
}

pub fn residual<T: Real>(m: &LgModel<T>, grid: &Grid2D<T>, cfg: &FieldConfig<T>) -> Result<ResidualField<T>> {
    let d = covariant_derivatives(m, grid, cfg)?;
    let (n, k) = (m.n, m.k);
    let nodes = grid.len();
    let mut moment = vec![T::zero(); nodes * k];
    let mut cr = vec![czero(); nodes * n];
    for node in 0..nodes {
        for a in 0..k {
            moment[node * k + a] = d.f[node * k + a] + d.mu[node * k + a] - m.delta[a];
        }
        let gh = m.grad_h(cfg.p_at(node));
        for q in 0..n {
            cr[node * n + q] = d.t[node * n + q] + jmul(d.s[node * n + q]) + gh[q];
        }
    }
    Ok(ResidualField { moment, cr })
}

impl<T: Real> ResidualField<T> {
    pub fn node_sq(&self, node: usize, n: usize, k: usize) -> T {
        let a = self.moment[node * k..(node + 1) * k].iter().fold(T::zero(), |acc, x| acc + *x * *x);
        let b = self.cr[node * n..(node + 1) * n].iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        a + b
    }

    /// Max and trapezoid-weighted L2 norms over nodes at depth at least `margin`.
    pub fn norms(&self, grid: &Grid2D<T>, n: usize, k: usize, margin: usize) -> ResidualNorms {
        let sq: Vec<T> = (0..grid.len()).map(|node| self.node_sq(node, n, k)).collect();
        let region = Region::interior(grid, margin);
        ResidualNorms {
            max: f(region.max(grid, &sq).sqrt()),
            l2: f(region.integrate(grid, &sq).sqrt()),
        }
    }
}

/// Rectangle of nodes `i0..=i1` by `j0..=j1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Region {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl Region {
    pub fn full<T: Real>(grid: &Grid2D<T>) -> Self {
        Self { i0: 0, i1: grid.nt - 1, j0: 0, j1: grid.ns - 1 }
    }

    /// Nodes at depth at least `margin`.
    pub fn interior<T: Real>(grid: &Grid2D<T>, margin: usize) -> Self {
        Self {
            i0: margin,
            i1: grid.nt - 1 - margin,
            j0: margin,
            j1: grid.ns - 1 - margin,
        }
    }

    /// Nodes inside `[t0, t1] x [s0, s1]`, snapped to the grid.
    pub fn from_coords<T: Real>(grid: &Grid2D<T>, t: (T, T), s: (T, T)) -> Result<Self> {
        let tol = grid.h * c::<T>(1e-9);
        if t.0 < grid.t_range.0 - tol
            || t.1 > grid.t_range.1 + tol
            || s.0 < grid.s_range.0 - tol
            || s.1 > grid.s_range.1 + tol
            || t.0 > t.1
            || s.0 > s.1
        {
            return Err(Error::RegionOutOfBounds);
        }
        let snap_lo = |x: T, x0: T| f(((x - x0) / grid.h - c::<T>(1e-9)).ceil()).max(0.0) as usize;
        let snap_hi = |x: T, x0: T| f(((x - x0) / grid.h + c::<T>(1e-9)).floor()).max(0.0) as usize;
        Ok(Self {
            i0: snap_lo(t.0, grid.t_range.0),
            i1: snap_hi(t.1, grid.t_range.0).min(grid.nt - 1),
            j0: snap_lo(s.0, grid.s_range.0),
            j1: snap_hi(s.1, grid.s_range.0).min(grid.ns - 1),
        })
    }

    /// Local-energy window `[n - 2, n + 2] x [r, r + 4]`.
    pub fn window<T: Real>(grid: &Grid2D<T>, n: i64, r: T) -> Result<Self> {
        let nt: T = c(n as f64);
        let two: T = c(2.0);
        Self::from_coords(grid, (nt - two, nt + two), (r, r + c(4.0)))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i <= self.i1 && j >= self.j0 && j <= self.j1
    }

    /// Trapezoid rule over the region for a scalar node field.
    pub fn integrate<T: Real>(&self, grid: &Grid2D<T>, v: &[T]) -> T {
        let half: T = c(0.5);
        let mut sum = T::zero();
        for j in self.j0..=self.j1 {
            let wj = if (j == self.j0 || j == self.j1) && self.j1 > self.j0 { half } else { T::one() };
            for i in self.i0..=self.i1 {
                let wi = if (i == self.i0 || i == self.i1) && self.i1 > self.i0 { half } else { T::one() };
                sum += wi * wj * v[grid.idx(i, j)];
            }
        }
        sum * grid.h * grid.h
    }

    pub fn max<T: Real>(&self, grid: &Grid2D<T>, v: &[T]) -> T {
        let mut out = T::zero();
        for j in self.j0..=self.j1 {
            for i in self.i0..=self.i1 {
                out = out.max(v[grid.idx(i, j)]);
            }
        }
        out
    }
}

/// Integrals of the energy densities over a region.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyBreakdown<T> {
    pub e_t: T,
    pub e_jsh: T,
    pub e_f: T,
    pub e_mu: T,
    /// `e_t + e_jsh + e_f + e_mu`.
    pub total: T,
    /// Integral of `|grad_A P|^2 + |grad H|^2 + |F|^2 + |delta - mu|^2`.
    pub total_plane: T,
}

/// Pointwise densities used by [`energies`].
pub struct EnergyDensities<T> {
    pub t2: Vec<T>,
    pub jsh2: Vec<T>,
    pub f2: Vec<T>,
    pub mu2: Vec<T>,
    /// `|grad_A P|^2 + |grad H|^2 + |F|^2 + |delta - mu|^2`.
    pub u_gamma: Vec<T>,
    /// `|grad_A P|^2 + |F|^2`.
    pub u: Vec<T>,
}

pub fn energy_densities<T: Real>(
    m: &LgModel<T>,
    grid: &Grid2D<T>,
    cfg: &FieldConfig<T>,
) -> Result<EnergyDensities<T>> {
    let d = covariant_derivatives(m, grid, cfg)?;
    let (n, k) = (m.n, m.k);
    let nodes = grid.len();
    let mut out = EnergyDensities {
        t2: vec![T::zero(); nodes],
        jsh2: vec![T::zero(); nodes],
        f2: vec![T::zero(); nodes],
        mu2: vec![T::zero(); nodes],
        u_gamma: vec![T::zero(); nodes],
        u: vec![T::zero(); nodes],
    };
    for node in 0..nodes {
        let gh = m.grad_h(cfg.p_at(node));
        let (mut t2, mut s2, mut jsh2, mut gh2) = (T::zero(), T::zero(), T::zero(), T::zero());
        for q in 0..n {
            let (tv, sv) = (d.t[node * n + q], d.s[node * n + q]);
            t2 += tv.norm_sqr();
            s2 += sv.norm_sqr();
            jsh2 += (jmul(sv) + gh[q]).norm_sqr();
            gh2 += gh[q].norm_sqr();
        }
        let (mut f2, mut mu2) = (T::zero(), T::zero());
        for a in 0..k {
            let fa = d.f[node * k + a];
            let ma = m.delta[a] - d.mu[node * k + a];
            f2 += fa * fa;
            mu2 += ma * ma;
        }
        out.t2[node] = t2;
        out.jsh2[node] = jsh2;
        out.f2[node] = f2;
        out.mu2[node] = mu2;
        out.u[node] = t2 + s2 + f2;
        out.u_gamma[node] = t2 + s2 + gh2 + f2 + mu2;
    }
    Ok(out)
}

/// The density `U_gamma` at every node.
pub fn energy_density<T: Real>(m: &LgModel<T>, grid: &Grid2D<T>, cfg: &FieldConfig<T>) -> Result<Vec<T>> {
    Ok(energy_densities(m, grid, cfg)?.u_gamma)
}

pub fn energies<T: Real>(
    m: &LgModel<T>,
    grid: &Grid2D<T>,
    cfg: &FieldConfig<T>,
    region: Option<Region>,
) -> Result<EnergyBreakdown<T>> {
    let region = region.unwrap_or_else(|| Region::full(grid));
    if region.i1 >= grid.nt || region.j1 >= grid.ns || region.i0 > region.i1 || region.j0 > region.j1 {
        return Err(Error::RegionOutOfBounds);
    }
    let d = energy_densities(m, grid, cfg)?;
    let e_t = region.integrate(grid, &d.t2);
    let e_jsh = region.integrate(grid, &d.jsh2);
    let e_f = region.integrate(grid, &d.f2);
    let e_mu = region.integrate(grid, &d.mu2);
    Ok(EnergyBreakdown {
        e_t,
        e_jsh,
        e_f,
        e_mu,
        total: e_t + e_jsh + e_f + e_mu,
        total_plane: region.integrate(grid, &d.u_gamma),
    })
}

/// Gauge transformation by node angles `u` (`k` per node).
pub fn apply_gauge<T: Real>(m: &LgModel<T>, grid: &Grid2D<T>, cfg: &FieldConfig<T>, u: &[T]) -> Result<FieldConfig<T>> {
    cfg.check(m, grid)?;
    if u.len() != grid.len() * m.k {
        return Err(Error::ShapeMismatch("gauge field has the wrong length".into()));
    }
    let (n, k) = (m.n, m.k);
    let mut out = cfg.clone();
    for j in 0..grid.ns {
        for i in 0..grid.nt {
            let node = grid.idx(i, j);
            let q = m.charges(&u[node * k..(node + 1) * k]);
            for r in 0..n {
                out.p[node * n + r] = cfg.p[node * n + r] * cis(q[r]);
            }
            for a in 0..k {
                out.a_t[node * k + a] = cfg.a_t[node * k + a] - grid.diff(u, k, a, i, j, Dir::T);
                out.a_s[node * k + a] = cfg.a_s[node * k + a] - grid.diff(u, k, a, i, j, Dir::S);
            }
        }
    }
    Ok(out)
}

/// `grad^A_dir v = d_dir v + J <Hess mu(v), a(dir)>` for a vector field `v` along `P`.
pub fn covariant_vector_derivative<T: Real>(
    m: &LgModel<T>,
    grid: &Grid2D<T>,
    cfg: &FieldConfig<T>,
    v: &[Complex<T>],
    dir: Dir,
) -> Result<Vec<Complex<T>>> {
    cfg.check(m, grid)?;
    if v.len() != grid.len() * m.n {
        return Err(Error::ShapeMismatch("vector field has the wrong length".into()));
    }
    let n = m.n;
    let mut out = vec![czero(); v.len()];
    for j in 0..grid.ns {
        for i in 0..grid.nt {
            let node = grid.idx(i, j);
            let a = match dir {
                Dir::T => cfg.at_at(node),
                Dir::S => cfg.as_at(node),
            };
            let corr = m.hess_mu_pair(cfg.p_at(node), &v[node * n..(node + 1) * n], a);
            for q in 0..n {
                out[node * n + q] = grid.diff(v, n, q, i, j, dir) + jmul(corr[q]);
            }
        }
    }
    Ok(out)
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub grid: GridSpec,
    pub model_hash: String,
    pub n: usize,
    pub k: usize,
    /// Per node: `n` (re, im) pairs, then `k` values of `a_t`, then `k` of `a_s`; nodes row-major, `t` fastest.
    pub layout: String,
    pub scalar: String,
}

/// Writes `<stem>.json` (header) and `<stem>.bin` (little-endian `f64`).
pub fn write_snapshot<T: Real>(
    stem: &Path,
    m: &LgModel<T>,
    grid: &Grid2D<T>,
    cfg: &FieldConfig<T>,
) -> Result<()> {
    cfg.check(m, grid)?;
    let header = SnapshotHeader {
        grid: grid.spec(),
        model_hash: m.hash(),
        n: m.n,
        k: m.k,
        layout: "node-major; per node: P (re,im) x n, a_t x k, a_s x k; row-major, t fastest".into(),
        scalar: "f64-le".into(),
    };
    let mut bytes = Vec::with_capacity(grid.len() * (2 * m.n + 2 * m.k) * 8);
    for node in 0..grid.len() {
        for z in cfg.p_at(node) {
            bytes.extend_from_slice(&f(z.re).to_le_bytes());
            bytes.extend_from_slice(&f(z.im).to_le_bytes());
        }
        for x in cfg.at_at(node).iter().chain(cfg.as_at(node)) {
            bytes.extend_from_slice(&f(*x).to_le_bytes());
        }
    }
    write_atomic(&stem.with_extension("bin"), &bytes)?;
    let json = serde_json::to_string_pretty(&header)?;
    write_atomic(&stem.with_extension("json"), json.as_bytes())
}

pub fn read_snapshot<T: Real>(stem: &Path) -> Result<(SnapshotHeader, FieldConfig<T>)> {
    let header: SnapshotHeader = serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
    let bytes = std::fs::read(stem.with_extension("bin"))?;
    let (n, k) = (header.n, header.k);
    let nodes = header.grid.nt * header.grid.ns;
    if bytes.len() != nodes * (2 * n + 2 * k) * 8 {
        return Err(Error::ShapeMismatch("snapshot payload has the wrong size".into()));
    }
    let vals: Vec<f64> = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    let mut cfg = FieldConfig {
        n,
        k,
        nt: header.grid.nt,
        ns: header.grid.ns,
        p: Vec::with_capacity(nodes * n),
        a_t: Vec::with_capacity(nodes * k),
        a_s: Vec::with_capacity(nodes * k),
    };
    for rec in vals.chunks_exact(2 * n + 2 * k) {
        for q in 0..n {
            cfg.p.push(Complex::new(c(rec[2 * q]), c(rec[2 * q + 1])));
        }
        cfg.a_t.extend(rec[2 * n..2 * n + k].iter().map(|&x| c::<T>(x)));
        cfg.a_s.extend(rec[2 * n + k..].iter().map(|&x| c::<T>(x)));
    }
    Ok((header, cfg))
}

/// CSV with columns `t,s,u_gamma`.
pub fn u_gamma_csv<T: Real>(grid: &Grid2D<T>, u: &[T]) -> String {
    let mut out = String::from("t,s,u_gamma\n");
    for j in 0..grid.ns {
        for i in 0..grid.nt {
            out.push_str(&format!("{:.12e},{:.12e},{:.12e}\n", f(grid.t(i)), f(grid.s(j)), f(u[grid.idx(i, j)])));
        }
    }
    out
}
