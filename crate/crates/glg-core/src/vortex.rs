//! Radially symmetric vortices of the weight-one circle model at level 1/2.
//!
//! With `u = log |P|^2` and `x = ln r` the radial equation `u'' + u'/r = e^u - 1`
//! becomes `u_xx = e^{2x} (e^u - 1)`, solved by Newton on a uniform `x` grid.
//! Near the origin `u = 2n ln r + c0 - r^2/4 + ...`, which gives the flux
//! condition `u_x = 2n - r^2/2` at `r_min`; at `r_max` the linearized tail
//! `u ~ A K_0(r)` gives a Robin condition.

use crate::error::{Error, Result};
use crate::grid_field::{energies, FieldConfig, Grid2D};
use crate::lg_core::LgModel;
use crate::linalg::{linear_fit, solve_tridiagonal};
use crate::report::ExperimentReport;
use crate::scalar::{c, cx, f, Real};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub struct VortexProfile<T> {
    pub n: u32,
    pub r_min: T,
    pub r_max: T,
    /// Uniform grid in `x = ln r`.
    pub x: Vec<T>,
    pub u: Vec<T>,
    /// `du/dx` (second-order differences).
    pub ux: Vec<T>,
    /// Max of the discrete equation residual, in `u_xx` units.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VortexParams {
    pub n: u32,
    pub r_min: f64,
    pub r_max: f64,
    pub nodes: usize,
}

impl Default for VortexParams {
    fn default() -> Self {
        Self { n: 1, r_min: 1e-3, r_max: 20.0, nodes: 2000 }
    }
}

/// `r K_1(r) / K_0(r)` from the large-argument expansions (adequate for `r >= 8`).
fn bessel_k_ratio(r: f64) -> f64 {
    let series = |nu: f64| {
        let mu = 4.0 * nu * nu;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..12 {
            let kf = k as f64;
            let next = term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * r);
            if next.abs() > term.abs() {
                break;
            }
            term = next;
            sum += term;
        }
        sum
    };
    r * series(1.0) / series(0.0)
}

pub fn solve_radial_vortex<T: Real>(n: u32, r_min: T, r_max: T, nodes: usize) -> Result<VortexProfile<T>> {
    if !(r_min > T::zero()) || !(r_max > r_min) || nodes < 10 {
        return Err(Error::OutOfRange(format!(
            "vortex grid needs 0 < r_min < r_max and at least 10 nodes (got r_min={}, r_max={}, nodes={nodes})",
            f(r_min),
            f(r_max)
        )));
    }
    let (x0, x1) = (r_min.ln(), r_max.ln());
    let dx = (x1 - x0) / c::<T>((nodes - 1) as f64);
    let x: Vec<T> = (0..nodes).map(|i| x0 + dx * c::<T>(i as f64)).collect();
    let e2x: Vec<T> = x.iter().map(|&xi| (xi + xi).exp()).collect();
    let two: T = c(2.0);
    let half: T = c(0.5);
    let two_n: T = c(2.0 * n as f64);
    // u = 2n l + w with l = ln(r / sqrt(1 + r^2)); w stays O(1), so rounding in the
    // second difference stays far below the residual target. The discrete system is
    // the plain second-difference scheme for u, with l's difference taken exactly.
    let ell_at = |xi: T| -half * (T::one() + (-(xi + xi)).exp()).ln();
    let ell: Vec<T> = x.iter().map(|&xi| ell_at(xi)).collect();
    let ell_ghost_left = ell_at(x0 - dx);
    let ell_ghost_right = ell_at(x1 + dx);
    let d2ell: Vec<T> = (0..nodes)
        .map(|i| {
            let l = if i == 0 { ell_ghost_left } else { ell[i - 1] };
            let r = if i + 1 == nodes { ell_ghost_right } else { ell[i + 1] };
            ((l - ell[i]) + (r - ell[i])) / (dx * dx)
        })
        .collect();
    let flux_left = if n == 0 { T::zero() } else { two_n - half * r_min * r_min };
    let kappa: T = c(bessel_k_ratio(f(r_max)));
    let dx2 = dx * dx;
    let m = nodes;

    // F_i = (u_{i+1} - 2u_i + u_{i-1}) / dx^2 - e^{2x_i} (e^{u_i} - 1), ghost nodes from the boundary conditions
    let eval = |w: &[T]| -> Vec<T> {
        (0..m)
            .map(|i| {
                let left = if i == 0 {
                    w[1] + two_n * (ell[1] - ell_ghost_left) - two * dx * flux_left
                } else {
                    w[i - 1]
                };
                let right = if i + 1 == m {
                    let u_end = two_n * ell[m - 1] + w[m - 1];
                    w[m - 2] + two_n * (ell[m - 2] - ell_ghost_right) - two * dx * kappa * u_end
                } else {
                    w[i + 1]
                };
                let u = two_n * ell[i] + w[i];
                ((left - w[i]) + (right - w[i])) / dx2 + two_n * d2ell[i] - e2x[i] * (u.exp() - T::one())
            })
            .collect()
    };
    let norm = |v: &[T]| v.iter().fold(T::zero(), |a, x| a.max(x.abs()));

    let mut w = vec![T::zero(); m];
    let mut res = eval(&w);
    let mut iterations = 0;
    let mut step_norm: T = c(1e300);
    // step tolerance at the rounding floor of the scalar type
    let eps = f(T::default_epsilon());
    let step_tol: T = c((1e-13f64).max(1e3 * eps));
    let inv = T::one() / dx2;
    while iterations < 200 && step_norm >= step_tol {
        iterations += 1;
        // row i couples to w_{i-1} through lower[i]
        let mut lower = vec![inv; m];
        let mut upper = vec![inv; m];
        let mut diag: Vec<T> = (0..m).map(|i| -two * inv - e2x[i] * (two_n * ell[i] + w[i]).exp()).collect();
        upper[0] = two * inv;
        lower[m - 1] = two * inv;
        diag[m - 1] -= two * dx * kappa * inv;
        let rhs: Vec<T> = res.iter().map(|r| -*r).collect();
        let dw = solve_tridiagonal(&lower, &diag, &upper, &rhs);
        // backtrack on the residual norm
        let r0 = norm(&res);
        let mut lam = T::one();
        loop {
            let trial: Vec<T> = w.iter().zip(&dw).map(|(a, b)| *a + lam * *b).collect();
            let tr = eval(&trial);
            if norm(&tr) < r0 || lam < c(1e-4) || r0 < c(1e-9) {
                w = trial;
                res = tr;
                break;
            }
            lam *= half;
        }
        step_norm = lam * norm(&dw);
    }
    if step_norm > step_tol * c(1e4) || w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence { iterations, residual: f(norm(&res)) });
    }
    let u: Vec<T> = (0..m).map(|i| two_n * ell[i] + w[i]).collect();
    let mut ux = vec![T::zero(); m];
    ux[0] = flux_left;
    ux[m - 1] = -kappa * u[m - 1];
    for i in 1..m - 1 {
        ux[i] = (u[i + 1] - u[i - 1]) / (two * dx);
    }
    Ok(VortexProfile {
        n,
        r_min,
        r_max,
        x,
        u,
        ux,
        residual: f(norm(&res)),
        iterations,
    })
}

impl<T: Real> VortexProfile<T> {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn r(&self, i: usize) -> T {
        self.x[i].exp()
    }

    pub fn abs_p(&self, i: usize) -> T {
        (self.u[i] * c(0.5)).exp()
    }

    /// `(1 - |P|^2) / 2`, the curvature on the solution.
    pub fn curvature(&self, i: usize) -> T {
        c::<T>(0.5) * (T::one() - self.u[i].exp())
    }

    /// Limit of `e^u - 1` at the origin, i.e. the Laplacian of the regular part there.
    pub fn core_laplacian(&self) -> T {
        if self.n == 0 {
            self.u[0].exp() - T::one()
        } else {
            -T::one()
        }
    }

    /// Regular part `v = u - 2n ln r` and its `x`-derivative at radius `r`.
    pub fn regular_part(&self, r: T) -> (T, T) {
        let two_n: T = c(2.0 * self.n as f64);
        let quarter: T = c(0.25);
        if r <= self.r_min {
            let g = self.core_laplacian();
            let v0 = self.u[0] - two_n * self.x[0] - quarter * g * self.r_min * self.r_min;
            return (v0 + quarter * g * r * r, c::<T>(0.5) * g * r * r);
        }
        let x = r.ln();
        let dx = self.x[1] - self.x[0];
        let pos = f((x - self.x[0]) / dx).floor().max(0.0) as usize;
        let i = pos.min(self.len() - 2);
        let s = (x - self.x[i]) / dx;
        // cubic Hermite in x on (u, u_x)
        let (s2, s3) = (s * s, s * s * s);
        let two: T = c(2.0);
        let three: T = c(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        let (u0, u1, m0, m1) = (self.u[i], self.u[i + 1], self.ux[i] * dx, self.ux[i + 1] * dx);
        let u = h00 * u0 + h10 * m0 + h01 * u1 + h11 * m1;
        let six: T = c(6.0);
        let four: T = c(4.0);
        let du = ((six * s2 - six * s) * u0 + (three * s2 - four * s + T::one()) * m0
            + (-six * s2 + six * s) * u1
            + (three * s2 - two * s) * m1)
            / dx;
        (u - two_n * x, du - two_n)
    }

    /// CSV with columns `r,u,abs_p,curvature`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,u,abs_p,curvature\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                f(self.r(i)),
                f(self.u[i]),
                f(self.abs_p(i)),
                f(self.curvature(i))
            ));
        }
        out
    }
}

/// Samples the profile on a plane grid: `P = e^{v/2} (t + i s)^n` with the
/// connection `a_t = -a_theta s / r^2`, `a_s = a_theta t / r^2`, `a_theta = v_x / 2`.
pub fn embed_vortex<T: Real>(profile: &VortexProfile<T>, grid: &Grid2D<T>) -> Result<FieldConfig<T>> {
    let corner = |a: T, b: T| a.abs().max(b.abs());
    let rt = corner(grid.t_range.0, grid.t_range.1);
    let rs = corner(grid.s_range.0, grid.s_range.1);
    if (rt * rt + rs * rs).sqrt() > profile.r_max * c(1.0 + 1e-12) {
        return Err(Error::GridExceedsProfile);
    }
    let mut cfg = FieldConfig::constant(grid, 1, &[cx(T::one(), T::zero())]);
    let half: T = c(0.5);
    for j in 0..grid.ns {
        for i in 0..grid.nt {
            let (t, s) = (grid.t(i), grid.s(j));
            let r2 = t * t + s * s;
            let r = r2.sqrt();
            let (v, vx) = profile.regular_part(r);
            let mut w = cx(T::one(), T::zero());
            for _ in 0..profile.n {
                w *= Complex::new(t, s);
            }
            let node = grid.idx(i, j);
            cfg.p[node] = w * (half * v).exp();
            // a_theta / r^2, with its small-r limit
            let coef = if r <= profile.r_min { c::<T>(0.25) * profile.core_laplacian() } else { half * vx / r2 };
            cfg.a_t[node] = -coef * s;
            cfg.a_s[node] = coef * t;
        }
    }
    Ok(cfg)
}

/// Radial quadrature of `2 pi int (2 f'^2 + (1 - f^2)^2 / 2) r dr` with `f = |P|`.
pub fn vortex_energy<T: Real>(profile: &VortexProfile<T>) -> f64 {
    let dx = f(profile.x[1] - profile.x[0]);
    let m = profile.len();
    let mut sum = 0.0;
    for i in 0..m {
        let (u, ux, r) = (f(profile.u[i]), f(profile.ux[i]), f(profile.r(i)));
        let eu = u.exp();
        let val = 0.5 * ux * ux * eu + 0.5 * (1.0 - eu).powi(2) * r * r;
        sum += if i == 0 || i + 1 == m { 0.5 * val } else { val };
    }
    2.0 * std::f64::consts::PI * sum * dx
}

/// Cross-check of the energy on an embedded grid configuration.
pub fn vortex_energy_grid<T: Real>(m: &LgModel<T>, grid: &Grid2D<T>, cfg: &FieldConfig<T>) -> Result<f64> {
    Ok(f(energies(m, grid, cfg, None)?.total_plane))
}

/// Slope of `log((1 - |P|^2)/2)` against `r` over `window`; passes iff the rate is at least 0.9.
pub fn vortex_decay_fit<T: Real>(profile: &VortexProfile<T>, window: (f64, f64)) -> Result<ExperimentReport> {
    let params = VortexParams {
        n: profile.n,
        r_min: f(profile.r_min),
        r_max: f(profile.r_max),
        nodes: profile.len(),
    };
    let mut rep = ExperimentReport::new("vortex_decay_fit", &(params, window));
    let min_curv = (0..profile.len()).fold(f64::INFINITY, |a, i| a.min(f(profile.curvature(i))));
    rep.scalar("min_curvature", min_curv);
    rep.flag("curvature_nonnegative", min_curv >= 0.0);
    if profile.n == 0 {
        rep.note("n = 0 is the vacuum; decay test skipped");
        rep.scalar("energy", vortex_energy(profile));
        return Ok(rep);
    }
    let (mut xs, mut ys) = (vec![], vec![]);
    for i in 0..profile.len() {
        let r = f(profile.r(i));
        if r >= window.0 && r <= window.1 {
            let curv = f(profile.curvature(i));
            if curv > 0.0 {
                xs.push(r);
                ys.push(curv.ln());
            }
        }
    }
    if xs.len() < 3 {
        return Err(Error::FitUnstable(0.0));
    }
    let (slope, _, r2) = linear_fit(&xs, &ys);
    if r2 < 0.99 {
        return Err(Error::FitUnstable(r2));
    }
    rep.scalar("slope", slope);
    rep.scalar("rate", -slope);
    rep.scalar("r2", r2);
    rep.flag("rate_at_least_0.9", -slope >= 0.9);
    Ok(rep)
}
