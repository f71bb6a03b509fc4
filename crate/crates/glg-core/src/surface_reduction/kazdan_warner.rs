//! `eta(alpha) = Delta alpha + (e^{2 alpha} - 1) w+^2 / 2 + (1 - e^{-2 alpha}) w-^2 / 2`
//! on a periodic grid, with `Delta` the nonnegative Laplacian `-(d_xx + d_yy)`.
//!
//! The linearization `Delta + e^{2 alpha} w+^2 + e^{-2 alpha} w-^2` is symmetric
//! positive definite whenever the weights are not both identically zero, so
//! Newton steps are solved with preconditioned CG.

use crate::error::{Error, Result};
use crate::linalg::pcg;
use crate::report::ExperimentReport;
use crate::scalar::{c, f, Real};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq)]
pub struct TorusGrid<T> {
    pub periods: (T, T),
    pub n1: usize,
    pub n2: usize,
    pub h: T,
}

impl<T: Real> TorusGrid<T> {
    pub fn new(periods: (T, T), n1: usize, n2: usize) -> Result<Self> {
        if n1 < 3 || n2 < 3 || !(periods.0 > T::zero()) || !(periods.1 > T::zero()) {
            return Err(Error::ShapeMismatch("torus grid needs positive periods and at least 3 nodes".into()));
        }
        let h = periods.0 / c::<T>(n1 as f64);
        let h2 = periods.1 / c::<T>(n2 as f64);
        if (h - h2).abs() > c::<T>(1e-12) * h {
            return Err(Error::ShapeMismatch("torus cells are not square".into()));
        }
        Ok(Self { periods, n1, n2, h })
    }

    /// Unit-area square torus with `nodes^2` nodes.
    pub fn unit(nodes: usize) -> Result<Self> {
        Self::new((T::one(), T::one()), nodes, nodes)
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        (j % self.n2) * self.n1 + (i % self.n1)
    }

    pub fn coords(&self, node: usize) -> (T, T) {
        let (i, j) = (node % self.n1, node / self.n1);
        (self.h * c::<T>(i as f64), self.h * c::<T>(j as f64))
    }

    /// Nonnegative five-point Laplacian.
    pub fn laplacian(&self, a: &[T]) -> Vec<T> {
        let inv = T::one() / (self.h * self.h);
        let four: T = c(4.0);
        let mut out = vec![T::zero(); self.len()];
        for j in 0..self.n2 {
            for i in 0..self.n1 {
                let nb = a[self.idx(i + 1, j)]
                    + a[self.idx(i + self.n1 - 1, j)]
                    + a[self.idx(i, j + 1)]
                    + a[self.idx(i, j + self.n2 - 1)];
                out[self.idx(i, j)] = (four * a[self.idx(i, j)] - nb) * inv;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightFields<T> {
    pub w_plus: Vec<T>,
    pub w_minus: Vec<T>,
}

impl<T: Real> WeightFields<T> {
    pub fn constant(grid: &TorusGrid<T>, w_plus: T, w_minus: T) -> Self {
        Self { w_plus: vec![w_plus; grid.len()], w_minus: vec![w_minus; grid.len()] }
    }

    pub fn validate(&self, grid: &TorusGrid<T>) -> Result<()> {
        if self.w_plus.len() != grid.len() || self.w_minus.len() != grid.len() {
            return Err(Error::ShapeMismatch("weight fields do not match the torus grid".into()));
        }
        let bad = |w: &[T]| w.iter().any(|x| !(*x >= T::zero()) || !x.is_finite()) || w.iter().all(|x| *x == T::zero());
        if bad(&self.w_plus) || bad(&self.w_minus) {
            return Err(Error::OutOfRange("weights must be nonnegative, finite and not identically zero".into()));
        }
        Ok(())
    }
}

pub fn eta<T: Real>(grid: &TorusGrid<T>, w: &WeightFields<T>, alpha: &[T]) -> Vec<T> {
    let half: T = c(0.5);
    let mut out = grid.laplacian(alpha);
    for (k, o) in out.iter_mut().enumerate() {
        let (a2, wp, wm) = (alpha[k] + alpha[k], w.w_plus[k], w.w_minus[k]);
        *o += half * ((a2.exp() - T::one()) * wp * wp + (T::one() - (-a2).exp()) * wm * wm);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct KwSolution<T> {
    pub alpha: Vec<T>,
    pub residual: f64,
    pub iterations: usize,
    /// Max-norm residual before each step and after the last.
    pub history: Vec<f64>,
    pub descent_steps: usize,
}

#[derive(Serialize)]
struct KwInputs {
    periods: (f64, f64),
    n1: usize,
    n2: usize,
    w_plus: Vec<f64>,
    w_minus: Vec<f64>,
    g: Vec<f64>,
    init: Option<Vec<f64>>,
    tol: f64,
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, x| a.max(x.abs()))
}

/// Damped Newton for `eta(alpha) = g`, stopping at the first max-norm residual below `tol`.
pub fn kazdan_warner_solve<T: Real>(
    grid: &TorusGrid<T>,
    w: &WeightFields<T>,
    g: &[T],
    init: Option<&[T]>,
    tol: f64,
) -> Result<(KwSolution<T>, ExperimentReport)> {
    w.validate(grid)?;
    if g.len() != grid.len() || init.is_some_and(|a| a.len() != grid.len()) {
        return Err(Error::ShapeMismatch("right-hand side or initial guess does not match the grid".into()));
    }
    let inputs = KwInputs {
        periods: (f(grid.periods.0), f(grid.periods.1)),
        n1: grid.n1,
        n2: grid.n2,
        w_plus: w.w_plus.iter().map(|x| f(*x)).collect(),
        w_minus: w.w_minus.iter().map(|x| f(*x)).collect(),
        g: g.iter().map(|x| f(*x)).collect(),
        init: init.map(|a| a.iter().map(|x| f(*x)).collect()),
        tol,
    };
    let residual = |a: &[T]| -> Vec<T> { eta(grid, w, a).iter().zip(g).map(|(e, gi)| *e - *gi).collect() };
    let merit = |r: &[T]| r.iter().fold(T::zero(), |acc, x| acc + *x * *x);
    let mut alpha = init.map(|a| a.to_vec()).unwrap_or_else(|| vec![T::zero(); grid.len()]);
    let mut r = residual(&alpha);
    let mut history = vec![f(max_abs(&r))];
    let mut iterations = 0;
    let mut descent_steps = 0;
    let four: T = c(4.0);
    let inv = T::one() / (grid.h * grid.h);
    while *history.last().unwrap() >= tol {
        if iterations >= 60 {
            return Err(Error::NonConvergence { iterations, residual: *history.last().unwrap() });
        }
        iterations += 1;
        let d: Vec<T> = (0..grid.len())
            .map(|k| {
                let (wp, wm) = (w.w_plus[k], w.w_minus[k]);
                (alpha[k] + alpha[k]).exp() * wp * wp + (-(alpha[k] + alpha[k])).exp() * wm * wm
            })
            .collect();
        let apply = |v: &[T]| -> Vec<T> {
            let mut out = grid.laplacian(v);
            for (k, o) in out.iter_mut().enumerate() {
                *o += d[k] * v[k];
            }
            out
        };
        let diag: Vec<T> = d.iter().map(|x| four * inv + *x).collect();
        let rhs: Vec<T> = r.iter().map(|x| -*x).collect();
        let rn = *history.last().unwrap();
        // forcing term ~ residual keeps the outer iteration quadratic
        let forcing = rn.min(1e-4).max(1e-15);
        let (step, _) = pcg(&apply, &rhs, &diag, None, forcing, 20 * grid.len())?;
        let m0 = merit(&r);
        let mut lam = T::one();
        let mut accepted = false;
        while lam > c(1e-3) {
            let trial: Vec<T> = alpha.iter().zip(&step).map(|(a, s)| *a + lam * *s).collect();
            let rt = residual(&trial);
            if merit(&rt) < m0 {
                alpha = trial;
                r = rt;
                accepted = true;
                break;
            }
            lam *= c(0.5);
        }
        if !accepted {
            // gradient descent on |eta(alpha) - g|^2 with Armijo backtracking
            descent_steps += 1;
            let grad = apply(&r);
            let gg = merit(&grad);
            let mut t = T::one() / (T::one() + gg.sqrt());
            loop {
                let trial: Vec<T> = alpha.iter().zip(&grad).map(|(a, s)| *a - t * *s).collect();
                let rt = residual(&trial);
                if merit(&rt) <= m0 - c::<T>(1e-4) * t * gg || t < c(1e-20) {
                    alpha = trial;
                    r = rt;
                    break;
                }
                t *= c(0.5);
            }
        }
        history.push(f(max_abs(&r)));
    }
    let res = *history.last().unwrap();
    let mut rep = ExperimentReport::new("kw_solve", &inputs);
    rep.scalar("residual", res);
    rep.scalar("iterations", iterations as f64);
    rep.scalar("descent_steps", descent_steps as f64);
    rep.scalar("alpha_sup", f(max_abs(&alpha)));
    rep.convergence = history.clone();
    rep.flag("residual_below_tol", res < tol);
    if history.len() >= 3 {
        let k = history.len();
        let r1 = history[k - 1] / history[k - 2];
        let r2 = history[k - 2] / history[k - 3];
        rep.scalar("last_ratio", r1);
        rep.scalar("second_last_ratio", r2);
    }
    Ok((KwSolution { alpha, residual: res, iterations, history, descent_steps }, rep))
}

/// Moves a critical representative with spinor weights `w` onto the level `delta`:
/// solves `Delta alpha + (e^{2 alpha} w+^2 - e^{-2 alpha} w-^2)/2 + curvature = delta`.
pub fn critical_orbit_slice<T: Real>(
    grid: &TorusGrid<T>,
    w: &WeightFields<T>,
    delta: &[T],
    curvature: &[T],
    tol: f64,
) -> Result<(KwSolution<T>, ExperimentReport)> {
    if delta.len() != grid.len() || curvature.len() != grid.len() {
        return Err(Error::ShapeMismatch("level or curvature field does not match the grid".into()));
    }
    let half: T = c(0.5);
    let g: Vec<T> = (0..grid.len())
        .map(|k| {
            let (wp, wm) = (w.w_plus[k], w.w_minus[k]);
            delta[k] - half * (wp * wp - wm * wm) - curvature[k]
        })
        .collect();
    let (sol, mut rep) = kazdan_warner_solve(grid, w, &g, None, tol)?;
    rep.name = "critical_orbit_slice".into();
    Ok((sol, rep))
}
