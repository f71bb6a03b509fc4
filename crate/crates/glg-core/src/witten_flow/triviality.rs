//! Point-like solutions through the complex-gauge reduction.
//!
//! Writing a finite-energy solution as `e^alpha . q` in a suitable gauge, the
//! equations collapse to the scalar problem
//!
//! ```text
//! Delta alpha + mu(e^alpha q) - mu(q) = 0,      Delta = -(d_tt + d_ss),
//! ```
//!
//! whose only solution with zero boundary values is `alpha = 0`. The
//! experiment solves it on a disc from many random starts.

use crate::error::{Error, Result};
use crate::grid_field::Grid2D;
use crate::lg_core::LgModel;
use crate::linalg::pcg;
use crate::report::ExperimentReport;
use crate::scalar::{c, f, max_abs_real, norm_sq, Real};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrivialityParams {
    pub radius: f64,
    pub nodes: usize,
    pub inits: usize,
    pub amplitude: f64,
    pub seed: u64,
    /// Max-norm residual at which Newton stops.
    pub tol: f64,
}

impl Default for TrivialityParams {
    fn default() -> Self {
        Self { radius: 10.0, nodes: 129, inits: 10, amplitude: 1.0, seed: 0, tol: 1e-10 }
    }
}

/// Nodes held at zero: the grid edge and everything at radius `>= radius`.
pub fn disc_mask<T: Real>(grid: &Grid2D<T>, radius: T) -> Vec<bool> {
    let r2 = radius * radius * (T::one() - c::<T>(1e-12));
    (0..grid.len())
        .map(|node| {
            let (i, j) = (node % grid.nt, node / grid.nt);
            let (t, s) = (grid.t(i), grid.s(j));
            grid.is_boundary(i, j) || t * t + s * s >= r2
        })
        .collect()
}

/// `count` fields uniform in `[-amplitude, amplitude]` on free nodes, zero on fixed ones.
pub fn random_inits<T: Real>(fixed: &[bool], count: usize, amplitude: f64, seed: u64) -> Vec<Vec<T>> {
    (0..count)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            fixed
                .iter()
                .map(|&fx| {
                    let v: f64 = rng.gen_range(-amplitude..=amplitude);
                    if fx {
                        T::zero()
                    } else {
                        c(v)
                    }
                })
                .collect()
        })
        .collect()
}

struct Reduction<'a, T: Real> {
    grid: &'a Grid2D<T>,
    fixed: &'a [bool],
    /// `(w_j, w_j |q_j|^2 / 2)` for each coordinate with nonzero weight.
    terms: Vec<(T, T)>,
}

impl<T: Real> Reduction<'_, T> {
    fn lap(&self, v: &[T], node: usize) -> T {
        let g = self.grid;
        let inv = T::one() / (g.h * g.h);
        let four: T = c(4.0);
        (four * v[node] - v[node + 1] - v[node - 1] - v[node + g.nt] - v[node - g.nt]) * inv
    }

    fn residual(&self, alpha: &[T]) -> Vec<T> {
        (0..alpha.len())
            .map(|node| {
                if self.fixed[node] {
                    return T::zero();
                }
                let nl = self
                    .terms
                    .iter()
                    .fold(T::zero(), |acc, &(w, b)| acc + b * (((w + w) * alpha[node]).exp() - T::one()));
                self.lap(alpha, node) + nl
            })
            .collect()
    }

    fn derivative(&self, alpha: &[T]) -> Vec<T> {
        alpha
            .iter()
            .map(|&a| self.terms.iter().fold(T::zero(), |acc, &(w, b)| acc + (w + w) * b * ((w + w) * a).exp()))
            .collect()
    }
}

pub struct TrivialityRun<T> {
    pub alpha: Vec<T>,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

fn newton<T: Real>(red: &Reduction<T>, init: &[T], tol: f64) -> Result<TrivialityRun<T>> {
    let mut alpha = init.to_vec();
    let mut r = red.residual(&alpha);
    let mut history = vec![f(max_abs_real(&r))];
    let inv = T::one() / (red.grid.h * red.grid.h);
    let four: T = c(4.0);
    let merit = |r: &[T]| r.iter().fold(T::zero(), |a, x| a + *x * *x);
    let mut iterations = 0;
    while *history.last().unwrap() >= tol {
        if iterations >= 50 {
            return Err(Error::NonConvergence { iterations, residual: *history.last().unwrap() });
        }
        iterations += 1;
        let d = red.derivative(&alpha);
        let apply = |v: &[T]| -> Vec<T> {
            (0..v.len())
                .map(|node| if red.fixed[node] { v[node] } else { red.lap(v, node) + d[node] * v[node] })
                .collect()
        };
        let diag: Vec<T> = (0..alpha.len()).map(|node| if red.fixed[node] { T::one() } else { four * inv + d[node] }).collect();
        let rhs: Vec<T> = r.iter().map(|x| -*x).collect();
        let (step, _) = pcg(&apply, &rhs, &diag, None, 1e-11, 10 * alpha.len())?;
        let m0 = merit(&r);
        let mut lam = T::one();
        loop {
            let trial: Vec<T> = alpha.iter().zip(&step).map(|(a, s)| *a + lam * *s).collect();
            let rt = red.residual(&trial);
            if merit(&rt) < m0 || lam < c(1e-6) {
                alpha = trial;
                r = rt;
                break;
            }
            lam *= c(0.5);
        }
        history.push(f(max_abs_real(&r)));
    }
    let residual = *history.last().unwrap();
    Ok(TrivialityRun { alpha, iterations, residual, history })
}

#[derive(Serialize)]
struct Inputs {
    model: String,
    q: Vec<(f64, f64)>,
    grid: crate::grid_field::GridSpec,
    radius: f64,
    tol: f64,
    inits_digest: String,
}

/// Solves the reduction from every initial field and checks that each
/// converged `alpha` vanishes (`sup |alpha| < 1e-6`) and obeys the discrete
/// maximum principle.
pub fn triviality_experiment<T: Real>(
    m: &LgModel<T>,
    q: &[Complex<T>],
    grid: &Grid2D<T>,
    radius: T,
    inits: &[Vec<T>],
    tol: f64,
) -> Result<ExperimentReport> {
    if m.k != 1 {
        return Err(Error::InvalidModel(format!("the scalar reduction needs gauge rank 1, got {}", m.k)));
    }
    if q.len() != m.n {
        return Err(Error::ShapeMismatch("q has the wrong dimension".into()));
    }
    let grad = norm_sq(&m.grad_l(q)).sqrt();
    if f(grad) > 1e-8 {
        return Err(Error::NotCritical(f(grad)));
    }
    let level = (m.moment_map(q)[0] - m.delta[0]).abs();
    if f(level) > 1e-8 {
        return Err(Error::Unattainable(format!("mu(q) - delta = {:e}", f(level))));
    }
    let fixed = disc_mask(grid, radius);
    let terms: Vec<(T, T)> = (0..m.n)
        .filter(|&j| m.weights[0][j] != 0)
        .map(|j| {
            let w: T = c(m.weights[0][j] as f64);
            (w, c::<T>(0.5) * w * q[j].norm_sqr())
        })
        .collect();
    if terms.iter().all(|(_, b)| *b == T::zero()) {
        return Err(Error::NotFreeOrbit);
    }
    if inits.iter().any(|a| a.len() != grid.len()) {
        return Err(Error::ShapeMismatch("initial field does not match the grid".into()));
    }
    let red = Reduction { grid, fixed: &fixed, terms };
    let runs: Vec<Result<TrivialityRun<T>>> = inits
        .par_iter()
        .map(|init| {
            let start: Vec<T> = init.iter().zip(&fixed).map(|(a, &fx)| if fx { T::zero() } else { *a }).collect();
            newton(&red, &start, tol)
        })
        .collect();
    let runs: Vec<TrivialityRun<T>> = runs.into_iter().collect::<Result<_>>()?;

    let mut bytes = Vec::new();
    for init in inits {
        for x in init {
            bytes.extend_from_slice(&f(*x).to_le_bytes());
        }
    }
    let inputs = Inputs {
        model: m.hash(),
        q: q.iter().map(|z| (f(z.re), f(z.im))).collect(),
        grid: grid.spec(),
        radius: f(radius),
        tol,
        inits_digest: crate::report::sha256_hex(&bytes),
    };
    let mut rep = ExperimentReport::new("triviality", &inputs).model(m.hash()).grid(grid.spec());
    let sups: Vec<f64> = runs.iter().map(|r| f(max_abs_real(&r.alpha))).collect();
    // extrema of the converged field sit on the (zero) boundary, up to the solve tolerance
    let mut worst_excess = 0.0f64;
    for run in &runs {
        let bmax = run.alpha.iter().zip(&fixed).filter(|(_, &fx)| fx).fold(f64::MIN, |a, (x, _)| a.max(f(*x)));
        let bmin = run.alpha.iter().zip(&fixed).filter(|(_, &fx)| fx).fold(f64::MAX, |a, (x, _)| a.min(f(*x)));
        for (x, &fx) in run.alpha.iter().zip(&fixed) {
            if !fx {
                worst_excess = worst_excess.max(f(*x) - bmax).max(bmin - f(*x));
            }
        }
    }
    rep.series("sup_alpha", sups.clone());
    rep.series("iterations", runs.iter().map(|r| r.iterations as f64).collect());
    rep.series("residual", runs.iter().map(|r| r.residual).collect());
    rep.scalar("max_sup_alpha", sups.iter().fold(0.0, |a: f64, b| a.max(*b)));
    rep.scalar("max_principle_excess", worst_excess);
    rep.scalar("free_nodes", fixed.iter().filter(|x| !**x).count() as f64);
    rep.scalar("inits", inits.len() as f64);
    if let Some(first) = runs.first() {
        rep.convergence = first.history.clone();
    }
    rep.flag("all_sup_below_1e-6", sups.iter().all(|s| *s < 1e-6));
    rep.flag("max_principle", worst_excess <= 10.0 * tol);
    Ok(rep)
}

impl TrivialityParams {
    /// Disc truncation `[-radius, radius]^2` with seeded random starts.
    pub fn run<T: Real>(&self, m: &LgModel<T>, q: &[Complex<T>]) -> Result<ExperimentReport> {
        let grid = Grid2D::plane(c::<T>(self.radius), self.nodes)?;
        let fixed = disc_mask(&grid, c::<T>(self.radius));
        let inits = random_inits::<T>(&fixed, self.inits, self.amplitude, self.seed);
        Ok(triviality_experiment(m, q, &grid, c(self.radius), &inits, self.tol)?.seed(self.seed))
    }
}
