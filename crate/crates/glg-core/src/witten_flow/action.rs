//! The gauged action functional on paths over a half-line,
//!
//! ```text
//! A(a, p) = -int p^* theta + int H(p) ds + int <a_s, delta - mu(p)> ds,
//! theta = 1/2 sum (x dy - y dx),
//! ```
//!
//! without the boundary primitive at `s = 0` (values are relative to it).
//! Its gradient is `(delta - mu(p), J grad^A_s p + grad H)`. Derivatives use
//! fourth-order differences and integrals the composite Simpson rule.

use crate::error::{Error, Result};
use crate::lg_core::LgModel;
use crate::report::ExperimentReport;
use crate::scalar::{c, cis, f, inner, jmul, norm_sq, Real};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::ops::{Add, Mul, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Path1D<T> {
    /// Uniform, increasing, odd number of nodes.
    pub s: Vec<T>,
    pub n: usize,
    pub k: usize,
    pub p: Vec<Complex<T>>,
    pub a_s: Vec<T>,
}

impl<T: Real> Path1D<T> {
    pub fn new(s: Vec<T>, n: usize, k: usize, p: Vec<Complex<T>>, a_s: Vec<T>) -> Result<Self> {
        let len = s.len();
        if len < 5 || len % 2 == 0 {
            return Err(Error::ShapeMismatch("paths need an odd number of nodes, at least 5".into()));
        }
        if p.len() != len * n || a_s.len() != len * k {
            return Err(Error::ShapeMismatch("path values do not match the s-grid".into()));
        }
        let h = s[1] - s[0];
        let uniform = h > T::zero() && s.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= c::<T>(1e-9) * h);
        if !uniform {
            return Err(Error::ShapeMismatch("s-grid must be uniform and increasing".into()));
        }
        Ok(Self { s, n, k, p, a_s })
    }

    /// Constant path at `q` with vanishing connection on `nodes` points of `[0, s_max]`.
    pub fn constant(q: &[Complex<T>], k: usize, s_max: T, nodes: usize) -> Result<Self> {
        let s: Vec<T> = (0..nodes).map(|i| s_max * c::<T>(i as f64) / c::<T>((nodes.max(2) - 1) as f64)).collect();
        let p = (0..nodes).flat_map(|_| q.iter().copied()).collect();
        Self::new(s, q.len(), k, p, vec![T::zero(); nodes * k])
    }

    /// Constant path plus a seeded smooth perturbation vanishing at both ends.
    pub fn perturbed(q: &[Complex<T>], k: usize, s_max: T, nodes: usize, amplitude: f64, seed: u64) -> Result<Self> {
        let mut path = Self::constant(q, k, s_max, nodes)?;
        let dir = random_direction(&path, seed);
        let amp: T = c(amplitude);
        for (p, d) in path.p.iter_mut().zip(&dir.p) {
            *p += *d * amp;
        }
        for (a, d) in path.a_s.iter_mut().zip(&dir.a_s) {
            *a += *d * amp;
        }
        Ok(path)
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn h(&self) -> T {
        self.s[1] - self.s[0]
    }

    pub fn p_at(&self, i: usize) -> &[Complex<T>] {
        &self.p[i * self.n..(i + 1) * self.n]
    }

    pub fn a_at(&self, i: usize) -> &[T] {
        &self.a_s[i * self.k..(i + 1) * self.k]
    }

    /// Gauge transformation by angles `u` (`k` per node) with derivative `du`.
    pub fn gauge(&self, m: &LgModel<T>, u: &[T], du: &[T]) -> Result<Self> {
        if u.len() != self.a_s.len() || du.len() != self.a_s.len() {
            return Err(Error::ShapeMismatch("gauge field does not match the path".into()));
        }
        let mut out = self.clone();
        for i in 0..self.len() {
            let ch = m.charges(&u[i * self.k..(i + 1) * self.k]);
            for q in 0..self.n {
                out.p[i * self.n + q] = self.p[i * self.n + q] * cis(ch[q]);
            }
            for a in 0..self.k {
                out.a_s[i * self.k + a] = self.a_s[i * self.k + a] - du[i * self.k + a];
            }
        }
        Ok(out)
    }
}

/// Fourth-order derivative of component `comp` of a node-major field.
fn d4<T: Real, X>(data: &[X], stride: usize, comp: usize, i: usize, len: usize, h: T) -> X
where
    X: Copy + Add<Output = X> + Sub<Output = X> + Mul<T, Output = X>,
{
    let at = |j: usize| data[j * stride + comp];
    let inv = T::one() / (c::<T>(12.0) * h);
    let w = |x: f64| c::<T>(x);
    if i >= 2 && i + 2 < len {
        (at(i - 2) - at(i + 2) + (at(i + 1) - at(i - 1)) * w(8.0)) * inv
    } else if i == 0 {
        (at(1) * w(48.0) - at(0) * w(25.0) - at(2) * w(36.0) + at(3) * w(16.0) - at(4) * w(3.0)) * inv
    } else if i == 1 {
        (at(2) * w(18.0) - at(0) * w(3.0) - at(1) * w(10.0) - at(3) * w(6.0) + at(4)) * inv
    } else if i + 2 == len {
        (at(i) * w(10.0) + at(i + 1) * w(3.0) - at(i - 1) * w(18.0) + at(i - 2) * w(6.0) - at(i - 3)) * inv
    } else {
        (at(i) * w(25.0) - at(i - 1) * w(48.0) + at(i - 2) * w(36.0) - at(i - 3) * w(16.0) + at(i - 4) * w(3.0)) * inv
    }
}

fn simpson_weights<T: Real>(len: usize, h: T) -> Vec<T> {
    let third = h / c::<T>(3.0);
    (0..len)
        .map(|i| {
            if i == 0 || i + 1 == len {
                third
            } else if i % 2 == 1 {
                third * c::<T>(4.0)
            } else {
                third * c::<T>(2.0)
            }
        })
        .collect()
}

fn check<T: Real>(m: &LgModel<T>, path: &Path1D<T>, delta: &[T]) -> Result<()> {
    if path.n != m.n || path.k != m.k || delta.len() != m.k {
        return Err(Error::ShapeMismatch("path or level does not match the model".into()));
    }
    Ok(())
}

/// Value of the action relative to the boundary primitive at `s = 0`.
pub fn action_functional<T: Real>(m: &LgModel<T>, path: &Path1D<T>, delta: &[T]) -> Result<T> {
    check(m, path, delta)?;
    let (n, k, len, h) = (path.n, path.k, path.len(), path.h());
    let w = simpson_weights(len, h);
    let half: T = c(0.5);
    let mut total = T::zero();
    for i in 0..len {
        let p = path.p_at(i);
        let mut theta = T::zero();
        for q in 0..n {
            let dp = d4(&path.p, n, q, i, len, h);
            theta += (p[q].conj() * dp).im;
        }
        let mu = m.moment_map(p);
        let pairing = (0..k).fold(T::zero(), |acc, a| acc + path.a_s[i * k + a] * (delta[a] - mu[a]));
        total += w[i] * (-half * theta + m.eval_h(p) + pairing);
    }
    Ok(total)
}

/// `(delta - mu(p), J grad^A_s p + grad H)` at every node.
pub fn action_gradient<T: Real>(m: &LgModel<T>, path: &Path1D<T>, delta: &[T]) -> Result<(Vec<T>, Vec<Complex<T>>)> {
    check(m, path, delta)?;
    let (n, k, len, h) = (path.n, path.k, path.len(), path.h());
    let mut ga = Vec::with_capacity(len * k);
    let mut gp = Vec::with_capacity(len * n);
    for i in 0..len {
        let p = path.p_at(i);
        let mu = m.moment_map(p);
        ga.extend((0..k).map(|a| delta[a] - mu[a]));
        let cs = m.charges(path.a_at(i));
        let gh = m.grad_h(p);
        for q in 0..n {
            let cov = d4(&path.p, n, q, i, len, h) + jmul(p[q] * cs[q]);
            gp.push(jmul(cov) + gh[q]);
        }
    }
    Ok((ga, gp))
}

/// Largest of `|grad L|`, `|mu - delta|` and `|a_s|` at the last node.
pub fn endpoint_defect<T: Real>(m: &LgModel<T>, path: &Path1D<T>, delta: &[T]) -> f64 {
    let last = path.len() - 1;
    let p = path.p_at(last);
    let g = f(norm_sq(&m.grad_l(p)).sqrt());
    let mu = m.moment_map(p);
    let lvl = (0..m.k).fold(0.0f64, |a, i| a.max(f((mu[i] - delta[i]).abs())));
    let conn = path.a_at(last).iter().fold(0.0f64, |a, x| a.max(f(x.abs())));
    g.max(lvl).max(conn)
}

/// Smooth direction `sum_m c_m sin(m pi x)` (`x` the normalized coordinate) with seeded coefficients.
fn random_direction<T: Real>(path: &Path1D<T>, seed: u64) -> Path1D<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, k, len) = (path.n, path.k, path.len());
    let span = f(path.s[len - 1] - path.s[0]);
    let modes = 3;
    let mut cp = vec![(0.0, 0.0); n * modes];
    for v in cp.iter_mut() {
        *v = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let ca: Vec<f64> = (0..k * modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut out = path.clone();
    for i in 0..len {
        let x = f(path.s[i] - path.s[0]) / span;
        let basis: Vec<f64> = (1..=modes).map(|mm| (mm as f64 * std::f64::consts::PI * x).sin()).collect();
        for q in 0..n {
            let (mut re, mut im) = (0.0, 0.0);
            for (mm, b) in basis.iter().enumerate() {
                re += cp[q * modes + mm].0 * b;
                im += cp[q * modes + mm].1 * b;
            }
            out.p[i * n + q] = Complex::new(c(re), c(im));
        }
        for a in 0..k {
            let v: f64 = basis.iter().enumerate().map(|(mm, b)| ca[a * modes + mm] * b).sum();
            out.a_s[i * k + a] = c(v);
        }
    }
    out
}

#[derive(Serialize)]
struct Inputs {
    model: String,
    nodes: usize,
    s_range: (f64, f64),
    delta: Vec<f64>,
    seed: u64,
    path_digest: String,
}

/// Compares the gradient formula with central differences of the action along
/// seeded directions vanishing at both ends, and checks gauge invariance.
pub fn action_gradient_check<T: Real>(m: &LgModel<T>, path: &Path1D<T>, delta: &[T], seed: u64) -> Result<ExperimentReport> {
    check(m, path, delta)?;
    let defect = endpoint_defect(m, path, delta);
    if defect > 1e-6 {
        return Err(Error::EndpointNotDecayed(defect));
    }
    let (len, h) = (path.len(), path.h());
    let w = simpson_weights(len, h);
    let (ga, gp) = action_gradient(m, path, delta)?;
    let eps = 1e-4;
    let mut worst = 0.0f64;
    let mut worst_abs = 0.0f64;
    let mut rel_errors = Vec::new();
    for trial in 0..3u64 {
        let dir = random_direction(path, seed.wrapping_mul(31).wrapping_add(trial));
        let shifted = |sign: f64| {
            let mut out = path.clone();
            let e: T = c(sign * eps);
            for (p, d) in out.p.iter_mut().zip(&dir.p) {
                *p += *d * e;
            }
            for (a, d) in out.a_s.iter_mut().zip(&dir.a_s) {
                *a += *d * e;
            }
            out
        };
        let fd = (f(action_functional(m, &shifted(1.0), delta)?) - f(action_functional(m, &shifted(-1.0), delta)?)) / (2.0 * eps);
        let mut formula = T::zero();
        for i in 0..len {
            let dp = inner(&gp[i * path.n..(i + 1) * path.n], dir.p_at(i));
            let da = (0..path.k).fold(T::zero(), |acc, a| acc + ga[i * path.k + a] * dir.a_s[i * path.k + a]);
            formula += w[i] * (dp + da);
        }
        let formula = f(formula);
        let scale = fd.abs().max(formula.abs());
        let rel = if scale < 1e-12 { 0.0 } else { (fd - formula).abs() / scale };
        worst_abs = worst_abs.max((fd - formula).abs());
        rel_errors.push(rel);
        worst = worst.max(rel);
    }
    // gauge u = sum b_m sin(m pi x), vanishing at both ends
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let span = f(path.s[len - 1] - path.s[0]);
    let coeffs: Vec<f64> = (0..3 * path.k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut u = vec![T::zero(); len * path.k];
    let mut du = vec![T::zero(); len * path.k];
    for i in 0..len {
        let x = f(path.s[i] - path.s[0]) / span;
        for a in 0..path.k {
            let (mut v, mut dv) = (0.0, 0.0);
            for mm in 0..3 {
                let kk = (mm + 1) as f64 * std::f64::consts::PI;
                v += coeffs[a * 3 + mm] * (kk * x).sin();
                dv += coeffs[a * 3 + mm] * kk / span * (kk * x).cos();
            }
            u[i * path.k + a] = c(v);
            du[i * path.k + a] = c(dv);
        }
    }
    let base = f(action_functional(m, path, delta)?);
    let moved = f(action_functional(m, &path.gauge(m, &u, &du)?, delta)?);
    let gauge_change = (moved - base).abs();
    let grad_sup = ga
        .iter()
        .map(|x| f(x.abs()))
        .chain(gp.iter().map(|z| f(z.norm_sqr().sqrt())))
        .fold(0.0f64, f64::max);

    let bytes: Vec<u8> = path
        .p
        .iter()
        .flat_map(|z| [f(z.re), f(z.im)])
        .chain(path.a_s.iter().map(|x| f(*x)))
        .flat_map(|x| x.to_le_bytes())
        .collect();
    let inputs = Inputs {
        model: m.hash(),
        nodes: len,
        s_range: (f(path.s[0]), f(path.s[len - 1])),
        delta: delta.iter().map(|x| f(*x)).collect(),
        seed,
        path_digest: crate::report::sha256_hex(&bytes),
    };
    let mut rep = ExperimentReport::new("action_check", &inputs).model(m.hash()).seed(seed);
    rep.scalar("action", base);
    rep.scalar("gradient_sup", grad_sup);
    rep.scalar("max_relative_error", worst);
    rep.series("relative_errors", rel_errors);
    rep.scalar("max_absolute_error", worst_abs);
    rep.scalar("gauge_change", gauge_change);
    rep.scalar("endpoint_defect", defect);
    rep.flag("gradient_matches_fd", worst < 1e-5);
    rep.flag("gauge_invariant", gauge_change < 1e-8);
    Ok(rep)
}
