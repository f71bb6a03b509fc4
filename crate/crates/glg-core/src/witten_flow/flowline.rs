//! Downward gradient lines of `L`, which are also Hamiltonian trajectories of `H`.

use crate::error::{Error, Result};
use crate::lg_core::LgModel;
use crate::report::ExperimentReport;
use crate::scalar::{c, f, Real};
use crate::stability::hess_l_matrix;
use num_complex::Complex;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub s: Vec<T>,
    /// `n` values per sample.
    pub p: Vec<Vec<Complex<T>>>,
    pub l: Vec<T>,
    pub h: Vec<T>,
}

/// Spectral norm of `Hess L` at `z`.
pub fn hess_norm<T: Real>(m: &LgModel<T>, z: &[Complex<T>]) -> f64 {
    let h = hess_l_matrix(m, z);
    if h.nrows() == 0 {
        return 0.0;
    }
    h.map(|x| f(x)).singular_values().iter().fold(0.0f64, |a, x| a.max(*x))
}

fn rhs<T: Real>(m: &LgModel<T>, z: &[Complex<T>]) -> Vec<Complex<T>> {
    m.grad_l(z).into_iter().map(|g| -g).collect()
}

fn axpy<T: Real>(z: &[Complex<T>], k: &[Complex<T>], a: T) -> Vec<Complex<T>> {
    z.iter().zip(k).map(|(x, y)| *x + *y * a).collect()
}

#[derive(Serialize)]
struct Inputs {
    model: String,
    p0: Vec<(f64, f64)>,
    s_max: f64,
    dt: f64,
}

/// Integrates `p' = -grad L(p)` on `[0, s_max]` with the classical fourth-order
/// Runge-Kutta method. Fails with `StepTooLarge` whenever `dt * |Hess L| >= 0.1`
/// along the way.
pub fn gradient_flowline<T: Real>(
    m: &LgModel<T>,
    p0: &[Complex<T>],
    s_max: f64,
    dt: f64,
) -> Result<(Trajectory<T>, ExperimentReport)> {
    if p0.len() != m.n {
        return Err(Error::ShapeMismatch("initial point has the wrong dimension".into()));
    }
    if !(dt > 0.0) || !(s_max >= 0.0) {
        return Err(Error::OutOfRange("need dt > 0 and s_max >= 0".into()));
    }
    let steps = (s_max / dt).round() as usize;
    let h: T = c(dt);
    let half: T = c(0.5);
    let sixth: T = c(1.0 / 6.0);
    let two: T = c(2.0);
    let mut z = p0.to_vec();
    let mut traj = Trajectory { s: vec![T::zero()], p: vec![z.clone()], l: vec![m.eval_l(&z)], h: vec![m.eval_h(&z)] };
    let mut max_stiff = 0.0f64;
    let mut violations = 0usize;
    let mut worst_increase = 0.0f64;
    for step in 0..steps {
        let stiff = dt * hess_norm(m, &z);
        max_stiff = max_stiff.max(stiff);
        if stiff >= 0.1 {
            return Err(Error::StepTooLarge(stiff));
        }
        let k1 = rhs(m, &z);
        let k2 = rhs(m, &axpy(&z, &k1, half * h));
        let k3 = rhs(m, &axpy(&z, &k2, half * h));
        let k4 = rhs(m, &axpy(&z, &k3, h));
        z = (0..m.n).map(|i| z[i] + (k1[i] + k2[i] * two + k3[i] * two + k4[i]) * (h * sixth)).collect();
        if z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonConvergence { iterations: step, residual: f64::INFINITY });
        }
        let l = m.eval_l(&z);
        let inc = f(l - *traj.l.last().unwrap());
        if inc > 1e-10 {
            violations += 1;
        }
        worst_increase = worst_increase.max(inc);
        traj.s.push(c::<T>((step + 1) as f64 * dt));
        traj.p.push(z.clone());
        traj.l.push(l);
        traj.h.push(m.eval_h(&z));
    }
    let h0 = f(traj.h[0]);
    let dh = traj.h.iter().fold(0.0f64, |a, x| a.max((f(*x) - h0).abs()));
    let inputs = Inputs { model: m.hash(), p0: p0.iter().map(|z| (f(z.re), f(z.im))).collect(), s_max, dt };
    let mut rep = ExperimentReport::new("flowline", &inputs).model(m.hash());
    rep.scalar("max_delta_h", dh);
    rep.scalar("monotonicity_violations", violations as f64);
    rep.scalar("max_l_increase", worst_increase);
    rep.scalar("max_dt_hess", max_stiff);
    rep.scalar("l_drop", f(traj.l[0] - *traj.l.last().unwrap()));
    rep.scalar("steps", steps as f64);
    rep.flag("h_conserved_1e-8", dh < 1e-8);
    rep.flag("l_nonincreasing", violations == 0);
    Ok((traj, rep))
}
