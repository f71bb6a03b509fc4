//! Exponential envelopes from the comparison principle.
//!
//! If `(Delta + zeta^2) u <= 0` with `Delta = -(d_tt + d_ss)`, then `u` stays
//! below the comparison function that dominates it on the boundary:
//! `K e^{-zeta (s - s0)}` on a half-plane, `K cosh(zeta (s - R)) / cosh(zeta R)`
//! on the strip `0 <= s <= 2R`.

use crate::error::{Error, Result};
use crate::grid_field::Grid2D;
use crate::report::ExperimentReport;
use crate::scalar::{c, f, Real};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    HalfPlane { s0: f64 },
    Strip { r: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeMargins {
    /// `envelope - u`, NaN at nodes outside the comparison region.
    pub margin: Vec<f64>,
    pub min_margin: f64,
    pub worst_margin_node: (usize, usize),
    /// `(Delta + zeta^2) u` at interior nodes of the region, NaN elsewhere.
    pub hypothesis: Vec<f64>,
    pub max_hypothesis: f64,
    pub worst_hypothesis_node: (usize, usize),
}

fn envelope(kind: EnvelopeKind, zeta: f64, k: f64, s: f64) -> Option<f64> {
    match kind {
        EnvelopeKind::HalfPlane { s0 } => (s >= s0 - 1e-12).then(|| k * (-zeta * (s - s0)).exp()),
        EnvelopeKind::Strip { r } => {
            (s >= -1e-12 && s <= 2.0 * r + 1e-12).then(|| k * (zeta * (s - r)).cosh() / (zeta * r).cosh())
        }
    }
}

fn strictly_inside(kind: EnvelopeKind, s: f64, h: f64) -> bool {
    let eps = 1e-9 * h;
    match kind {
        EnvelopeKind::HalfPlane { s0 } => s > s0 + eps,
        EnvelopeKind::Strip { r } => s > eps && s < 2.0 * r - eps,
    }
}

/// Margins and hypothesis residuals without judging them.
pub fn envelope_margins<T: Real>(
    grid: &Grid2D<T>,
    u: &[T],
    zeta: f64,
    k: f64,
    kind: EnvelopeKind,
) -> Result<EnvelopeMargins> {
    if u.len() != grid.len() {
        return Err(Error::ShapeMismatch("field does not match the grid".into()));
    }
    if !(zeta > 0.0) || !(k > 0.0) {
        return Err(Error::OutOfRange("envelope needs zeta > 0 and K > 0".into()));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::OutOfRange("field must be finite".into()));
    }
    let h = f(grid.h);
    let mut out = EnvelopeMargins {
        margin: vec![f64::NAN; grid.len()],
        min_margin: f64::INFINITY,
        worst_margin_node: (0, 0),
        hypothesis: vec![f64::NAN; grid.len()],
        max_hypothesis: f64::NEG_INFINITY,
        worst_hypothesis_node: (0, 0),
    };
    let z2: T = c(zeta * zeta);
    for j in 0..grid.ns {
        let s = f(grid.s(j));
        let Some(env) = envelope(kind, zeta, k, s) else { continue };
        for i in 0..grid.nt {
            let node = grid.idx(i, j);
            let mg = env - f(u[node]);
            out.margin[node] = mg;
            if mg < out.min_margin {
                out.min_margin = mg;
                out.worst_margin_node = (i, j);
            }
            if grid.depth(i, j) >= 1 && strictly_inside(kind, s, h) {
                let hv = f(-grid.laplacian_at(u, 1, 0, i, j) + z2 * u[node]);
                out.hypothesis[node] = hv;
                if hv > out.max_hypothesis {
                    out.max_hypothesis = hv;
                    out.worst_hypothesis_node = (i, j);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct Inputs {
    grid: crate::grid_field::GridSpec,
    zeta: f64,
    k: f64,
    kind: EnvelopeKind,
    tol_h: f64,
    field_digest: String,
}

/// Checks the envelope (pass iff the minimum margin is at least `-1e-8`);
/// fails with `HypothesisViolated` when `(Delta + zeta^2) u > tol_h` somewhere.
pub fn max_principle_envelope<T: Real>(
    grid: &Grid2D<T>,
    u: &[T],
    zeta: f64,
    k: f64,
    kind: EnvelopeKind,
    tol_h: f64,
) -> Result<ExperimentReport> {
    let mg = envelope_margins(grid, u, zeta, k, kind)?;
    if mg.max_hypothesis > tol_h {
        let (t, s) = mg.worst_hypothesis_node;
        return Err(Error::HypothesisViolated { t, s, excess: mg.max_hypothesis });
    }
    let bytes: Vec<u8> = u.iter().flat_map(|x| f(*x).to_le_bytes()).collect();
    let inputs = Inputs { grid: grid.spec(), zeta, k, kind, tol_h, field_digest: crate::report::sha256_hex(&bytes) };
    let mut rep = ExperimentReport::new("max_principle_envelope", &inputs).grid(grid.spec());
    rep.scalar("min_margin", mg.min_margin);
    if mg.max_hypothesis.is_finite() {
        rep.scalar("max_hypothesis", mg.max_hypothesis);
    }
    rep.series("worst_margin_node", vec![mg.worst_margin_node.0 as f64, mg.worst_margin_node.1 as f64]);
    rep.flag("margin_at_least_-1e-8", mg.min_margin >= -1e-8);
    Ok(rep)
}
