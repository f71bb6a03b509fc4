//! Goodness of an H-surface on the flat unit-area torus.
//!
//! Critical values of the induced superpotential differ by the pairing
//! `4 pi^2 (c . mu)` of an integral class `c` with the normalized periods
//! `mu = periods / (2 pi)`; the surface is good unless some nonzero `c` pairs to
//! zero, i.e. unless the periods are proportional to an integral direction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HSurfaceTorus {
    /// Periods of `lambda / i` over the two generating cycles.
    pub lambda_periods: (f64, f64),
    /// `<nu, [Sigma]>` as a coefficient of `i`.
    pub nu: f64,
    pub delta: f64,
}

impl HSurfaceTorus {
    /// Coefficient `a` of `lambda^{1,0} = a dz` for `lambda = i (l1 dx + l2 dy)`.
    pub fn a(&self) -> Complex64 {
        let (l1, l2) = self.lambda_periods;
        Complex64::new(l2 / 2.0, l1 / 2.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Goodness {
    pub good: bool,
    /// First integral class (smallest `|c1|`, then `c2`) pairing to zero.
    pub witness: Option<(i64, i64)>,
    /// Pairing value of the best candidate found.
    pub best_pairing: f64,
    pub best_class: (i64, i64),
    pub max_denominator: i64,
}

/// Searches `|c1|, |c2| <= max_denominator` for a class with `|c . mu| <= 1e-9 |c| |mu|`.
///
/// A `good` verdict only means no relation exists up to the cap.
pub fn goodness_check(hsurf: &HSurfaceTorus, max_denominator: i64) -> Goodness {
    let mu = (hsurf.lambda_periods.0 / (2.0 * PI), hsurf.lambda_periods.1 / (2.0 * PI));
    let mu_norm = mu.0.hypot(mu.1);
    let pairing = |c1: i64, c2: i64| 4.0 * PI * PI * (c1 as f64 * mu.0 + c2 as f64 * mu.1);
    let tol = 1e-9;
    let mut best = (f64::INFINITY, (0, 0));
    let mut consider = |c1: i64, c2: i64| -> bool {
        if (c1, c2) == (0, 0) || c2.abs() > max_denominator {
            return false;
        }
        let val = pairing(c1, c2);
        let rel = val.abs() / (4.0 * PI * PI * (c1 as f64).hypot(c2 as f64) * mu_norm.max(f64::MIN_POSITIVE));
        if rel < best.0 {
            best = (rel, (c1, c2));
        }
        rel <= tol || mu_norm == 0.0
    };
    let mut witness = None;
    'search: for c1 in 0..=max_denominator {
        if c1 == 0 {
            if consider(0, 1) {
                witness = Some((0, 1));
                break;
            }
            continue;
        }
        // the nearest integer c2 to -c1 mu1 / mu2 minimizes |c . mu| for this c1
        let candidates: Vec<i64> = if mu.1 == 0.0 {
            vec![0]
        } else {
            let x = -(c1 as f64) * mu.0 / mu.1;
            vec![x.floor() as i64, x.ceil() as i64]
        };
        for c2 in candidates {
            if consider(c1, c2) {
                witness = Some((c1, c2));
                break 'search;
            }
        }
    }
    let (_, best_class) = best;
    Goodness {
        good: witness.is_none(),
        witness,
        best_pairing: pairing(best_class.0, best_class.1),
        best_class,
        max_denominator,
    }
}
