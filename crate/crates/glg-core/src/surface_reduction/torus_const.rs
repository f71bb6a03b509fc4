//! Covariantly constant spinor pairs on a flat torus.
//!
//! For `lambda^{1,0} = a dz` on the unit-area flat torus the constant equations
//! are `conj(Psi+) Psi- = sqrt2 conj(a)` and `(|Psi+|^2 - |Psi-|^2) / 2 = delta`.
//! With `c = sqrt2 |a|` and `t = 2 delta`, `p = |Psi+|^2` solves `p (p - t) = c^2`.

use crate::error::{Error, Result};
use crate::scalar::{c, cabs, Real};
use num_complex::Complex;

#[derive(Clone, Debug, PartialEq)]
pub struct TorusConstant<T> {
    /// `|Psi+|^2`.
    pub p: T,
    /// `|Psi-|^2`.
    pub q: T,
    /// Representative spinors, `Psi+` real and positive (the residual circle acts on both).
    pub psi_plus: Complex<T>,
    pub psi_minus: Complex<T>,
    /// Negative root of the quadratic, rejected.
    pub rejected_root: T,
    /// `|conj(Psi+) Psi- - sqrt2 conj(a)|`.
    pub residual_product: T,
    /// `|(|Psi+|^2 - |Psi-|^2) / 2 - delta|`.
    pub residual_level: T,
}

pub fn torus_constant_solution<T: Real>(a: Complex<T>, delta: T) -> Result<TorusConstant<T>> {
    let ca = cabs(a);
    if !(ca > T::zero()) {
        return Err(Error::DegenerateForm);
    }
    let two: T = c(2.0);
    let sqrt2 = two.sqrt();
    let cc = sqrt2 * ca;
    let t = two * delta;
    let disc = (t * t + c::<T>(4.0) * cc * cc).sqrt();
    // cancellation-free forms of both roots
    let (p, rejected_root) = if t == T::zero() {
        (cc, -cc)
    } else if t > T::zero() {
        let p = (t + disc) / two;
        (p, -cc * cc / p)
    } else {
        let neg = (t - disc) / two;
        (-cc * cc / neg, neg)
    };
    // at delta = 0 both roots are exactly cc
    let q = if delta == T::zero() { p } else { cc * cc / p };
    let psi_plus = Complex::new(p.sqrt(), T::zero());
    let target = a.conj() * sqrt2;
    let psi_minus = target / psi_plus.re;
    let residual_product = cabs(psi_plus.conj() * psi_minus - target);
    let residual_level = ((psi_plus.norm_sqr() - psi_minus.norm_sqr()) / two - delta).abs();
    Ok(TorusConstant { p, q, psi_plus, psi_minus, rejected_root, residual_product, residual_level })
}
