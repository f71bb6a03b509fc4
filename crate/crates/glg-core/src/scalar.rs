//! Scalar abstraction shared by every numerical routine.

use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Real floating-point scalar usable throughout the crate (`f32` or `f64`).
pub trait Real:
    RealField + Copy + Default + FromPrimitive + ToPrimitive + Display + Debug + LowerExp + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn c<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("scalar conversion")
}

/// Converts a working scalar back into `f64` for reporting.
#[inline]
pub fn f<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[inline]
pub fn cx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Multiplication by `i`, the complex structure of the flat target.
#[inline]
pub fn jmul<T: Real>(z: Complex<T>) -> Complex<T> {
    Complex::new(-z.im, z.re)
}

#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    ComplexField::modulus(z)
}

/// `exp(i*phi)` as a unit complex number.
#[inline]
pub fn cis<T: Real>(phi: T) -> Complex<T> {
    Complex::new(phi.cos(), phi.sin())
}

#[inline]
pub fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = z.re.exp();
    Complex::new(r * z.im.cos(), r * z.im.sin())
}

/// Real part of `conj(a) * b`: the flat Riemannian metric on one coordinate.
#[inline]
pub fn rdot<T: Real>(a: Complex<T>, b: Complex<T>) -> T {
    a.re * b.re + a.im * b.im
}

/// Metric pairing of two tangent vectors of the flat target.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + rdot(*x, *y))
}

pub fn norm_sq<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc + x.norm_sqr())
}

pub fn max_abs<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc.max(cabs(*x)))
}

pub fn max_abs_real<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

/// Interleaved real view `(re_0, im_0, re_1, ...)` of a complex vector.
pub fn realify<T: Real>(v: &[Complex<T>]) -> Vec<T> {
    let mut out = Vec::with_capacity(2 * v.len());
    for z in v {
        out.push(z.re);
        out.push(z.im);
    }
    out
}

pub fn complexify<T: Real>(v: &[T]) -> Vec<Complex<T>> {
    v.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect()
}
