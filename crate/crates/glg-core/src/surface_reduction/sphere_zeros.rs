//! Zeros of `eta = dz * sum_j a_j / (z - p_j)` on the sphere punctured at
//! `p_1, ..., p_{n-1}` and infinity.

use crate::error::{Error, Result};
use crate::scalar::{c, cabs, cis, czero, f, Real};
use nalgebra::{DMatrix, Schur};
use num_complex::Complex;

#[derive(Clone, Debug, PartialEq)]
pub struct SphereZeros<T> {
    pub zeros: Vec<Complex<T>>,
    /// `|eta'|` at each zero (evaluated at the zero's cluster centre).
    pub derivative_abs: Vec<T>,
    pub min_pairwise_distance: T,
    pub min_puncture_distance: T,
    pub all_simple: bool,
}

/// Ascending coefficients of `prod (z - r)`.
fn poly_from_roots<T: Real>(roots: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut out = vec![Complex::new(T::one(), T::zero())];
    for r in roots {
        let mut next = vec![czero(); out.len() + 1];
        for (k, coef) in out.iter().enumerate() {
            next[k + 1] += *coef;
            next[k] -= *coef * *r;
        }
        out = next;
    }
    out
}

fn horner<T: Real>(coeffs: &[Complex<T>], z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let mut p = czero();
    let mut dp = czero();
    for coef in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + *coef;
    }
    (p, dp)
}

/// Numerator `N(z) = sum_j a_j prod_{k != j} (z - p_k)` in ascending coefficients.
pub fn numerator<T: Real>(punctures: &[Complex<T>], residues: &[Complex<T>]) -> Vec<Complex<T>> {
    let m = punctures.len();
    let mut out = vec![czero(); m.max(1)];
    for j in 0..m {
        let others: Vec<Complex<T>> = (0..m).filter(|&k| k != j).map(|k| punctures[k]).collect();
        for (k, coef) in poly_from_roots(&others).iter().enumerate() {
            out[k] += residues[j] * *coef;
        }
    }
    out
}

pub fn eval_form<T: Real>(punctures: &[Complex<T>], residues: &[Complex<T>], z: Complex<T>) -> Complex<T> {
    punctures.iter().zip(residues).fold(czero(), |acc, (p, a)| acc + *a / (z - *p))
}

pub fn punctured_sphere_zeros<T: Real>(punctures: &[Complex<T>], residues: &[Complex<T>]) -> Result<SphereZeros<T>> {
    if punctures.len() != residues.len() || punctures.is_empty() {
        return Err(Error::ShapeMismatch("need one residue per finite puncture".into()));
    }
    let m = punctures.len();
    let scale_p = punctures.iter().fold(T::one(), |a, p| a.max(cabs(*p)));
    let mut min_sep = T::max_value().unwrap_or(c(1e300));
    for i in 0..m {
        for j in 0..i {
            min_sep = min_sep.min(cabs(punctures[i] - punctures[j]));
        }
    }
    if m > 1 && !(min_sep > c::<T>(1e-12) * scale_p) {
        return Err(Error::OutOfRange("punctures must be distinct".into()));
    }
    let scale_a = residues.iter().fold(T::zero(), |a, r| a.max(cabs(*r)));
    let lead = residues.iter().fold(czero(), |acc, a| acc + *a);
    if !(cabs(lead) >= c::<T>(1e-12) * scale_a) || scale_a == T::zero() {
        return Err(Error::DegenerateResidues);
    }
    let num = numerator(punctures, residues);
    let deg = m - 1;
    let mut zeros = Vec::with_capacity(deg);
    if deg > 0 {
        let monic: Vec<Complex<T>> = num.iter().map(|x| *x / lead).collect();
        let comp = DMatrix::<Complex<T>>::from_fn(deg, deg, |i, j| {
            if j == deg - 1 {
                -monic[i]
            } else if i == j + 1 {
                Complex::new(T::one(), T::zero())
            } else {
                czero()
            }
        });
        let schur = Schur::try_new(comp, T::default_epsilon(), 0)
            .ok_or_else(|| Error::LinearSolve("companion eigenvalues did not converge".into()))?;
        let eig = schur
            .eigenvalues()
            .ok_or_else(|| Error::LinearSolve("companion eigenvalues unavailable".into()))?;
        for z0 in eig.iter() {
            // Newton polish on the numerator
            let mut z = *z0;
            for _ in 0..3 {
                let (p, dp) = horner(&num, z);
                if cabs(dp) == T::zero() {
                    break;
                }
                let step = p / dp;
                let next = z - step;
                if cabs(horner(&num, next).0) < cabs(p) {
                    z = next;
                } else {
                    break;
                }
            }
            zeros.push(z);
        }
    }
    zeros.sort_by(|a, b| {
        f(a.re)
            .partial_cmp(&f(b.re))
            .unwrap()
            .then(f(a.im).partial_cmp(&f(b.im)).unwrap())
    });

    let mut min_pair = T::max_value().unwrap_or(c(1e300));
    for i in 0..zeros.len() {
        for j in 0..i {
            min_pair = min_pair.min(cabs(zeros[i] - zeros[j]));
        }
    }
    let min_punct = zeros
        .iter()
        .flat_map(|z| punctures.iter().map(move |p| cabs(*z - *p)))
        .fold(T::max_value().unwrap_or(c(1e300)), |a, d| a.min(d));
    if deg > 0 && !(min_punct > c::<T>(1e-10) * scale_p) {
        return Err(Error::DegenerateResidues);
    }
    // eta' at a zero equals N'(z) / prod (z - p_k); a double zero splits into a
    // pair of roots about sqrt(eps) apart, so evaluate at the cluster centre
    let zscale = zeros.iter().fold(scale_p, |a, z| a.max(cabs(*z)));
    let cluster_radius = c::<T>(1e-5) * zscale;
    let threshold = c::<T>(1e-8) * scale_a / (zscale * zscale);
    let mut derivative_abs = Vec::with_capacity(zeros.len());
    for z in &zeros {
        let members: Vec<Complex<T>> = zeros.iter().copied().filter(|w| cabs(*w - *z) < cluster_radius).collect();
        let centre = members.iter().fold(czero(), |a, w| a + *w) / c::<T>(members.len() as f64);
        let (_, dn) = horner(&num, centre);
        let denom = punctures.iter().fold(Complex::new(T::one(), T::zero()), |a, p| a * (centre - *p));
        derivative_abs.push(cabs(dn / denom));
    }
    let all_simple = derivative_abs.iter().all(|d| *d >= threshold) && (zeros.len() < 2 || min_pair >= cluster_radius);
    Ok(SphereZeros {
        zeros,
        derivative_abs,
        min_pairwise_distance: min_pair,
        min_puncture_distance: min_punct,
        all_simple,
    })
}

/// Max over punctures of `|(1 / 2 pi i) contour integral of eta - a_j|` on circles of radius `rho_j`,
/// with `points`-node trapezoid quadrature.
pub fn residue_check<T: Real>(punctures: &[Complex<T>], residues: &[Complex<T>], points: usize) -> T {
    let m = punctures.len();
    let mut worst = T::zero();
    let two_pi: T = c(2.0 * std::f64::consts::PI);
    for j in 0..m {
        let mut rho = T::one();
        for k in 0..m {
            if k != j {
                rho = rho.min(c::<T>(0.25) * cabs(punctures[k] - punctures[j]));
            }
        }
        let mut sum = czero();
        for q in 0..points {
            let theta = two_pi * c::<T>(q as f64) / c::<T>(points as f64);
            let e = cis(theta);
            let z = punctures[j] + e * rho;
            // dz = i rho e dtheta
            sum += eval_form(punctures, residues, z) * Complex::new(T::zero(), rho) * e;
        }
        let integral = sum * (two_pi / c::<T>(points as f64));
        let res = integral / Complex::new(T::zero(), two_pi);
        worst = worst.max(cabs(res - residues[j]));
    }
    worst
}
