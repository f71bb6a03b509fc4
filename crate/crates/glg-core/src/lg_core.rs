//! Pointwise calculus of an abelian gauged Landau-Ginzburg model on flat `C^n`.
//!
//! Tangent vectors share the representation of points. The Lie algebra of the
//! torus `U(1)^k` is stored through real coefficients of `i`, with the metric
//! `<i a, i b> = a . b`.

use crate::error::{Error, Result};
use crate::scalar::{c, cabs, cexp, cis, cx, czero, f, inner, jmul, rdot, Real};
use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub type ComplexPoint<T> = Vec<Complex<T>>;
pub type LieVector<T> = Vec<T>;

#[derive(Clone, Debug, PartialEq)]
pub struct Monomial<T> {
    pub exp: Vec<u32>,
    pub coeff: Complex<T>,
}

/// Sparse polynomial superpotential `W = sum coeff * z^exp`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Superpotential<T> {
    pub monomials: Vec<Monomial<T>>,
}

fn ipow<T: Real>(z: Complex<T>, e: u32) -> Complex<T> {
    let mut acc = cx(T::one(), T::zero());
    for _ in 0..e {
        acc *= z;
    }
    acc
}

impl<T: Real> Superpotential<T> {
    pub fn new(monomials: Vec<Monomial<T>>) -> Self {
        Self { monomials }
    }

    /// Value of `coeff * z^e` after removing the listed factors (one power each).
    fn reduced_term(mono: &Monomial<T>, z: &[Complex<T>], drop: &[usize]) -> Complex<T> {
        let mut e = mono.exp.clone();
        let mut factor = T::one();
        for &j in drop {
            if e[j] == 0 {
                return czero();
            }
            factor *= c::<T>(e[j] as f64);
            e[j] -= 1;
        }
        let mut acc = mono.coeff * factor;
        for (zj, &ej) in z.iter().zip(&e) {
            if ej > 0 {
                acc *= ipow(*zj, ej);
            }
        }
        acc
    }

    pub fn eval(&self, z: &[Complex<T>]) -> Complex<T> {
        self.monomials
            .iter()
            .fold(czero(), |acc, m| acc + Self::reduced_term(m, z, &[]))
    }

    /// Holomorphic gradient `dW/dz_j`.
    pub fn dw(&self, z: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..z.len())
            .map(|j| {
                self.monomials
                    .iter()
                    .fold(czero(), |acc, m| acc + Self::reduced_term(m, z, &[j]))
            })
            .collect()
    }

    /// Holomorphic second derivatives, row-major `n x n`.
    pub fn d2w(&self, z: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = z.len();
        let mut out = vec![czero(); n * n];
        for i in 0..n {
            for j in i..n {
                let v = self
                    .monomials
                    .iter()
                    .fold(czero(), |acc, m| acc + Self::reduced_term(m, z, &[i, j]));
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        out
    }

    /// Contraction `sum_l d3W/dz_i dz_j dz_l x_l`, row-major `n x n`.
    pub fn d3w_contract(&self, z: &[Complex<T>], x: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = z.len();
        let mut out = vec![czero(); n * n];
        for i in 0..n {
            for j in i..n {
                let mut v = czero();
                for (l, xl) in x.iter().enumerate() {
                    if xl.re == T::zero() && xl.im == T::zero() {
                        continue;
                    }
                    let t = self
                        .monomials
                        .iter()
                        .fold(czero::<T>(), |acc, m| acc + Self::reduced_term(m, z, &[i, j, l]));
                    v += t * *xl;
                }
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        out
    }

    pub fn degree(&self) -> u32 {
        self.monomials
            .iter()
            .map(|m| m.exp.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }
}

/// Abelian gauged Landau-Ginzburg model on flat `C^n` with a `U(1)^k` action.
#[derive(Clone, Debug, PartialEq)]
pub struct LgModel<T> {
    pub n: usize,
    pub k: usize,
    /// `weights[a][j]`: generator `a` acts by `u^{w_aj}` on `z_j`.
    pub weights: Vec<Vec<i32>>,
    pub w: Superpotential<T>,
    pub delta: LieVector<T>,
    pub mu_offset: LieVector<T>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MonomialFile {
    pub exp: Vec<u32>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// On-disk JSON form of a model.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelFile {
    pub n: usize,
    #[serde(default)]
    pub weights: Vec<Vec<i32>>,
    #[serde(rename = "W", default)]
    pub w: Vec<MonomialFile>,
    #[serde(default)]
    pub delta: Vec<f64>,
    #[serde(default)]
    pub mu_offset: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationResult {
    pub violations: Vec<String>,
}

impl ValidationResult {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every violated structural invariant of a model.
pub fn validate_model<T: Real>(m: &LgModel<T>) -> ValidationResult {
    let mut v = Vec::new();
    if m.n == 0 {
        v.push("n must be at least 1".to_string());
    }
    if m.weights.len() != m.k {
        v.push(format!("weight matrix has {} rows, expected {}", m.weights.len(), m.k));
    }
    for (a, row) in m.weights.iter().enumerate() {
        if row.len() != m.n {
            v.push(format!("weight row {a} has {} entries, expected {}", row.len(), m.n));
        }
    }
    if m.delta.len() != m.k {
        v.push(format!("delta has {} entries, expected {}", m.delta.len(), m.k));
    }
    if m.mu_offset.len() != m.k {
        v.push(format!("mu_offset has {} entries, expected {}", m.mu_offset.len(), m.k));
    }
    for (i, mono) in m.w.monomials.iter().enumerate() {
        if mono.exp.len() != m.n {
            v.push(format!("monomial {i} has {} exponents, expected {}", mono.exp.len(), m.n));
            continue;
        }
        if m.w.monomials[..i].iter().any(|o| o.exp == mono.exp) {
            v.push(format!("monomial {i} duplicates exponent {:?}", mono.exp));
        }
        for (a, row) in m.weights.iter().enumerate() {
            if row.len() != m.n {
                continue;
            }
            let wt: i64 = row.iter().zip(&mono.exp).map(|(&w, &e)| w as i64 * e as i64).sum();
            if wt != 0 {
                v.push(format!("monomial {:?} has weight {wt} under generator {a}", mono.exp));
            }
        }
    }
    ValidationResult { violations: v }
}

impl<T: Real> LgModel<T> {
    /// Builds a model, rejecting it if any invariant fails.
    pub fn new(
        weights: Vec<Vec<i32>>,
        monomials: Vec<(Vec<u32>, Complex<T>)>,
        delta: Vec<T>,
        n: usize,
    ) -> Result<Self> {
        let k = weights.len();
        let m = Self {
            n,
            k,
            weights,
            w: Superpotential::new(
                monomials
                    .into_iter()
                    .map(|(exp, coeff)| Monomial { exp, coeff })
                    .collect(),
            ),
            delta,
            mu_offset: vec![T::zero(); k],
        };
        let v = validate_model(&m);
        if v.is_valid() {
            Ok(m)
        } else {
            Err(Error::InvalidModel(v.violations.join("; ")))
        }
    }

    /// Same as [`LgModel::new`] without validation, for negative controls.
    pub fn new_unchecked(
        weights: Vec<Vec<i32>>,
        monomials: Vec<(Vec<u32>, Complex<T>)>,
        delta: Vec<T>,
        n: usize,
    ) -> Self {
        let k = weights.len();
        Self {
            n,
            k,
            weights,
            w: Superpotential::new(
                monomials
                    .into_iter()
                    .map(|(exp, coeff)| Monomial { exp, coeff })
                    .collect(),
            ),
            delta,
            mu_offset: vec![T::zero(); k],
        }
    }

    /// Weight-one circle acting on `C` with `W = 0` at level `1/2`.
    pub fn vortex() -> Self {
        Self::new(vec![vec![1]], vec![], vec![c(0.5)], 1).expect("preset")
    }

    /// `W = xy` on `C^2` with weights `(1, -1)`.
    pub fn xy() -> Self {
        Self::new(
            vec![vec![1, -1]],
            vec![(vec![1, 1], cx(T::one(), T::zero()))],
            vec![T::zero()],
            2,
        )
        .expect("preset")
    }

    /// `W = (xy - lambda) b` on `C^3` with weights `(1, -1, 0)`.
    pub fn fundamental(lambda: Complex<T>) -> Self {
        let mut monos = vec![(vec![1, 1, 1], cx(T::one(), T::zero()))];
        if lambda.re != T::zero() || lambda.im != T::zero() {
            monos.push((vec![0, 0, 1], -lambda));
        }
        Self::new(vec![vec![1, -1, 0]], monos, vec![T::zero()], 3).expect("preset")
    }

    /// Trivial gauge group with a single-variable polynomial `W = coeff z^d`.
    pub fn ungauged_power(d: u32, coeff: Complex<T>) -> Self {
        Self::new(vec![], vec![(vec![d], coeff)], vec![], 1).expect("preset")
    }

    pub fn preset(name: &str, lambda: f64) -> Result<Self> {
        match name {
            "vortex" => Ok(Self::vortex()),
            "xy" => Ok(Self::xy()),
            "fundamental" => Ok(Self::fundamental(cx(c(lambda), T::zero()))),
            "z2" => Ok(Self::ungauged_power(2, cx(T::one(), T::zero()))),
            other => Err(Error::Config(format!("unknown model preset '{other}'"))),
        }
    }

    pub fn from_file(mf: &ModelFile) -> Result<Self> {
        let k = mf.weights.len();
        let mut m = Self::new_unchecked(
            mf.weights.clone(),
            mf.w
                .iter()
                .map(|x| (x.exp.clone(), cx(c(x.re), c(x.im))))
                .collect(),
            if mf.delta.is_empty() {
                vec![T::zero(); k]
            } else {
                mf.delta.iter().map(|&d| c(d)).collect()
            },
            mf.n,
        );
        if !mf.mu_offset.is_empty() {
            m.mu_offset = mf.mu_offset.iter().map(|&d| c(d)).collect();
        }
        let v = validate_model(&m);
        if v.is_valid() {
            Ok(m)
        } else {
            Err(Error::InvalidModel(v.violations.join("; ")))
        }
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            n: self.n,
            weights: self.weights.clone(),
            w: self
                .w
                .monomials
                .iter()
                .map(|m| MonomialFile {
                    exp: m.exp.clone(),
                    re: f(m.coeff.re),
                    im: f(m.coeff.im),
                })
                .collect(),
            delta: self.delta.iter().map(|&d| f(d)).collect(),
            mu_offset: self.mu_offset.iter().map(|&d| f(d)).collect(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mf: ModelFile = serde_json::from_str(s)?;
        Self::from_file(&mf)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("model serialization")
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn with_delta(mut self, delta: Vec<T>) -> Self {
        self.delta = delta;
        self
    }

    /// Per-coordinate charge `sum_a xi_a w_aj`.
    pub fn charges(&self, xi: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|j| {
                self.weights
                    .iter()
                    .zip(xi)
                    .fold(T::zero(), |acc, (row, &x)| acc + x * c::<T>(row[j] as f64))
            })
            .collect()
    }

    fn weight(&self, a: usize, j: usize) -> T {
        c(self.weights[a][j] as f64)
    }

    pub fn eval_w(&self, z: &[Complex<T>]) -> Complex<T> {
        self.w.eval(z)
    }

    pub fn eval_l(&self, z: &[Complex<T>]) -> T {
        self.eval_w(z).re
    }

    pub fn eval_h(&self, z: &[Complex<T>]) -> T {
        self.eval_w(z).im
    }

    /// `grad L = conj(dW)`.
    pub fn grad_l(&self, z: &[Complex<T>]) -> ComplexPoint<T> {
        self.w.dw(z).into_iter().map(|g| g.conj()).collect()
    }

    /// `grad H`, computed as the gradient of `Re(-i W)`; agrees bitwise with `J grad L`.
    pub fn grad_h(&self, z: &[Complex<T>]) -> ComplexPoint<T> {
        self.w
            .dw(z)
            .into_iter()
            .map(|g| Complex::new(g.im, -g.re).conj())
            .collect()
    }

    /// Antilinear Hessian of `L`: `w_i = conj(sum_j W_ij v_j)`.
    pub fn hess_l_apply(&self, z: &[Complex<T>], v: &[Complex<T>]) -> ComplexPoint<T> {
        let n = self.n;
        let h = self.w.d2w(z);
        (0..n)
            .map(|i| {
                (0..n)
                    .fold(czero(), |acc, j| acc + h[i * n + j] * v[j])
                    .conj()
            })
            .collect()
    }

    /// `Hess H = J Hess L`.
    pub fn hess_h_apply(&self, z: &[Complex<T>], v: &[Complex<T>]) -> ComplexPoint<T> {
        self.hess_l_apply(z, v).into_iter().map(jmul).collect()
    }

    /// Covariant derivative of `Hess H` along `x`, applied to `v`.
    pub fn d_hess_h_apply(
        &self,
        z: &[Complex<T>],
        x: &[Complex<T>],
        v: &[Complex<T>],
    ) -> ComplexPoint<T> {
        let n = self.n;
        let t = self.w.d3w_contract(z, x);
        (0..n)
            .map(|i| jmul((0..n).fold(czero(), |acc, j| acc + t[i * n + j] * v[j]).conj()))
            .collect()
    }

    /// `mu_a = 1/2 sum_j w_aj |z_j|^2 + offset_a`.
    pub fn moment_map(&self, z: &[Complex<T>]) -> LieVector<T> {
        let half: T = c(0.5);
        (0..self.k)
            .map(|a| {
                (0..self.n).fold(self.mu_offset[a], |acc, j| {
                    acc + half * self.weight(a, j) * z[j].norm_sqr()
                })
            })
            .collect()
    }

    /// Generating vector field `xi~_j = i (sum_a xi_a w_aj) z_j`.
    pub fn infinitesimal_action(&self, z: &[Complex<T>], xi: &[T]) -> ComplexPoint<T> {
        let q = self.charges(xi);
        z.iter().zip(&q).map(|(zj, &qj)| jmul(*zj * qj)).collect()
    }

    /// `<grad mu, xi>`, component `j` equal to `(sum_a xi_a w_aj) z_j`.
    pub fn grad_mu_pair(&self, z: &[Complex<T>], xi: &[T]) -> ComplexPoint<T> {
        let q = self.charges(xi);
        z.iter().zip(&q).map(|(zj, &qj)| *zj * qj).collect()
    }

    /// Derivative of [`LgModel::grad_mu_pair`] along `v`.
    pub fn hess_mu_pair(&self, _z: &[Complex<T>], v: &[Complex<T>], xi: &[T]) -> ComplexPoint<T> {
        let q = self.charges(xi);
        v.iter().zip(&q).map(|(vj, &qj)| *vj * qj).collect()
    }

    /// `<grad mu_a, v>` for every generator.
    pub fn mu_pairing(&self, z: &[Complex<T>], v: &[Complex<T>]) -> LieVector<T> {
        (0..self.k)
            .map(|a| {
                (0..self.n).fold(T::zero(), |acc, j| {
                    acc + self.weight(a, j) * rdot(z[j], v[j])
                })
            })
            .collect()
    }

    /// `<J grad mu_a, v>` for every generator.
    pub fn j_mu_pairing(&self, z: &[Complex<T>], v: &[Complex<T>]) -> LieVector<T> {
        (0..self.k)
            .map(|a| {
                (0..self.n).fold(T::zero(), |acc, j| {
                    acc + self.weight(a, j) * rdot(jmul(z[j]), v[j])
                })
            })
            .collect()
    }

    /// `D(v) = (Hess H(v), <grad mu, v>, <grad mu, Jv>)`.
    pub fn d_operator(
        &self,
        z: &[Complex<T>],
        v: &[Complex<T>],
    ) -> (ComplexPoint<T>, LieVector<T>, LieVector<T>) {
        let jv: Vec<_> = v.iter().map(|x| jmul(*x)).collect();
        (self.hess_h_apply(z, v), self.mu_pairing(z, v), self.mu_pairing(z, &jv))
    }

    /// Real gauge action by angles `theta`.
    pub fn gauge_act(&self, theta: &[T], z: &[Complex<T>]) -> ComplexPoint<T> {
        let q = self.charges(theta);
        z.iter().zip(&q).map(|(zj, &qj)| *zj * cis(qj)).collect()
    }

    /// Complexified action by logs `g_a = alpha_a + i theta_a`.
    pub fn complex_gauge_act(&self, g: &[Complex<T>], z: &[Complex<T>]) -> ComplexPoint<T> {
        (0..self.n)
            .map(|j| {
                let mut e = czero::<T>();
                for (a, ga) in g.iter().enumerate() {
                    e += *ga * self.weight(a, j);
                }
                z[j] * cexp(e)
            })
            .collect()
    }

    pub fn random_point<R: Rng>(&self, rng: &mut R, scale: f64) -> ComplexPoint<T> {
        (0..self.n)
            .map(|_| cx(c(rng.gen_range(-scale..scale)), c(rng.gen_range(-scale..scale))))
            .collect()
    }

    pub fn random_lie<R: Rng>(&self, rng: &mut R, scale: f64) -> LieVector<T> {
        (0..self.k).map(|_| c(rng.gen_range(-scale..scale))).collect()
    }
}

/// Maximum residuals of the six pointwise identities.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IdentityReport {
    /// `grad L + J grad H`.
    pub grad_pair: f64,
    /// `Hess L + J Hess H`.
    pub hess_pair: f64,
    /// `J Hess H + Hess H J`.
    pub hess_h_antilinear: f64,
    /// `J Hess mu - Hess mu J`.
    pub hess_mu_linear: f64,
    /// `<grad mu, grad H>` and `<J grad mu, grad H>`.
    pub mu_h_orthogonal: f64,
    /// `<grad mu, xi~>`.
    pub mu_orbit_orthogonal: f64,
    pub samples: usize,
}

impl IdentityReport {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.grad_pair,
            self.hess_pair,
            self.hess_h_antilinear,
            self.hess_mu_linear,
            self.mu_h_orthogonal,
            self.mu_orbit_orthogonal,
        ]
    }

    pub fn max(&self) -> f64 {
        self.as_array().into_iter().fold(0.0, f64::max)
    }
}

fn diff_norm<T: Real>(a: &[Complex<T>], b: &[Complex<T>], sign: T) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc.max(cabs(*x + *y * sign)))
}

/// Evaluates the identity suite. `samples` pairs a point with a tangent vector and a Lie vector.
pub fn identity_suite<T: Real>(
    m: &LgModel<T>,
    samples: &[(ComplexPoint<T>, ComplexPoint<T>, LieVector<T>)],
) -> IdentityReport {
    let mut r = [T::zero(); 6];
    for (z, v, xi) in samples {
        let gl = m.grad_l(z);
        let gh = m.grad_h(z);
        let jgh: Vec<_> = gh.iter().map(|x| jmul(*x)).collect();
        r[0] = r[0].max(diff_norm(&gl, &jgh, T::one()));

        let hl = m.hess_l_apply(z, v);
        let hh = m.hess_h_apply(z, v);
        let jhh: Vec<_> = hh.iter().map(|x| jmul(*x)).collect();
        r[1] = r[1].max(diff_norm(&hl, &jhh, T::one()));

        let jv: Vec<_> = v.iter().map(|x| jmul(*x)).collect();
        let hh_jv = m.hess_h_apply(z, &jv);
        r[2] = r[2].max(diff_norm(&jhh, &hh_jv, T::one()));

        let jhm: Vec<_> = m.hess_mu_pair(z, v, xi).into_iter().map(jmul).collect();
        let hm_j = m.hess_mu_pair(z, &jv, xi);
        r[3] = r[3].max(diff_norm(&jhm, &hm_j, -T::one()));

        let p1 = m.mu_pairing(z, &gh);
        let p2 = m.j_mu_pairing(z, &gh);
        for x in p1.iter().chain(&p2) {
            r[4] = r[4].max(x.abs());
        }

        let xt = m.infinitesimal_action(z, xi);
        for x in m.mu_pairing(z, &xt) {
            r[5] = r[5].max(x.abs());
        }
    }
    IdentityReport {
        grad_pair: f(r[0]),
        hess_pair: f(r[1]),
        hess_h_antilinear: f(r[2]),
        hess_mu_linear: f(r[3]),
        mu_h_orthogonal: f(r[4]),
        mu_orbit_orthogonal: f(r[5]),
        samples: samples.len(),
    }
}

/// Draws `count` random samples of (point, tangent vector, Lie vector).
pub fn random_samples<T: Real, R: Rng>(
    m: &LgModel<T>,
    rng: &mut R,
    count: usize,
    scale: f64,
) -> Vec<(ComplexPoint<T>, ComplexPoint<T>, LieVector<T>)> {
    (0..count)
        .map(|_| {
            (
                m.random_point(rng, scale),
                m.random_point(rng, scale),
                m.random_lie(rng, scale),
            )
        })
        .collect()
}

/// `|v|` for a tangent vector.
pub fn tangent_norm<T: Real>(v: &[Complex<T>]) -> T {
    inner(v, v).sqrt()
}
