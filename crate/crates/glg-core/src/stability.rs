//! Critical loci, Morse-Bott checks, the extended Hessian and its spectral gap.

use crate::error::{Error, Result};
use crate::lg_core::{ComplexPoint, LgModel, LieVector};
use crate::scalar::{c, complexify, f, jmul, norm_sq, realify, Real};
use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex;
use serde::Serialize;

/// Real `2n x 2n` matrix of a real-linear map on `C^n` in interleaved coordinates.
pub fn real_matrix<T: Real>(
    n: usize,
    map: impl Fn(&[Complex<T>]) -> Vec<T>,
    rows: usize,
) -> DMatrix<T> {
    let mut m = DMatrix::zeros(rows, 2 * n);
    for col in 0..2 * n {
        let mut e = vec![T::zero(); 2 * n];
        e[col] = T::one();
        let v = complexify(&e);
        let out = map(&v);
        for (r, x) in out.into_iter().enumerate() {
            m[(r, col)] = x;
        }
    }
    m
}

pub fn hess_l_matrix<T: Real>(m: &LgModel<T>, z: &[Complex<T>]) -> DMatrix<T> {
    real_matrix(m.n, |v| realify(&m.hess_l_apply(z, v)), 2 * m.n)
}

/// Matrix of `xi -> <grad mu, xi>` as a map `R^k -> R^{2n}`.
pub fn mu_pair_matrix<T: Real>(m: &LgModel<T>, z: &[Complex<T>]) -> DMatrix<T> {
    let mut out = DMatrix::zeros(2 * m.n, m.k);
    for a in 0..m.k {
        let mut xi = vec![T::zero(); m.k];
        xi[a] = T::one();
        for (r, x) in realify(&m.grad_mu_pair(z, &xi)).into_iter().enumerate() {
            out[(r, a)] = x;
        }
    }
    out
}

/// Matrix of the operator `D` as a map `R^{2n} -> R^{2n + 2k}`.
pub fn d_operator_matrix<T: Real>(m: &LgModel<T>, z: &[Complex<T>]) -> DMatrix<T> {
    real_matrix(
        m.n,
        |v| {
            let (h, p1, p2) = m.d_operator(z, v);
            let mut out = realify(&h);
            out.extend(p1);
            out.extend(p2);
            out
        },
        2 * m.n + 2 * m.k,
    )
}

fn singular_values<T: Real>(a: &DMatrix<T>) -> Vec<T> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<T> = SVD::new(a.clone(), false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    s
}

/// Smallest singular value counting the domain dimension (zero if rank-deficient by shape).
fn min_singular<T: Real>(a: &DMatrix<T>) -> T {
    if a.nrows() < a.ncols() {
        return T::zero();
    }
    singular_values(a).first().copied().unwrap_or(T::zero())
}

/// Orthonormal basis (columns) of the column span, using a relative rank threshold.
// The floor keeps near-zero columns (an orbit collapsing at the origin) out of the basis.
fn column_basis<T: Real>(a: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    if a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = SVD::new(a.clone(), true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.iter().fold(T::zero(), |acc, &x| acc.max(x));
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_tol * smax.max(T::one()))
        .collect();
    DMatrix::from_fn(a.nrows(), cols.len(), |r, j| u[(r, cols[j])])
}

/// Orthonormal kernel basis of a symmetric matrix.
fn symmetric_kernel<T: Real>(a: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let eig = SymmetricEigen::new(a.clone());
    let amax = eig.eigenvalues.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    let cols: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| amax == T::zero() || eig.eigenvalues[i].abs() <= rel_tol * amax)
        .collect();
    DMatrix::from_fn(a.nrows(), cols.len(), |r, j| eig.eigenvectors[(r, cols[j])])
}

/// Real `2n x 2k` matrix spanned by `xi~_a` and `J xi~_a`.
pub fn orbit_tangent_matrix<T: Real>(m: &LgModel<T>, z: &[Complex<T>]) -> DMatrix<T> {
    let mut out = DMatrix::zeros(2 * m.n, 2 * m.k);
    for a in 0..m.k {
        let mut xi = vec![T::zero(); m.k];
        xi[a] = T::one();
        let xt = m.infinitesimal_action(z, &xi);
        let jxt: Vec<_> = xt.iter().map(|x| jmul(*x)).collect();
        for (r, x) in realify(&xt).into_iter().enumerate() {
            out[(r, a)] = x;
        }
        for (r, x) in realify(&jxt).into_iter().enumerate() {
            out[(r, m.k + a)] = x;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalPoint<T> {
    pub z: ComplexPoint<T>,
    pub grad_norm: T,
    pub hess_kernel_dim: usize,
    pub orbit_tangent_dim: usize,
    pub is_free_orbit: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalSearch<T> {
    pub points: Vec<CriticalPoint<T>>,
    /// Seed index of each distinct orbit, parallel to `points`.
    pub seed_of: Vec<usize>,
    /// Seeds that failed to converge, with their final residual.
    pub failures: Vec<(usize, f64)>,
}

const RANK_TOL: f64 = 1e-8;

/// Damped Levenberg-Marquardt iteration on `grad L = 0` from one seed.
pub fn newton_critical<T: Real>(m: &LgModel<T>, seed: &[Complex<T>]) -> Result<ComplexPoint<T>> {
    let tol: T = c(1e-12);
    let mut z = seed.to_vec();
    let mut g = realify(&m.grad_l(&z));
    let mut phi = g.iter().fold(T::zero(), |a, &x| a + x * x);
    let mut lam: T = c(1e-6);
    for it in 0..200 {
        if phi.sqrt() < tol {
            return Ok(z);
        }
        let h = hess_l_matrix(m, &z);
        let gv = DVector::from_vec(g.clone());
        let hth = h.transpose() * &h;
        let rhs = -(h.transpose() * &gv);
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = hth.clone();
            let scale = (0..a.nrows()).fold(T::zero(), |acc, i| acc.max(a[(i, i)])).max(T::one());
            for i in 0..a.nrows() {
                a[(i, i)] += lam * scale;
            }
            let dx = match a.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => {
                    lam *= c(10.0);
                    continue;
                }
            };
            let zn: Vec<Complex<T>> = z
                .iter()
                .zip(complexify(dx.as_slice()))
                .map(|(a, b)| *a + b)
                .collect();
            let gn = realify(&m.grad_l(&zn));
            let phin = gn.iter().fold(T::zero(), |a, &x| a + x * x);
            if phin < phi || phin.sqrt() < tol {
                z = zn;
                g = gn;
                phi = phin;
                lam = (lam * c(0.1)).max(c(1e-15));
                accepted = true;
                break;
            }
            lam *= c(10.0);
        }
        if !accepted {
            return Err(Error::NonConvergence { iterations: it, residual: f(phi.sqrt()) });
        }
    }
    if phi.sqrt() < tol {
        Ok(z)
    } else {
        Err(Error::NonConvergence { iterations: 200, residual: f(phi.sqrt()) })
    }
}

fn describe<T: Real>(m: &LgModel<T>, z: ComplexPoint<T>) -> CriticalPoint<T> {
    let grad_norm = norm_sq(&m.grad_l(&z)).sqrt();
    let h = hess_l_matrix(m, &z);
    let kernel = symmetric_kernel(&h, c(RANK_TOL)).ncols();
    let orbit = column_basis(&orbit_tangent_matrix(m, &z), c(RANK_TOL)).ncols();
    CriticalPoint {
        z,
        grad_norm,
        hess_kernel_dim: kernel,
        orbit_tangent_dim: orbit,
        is_free_orbit: orbit == 2 * m.k,
    }
}

/// Residual of the best real-gauge alignment of `a` onto `b`.
pub fn real_orbit_distance<T: Real>(m: &LgModel<T>, a: &[Complex<T>], b: &[Complex<T>]) -> T {
    let plain = |x: &[Complex<T>]| {
        x.iter().zip(b).fold(T::zero(), |acc, (p, q)| acc + (*p - *q).norm_sqr()).sqrt()
    };
    if m.k == 0 {
        return plain(a);
    }
    // moduli are real-gauge invariant
    let dm = a
        .iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc.max((x.norm_sqr().sqrt() - y.norm_sqr().sqrt()).abs()));
    if dm > c(1e-6) {
        return dm;
    }
    let starts = 8usize;
    let mut best = plain(a);
    for s in 0..starts.pow(m.k.min(2) as u32) {
        let mut theta: Vec<T> = (0..m.k)
            .map(|q| {
                let digit = if q < 2 { (s / starts.pow(q as u32)) % starts } else { 0 };
                T::two_pi() * c::<T>(digit as f64 / starts as f64)
            })
            .collect();
        // Gauss-Newton on |e^{i theta.w} a - b|^2
        for _ in 0..50 {
            let ga = m.gauge_act(&theta, a);
            let r: Vec<Complex<T>> = ga.iter().zip(b).map(|(x, y)| *x - *y).collect();
            let mut jac = DMatrix::<T>::zeros(2 * m.n, m.k);
            for q in 0..m.k {
                let mut e = vec![T::zero(); m.k];
                e[q] = T::one();
                let d: Vec<Complex<T>> =
                    m.charges(&e).iter().zip(&ga).map(|(&w, x)| jmul(*x) * w).collect();
                for (row, x) in realify(&d).into_iter().enumerate() {
                    jac[(row, q)] = x;
                }
            }
            let rv = DVector::from_vec(realify(&r));
            let step = match SVD::new(jac, true, true).solve(&rv, c(1e-12)) {
                Ok(s) => s,
                Err(_) => break,
            };
            for q in 0..m.k {
                theta[q] -= step[q];
            }
            if step.norm() < c(1e-15) {
                break;
            }
        }
        best = best.min(plain(&m.gauge_act(&theta, a)));
    }
    best
}

/// Residual of the best complex-gauge alignment of `a` onto `b`.
///
/// Real logs are fitted by least squares on the moduli, the phases by
/// [`real_orbit_distance`].
pub fn orbit_distance<T: Real>(m: &LgModel<T>, a: &[Complex<T>], b: &[Complex<T>]) -> T {
    if m.k == 0 {
        return real_orbit_distance(m, a, b);
    }
    let tiny: T = c(1e-12);
    let mut rows = vec![];
    for j in 0..m.n {
        let (za, zb) = (a[j].norm_sqr().sqrt(), b[j].norm_sqr().sqrt());
        if (za <= tiny) != (zb <= tiny) {
            return za.max(zb);
        }
        if za > tiny {
            rows.push((j, zb.ln() - za.ln()));
        }
    }
    if rows.is_empty() {
        return real_orbit_distance(m, a, b);
    }
    let jac = DMatrix::from_fn(rows.len(), m.k, |r, q| c::<T>(m.weights[q][rows[r].0] as f64));
    let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|x| x.1));
    let alpha = match SVD::new(jac.clone(), true, true).solve(&rhs, c(1e-12)) {
        Ok(s) => s,
        Err(_) => return T::max_value().unwrap(),
    };
    let fit = (&jac * &alpha - &rhs).amax();
    if fit > c(1e-8) {
        return fit;
    }
    let g: Vec<Complex<T>> = alpha.iter().map(|&x| Complex::new(x, T::zero())).collect();
    real_orbit_distance(m, &m.complex_gauge_act(&g, a), b)
}

/// Damped Newton from every seed, deduplicated modulo real-gauge orbits.
pub fn find_critical_points<T: Real>(m: &LgModel<T>, seeds: &[ComplexPoint<T>]) -> CriticalSearch<T> {
    let mut out = CriticalSearch { points: vec![], seed_of: vec![], failures: vec![] };
    for (i, seed) in seeds.iter().enumerate() {
        match newton_critical(m, seed) {
            Ok(z) => {
                if out.points.iter().any(|p| orbit_distance(m, &z, &p.z) < c(1e-8)) {
                    continue;
                }
                out.points.push(describe(m, z));
                out.seed_of.push(i);
            }
            Err(Error::NonConvergence { residual, .. }) => out.failures.push((i, residual)),
            Err(_) => out.failures.push((i, f64::NAN)),
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MorseBott {
    pub is_morse_bott: bool,
    pub kernel_dim: usize,
    pub orbit_dim: usize,
}

/// Compares `ker Hess L` with the tangent space of the complex orbit.
pub fn morse_bott_check<T: Real>(m: &LgModel<T>, q: &[Complex<T>]) -> Result<MorseBott> {
    let g = norm_sq(&m.grad_l(q)).sqrt();
    if g >= c(1e-8) {
        return Err(Error::NotCritical(f(g)));
    }
    let h = hess_l_matrix(m, q);
    let ker = symmetric_kernel(&h, c(RANK_TOL));
    let orb = column_basis(&orbit_tangent_matrix(m, q), c(RANK_TOL));
    let mut ok = ker.ncols() == orb.ncols();
    if ok && orb.ncols() > 0 {
        // orbit directions must lie in the kernel
        let proj = &ker * (ker.transpose() * &orb);
        let resid = (&orb - proj).norm();
        ok = resid < c(1e-6);
    }
    Ok(MorseBott { is_morse_bott: ok, kernel_dim: ker.ncols(), orbit_dim: orb.ncols() })
}

/// The extended Hessian together with its anticommuting complex structure.
#[derive(Clone, Debug)]
pub struct ExtendedHessian<T: Real> {
    pub matrix: DMatrix<T>,
    pub sigma: DMatrix<T>,
    pub k: usize,
    pub n: usize,
}

/// Assembles the extended Hessian at `q` in the ordering `(xi, eta, v)`.
pub fn assemble_extended_hessian<T: Real>(m: &LgModel<T>, q: &[Complex<T>]) -> ExtendedHessian<T> {
    let (k, n) = (m.k, m.n);
    let dim = 2 * k + 2 * n;
    let mut d = DMatrix::zeros(dim, dim);
    let gm = mu_pair_matrix(m, q);
    let hl = hess_l_matrix(m, q);
    for a in 0..k {
        for r in 0..2 * n {
            let g = gm[(r, a)];
            // J grad mu_a in interleaved coordinates
            let jg = if r % 2 == 0 { -gm[(r + 1, a)] } else { gm[(r - 1, a)] };
            d[(a, 2 * k + r)] = g;
            d[(2 * k + r, a)] = g;
            d[(k + a, 2 * k + r)] = jg;
            d[(2 * k + r, k + a)] = jg;
        }
    }
    for i in 0..2 * n {
        for j in 0..2 * n {
            d[(2 * k + i, 2 * k + j)] = hl[(i, j)];
        }
    }
    let mut sigma = DMatrix::zeros(dim, dim);
    for a in 0..k {
        sigma[(a, k + a)] = T::one();
        sigma[(k + a, a)] = -T::one();
    }
    for j in 0..n {
        let b = 2 * k + 2 * j;
        sigma[(b + 1, b)] = T::one();
        sigma[(b, b + 1)] = -T::one();
    }
    ExtendedHessian { matrix: d, sigma, k, n }
}

impl<T: Real> ExtendedHessian<T> {
    pub fn symmetry_defect(&self) -> T {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    pub fn sigma_square_defect(&self) -> T {
        let dim = self.sigma.nrows();
        (&self.sigma * &self.sigma + DMatrix::<T>::identity(dim, dim)).amax()
    }

    pub fn anticommutator_defect(&self) -> T {
        (&self.sigma * &self.matrix + &self.matrix * &self.sigma).amax()
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        let mut e: Vec<T> = SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }
}

/// Largest distance between the spectrum and its reflection through zero.
pub fn spectrum_asymmetry<T: Real>(sorted: &[T]) -> T {
    let n = sorted.len();
    (0..n).fold(T::zero(), |acc, i| acc.max((sorted[i] + sorted[n - 1 - i]).abs()))
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport<T> {
    pub eigenvalues: Vec<T>,
    pub lambda1: T,
    /// Absent for the trivial group.
    pub zeta1: Option<T>,
    pub zeta2: T,
    pub zeta: T,
}

pub fn spectral_gap<T: Real>(m: &LgModel<T>, q: &[Complex<T>]) -> Result<SpectralReport<T>> {
    let zeta1 = if m.k > 0 {
        let z1 = min_singular(&mu_pair_matrix(m, q));
        if z1 < c(1e-10) {
            return Err(Error::NotFreeOrbit);
        }
        Some(z1)
    } else {
        None
    };
    let zeta2 = min_singular(&d_operator_matrix(m, q));
    let eh = assemble_extended_hessian(m, q);
    let eigenvalues = eh.eigenvalues();
    let lambda1 = eigenvalues.iter().fold(T::max_value().unwrap(), |acc, x| acc.min(x.abs()));
    let zeta = match zeta1 {
        Some(z1) => z1.min(zeta2),
        None => zeta2,
    };
    Ok(SpectralReport { eigenvalues, lambda1, zeta1, zeta2, zeta })
}

/// Moves `q` along its complex orbit onto the level `mu = delta`.
pub fn solve_delta_slice<T: Real>(
    m: &LgModel<T>,
    q: &[Complex<T>],
    delta: &[T],
) -> Result<ComplexPoint<T>> {
    solve_delta_slice_logs(m, q, delta).map(|(z, _)| z)
}

/// As [`solve_delta_slice`], also returning the real logs `alpha`.
pub fn solve_delta_slice_logs<T: Real>(
    m: &LgModel<T>,
    q: &[Complex<T>],
    delta: &[T],
) -> Result<(ComplexPoint<T>, LieVector<T>)> {
    let k = m.k;
    let apply = |alpha: &[T]| {
        let g: Vec<Complex<T>> = alpha.iter().map(|&a| Complex::new(a, T::zero())).collect();
        m.complex_gauge_act(&g, q)
    };
    let resid = |z: &[Complex<T>]| -> Vec<T> {
        m.moment_map(z).iter().zip(delta).map(|(a, b)| *a - *b).collect()
    };
    let norm = |r: &[T]| r.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
    let mut alpha: LieVector<T> = vec![T::zero(); k];
    let mut z = apply(&alpha);
    let mut r = resid(&z);
    for it in 0..100 {
        let rn = norm(&r);
        if rn < c(1e-12) {
            return Ok((z, alpha));
        }
        // d mu_a / d alpha_b = sum_j w_aj w_bj |z_j|^2
        let mut jac = DMatrix::<T>::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                jac[(a, b)] = (0..m.n).fold(T::zero(), |acc, j| {
                    acc + c::<T>((m.weights[a][j] * m.weights[b][j]) as f64) * z[j].norm_sqr()
                });
            }
        }
        let step = match jac.clone().cholesky() {
            Some(ch) => ch.solve(&DVector::from_vec(r.clone())),
            None => return Err(Error::Unattainable(format!("degenerate Jacobian at iteration {it}"))),
        };
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<T> = alpha.iter().zip(step.iter()).map(|(a, s)| *a - t * *s).collect();
            let zt = apply(&trial);
            let rt = resid(&zt);
            if norm(&rt) < rn * (T::one() - c::<T>(1e-4) * t) {
                alpha = trial;
                z = zt;
                r = rt;
                accepted = true;
                break;
            }
            t *= c(0.5);
        }
        if !accepted || alpha.iter().any(|a| a.abs() > c(60.0)) {
            return Err(Error::Unattainable(format!("no descent at iteration {it}")));
        }
    }
    if norm(&r) < c(1e-10) {
        Ok((z, alpha))
    } else {
        Err(Error::Unattainable("Newton iteration did not converge".into()))
    }
}
