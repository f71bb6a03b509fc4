//! Sparse and banded linear algebra used by the grid solvers.

use crate::error::{Error, Result};
use crate::scalar::{c, f, Real};

/// Symmetric positive definite band matrix, stored as its lower band.
///
/// Row `i` holds columns `i - bw ..= i` contiguously, which keeps the inner
/// products of the Cholesky factorization unit-stride.
#[derive(Clone, Debug)]
pub struct BandedSpd<T> {
    pub n: usize,
    pub bw: usize,
    data: Vec<T>,
    factored: bool,
}

impl<T: Real> BandedSpd<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![T::zero(); n * (bw + 1)], factored: false }
    }

    #[inline]
    fn idx(&self, i: usize, k: usize) -> usize {
        i * (self.bw + 1) + k + self.bw - i
    }

    /// Adds `v` to entry `(i, k)` with `k <= i`; entries outside the band are rejected.
    #[inline]
    pub fn add(&mut self, i: usize, k: usize, v: T) {
        debug_assert!(k <= i && i - k <= self.bw);
        let id = self.idx(i, k);
        self.data[id] += v;
    }

    pub fn get(&self, i: usize, k: usize) -> T {
        let (i, k) = if k > i { (k, i) } else { (i, k) };
        if i - k > self.bw {
            T::zero()
        } else {
            self.data[self.idx(i, k)]
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert!(!self.factored);
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let k0 = i.saturating_sub(self.bw);
            for k in k0..=i {
                let a = self.data[self.idx(i, k)];
                y[i] += a * x[k];
                if k != i {
                    y[k] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place Cholesky factorization.
    pub fn factor(&mut self) -> Result<()> {
        let (n, bw) = (self.n, self.bw);
        for j in 0..n {
            let kj = j.saturating_sub(bw);
            let rj = j * (bw + 1) + bw - j;
            let mut s = self.data[rj + j];
            for k in kj..j {
                let l = self.data[rj + k];
                s -= l * l;
            }
            if !(s > T::zero()) {
                return Err(Error::LinearSolve(format!("matrix not positive definite at row {j}")));
            }
            let d = s.sqrt();
            let djj = self.idx(j, j);
            self.data[djj] = d;
            let inv = T::one() / d;
            for i in j + 1..(j + bw + 1).min(n) {
                let ki = i.saturating_sub(bw);
                let k0 = ki.max(kj);
                let ri = i * (bw + 1) + bw - i;
                let mut s = self.data[ri + j];
                for k in k0..j {
                    s -= self.data[ri + k] * self.data[rj + k];
                }
                self.data[ri + j] = s * inv;
            }
        }
        self.factored = true;
        Ok(())
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert!(self.factored);
        let (n, bw) = (self.n, self.bw);
        let mut y = b.to_vec();
        for i in 0..n {
            let k0 = i.saturating_sub(bw);
            let mut s = y[i];
            for k in k0..i {
                s -= self.data[self.idx(i, k)] * y[k];
            }
            y[i] = s / self.data[self.idx(i, i)];
        }
        for i in (0..n).rev() {
            let yi = y[i] / self.data[self.idx(i, i)];
            y[i] = yi;
            let k0 = i.saturating_sub(bw);
            for k in k0..i {
                let l = self.data[self.idx(i, k)];
                y[k] -= l * yi;
            }
        }
        y
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, Default)]
pub struct Csr<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<T>,
}

impl<T: Real> Csr<T> {
    pub fn new(ncols: usize) -> Self {
        Self { nrows: 0, ncols, row_ptr: vec![0], col: vec![], val: vec![] }
    }

    /// Appends one row given as `(column, value)` pairs; duplicate columns are summed.
    pub fn push_row(&mut self, entries: &mut Vec<(usize, T)>) {
        entries.sort_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for &(cidx, v) in entries.iter() {
            if last == Some(cidx) {
                *self.val.last_mut().unwrap() += v;
            } else {
                self.col.push(cidx);
                self.val.push(v);
                last = Some(cidx);
            }
        }
        self.nrows += 1;
        self.row_ptr.push(self.col.len());
        entries.clear();
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |i| (self.col[i], self.val[i]))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.nrows)
            .map(|r| self.row(r).fold(T::zero(), |acc, (cidx, v)| acc + v * x[cidx]))
            .collect()
    }

    pub fn tmul_vec(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.ncols];
        for (r, &yr) in y.iter().enumerate().take(self.nrows) {
            for (cidx, v) in self.row(r) {
                out[cidx] += v * yr;
            }
        }
        out
    }

    /// Largest column distance between two entries of the same row.
    pub fn normal_bandwidth(&self) -> usize {
        (0..self.nrows)
            .map(|r| {
                let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
                if a == b {
                    0
                } else {
                    self.col[b - 1] - self.col[a]
                }
            })
            .max()
            .unwrap_or(0)
    }

    /// Diagonal of `J^T J`.
    pub fn normal_diagonal(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.ncols];
        for (cidx, v) in self.col.iter().zip(&self.val) {
            d[*cidx] += *v * *v;
        }
        d
    }

    /// `J^T J + diag(shift)` as a band matrix.
    pub fn normal_matrix(&self, shift: &[T]) -> BandedSpd<T> {
        let bw = self.normal_bandwidth();
        let mut a = BandedSpd::zeros(self.ncols, bw);
        for r in 0..self.nrows {
            let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
            for p in s..e {
                let (cp, vp) = (self.col[p], self.val[p]);
                for q in s..=p {
                    a.add(cp, self.col[q], vp * self.val[q]);
                }
            }
        }
        for (i, &d) in shift.iter().enumerate() {
            a.add(i, i, d);
        }
        a
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for a symmetric positive definite operator.
pub fn pcg<T: Real>(
    apply: impl Fn(&[T]) -> Vec<T>,
    b: &[T],
    diag: &[T],
    x0: Option<&[T]>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<T>, CgOutcome)> {
    let n = b.len();
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y);
    let bnorm = dot(b, b).sqrt();
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![T::zero(); n]);
    if bnorm == T::zero() {
        return Ok((vec![T::zero(); n], CgOutcome { iterations: 0, relative_residual: 0.0 }));
    }
    let ax = apply(&x);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(a, b)| *a - *b).collect();
    let mut z: Vec<T> = r.iter().zip(diag).map(|(a, d)| *a / *d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let tol = c::<T>(rel_tol) * bnorm;
    for it in 0..max_iter {
        let rn = dot(&r, &r).sqrt();
        if rn <= tol {
            return Ok((x, CgOutcome { iterations: it, relative_residual: f(rn / bnorm) }));
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::LinearSolve("operator not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rn = dot(&r, &r).sqrt();
    if rn <= tol * c(10.0) {
        Ok((x, CgOutcome { iterations: max_iter, relative_residual: f(rn / bnorm) }))
    } else {
        Err(Error::LinearSolve(format!("CG stalled at relative residual {:e}", f(rn / bnorm))))
    }
}

/// Ordinary least-squares line fit returning `(slope, intercept, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Solves a tridiagonal system in place (Thomas algorithm).
pub fn solve_tridiagonal<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    let mut cp = vec![T::zero(); n];
    let mut dp = vec![T::zero(); n];
    cp[0] = if n > 1 { upper[0] / diag[0] } else { T::zero() };
    dp[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * cp[i - 1];
        cp[i] = if i + 1 < n { upper[i] / m } else { T::zero() };
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / m;
    }
    let mut x = dp;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= cp[i] * next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_cholesky_matches_dense_solution() {
        let n = 12;
        let bw = 3;
        let mut a = BandedSpd::<f64>::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 10.0 + i as f64);
            for d in 1..=bw.min(i) {
                a.add(i, i - d, 1.0 / (d as f64 + 1.0));
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x);
        let mut fac = a.clone();
        fac.factor().unwrap();
        let y = fac.solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = BandedSpd::<f64>::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.factor().is_err());
    }

    #[test]
    fn normal_matrix_equals_jtj() {
        let mut j = Csr::<f64>::new(4);
        j.push_row(&mut vec![(0, 1.0), (2, 2.0)]);
        j.push_row(&mut vec![(1, -1.0), (3, 0.5), (1, 2.0)]);
        j.push_row(&mut vec![(2, 3.0), (3, 1.0)]);
        let a = j.normal_matrix(&[0.0; 4]);
        let x = [1.0, 2.0, 3.0, 4.0];
        let lhs = a.mul_vec(&x);
        let rhs = j.tmul_vec(&j.mul_vec(&x));
        for (p, q) in lhs.iter().zip(&rhs) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn pcg_solves_spd_system() {
        let n = 30;
        let apply = |x: &[f64]| {
            (0..n)
                .map(|i| {
                    let mut y = 4.0 * x[i];
                    if i > 0 {
                        y -= x[i - 1];
                    }
                    if i + 1 < n {
                        y -= x[i + 1];
                    }
                    y
                })
                .collect::<Vec<_>>()
        };
        let b = vec![1.0; n];
        let (x, out) = pcg(apply, &b, &vec![4.0; n], None, 1e-14, 200).unwrap();
        let r = apply(&x);
        assert!(out.iterations > 0);
        for (p, q) in r.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn tridiagonal_solver() {
        let x: Vec<f64> = solve_tridiagonal(&[0.0, 1.0, 1.0], &[2.0, 2.0, 2.0], &[1.0, 1.0, 0.0], &[3.0, 4.0, 3.0]);
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_line_has_unit_r2() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let (s, i, r2) = linear_fit(&x, &y);
        assert!((s + 0.5).abs() < 1e-14 && (i - 2.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
