//! Small linear-algebra kernels: tridiagonal and banded solvers, a Lanczos
//! driver for generalized symmetric problems, and dense symmetric helpers.

use std::ops::{Add, Div, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{LabError, Result};

/// Scalar types accepted by the tridiagonal solver.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Default
{
    fn one() -> Self;
}
impl Scalar for f64 {
    fn one() -> Self {
        1.0
    }
}
impl Scalar for num_complex::Complex64 {
    fn one() -> Self {
        num_complex::Complex64::new(1.0, 0.0)
    }
}

/// Pre-factored tridiagonal system (Thomas algorithm, no pivoting).
/// Only used on diagonally dominant or SPD matrices.
#[derive(Debug, Clone)]
pub struct Tridiagonal<T: Scalar> {
    lower: Vec<T>,
    inv_pivot: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    /// `lower[i]` couples row `i+1` to column `i`, `upper[i]` couples row `i` to column `i+1`.
    pub fn factor(lower: &[T], diag: &[T], upper: &[T]) -> Self {
        let n = diag.len();
        let one = T::one();
        let mut inv_pivot = Vec::with_capacity(n);
        let mut piv = diag[0];
        inv_pivot.push(one / piv);
        for i in 1..n {
            piv = diag[i] - lower[i - 1] * upper[i - 1] * inv_pivot[i - 1];
            inv_pivot.push(one / piv);
        }
        Self { lower: lower.to_vec(), inv_pivot, upper: upper.to_vec() }
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = b.len();
        for i in 1..n {
            let l = self.lower[i - 1] * self.inv_pivot[i - 1];
            b[i] = b[i] - l * b[i - 1];
        }
        b[n - 1] = b[n - 1] * self.inv_pivot[n - 1];
        for i in (0..n - 1).rev() {
            b[i] = (b[i] - self.upper[i] * b[i + 1]) * self.inv_pivot[i];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Banded LU factorization with partial pivoting for real general matrices.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
    /// Smallest |pivot| divided by the largest row max-norm of the input.
    pub pivot_ratio: f64,
}

/// Builder for a banded matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j + self.kl >= i && j <= i + self.ku, "({i},{j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            for j in lo..=hi {
                *yi += self.data[self.idx(i, j)] * x[j];
            }
        }
        y
    }

    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        let mut row_scale = 0.0f64;
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n - 1);
            for j in lo..=hi {
                row_scale = row_scale.max(self.data[self.idx(i, j)].abs());
            }
        }
        let mut piv = vec![0usize; n];
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if best == 0.0 {
                return Err(LabError::SpectrumCollision { shift: f64::NAN, pivot: 0.0 });
            }
            min_pivot = min_pivot.min(best);
            let jmax = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let kj = self.data[self.idx(k, j)];
                        let ij = self.idx(i, j);
                        self.data[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            width: w,
            data: self.data,
            piv,
            pivot_ratio: min_pivot / row_scale.max(f64::MIN_POSITIVE),
        })
    }
}

impl BandedLu {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + (j + self.kl - i)]
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let kl = self.kl;
        let ku_eff = self.width - 1 - kl;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let last = (k + kl).min(n - 1);
            let xk = x[k];
            for i in k + 1..=last {
                x[i] -= self.at(i, k) * xk;
            }
        }
        for k in (0..n).rev() {
            let hi = (k + ku_eff).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=hi {
                s -= self.at(k, j) * x[j];
            }
            x[k] = s / self.at(k, k);
        }
        x
    }
}

/// Result of a Lanczos run: ascending Ritz values and the matching Ritz vectors.
#[derive(Debug, Clone)]
pub struct RitzPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

/// Lanczos with full reorthogonalization for an operator that is
/// self-adjoint in the inner product `dot`. Returns the `want` smallest Ritz
/// pairs once they stop moving (relative change below `tol`) or after
/// `max_iter` steps.
pub fn lanczos_smallest(
    op: impl Fn(&[f64]) -> Vec<f64>,
    dot: impl Fn(&[f64], &[f64]) -> f64,
    start: &[f64],
    want: usize,
    max_iter: usize,
    tol: f64,
) -> RitzPairs {
    let norm0 = dot(start, start).sqrt();
    let mut basis: Vec<Vec<f64>> = vec![start.iter().map(|v| v / norm0).collect()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    let mut last = RitzPairs { values: vec![], vectors: vec![], residuals: vec![] };
    for it in 0..max_iter {
        let q = basis[it].clone();
        let mut w = op(&q);
        let a = dot(&w, &q);
        alpha.push(a);
        for (wi, qi) in w.iter_mut().zip(&q) {
            *wi -= a * qi;
        }
        if let (Some(b), Some(p)) = (beta.last(), prev.as_ref()) {
            for (wi, pi) in w.iter_mut().zip(p) {
                *wi -= b * pi;
            }
        }
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let b = dot(&w, &w).max(0.0).sqrt();
        let m = alpha.len();
        let check = m >= want.max(2) && (m % 5 == 0 || b < 1e-12 || it + 1 == max_iter);
        if check {
            let pairs = ritz(&alpha, &beta, &basis, b, want);
            let converged = !last.values.is_empty()
                && last.values.len() == pairs.values.len()
                && pairs
                    .values
                    .iter()
                    .zip(&last.values)
                    .all(|(x, y)| (x - y).abs() <= tol * x.abs().max(1e-3));
            last = pairs;
            if converged || b < 1e-12 {
                break;
            }
        }
        if b < 1e-12 {
            break;
        }
        beta.push(b);
        prev = Some(q);
        basis.push(w.iter().map(|v| v / b).collect());
    }
    if last.values.is_empty() {
        last = ritz(&alpha, &beta, &basis, 0.0, want);
    }
    last
}

fn ritz(alpha: &[f64], beta: &[f64], basis: &[Vec<f64>], b_last: f64, want: usize) -> RitzPairs {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let (vals, vecs) = sym_eigen(t);
    let k = want.min(m);
    let dim = basis[0].len();
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for j in 0..k {
        let mut x = vec![0.0; dim];
        for i in 0..m {
            let c = vecs[(i, j)];
            for (xv, bv) in x.iter_mut().zip(&basis[i]) {
                *xv += c * bv;
            }
        }
        vectors.push(x);
        residuals.push((b_last * vecs[(m - 1, j)]).abs());
    }
    RitzPairs { values: vals[..k].to_vec(), vectors, residuals }
}

/// Dense symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn sym_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Ascending eigenvalues only.
pub fn sym_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least-squares line fit; returns (slope, intercept).
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
