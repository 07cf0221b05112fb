//! Dense linear algebra at desk scale.
//!
//! Row-major `f64` matrices with the handful of factorizations the rest of
//! the crate needs: partial-pivot LU, a symmetric eigensolver (Householder
//! tridiagonalization + implicit-shift QL), a general real eigensolver
//! (balancing, orthogonal Hessenberg reduction, Francis double-shift QR),
//! and a scaling-and-squaring matrix exponential. Everything targets
//! matrices of order a few tens; no blocking, no sparsity.
//!
//! The eigensolvers follow the classic EISPACK/JAMA routines. They are
//! implemented here rather than pulled from a BLAS binding so that results
//! are deterministic and the crate stays `no_std`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut, Mul};

use crate::math;
use crate::{Error, Result};

const EPS: f64 = f64::EPSILON;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row vectors; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch { expected: c, got: row.len() });
            }
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        let mut out = self.clone();
        for a in &mut out.data {
            *a *= s;
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| math::max(m, math::abs(*x)))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = math::max(worst, math::abs(self[(i, j)] - self[(j, i)]));
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                let rhs_row = rhs.row(k);
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for j in 0..rhs.cols {
                    out_row[j] += aik * rhs_row[j];
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| math::max(m, math::abs(*x)))
}

/// Euclidean norm of the stacked vector `[a; b]`.
pub fn stacked_norm(a: &[f64], b: &[f64]) -> f64 {
    math::sqrt(dot(a, a) + dot(b, b))
}

// ---------------------------------------------------------------------------
// Complex values (for eigenvalues of real matrices)
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }

    pub fn abs(self) -> f64 {
        math::hypot(self.re, self.im)
    }

    pub fn abs_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// Total order by real part, then imaginary part. Inputs are finite.
pub fn sort_complex(values: &mut [Complex]) {
    values.sort_by(|a, b| {
        (a.re, a.im).partial_cmp(&(b.re, b.im)).expect("finite eigenvalues")
    });
}

// ---------------------------------------------------------------------------
// LU factorization
// ---------------------------------------------------------------------------

/// Partial-pivot LU of a square matrix.
///
/// `pivot_floor > 0` replaces pivots smaller in magnitude than the floor, so
/// that near-singular systems (inverse iteration) stay solvable.
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
    smallest_pivot: f64,
}

impl Lu {
    pub fn factor(a: &Matrix, pivot_floor: f64) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::NotSquare { rows: a.rows, cols: a.cols });
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut smallest_pivot = f64::INFINITY;
        for k in 0..n {
            let mut p = k;
            let mut best = math::abs(lu[(k, k)]);
            for i in (k + 1)..n {
                let mag = math::abs(lu[(i, k)]);
                if mag > best {
                    best = mag;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let mut pivot = lu[(k, k)];
            smallest_pivot = math::min(smallest_pivot, math::abs(pivot));
            if math::abs(pivot) < pivot_floor {
                pivot = if pivot < 0.0 { -pivot_floor } else { pivot_floor };
                lu[(k, k)] = pivot;
            }
            if pivot != 0.0 {
                for i in (k + 1)..n {
                    let m = lu[(i, k)] / pivot;
                    lu[(i, k)] = m;
                    for j in (k + 1)..n {
                        lu[(i, j)] -= m * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm, sign, smallest_pivot })
    }

    pub fn determinant(&self) -> f64 {
        let mut det = self.sign;
        for i in 0..self.lu.rows {
            det *= self.lu[(i, i)];
        }
        det
    }

    pub fn smallest_pivot(&self) -> f64 {
        self.smallest_pivot
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lu.rows;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for k in 0..n {
            for i in (k + 1)..n {
                x[i] -= self.lu[(i, k)] * x[k];
            }
        }
        for k in (0..n).rev() {
            let pivot = self.lu[(k, k)];
            if pivot == 0.0 {
                return Err(Error::NonFiniteInput("singular matrix in LU solve"));
            }
            x[k] /= pivot;
            for i in 0..k {
                x[i] -= self.lu[(i, k)] * x[k];
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.lu.rows;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e)?;
            e[j] = 0.0;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition (tred2 + tql2)
// ---------------------------------------------------------------------------

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// symmetric matrix.
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Symmetric eigensolver: Householder tridiagonalization followed by
/// implicit-shift QL iteration, after the EISPACK `tred2`/`tql2` pair.
pub fn sym_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows, cols: a.cols });
    }
    let n = a.rows;
    if n == 0 {
        return Ok(SymmetricEigen { values: Vec::new(), vectors: Matrix::zeros(0, 0) });
    }
    let mut v = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e)?;
    Ok(SymmetricEigen { values: d, vectors: v })
}

fn tred2(n: usize, v: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += math::abs(*item);
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let f = d[i - 1];
            let mut g = math::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }
            for j in 0..i {
                let f = d[j];
                v[(j, i)] = f;
                let mut g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    // Accumulate transformations.
    for i in 0..(n - 1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tql2(n: usize, v: &mut Matrix, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = math::max(tst1, math::abs(d[l]) + math::abs(e[l]));
        let mut m = l;
        while m < n {
            if math::abs(e[m]) <= EPS * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 50 {
                    return Err(Error::EigenNoConvergence { size: n });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = math::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                // Implicit QL transformation.
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = math::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if math::abs(e[l]) <= EPS * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Sort ascending, carrying eigenvectors along.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &val) in d.iter().enumerate().skip(i + 1) {
            if val < p {
                k = j;
                p = val;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for j in 0..n {
                let tmp = v[(j, i)];
                v[(j, i)] = v[(j, k)];
                v[(j, k)] = tmp;
            }
        }
    }
    Ok(())
}

/// Induced 2-norm via the symmetric eigenvalues of `AᵀA`.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    let gram = &a.transpose() * a;
    let eig = sym_eigen(&gram)?;
    let lambda_max = eig.values.last().copied().unwrap_or(0.0);
    Ok(math::sqrt(math::max(lambda_max, 0.0)))
}

// ---------------------------------------------------------------------------
// General real eigenvalues (balance + Hessenberg + Francis QR)
// ---------------------------------------------------------------------------

/// Eigenvalues of a general real square matrix, unsorted.
///
/// Parlett-Reinsch balancing, orthogonal Hessenberg reduction, then Francis
/// double-shift QR after the JAMA `hqr2` routine (eigenvalues only).
pub fn general_eigenvalues(a: &Matrix) -> Result<Vec<Complex>> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows, cols: a.cols });
    }
    if !a.is_finite() {
        return Err(Error::NonFiniteInput("eigenvalue input matrix"));
    }
    let n = a.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hqr_eigenvalues(&mut h)
}

/// Parlett-Reinsch balancing: diagonal similarity scaling so row and column
/// norms match. Leaves eigenvalues unchanged.
fn balance(a: &mut Matrix) {
    let n = a.rows;
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += math::abs(a[(j, i)]);
                    r += math::abs(a[(i, j)]);
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut f = 1.0;
                let s = c + r;
                let mut c = c;
                let mut g = r / RADIX;
                while c < g {
                    f *= RADIX;
                    c *= SQRDX;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= SQRDX;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Orthogonal reduction to upper Hessenberg form (JAMA `orthes`,
/// eigenvalue-only variant).
fn hessenberg(h: &mut Matrix) {
    let n = h.rows;
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let mut scale = 0.0;
        for i in m..=high {
            scale += math::abs(h[(i, m - 1)]);
        }
        if scale != 0.0 {
            let mut hsum = 0.0;
            for i in (m..=high).rev() {
                ort[i] = h[(i, m - 1)] / scale;
                hsum += ort[i] * ort[i];
            }
            let mut g = math::sqrt(hsum);
            if ort[m] > 0.0 {
                g = -g;
            }
            hsum -= ort[m] * g;
            ort[m] -= g;

            for j in m..n {
                let mut f = 0.0;
                for i in (m..=high).rev() {
                    f += ort[i] * h[(i, j)];
                }
                f /= hsum;
                for i in m..=high {
                    h[(i, j)] -= f * ort[i];
                }
            }
            for i in 0..=high {
                let mut f = 0.0;
                for j in (m..=high).rev() {
                    f += ort[j] * h[(i, j)];
                }
                f /= hsum;
                for j in m..=high {
                    h[(i, j)] -= f * ort[j];
                }
            }
            h[(m, m - 1)] = scale * g;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
fn hqr_eigenvalues(h: &mut Matrix) -> Result<Vec<Complex>> {
    let nn = h.rows;
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += math::abs(h[(i, j)]);
        }
    }
    if norm == 0.0 {
        return Ok(vec![Complex::new(0.0, 0.0); nn]);
    }

    let low: isize = 0;
    let mut n = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0;
    // p, q, r carry the shift vector across branches of one sweep.
    let (mut p, mut q, mut r): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let (mut w, mut x, mut y): (f64, f64, f64);
    let (mut s, mut z): (f64, f64);

    let at = |h: &Matrix, i: isize, j: isize| h[(i as usize, j as usize)];

    while n >= low {
        // Look for a single small subdiagonal element.
        let mut l = n;
        while l > low {
            let mut gap = math::abs(at(h, l - 1, l - 1)) + math::abs(at(h, l, l));
            if gap == 0.0 {
                gap = norm;
            }
            if math::abs(at(h, l, l - 1)) < EPS * gap {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            let un = n as usize;
            h[(un, un)] += exshift;
            d[un] = h[(un, un)];
            e[un] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found.
            let un = n as usize;
            w = at(h, n, n - 1) * at(h, n - 1, n);
            p = (at(h, n - 1, n - 1) - at(h, n, n)) / 2.0;
            q = p * p + w;
            z = math::sqrt(math::abs(q));
            h[(un, un)] += exshift;
            h[(un - 1, un - 1)] += exshift;
            x = h[(un, un)];
            if q >= 0.0 {
                // Real pair.
                z = if p >= 0.0 { p + z } else { p - z };
                d[un - 1] = x + z;
                d[un] = d[un - 1];
                if z != 0.0 {
                    d[un] = x - w / z;
                }
                e[un - 1] = 0.0;
                e[un] = 0.0;
            } else {
                // Complex pair.
                d[un - 1] = x + p;
                d[un] = x + p;
                e[un - 1] = z;
                e[un] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet: form shift.
            x = at(h, n, n);
            y = 0.0;
            w = 0.0;
            if l < n {
                y = at(h, n - 1, n - 1);
                w = at(h, n, n - 1) * at(h, n - 1, n);
            }

            if iter == 10 {
                exshift += x;
                for i in low..=n {
                    let ui = i as usize;
                    h[(ui, ui)] -= x;
                }
                s = math::abs(at(h, n, n - 1)) + math::abs(at(h, n - 1, n - 2));
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = math::sqrt(s);
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=n {
                        let ui = i as usize;
                        h[(ui, ui)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = 0.964;
                    w = 0.964;
                }
            }

            iter += 1;
            if iter > 60 {
                return Err(Error::EigenNoConvergence { size: nn });
            }

            // Look for two consecutive small subdiagonal elements.
            let mut m = n - 2;
            while m >= l {
                z = at(h, m, m);
                r = x - z;
                s = y - z;
                p = (r * s - w) / at(h, m + 1, m) + at(h, m, m + 1);
                q = at(h, m + 1, m + 1) - z - r - s;
                r = at(h, m + 2, m + 1);
                s = math::abs(p) + math::abs(q) + math::abs(r);
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if math::abs(at(h, m, m - 1)) * (math::abs(q) + math::abs(r))
                    < EPS
                        * (math::abs(p)
                            * (math::abs(at(h, m - 1, m - 1))
                                + math::abs(z)
                                + math::abs(at(h, m + 1, m + 1))))
                {
                    break;
                }
                m -= 1;
            }

            let mut i = m + 2;
            while i <= n {
                let ui = i as usize;
                h[(ui, ui - 2)] = 0.0;
                if i > m + 2 {
                    h[(ui, ui - 3)] = 0.0;
                }
                i += 1;
            }

            // Double QR step on rows l..=n and columns m..=n.
            let mut k = m;
            while k < n {
                let notlast = k != n - 1;
                let uk = k as usize;
                if k != m {
                    p = at(h, k, k - 1);
                    q = at(h, k + 1, k - 1);
                    r = if notlast { at(h, k + 2, k - 1) } else { 0.0 };
                    x = math::abs(p) + math::abs(q) + math::abs(r);
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = math::sqrt(p * p + q * q + r * r);
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(uk, uk - 1)] = -s * x;
                    } else if l != m {
                        h[(uk, uk - 1)] = -h[(uk, uk - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    // Row modification.
                    for j in uk..nn {
                        let mut pp = h[(uk, j)] + q * h[(uk + 1, j)];
                        if notlast {
                            pp += r * h[(uk + 2, j)];
                            h[(uk + 2, j)] -= pp * z;
                        }
                        h[(uk, j)] -= pp * x;
                        h[(uk + 1, j)] -= pp * y;
                    }

                    // Column modification.
                    let imax = if n < k + 3 { n } else { k + 3 } as usize;
                    for i in 0..=imax {
                        let mut pp = x * h[(i, uk)] + y * h[(i, uk + 1)];
                        if notlast {
                            pp += z * h[(i, uk + 2)];
                            h[(i, uk + 2)] -= pp * r;
                        }
                        h[(i, uk)] -= pp;
                        h[(i, uk + 1)] -= pp * q;
                    }
                }
                k += 1;
            }
        }
    }

    Ok(d.into_iter().zip(e).map(|(re, im)| Complex::new(re, im)).collect())
}

/// Residual `‖(A - μI)v‖` for a unit vector `v` obtained by two steps of
/// inverse iteration. Complex shifts use the stacked real form of `A - μI`.
pub fn eigen_residual(a: &Matrix, mu: Complex) -> Result<f64> {
    let n = a.rows;
    let floor = EPS * math::max(a.frobenius_norm(), 1.0);
    // Deterministic, structureless start vector.
    let seed = |i: usize| math::sin(i as f64 + 1.0) + 0.5;

    if mu.im == 0.0 {
        let mut m = a.clone();
        for i in 0..n {
            m[(i, i)] -= mu.re;
        }
        let lu = Lu::factor(&m, floor)?;
        let mut v: Vec<f64> = (0..n).map(seed).collect();
        normalize(&mut v);
        for _ in 0..2 {
            v = lu.solve(&v)?;
            normalize(&mut v);
        }
        Ok(norm(&m.mul_vec(&v)))
    } else {
        // [[A - aI, bI], [-bI, A - aI]] acting on [Re v; Im v].
        let mut m = Matrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = a[(i, j)];
                m[(n + i, n + j)] = a[(i, j)];
            }
            m[(i, i)] -= mu.re;
            m[(n + i, n + i)] -= mu.re;
            m[(i, n + i)] = mu.im;
            m[(n + i, i)] = -mu.im;
        }
        let lu = Lu::factor(&m, floor)?;
        let mut v: Vec<f64> = (0..2 * n).map(seed).collect();
        normalize(&mut v);
        for _ in 0..2 {
            v = lu.solve(&v)?;
            normalize(&mut v);
        }
        Ok(norm(&m.mul_vec(&v)))
    }
}

fn normalize(v: &mut [f64]) {
    let nrm = norm(v);
    if nrm > 0.0 {
        for x in v {
            *x /= nrm;
        }
    }
}

// ---------------------------------------------------------------------------
// Matrix exponential
// ---------------------------------------------------------------------------

/// `e^A` by scaling and squaring with a Taylor series on the scaled matrix.
pub fn expm(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::NotSquare { rows: a.rows, cols: a.cols });
    }
    if !a.is_finite() {
        return Err(Error::NonFiniteInput("matrix exponential input"));
    }
    let n = a.rows;
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    // Infinity norm controls the scaling.
    let mut inf_norm = 0.0f64;
    for i in 0..n {
        let row_sum: f64 = a.row(i).iter().map(|x| math::abs(*x)).sum();
        inf_norm = math::max(inf_norm, row_sum);
    }
    let mut squarings = 0u32;
    if inf_norm > 0.25 {
        squarings = (math::ln(inf_norm / 0.25) / core::f64::consts::LN_2) as u32 + 1;
    }
    let b = a.scaled(math::powi(0.5, squarings as i32));

    let mut sum = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=64u32 {
        term = (&term * &b).scaled(1.0 / k as f64);
        sum = sum.add(&term);
        if term.max_abs() <= 1e-18 * sum.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}
