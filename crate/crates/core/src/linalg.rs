//! Small dense complex linear algebra.
//!
//! Everything here works on desk-scale matrices (side well below 100), so the
//! routines favour robustness over speed: Cholesky for Hermitian systems,
//! one-sided Jacobi for singular values and a cyclic Jacobi sweep (on the real
//! symmetric embedding) for Hermitian eigenpairs.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::LinalgError;

pub type C64 = Complex64;

/// Pivot floor for Cholesky factorisation.
pub const PIVOT_FLOOR: f64 = 1e-14;
/// Default relative tolerance used by [`matrix_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

const HERMITIAN_TOL: f64 = 1e-12;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex vector. Used both for channel rows and beamforming columns;
/// the orientation is implied by the operation.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CVector(Vec<C64>);

impl CVector {
    pub fn zeros(len: usize) -> Self {
        CVector(vec![C64::new(0.0, 0.0); len])
    }

    pub fn from_vec(entries: Vec<C64>) -> Self {
        CVector(entries)
    }

    pub fn from_real(entries: &[f64]) -> Self {
        CVector(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&self, factor: f64) -> CVector {
        CVector(self.0.iter().map(|z| z * factor).collect())
    }

    pub fn scale_complex(&self, factor: C64) -> CVector {
        CVector(self.0.iter().map(|z| z * factor).collect())
    }

    pub fn conj(&self) -> CVector {
        CVector(self.0.iter().map(|z| z.conj()).collect())
    }

    /// Unconjugated product `self · other`, i.e. a row times a column.
    pub fn dot(&self, other: &CVector) -> C64 {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    /// Hermitian inner product `selfᴴ · other`.
    pub fn inner(&self, other: &CVector) -> C64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn add(&self, other: &CVector) -> CVector {
        CVector(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &CVector) -> CVector {
        CVector(self.0.iter().zip(other.0.iter()).map(|(a, b)| a - b).collect())
    }

    /// Returns the unit vector in the direction of `self`, or `None` for the
    /// zero vector.
    pub fn normalized(&self) -> Option<CVector> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self.scale(1.0 / n))
        } else {
            None
        }
    }

    /// Concatenates several vectors into one.
    pub fn stack(parts: &[CVector]) -> CVector {
        CVector(parts.iter().flat_map(|p| p.0.iter().copied()).collect())
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl FromIterator<C64> for CVector {
    fn from_iter<I: IntoIterator<Item = C64>>(iter: I) -> Self {
        CVector(iter.into_iter().collect())
    }
}

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|c| {
                    let z = self[(r, c)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Stacks row vectors into a matrix. All rows must share a length.
    pub fn from_rows(rows: &[CVector]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r.as_slice());
        }
        Ok(CMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// `v vᴴ` for a column vector `v`.
    pub fn outer(v: &CVector) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |r, c| v[r] * v[c].conj())
    }

    /// `hᴴ h` for a row vector `h`.
    pub fn gram_of_row(h: &CVector) -> Self {
        let n = h.len();
        Self::from_fn(n, n, |r, c| h[r].conj() * h[c])
    }

    /// Hermitian constructor: verifies `A = Aᴴ` within 1e-12.
    pub fn hermitian(rows: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        let m = Self::from_row_major(rows, rows, data)?;
        if !m.is_hermitian(HERMITIAN_TOL) {
            return Err(LinalgError::NotHermitian);
        }
        Ok(m)
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> CVector {
        CVector::from_vec(self.data[r * self.cols..(r + 1) * self.cols].to_vec())
    }

    pub fn col(&self, c: usize) -> CVector {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.frobenius_norm().max(1.0);
        for r in 0..self.rows {
            for c in r..self.cols {
                if (self[(r, c)] - self[(c, r)].conj()).norm() > tol * scale {
                    return false;
                }
            }
        }
        true
    }

    pub fn adjoint(&self) -> CMatrix {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other[(k, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &CVector) -> Result<CVector, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v.iter())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Row vector times matrix: `h · self`.
    pub fn row_mul(&self, h: &CVector) -> Result<CVector, LinalgError> {
        if self.rows != h.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows,
                found: h.len(),
            });
        }
        let mut out = CVector::zeros(self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c] += h[r] * self[(r, c)];
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix, LinalgError> {
        self.add(&other.scale(-1.0))
    }

    /// In-place `self += factor · other`.
    pub fn add_scaled(&mut self, other: &CMatrix, factor: f64) {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * factor;
        }
    }

    pub fn scale(&self, factor: f64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `vᴴ · self · v`, real part (exact for Hermitian `self`).
    pub fn quad_form(&self, v: &CVector) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..self.rows {
            let mut row = C64::new(0.0, 0.0);
            for c in 0..self.cols {
                row += self[(r, c)] * v[c];
            }
            acc += v[r].conj() * row;
        }
        acc.re
    }

    /// Real part of `tr(self · other)` for square matrices of equal size.
    pub fn trace_product(&self, other: &CMatrix) -> f64 {
        let n = self.rows;
        let mut acc = 0.0;
        for r in 0..n {
            for c in 0..n {
                acc += (self[(r, c)] * other[(c, r)]).re;
            }
        }
        acc
    }

    /// Extracts the square diagonal block starting at `offset` with side `size`.
    pub fn diagonal_block(&self, offset: usize, size: usize) -> CMatrix {
        Self::from_fn(size, size, |r, c| self[(offset + r, offset + c)])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Upper-triangular Cholesky factor `U` with `Uᴴ U = A` and a real, positive
/// diagonal.
pub fn cholesky_upper(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.rows();
    let mut u = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= u[(k, j)].norm_sqr();
        }
        if !(d > PIVOT_FLOOR) {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
        }
        let ujj = d.sqrt();
        u[(j, j)] = C64::new(ujj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(j, i)];
            for k in 0..j {
                s -= u[(k, j)].conj() * u[(k, i)];
            }
            u[(j, i)] = s / ujj;
        }
    }
    Ok(u)
}

/// Solves `U x = b` for upper-triangular `U`.
pub fn solve_upper(u: &CMatrix, b: &CVector) -> CVector {
    let n = u.rows();
    let mut x = CVector::zeros(n);
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= u[(i, k)] * x[k];
        }
        x[i] = s / u[(i, i)];
    }
    x
}

/// Solves `Uᴴ y = b` for upper-triangular `U`.
pub fn solve_upper_adjoint(u: &CMatrix, b: &CVector) -> CVector {
    let n = u.rows();
    let mut y = CVector::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= u[(k, i)].conj() * y[k];
        }
        y[i] = s / u[(i, i)].conj();
    }
    y
}

/// Row vector times the inverse of an upper-triangular matrix: returns `x`
/// with `x U = h`.
pub fn row_times_upper_inverse(h: &CVector, u: &CMatrix) -> CVector {
    let n = u.rows();
    let mut x = CVector::zeros(n);
    for j in 0..n {
        let mut s = h[j];
        for k in 0..j {
            s -= x[k] * u[(k, j)];
        }
        x[j] = s / u[(j, j)];
    }
    x
}

/// Solves `A x = b` for Hermitian positive-definite `A`.
pub fn hermitian_solve(a: &CMatrix, b: &CVector) -> Result<CVector, LinalgError> {
    if a.rows() != b.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows(),
            found: b.len(),
        });
    }
    let u = cholesky_upper(a)?;
    let y = solve_upper_adjoint(&u, b);
    Ok(solve_upper(&u, &y))
}

/// Singular values (descending) by one-sided Jacobi on the narrower side.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    // Work on the orientation with fewer columns.
    let work = if a.rows() >= a.cols() { a.clone() } else { a.adjoint() };
    let m = work.rows();
    let n = work.cols();
    let mut cols: Vec<Vec<C64>> = (0..n).map(|c| work.col(c).into_vec()).collect();

    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[p]
                    .iter()
                    .zip(&cols[q])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let xp = cols[p][r];
                    let xq = cols[q][r] * phase.conj();
                    cols[p][r] = xp * c - xq * s;
                    cols[q][r] = (xp * s + xq * c) * phase;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Number of singular values above `tol` times the largest one.
pub fn matrix_rank(a: &CMatrix, tol: f64) -> usize {
    let sv = singular_values(a);
    let Some(&top) = sv.first() else {
        return 0;
    };
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top).count()
}

/// Full eigen-decomposition of a Hermitian matrix. Eigenvalues are returned in
/// descending order with unit-norm eigenvectors.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, Vec<CVector>), LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.rows();
    // Real symmetric embedding [[Re, -Im], [Im, Re]]; each eigenvalue doubles.
    let m = 2 * n;
    let mut s = vec![0.0; m * m];
    for r in 0..n {
        for c in 0..n {
            let z = a[(r, c)];
            s[r * m + c] = z.re;
            s[r * m + c + n] = -z.im;
            s[(r + n) * m + c] = z.im;
            s[(r + n) * m + c + n] = z.re;
        }
    }
    let (vals, vecs) = symmetric_eigen(&mut s, m);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut out_vals = Vec::with_capacity(n);
    let mut out_vecs: Vec<CVector> = Vec::with_capacity(n);
    for &k in &order {
        if out_vals.len() == n {
            break;
        }
        let z: CVector = (0..n).map(|r| C64::new(vecs[r * m + k], vecs[(r + n) * m + k])).collect();
        // Skip the partner copy `i z` of an eigenvector already taken.
        let duplicate = out_vecs
            .iter()
            .zip(&out_vals)
            .any(|(v, &lv): (&CVector, &f64)| (lv - vals[k]).abs() <= 1e-10 * (1.0 + lv.abs()) && v.inner(&z).norm() > 0.5);
        if duplicate {
            continue;
        }
        let z = z.normalized().unwrap_or_else(|| CVector::zeros(n));
        out_vals.push(vals[k]);
        out_vecs.push(z);
    }
    Ok((out_vals, out_vecs))
}

/// Cyclic Jacobi for a real symmetric matrix stored row-major. Returns the
/// eigenvalues and the eigenvector matrix (columns).
fn symmetric_eigen(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[r * n + c] * a[r * n + c])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// Dominant eigenpair of a Hermitian PSD matrix.
pub fn dominant_eigenvector(x: &CMatrix) -> Result<(CVector, f64), LinalgError> {
    let (vals, vecs) = hermitian_eigen(x)?;
    match (vals.first(), vecs.into_iter().next()) {
        (Some(&lambda), Some(v)) if lambda > 0.0 => Ok((v, lambda)),
        _ => Err(LinalgError::ZeroMatrix),
    }
}

/// Single-antenna joint-decoding capacity of the group `hD` while treating
/// `hB` as Gaussian noise, in bits.
///
/// With a scalar receiver `det(I + a v vᴴ) = 1 + a‖v‖²`, so the log-det form
/// collapses to `log2(1 + Σ|hD|² / (n0 + Σ|hB|²))`.
pub fn logdet_capacity(h_decode: &[C64], h_suppress: &[C64], n0: f64) -> f64 {
    let signal: f64 = h_decode.iter().map(|z| z.norm_sqr()).sum();
    if signal == 0.0 {
        return 0.0;
    }
    let noise: f64 = n0 + h_suppress.iter().map(|z| z.norm_sqr()).sum::<f64>();
    (1.0 + signal / noise).log2()
}

/// Solves a dense real system `A x = b` by Gaussian elimination with partial
/// pivoting. `a` is row-major `n × n`. Returns `None` when singular.
pub fn solve_real(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    let scale = m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return if n == 0 { Some(vec![]) } else { None };
    }
    for col in 0..n {
        let (piv, pval) = (col..n)
            .map(|r| (r, m[r * n + col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pval <= 1e-14 * scale {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(col * n + c, piv * n + c);
            }
            rhs.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                m[r * n + c] -= f * m[col * n + c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut s = rhs[r];
        for c in (r + 1)..n {
            s -= m[r * n + c] * x[c];
        }
        x[r] = s / m[r * n + r];
    }
    Some(x)
}

/// Solves a real symmetric positive-definite system in place via Cholesky.
/// Returns `None` if the matrix is not numerically positive definite.
pub(crate) fn solve_spd(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let b = random_matrix(rng, n, n);
        b.adjoint().matmul(&b).unwrap().add(&CMatrix::identity(n)).unwrap()
    }

    #[test]
    fn cholesky_identity_and_diagonal() {
        let u = cholesky_upper(&CMatrix::identity(3)).unwrap();
        assert_eq!(u, CMatrix::identity(3));
        let u = cholesky_upper(&CMatrix::diag_real(&[4.0, 9.0])).unwrap();
        assert_eq!(u, CMatrix::diag_real(&[2.0, 3.0]));
    }

    #[test]
    fn cholesky_reconstructs_random_pd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..7 {
            let a = random_pd(&mut rng, n);
            let u = cholesky_upper(&a).unwrap();
            for r in 0..n {
                for c in 0..r {
                    assert_eq!(u[(r, c)], c64(0.0, 0.0));
                }
                assert!(u[(r, r)].im == 0.0 && u[(r, r)].re > 0.0);
            }
            let err = u.adjoint().matmul(&u).unwrap().sub(&a).unwrap().frobenius_norm();
            assert!(err < 1e-10, "n={n} err={err}");
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = CMatrix::diag_real(&[1.0, -1.0]);
        assert!(matches!(cholesky_upper(&a), Err(LinalgError::NotPositiveDefinite { pivot: 1, .. })));
        let zero = CMatrix::zeros(2, 2);
        assert!(cholesky_upper(&zero).is_err());
    }

    #[test]
    fn hermitian_solve_cases() {
        let b = CVector::from_real(&[1.0, -2.0, 3.0]);
        assert_eq!(hermitian_solve(&CMatrix::identity(3), &b).unwrap(), b);
        let x = hermitian_solve(&CMatrix::diag_real(&[2.0, 4.0]), &CVector::from_real(&[2.0, 4.0])).unwrap();
        assert!((x[0] - c64(1.0, 0.0)).norm() < 1e-15 && (x[1] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(
            hermitian_solve(&CMatrix::identity(2), &b),
            Err(LinalgError::DimensionMismatch { .. })
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..8 {
            let a = random_pd(&mut rng, n);
            let b: CVector = (0..n).map(|_| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let x = hermitian_solve(&a, &b).unwrap();
            let resid = a.mul_vec(&x).unwrap().sub(&b).norm();
            assert!(resid <= 1e-10 * b.norm());
        }
    }

    #[test]
    fn triangular_helpers_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_pd(&mut rng, 4);
        let u = cholesky_upper(&a).unwrap();
        let h: CVector = (0..4).map(|_| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let x = row_times_upper_inverse(&h, &u);
        assert!(u.row_mul(&x).unwrap().sub(&h).norm() < 1e-12);
        let y = solve_upper(&u, &h);
        assert!(u.mul_vec(&y).unwrap().sub(&h).norm() < 1e-12);
    }

    #[test]
    fn rank_cases() {
        assert_eq!(matrix_rank(&CMatrix::identity(3), 1e-9), 3);
        let v = CVector::from_vec(vec![c64(1.0, 2.0), c64(-0.5, 0.0), c64(0.0, 3.0)]);
        assert_eq!(matrix_rank(&CMatrix::outer(&v), 1e-9), 1);
        assert_eq!(matrix_rank(&CMatrix::zeros(3, 2), 1e-9), 0);

        // Generic 5x4: independent check through the Gram determinant.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 5, 4);
        assert_eq!(matrix_rank(&a, 1e-9), 4);
        let gram = a.adjoint().matmul(&a).unwrap();
        let u = cholesky_upper(&gram).unwrap();
        let det: f64 = (0..4).map(|i| u[(i, i)].re.powi(2)).product();
        assert!(det > 1e-6);
        // Wide orientation goes through the adjoint path.
        assert_eq!(matrix_rank(&a.adjoint(), 1e-9), 4);
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_matrix(&mut rng, 6, 3);
        let sv = singular_values(&a);
        let (ev, _) = hermitian_eigen(&a.adjoint().matmul(&a).unwrap()).unwrap();
        for (s, e) in sv.iter().zip(&ev) {
            assert!((s * s - e).abs() < 1e-10 * ev[0]);
        }
    }

    #[test]
    fn dominant_eigen_cases() {
        let (v, l) = dominant_eigenvector(&CMatrix::diag_real(&[3.0, 1.0])).unwrap();
        assert!((l - 3.0).abs() < 1e-12);
        assert!((v[0].norm() - 1.0).abs() < 1e-12 && v[1].norm() < 1e-12);

        let w = CVector::from_vec(vec![c64(1.0, 1.0), c64(0.0, -2.0), c64(0.5, 0.0)]);
        let (v, l) = dominant_eigenvector(&CMatrix::outer(&w)).unwrap();
        assert!((l - w.norm_sqr()).abs() < 1e-10);
        assert!((v.inner(&w).norm() - w.norm()).abs() < 1e-10);

        assert!(matches!(dominant_eigenvector(&CMatrix::zeros(2, 2)), Err(LinalgError::ZeroMatrix)));
    }

    #[test]
    fn dominant_eigen_beats_random_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let b = random_matrix(&mut rng, 5, 5);
        let x = b.adjoint().matmul(&b).unwrap();
        let (v, l) = dominant_eigenvector(&x).unwrap();
        let resid = x.mul_vec(&v).unwrap().sub(&v.scale(l)).norm();
        assert!(resid <= 1e-8 * l);
        for _ in 0..10_000 {
            let z: CVector = (0..5).map(|_| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let z = z.normalized().unwrap();
            assert!(x.quad_form(&z) <= l * (1.0 + 1e-12));
        }
    }

    #[test]
    fn logdet_capacity_cases() {
        let one = c64(1.0, 0.0);
        assert!((logdet_capacity(&[one], &[], 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(logdet_capacity(&[], &[one, one], 1.0), 0.0);
        assert!((logdet_capacity(&[one, one], &[one], 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn solve_real_cases() {
        let x = solve_real(&[2.0, 1.0, 5.0, 3.0], &[4.0, 11.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
        assert!(solve_real(&[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0]).is_none());
        let x = solve_spd(&[4.0, 2.0, 2.0, 3.0], &[2.0, 1.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-12);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-12);
    }
}
