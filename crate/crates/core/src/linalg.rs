//! Dense linear-algebra kernels.
//!
//! Everything here is deterministic and allocation-explicit. Matrices are
//! stored row-major; [`SymmetricMatrix`] keeps full storage but is only ever
//! built by mirroring one triangle, so `s[(i, j)] == s[(j, i)]` holds bitwise.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Pivots in `(-PSD_PIVOT_TOL, 0]` are clamped to zero by [`cholesky`].
pub const PSD_PIVOT_TOL: f64 = 1e-12;
/// Column norms below this are treated as zero by [`normalize_columns`].
pub const ZERO_COLUMN_TOL: f64 = 1e-14;
/// Householder R-diagonal floor used by [`orthonormal_complement`].
pub const RANK_TOL: f64 = 1e-10;

const MAX_BISECTION_STEPS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data. Rejects empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dims(format!("matrix shape {rows}x{cols} is empty")));
        }
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::dims("ragged rows"));
        }
        Self::new(r, c, rows.concat())
    }

    /// Zero matrix. Unlike [`Matrix::new`] this allows a zero dimension,
    /// which is how an empty complement (`k = 0`) is represented.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// A single-column matrix.
    pub fn column_vector(v: &[f64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dims(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::dims(format!(
                "vector of length {} does not match {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `selfᵀ * v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::dims(format!(
                "vector of length {} does not match {} rows",
                v.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    /// `[self other]`, column-wise concatenation.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::dims("hstack requires equal row counts"));
        }
        let cols = self.cols + other.cols;
        Ok(Matrix::from_fn(self.rows, cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        }))
    }

    pub fn swap_columns(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims("shape mismatch in subtraction"));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Square symmetric matrix. Only the upper triangle is ever read from the
/// input when constructing; the lower triangle is its mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    inner: Matrix,
}

impl SymmetricMatrix {
    /// Builds from `f(i, j)` evaluated for `i <= j` only.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut inner = Matrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                inner[(i, j)] = v;
                inner[(j, i)] = v;
            }
        }
        Self { inner }
    }

    /// Takes the upper triangle of a square matrix as authoritative.
    pub fn from_upper(m: &Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::dims("symmetric matrix must be square"));
        }
        Ok(Self::from_upper_fn(m.rows(), |i, j| m[(i, j)]))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: Matrix::identity(dim),
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self {
            inner: Matrix::from_diag(diag),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.inner[(i, i)]).collect()
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.inner.matvec(v)
    }

    /// `P_Fᵀ S P_F` for a `2p x 2p` matrix, where `P_F` swaps coordinates
    /// `i` and `i + p` for every `i` in `swap`.
    pub fn swap_pairs(&self, swap: &[usize]) -> SymmetricMatrix {
        let perm = pair_swap_permutation(self.dim(), swap);
        SymmetricMatrix::from_upper_fn(self.dim(), |i, j| self.inner[(perm[i], perm[j])])
    }
}

impl Index<(usize, usize)> for SymmetricMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.inner[idx]
    }
}

/// Index map of the involution swapping `i <-> i + dim/2` for `i` in `swap`.
pub fn pair_swap_permutation(dim: usize, swap: &[usize]) -> Vec<usize> {
    let p = dim / 2;
    let mut perm: Vec<usize> = (0..dim).collect();
    for &i in swap {
        perm[i] = i + p;
        perm[i + p] = i;
    }
    perm
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales every column to unit Euclidean norm.
pub fn normalize_columns(m: &Matrix) -> Result<Matrix> {
    let mut norms = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        for (n, v) in norms.iter_mut().zip(m.row(i)) {
            *n += v * v;
        }
    }
    for (j, n) in norms.iter_mut().enumerate() {
        *n = n.sqrt();
        if *n < ZERO_COLUMN_TOL {
            return Err(Error::ZeroColumn(j));
        }
    }
    Ok(Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] / norms[j]))
}

/// `mᵀm`, computed on the upper triangle and mirrored.
pub fn gram(m: &Matrix) -> SymmetricMatrix {
    let p = m.cols();
    let mut acc = Matrix::zeros(p, p);
    for r in 0..m.rows() {
        let row = m.row(r);
        for i in 0..p {
            let a = row[i];
            if a == 0.0 {
                continue;
            }
            for j in i..p {
                acc[(i, j)] += a * row[j];
            }
        }
    }
    SymmetricMatrix::from_upper_fn(p, |i, j| acc[(i, j)])
}

/// Householder reduction to tridiagonal form. Returns `(diag, offdiag)` with
/// `offdiag.len() == dim - 1`.
fn tridiagonalize(s: &SymmetricMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = s.dim();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| s.as_matrix().row(i).to_vec()).collect();
    let mut off = vec![0.0; n.saturating_sub(1)];
    for k in 0..n.saturating_sub(2) {
        let x: Vec<f64> = (k + 1..n).map(|i| a[i][k]).collect();
        let xnorm = norm2(&x);
        if xnorm == 0.0 {
            off[k] = 0.0;
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = norm2(&v);
        if vnorm == 0.0 {
            off[k] = alpha;
            continue;
        }
        v.iter_mut().for_each(|e| *e /= vnorm);

        let m = n - k - 1;
        // p = A_sub v, w = p - (vᵀp) v, A_sub -= 2 (v wᵀ + w vᵀ)
        let mut p = vec![0.0; m];
        for (r, pr) in p.iter_mut().enumerate() {
            *pr = dot(&a[k + 1 + r][k + 1..], &v);
        }
        let vp = dot(&v, &p);
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - vp * vi).collect();
        for r in 0..m {
            for c in 0..m {
                a[k + 1 + r][k + 1 + c] -= 2.0 * (v[r] * w[c] + w[r] * v[c]);
            }
        }
        off[k] = alpha;
        for r in k + 1..n {
            a[r][k] = 0.0;
            a[k][r] = 0.0;
        }
        a[k + 1][k] = alpha;
        a[k][k + 1] = alpha;
    }
    if n >= 2 {
        off[n - 2] = a[n - 1][n - 2];
    }
    let diag = (0..n).map(|i| a[i][i]).collect();
    (diag, off)
}

/// Number of eigenvalues of the tridiagonal `(d, e)` strictly below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of a symmetric matrix (tridiagonalization followed by
/// Sturm-sequence bisection).
pub fn min_eigenvalue(s: &SymmetricMatrix) -> Result<f64> {
    let n = s.dim();
    if n == 0 {
        return Err(Error::dims("min_eigenvalue of an empty matrix"));
    }
    if n == 1 {
        return Ok(s[(0, 0)]);
    }
    let (d, e) = tridiagonalize(s);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let pivmin = f64::MIN_POSITIVE.max(scale * f64::EPSILON * f64::EPSILON);
    let tol = 2.0 * f64::EPSILON * scale;
    // widen so that lo is strictly below the spectrum
    lo -= tol;
    hi += tol;
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if sturm_count(&d, &e, mid, pivmin) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::ConvergenceFailure {
        what: "eigenvalue bisection",
        residual: hi - lo,
    })
}

/// Lower-triangular `L` with `L Lᵀ = s`, tolerating positive semidefinite
/// input: pivots in `(-PSD_PIVOT_TOL, 0]` produce a zero column.
pub fn cholesky(s: &SymmetricMatrix) -> Result<Matrix> {
    cholesky_with_floor(s, false)
}

fn cholesky_with_floor(s: &SymmetricMatrix, strict: bool) -> Result<Matrix> {
    let n = s.dim();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let pivot = s[(j, j)] - l.row(j)[..j].iter().map(|v| v * v).sum::<f64>();
        if strict {
            if pivot <= PSD_PIVOT_TOL {
                return Err(Error::not_psd(j));
            }
        } else if pivot < -PSD_PIVOT_TOL {
            return Err(Error::not_psd(j));
        }
        if pivot <= 0.0 {
            continue;
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let acc = s[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = acc / ljj;
        }
    }
    Ok(l)
}

/// Cholesky with diagonal pivoting for positive semidefinite `s`: returns
/// `F = P L` with `F Fᵀ = s`, `L` lower triangular and `P` the pivot
/// permutation. Taking the largest remaining diagonal first pushes the
/// near-zero pivots of a rank-deficient matrix to the end, where their
/// rounding error stays at the scale of `‖s‖ ε` instead of growing with the
/// conditioning of the leading block. Same clamp rule as [`cholesky`];
/// the error reports the pivot's original index.
pub fn pivoted_cholesky(s: &SymmetricMatrix) -> Result<Matrix> {
    let n = s.dim();
    let mut w = s.as_matrix().clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..n {
        let best = (j..n)
            .max_by(|&a, &b| w[(a, a)].total_cmp(&w[(b, b)]))
            .expect("j < n");
        if best != j {
            w.swap_rows(j, best);
            w.swap_columns(j, best);
            perm.swap(j, best);
        }
        let pivot = w[(j, j)];
        if pivot < -PSD_PIVOT_TOL {
            return Err(Error::not_psd(perm[j]));
        }
        if pivot <= 0.0 {
            // every remaining diagonal is <= 0: the rest of L is zero
            if let Some(i) = (j..n).find(|&i| w[(i, i)] < -PSD_PIVOT_TOL) {
                return Err(Error::not_psd(perm[i]));
            }
            for i in j..n {
                for c in j..n {
                    w[(i, c)] = 0.0;
                }
            }
            break;
        }
        let ljj = pivot.sqrt();
        w[(j, j)] = ljj;
        for i in j + 1..n {
            w[(i, j)] /= ljj;
        }
        for i in j + 1..n {
            let lij = w[(i, j)];
            for c in j + 1..=i {
                w[(i, c)] -= lij * w[(c, j)];
            }
        }
        for i in j + 1..n {
            for c in i + 1..n {
                w[(i, c)] = w[(c, i)];
            }
        }
    }
    // keep the lower triangle, then undo the permutation on rows
    let mut inv = vec![0; n];
    for (r, &p) in perm.iter().enumerate() {
        inv[p] = r;
    }
    Ok(Matrix::from_fn(n, n, |i, c| {
        let r = inv[i];
        if c <= r {
            w[(r, c)]
        } else {
            0.0
        }
    }))
}

/// Solves `s x = rhs` for strictly positive definite `s`.
pub fn solve_spd(s: &SymmetricMatrix, rhs: &Matrix) -> Result<Matrix> {
    if rhs.rows() != s.dim() {
        return Err(Error::dims(format!(
            "rhs has {} rows, system has dimension {}",
            rhs.rows(),
            s.dim()
        )));
    }
    let l = cholesky_with_floor(s, true)?;
    let mut out = Matrix::zeros(rhs.rows(), rhs.cols());
    let mut col = vec![0.0; s.dim()];
    for c in 0..rhs.cols() {
        for (i, v) in col.iter_mut().enumerate() {
            *v = rhs[(i, c)];
        }
        cholesky_solve_in_place(&l, &mut col);
        for (i, v) in col.iter().enumerate() {
            out[(i, c)] = *v;
        }
    }
    Ok(out)
}

/// Vector right-hand side convenience for [`solve_spd`].
pub fn solve_spd_vec(s: &SymmetricMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != s.dim() {
        return Err(Error::dims("rhs length does not match system dimension"));
    }
    let l = cholesky_with_floor(s, true)?;
    let mut x = rhs.to_vec();
    cholesky_solve_in_place(&l, &mut x);
    Ok(x)
}

fn cholesky_solve_in_place(l: &Matrix, x: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let acc = x[i] - dot(&l.row(i)[..i], &x[..i]);
        x[i] = acc / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for k in i + 1..n {
            acc -= l[(k, i)] * x[k];
        }
        x[i] = acc / l[(i, i)];
    }
}

/// `k` orthonormal columns spanning part of the orthogonal complement of
/// `m`'s column space, taken from a full Householder QR of `m`.
///
/// The reflector for column `j` uses `alpha = -sign(x_0) * |x|` with
/// `sign(0) = +1`, so the result is a deterministic function of `m`.
pub fn orthonormal_complement(m: &Matrix, k: usize) -> Result<Matrix> {
    let (n, p) = (m.rows(), m.cols());
    if n < p + k {
        return Err(Error::dims(format!(
            "need n >= p + k, got n = {n}, p = {p}, k = {k}"
        )));
    }
    // column-major working copy
    let mut cols: Vec<Vec<f64>> = (0..p).map(|j| m.column(j)).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(p);
    for j in 0..p {
        let x = &cols[j][j..];
        let xnorm = norm2(x);
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        if alpha.abs() < RANK_TOL {
            return Err(Error::RankDeficient {
                column: j,
                value: alpha.abs(),
            });
        }
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vnorm = norm2(&v);
        v.iter_mut().for_each(|e| *e /= vnorm);
        for col in cols.iter_mut().skip(j + 1) {
            let tail = &mut col[j..];
            let proj = 2.0 * dot(&v, tail);
            tail.iter_mut().zip(&v).for_each(|(t, vi)| *t -= proj * vi);
        }
        reflectors.push(v);
    }
    let mut out = Matrix::zeros(n, k);
    for c in 0..k {
        let mut e = vec![0.0; n];
        e[p + c] = 1.0;
        for (j, v) in reflectors.iter().enumerate().rev() {
            let tail = &mut e[j..];
            let proj = 2.0 * dot(v, tail);
            tail.iter_mut().zip(v).for_each(|(t, vi)| *t -= proj * vi);
        }
        for (i, v) in e.into_iter().enumerate() {
            out[(i, c)] = v;
        }
    }
    Ok(out)
}
