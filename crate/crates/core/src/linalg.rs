//! Dense row-major matrices and the handful of norms the compression code needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense `rows × cols` matrix of `f64`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;
    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl From<Matrix> for RawMatrix {
    fn from(m: Matrix) -> Self {
        RawMatrix {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl Matrix {
    /// Builds a matrix from row-major data, checking shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "matrix dimensions must be positive, got {rows}×{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix data"));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Matrix::new(n, n, data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                context: "matrix rows",
                expected: c,
                found: bad.len(),
            });
        }
        Matrix::new(r, c, rows.concat())
    }

    /// `u vᵀ`.
    pub fn outer(u: &[f64], v: &[f64]) -> Result<Self> {
        let mut data = Vec::with_capacity(u.len() * v.len());
        for a in u {
            data.extend(v.iter().map(|b| a * b));
        }
        Matrix::new(u.len(), v.len(), data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// `W x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok(self.matvec_unchecked(x))
    }

    pub(crate) fn matvec_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.cols)
            .map(|row| dot(row, x))
            .collect()
    }

    /// `Wᵀ y`.
    pub fn tmatvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "transposed matrix-vector product",
                expected: self.rows,
                found: y.len(),
            });
        }
        Ok(self.tmatvec_unchecked(y))
    }

    pub(crate) fn tmatvec_unchecked(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, yi) in self.data.chunks_exact(self.cols).zip(y) {
            if *yi == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * yi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matrix product",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entry, `‖W‖_∞` in the entrywise sense.
    pub fn inf_norm(&self) -> f64 {
        inf_norm(self)
    }

    /// Number of entries that are not exactly zero.
    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(self, DEFAULT_SPECTRAL_TOL, DEFAULT_SPECTRAL_MAX_ITER).value
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean projection of `v` onto the closed ball of radius `kappa`.
///
/// A vector already inside (or exactly on) the ball is returned unchanged;
/// otherwise it is scaled radially by `kappa / ‖v‖`. An infinite radius
/// disables the projection.
///
/// ```
/// use wide_compress::linalg::project_ball;
/// assert_eq!(project_ball(&[3.0, 4.0], 5.0), vec![3.0, 4.0]);
/// let p = project_ball(&[3.0, 4.0], 1.0);
/// assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
/// ```
pub fn project_ball(v: &[f64], kappa: f64) -> Vec<f64> {
    assert!(kappa > 0.0, "projection radius must be positive");
    let n = norm(v);
    if n <= kappa {
        v.to_vec()
    } else {
        let s = kappa / n;
        v.iter().map(|x| x * s).collect()
    }
}

/// In-place variant of [`project_ball`].
pub fn project_ball_in_place(v: &mut [f64], kappa: f64) {
    assert!(kappa > 0.0, "projection radius must be positive");
    let n = norm(v);
    if n > kappa {
        let s = kappa / n;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

pub fn inf_norm(w: &Matrix) -> f64 {
    w.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;
pub const DEFAULT_SPECTRAL_MAX_ITER: usize = 10_000;

/// Result of a power-iteration estimate of the largest singular value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub iterations: usize,
    /// `false` when `max_iter` was hit; `value` is then the last iterate.
    pub converged: bool,
}

/// Largest singular value of `w` by power iteration on `WᵀW`.
///
/// The first pass starts from the normalized all-ones vector. That vector is
/// an exact singular vector of circulant and other row-balanced matrices, so
/// a second pass always runs from a fixed pseudo-random start; both passes
/// give lower bounds and the larger one is returned. Each pass stops once the
/// relative change of the estimate drops below `tol`.
pub fn spectral_norm(w: &Matrix, tol: f64, max_iter: usize) -> SpectralEstimate {
    if w.nnz() == 0 {
        return SpectralEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let n = w.cols();
    let ones = power_pass(w, vec![1.0 / (n as f64).sqrt(); n], tol, max_iter);
    let mixed = power_pass(w, fallback_start(n), tol, max_iter);
    SpectralEstimate {
        value: ones.value.max(mixed.value),
        iterations: ones.iterations + mixed.iterations,
        converged: ones.converged && mixed.converged,
    }
}

fn power_pass(w: &Matrix, mut v: Vec<f64>, tol: f64, max_iter: usize) -> SpectralEstimate {
    let mut estimate = norm(&w.matvec_unchecked(&v));
    if estimate == 0.0 {
        return SpectralEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    for it in 1..=max_iter {
        let wv = w.matvec_unchecked(&v);
        let mut next = w.tmatvec_unchecked(&wv);
        let nn = norm(&next);
        if nn == 0.0 {
            return SpectralEstimate {
                value: estimate,
                iterations: it,
                converged: true,
            };
        }
        next.iter_mut().for_each(|x| *x /= nn);
        // ‖W v‖ for the unit vector v is a lower bound that converges to σ_max.
        let value = norm(&w.matvec_unchecked(&next));
        let change = (value - estimate).abs();
        estimate = value;
        v = next;
        if change <= tol * value {
            return SpectralEstimate {
                value,
                iterations: it,
                converged: true,
            };
        }
    }
    SpectralEstimate {
        value: estimate,
        iterations: max_iter,
        converged: false,
    }
}

fn fallback_start(n: usize) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15_u64;
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state = crate::rng::splitmix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}
