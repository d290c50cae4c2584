//! Small dense linear algebra used by affine maps, rank checks and the exact
//! operator-norm oracle. Matrices are row-major and tiny (dimension ≲ 32), so
//! everything here is direct and allocation-happy.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative pivot threshold for rank and span decisions.
pub const DEFAULT_PIVOT_THRESHOLD: f64 = 1e-10;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            if col.len() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    found: col.len(),
                });
            }
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s * other`
    pub fn add_scaled(&self, other: &Matrix, s: f64) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Maximum absolute column sum: the operator norm induced by ℓ¹.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute row sum: the operator norm induced by ℓ^∞.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest singular value by power iteration on `AᵀA`.
    pub fn spectral_norm(&self) -> f64 {
        if self.data.iter().all(|&v| v == 0.0) {
            return 0.0;
        }
        let gram = self.transpose().matmul(self).expect("square by construction");
        largest_symmetric_eigenvalue(&gram).max(0.0).sqrt()
    }

    /// Smallest singular value of a square matrix; zero when numerically
    /// rank deficient.
    pub fn min_singular_value(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::Unsupported(
                "smallest singular value of a non-square matrix".into(),
            ));
        }
        if self.rank(DEFAULT_PIVOT_THRESHOLD) < self.rows {
            return Ok(0.0);
        }
        let inv = self.inverse()?;
        Ok(1.0 / inv.spectral_norm())
    }

    /// Numerical rank via Gaussian elimination with complete pivoting. A pivot
    /// counts when it exceeds `threshold × max|entry|`.
    pub fn rank(&self, threshold: f64) -> usize {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0;
        }
        let cutoff = threshold * scale;
        let mut a = self.clone();
        let (m, n) = (a.rows, a.cols);
        let mut rank = 0;
        for k in 0..m.min(n) {
            let mut best = (k, k, 0.0);
            for i in k..m {
                for j in k..n {
                    let v = a[(i, j)].abs();
                    if v > best.2 {
                        best = (i, j, v);
                    }
                }
            }
            if best.2 <= cutoff {
                break;
            }
            a.swap_rows(k, best.0);
            a.swap_cols(k, best.1);
            let pivot = a[(k, k)];
            for i in k + 1..m {
                let f = a[(i, k)] / pivot;
                if f == 0.0 {
                    continue;
                }
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::new(self)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let lu = self.lu()?;
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = lu.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.lu()?.solve(b)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// LU factorisation with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    fn new(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Unsupported("LU of a non-square matrix".into()));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = DEFAULT_PIVOT_THRESHOLD * a.max_abs();
        for k in 0..n {
            let (p, pv) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            if pv <= tiny || pv == 0.0 {
                return Err(Error::Singular);
            }
            lu.swap_rows(k, p);
            perm.swap(k, p);
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= f * v;
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lu.rows;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        Ok(x)
    }
}

/// Power iteration with Rayleigh quotients for a symmetric positive
/// semidefinite matrix. Returns a lower estimate of the top eigenvalue that is
/// accurate to roughly 1e-11 relative.
fn largest_symmetric_eigenvalue(b: &Matrix) -> f64 {
    let n = b.rows;
    // Two deterministic starts: a generic dense vector and the heaviest column.
    let generic: Vec<f64> = (0..n).map(|i| 2.0 + (1.0 + i as f64 * 0.754_877_666).cos()).collect();
    let heavy = (0..n)
        .map(|j| b.column(j))
        .max_by(|x, y| l2(x).total_cmp(&l2(y)))
        .unwrap_or_else(|| vec![1.0; n]);
    [generic, heavy]
        .into_iter()
        .map(|start| power_run(b, start))
        .fold(0.0, f64::max)
}

fn power_run(b: &Matrix, mut v: Vec<f64>) -> f64 {
    const MAX_ITERS: usize = 200_000;
    let norm = l2(&v);
    if norm == 0.0 {
        return 0.0;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    let mut mu = 0.0;
    for _ in 0..MAX_ITERS {
        let w = b.mul_vec(&v).expect("square");
        mu = v.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
        let resid = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - mu * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        let wn = l2(&w);
        if wn == 0.0 {
            return 0.0;
        }
        if resid <= 1e-12 * mu.abs() {
            break;
        }
        v = w.into_iter().map(|x| x / wn).collect();
    }
    mu
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn induced_norms_of_small_matrices() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(a.norm_1(), 2.0);
        assert_eq!(a.norm_inf(), 2.0);
        // golden ratio: singular values of [[1,1],[0,1]] are φ and 1/φ
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((a.spectral_norm() - phi).abs() < 1e-12);
        assert!((a.min_singular_value().unwrap() - 1.0 / phi).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_escapes_orthogonal_start() {
        let a = Matrix::from_rows(&[vec![1.0, -1.0], vec![1.0, -1.0]]).unwrap();
        assert!((a.spectral_norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_detects_dependence() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
        assert_eq!(a.rank(DEFAULT_PIVOT_THRESHOLD), 1);
        assert_eq!(Matrix::identity(4).rank(DEFAULT_PIVOT_THRESHOLD), 4);
        assert_eq!(Matrix::zeros(3, 3).rank(DEFAULT_PIVOT_THRESHOLD), 0);
    }

    #[test]
    fn inverse_round_trips() {
        let a = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![-1.0, 3.0, 0.0],
            vec![0.2, 0.0, 2.0],
        ])
        .unwrap();
        let prod = a.matmul(&a.inverse().unwrap()).unwrap();
        let err = prod.add_scaled(&Matrix::identity(3), -1.0).unwrap().max_abs();
        assert!(err < 1e-14);
        assert!(matches!(
            Matrix::zeros(2, 2).inverse(),
            Err(Error::Singular)
        ));
    }
}
