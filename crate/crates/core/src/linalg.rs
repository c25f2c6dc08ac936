//! Dense row-major matrices and the two factorizations the crate needs:
//! cyclic Jacobi for symmetric eigenproblems and one-sided Jacobi for the SVD
//! of a wide matrix, plus an orthonormal-complement routine.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vector::{check_finite, dot, norm};

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a `rows x cols` matrix from row-major `data`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyVector);
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                found: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    /// Builds a matrix whose columns are `columns`, each of length `rows`.
    pub(crate) fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (c, column) in columns.iter().enumerate() {
            for (r, v) in column.iter().enumerate() {
                m.data[r * cols + c] = *v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok(self.apply(x))
    }

    /// `self * x` without a length check.
    #[inline]
    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `self^T * y` without a length check.
    pub(crate) fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, yr) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * yr;
            }
        }
        out
    }

    pub fn select_columns(&self, indices: &[usize]) -> Matrix {
        let mut m = Self::zeros(self.rows, indices.len());
        for r in 0..self.rows {
            for (j, &c) in indices.iter().enumerate() {
                m.data[r * indices.len() + j] = self.get(r, c);
            }
        }
        m
    }

    /// Concatenates `self` and `other` side by side.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::Dimension {
                expected: self.rows,
                found: other.rows,
            });
        }
        let cols = self.cols + other.cols;
        let mut m = Self::zeros(self.rows, cols);
        for r in 0..self.rows {
            m.data[r * cols..r * cols + self.cols].copy_from_slice(self.row(r));
            m.data[r * cols + self.cols..(r + 1) * cols].copy_from_slice(other.row(r));
        }
        Ok(m)
    }

    pub fn scaled(&self, alpha: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension {
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
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    /// `self^T * self`.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                for j in i..n {
                    g.data[i * n + j] += ri * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    /// `||self^T self - I||_F`, zero for orthonormal columns.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.gram();
        g.sub(&Matrix::identity(self.cols))
            .map(|d| d.frobenius_norm())
            .unwrap_or(f64::INFINITY)
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching unit eigenvectors
/// as the columns of the second matrix. Only the upper triangle is trusted to
/// be symmetric with the lower one; no check is made.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows;
    debug_assert_eq!(n, a.cols);
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm();

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m.get(p, q) * m.get(p, q);
            }
        }
        if off == 0.0 || libm::sqrt(off) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m.get(k, p), m.get(k, q));
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let (mpk, mqk) = (m.get(p, k), m.get(q, k));
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let (vkp, vkq) = (v.get(k, p), v.get(k, q));
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).total_cmp(&m.get(j, j)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = v.select_columns(&order);
    (values, vectors)
}

/// Singular value decomposition of a wide matrix `A` (`M x N`, `M <= N`):
/// `A = U diag(sigma) V1^T`.
#[derive(Debug, Clone)]
pub struct WideSvd {
    /// `M x M` orthogonal.
    pub u: Matrix,
    /// Descending, nonnegative.
    pub sigma: Vec<f64>,
    /// `N x M`; column `j` is a unit vector whenever `sigma[j] > 0`.
    pub v1: Matrix,
}

/// One-sided (Hestenes) Jacobi SVD applied to the columns of `A^T`.
pub fn wide_svd(a: &Matrix) -> WideSvd {
    let (m, n) = (a.rows, a.cols);
    debug_assert!(m <= n);
    // Columns of A^T are the rows of A.
    let mut w: Vec<Vec<f64>> = (0..m).map(|r| a.row(r).to_vec()).collect();
    let mut j: Vec<Vec<f64>> = (0..m)
        .map(|c| {
            let mut e = vec![0.0; m];
            e[c] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= 1e-15 * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                rotate_pair(&mut j, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w.iter().map(|col| norm(col)).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let sigma: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let u_cols: Vec<Vec<f64>> = order.iter().map(|&i| j[i].clone()).collect();
    let v_cols: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| {
            if norms[i] > 0.0 {
                w[i].iter().map(|v| v / norms[i]).collect()
            } else {
                vec![0.0; n]
            }
        })
        .collect();

    WideSvd {
        u: Matrix::from_columns(m, &u_cols),
        sigma,
        v1: Matrix::from_columns(n, &v_cols),
    }
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Orthonormal basis of the orthogonal complement of the column span of
/// `basis` (`N x r`, orthonormal columns), returned as an `N x (N - r)`
/// matrix. Uses the trailing columns of a Householder QR.
pub fn orthonormal_complement(basis: &Matrix) -> Matrix {
    let (n, r) = (basis.rows, basis.cols);
    let mut work = basis.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(r);

    for k in 0..r {
        let mut v: Vec<f64> = (k..n).map(|i| work.get(i, k)).collect();
        let alpha = norm(&v);
        if alpha == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        v[0] += if v[0] >= 0.0 { alpha } else { -alpha };
        let vnorm_sq = dot(&v, &v);
        for c in k..r {
            let proj: f64 = (k..n).map(|i| v[i - k] * work.get(i, c)).sum::<f64>() * 2.0 / vnorm_sq;
            for i in k..n {
                let val = work.get(i, c) - proj * v[i - k];
                work.set(i, c, val);
            }
        }
        reflectors.push(v);
    }

    let mut out = Matrix::zeros(n, n - r);
    for (col, j) in (r..n).enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for k in (0..r).rev() {
            let v = &reflectors[k];
            if v.is_empty() {
                continue;
            }
            let proj = dot(v, &e[k..]) * 2.0 / dot(v, v);
            for i in k..n {
                e[i] -= proj * v[i - k];
            }
        }
        for i in 0..n {
            out.set(i, col, e[i]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Matrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn constructors_validate() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::new(1, 1, vec![f64::NAN]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn eigen_of_2x2_matches_closed_form() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&a);
        let mid = 2.5;
        let rad = libm::sqrt(0.25 + 1.0);
        assert!((vals[0] - (mid - rad)).abs() < 1e-14);
        assert!((vals[1] - (mid + rad)).abs() < 1e-14);
        for k in 0..2 {
            let v = vecs.column(k);
            let av = a.apply(&v);
            for i in 0..2 {
                assert!((av[i] - vals[k] * v[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn eigen_reconstructs_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=6 {
            let b = random_matrix(&mut rng, n + 2, n);
            let g = b.gram();
            let (vals, vecs) = symmetric_eigen(&g);
            assert!(vecs.orthonormality_error() < 1e-12);
            let recon = vecs
                .matmul(&Matrix::diagonal(&vals))
                .unwrap()
                .matmul(&vecs.transpose())
                .unwrap();
            assert!(recon.sub(&g).unwrap().frobenius_norm() < 1e-12 * (1.0 + g.frobenius_norm()));
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn wide_svd_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (m, n) in [(1, 1), (1, 4), (3, 5), (4, 7), (5, 5)] {
            let a = random_matrix(&mut rng, m, n);
            let svd = wide_svd(&a);
            assert!(svd.u.orthonormality_error() < 1e-12);
            assert!(svd.v1.orthonormality_error() < 1e-12);
            assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
            let recon = svd
                .u
                .matmul(&Matrix::diagonal(&svd.sigma))
                .unwrap()
                .matmul(&svd.v1.transpose())
                .unwrap();
            assert!(recon.sub(&a).unwrap().frobenius_norm() < 1e-12 * a.frobenius_norm());
        }
    }

    #[test]
    fn complement_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (m, n) in [(1, 2), (2, 5), (3, 3), (4, 7)] {
            let svd = wide_svd(&random_matrix(&mut rng, m, n));
            let comp = orthonormal_complement(&svd.v1);
            assert_eq!((comp.rows(), comp.cols()), (n, n - m));
            let full = svd.v1.hstack(&comp).unwrap();
            assert!(full.orthonormality_error() < 1e-12);
        }
    }
}
