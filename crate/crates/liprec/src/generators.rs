//! Signal samples and random operators.

use liprec_core::rip::{normalize_columns, random_sparse};
use liprec_core::rng::{normal_vector, seeded, SeededRng};
use liprec_core::{Matrix, MatrixOperator};
use rand::Rng;

use crate::error::CliError;

/// `count` evenly spaced points from `start` to `end`, both included.
/// The parameter is `k / (count - 1)`, so the endpoints are exact.
pub fn affine_segment(start: &[f64], end: &[f64], count: usize) -> Result<Vec<Vec<f64>>, CliError> {
    if start.len() != end.len() {
        return Err(CliError::problem(format!(
            "segment endpoints have dimensions {} and {}",
            start.len(),
            end.len()
        )));
    }
    if count == 0 {
        return Err(CliError::problem("segment needs at least one point"));
    }
    if count == 1 {
        return Ok(vec![start.to_vec()]);
    }
    let last = (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            let s = k as f64 / last;
            start
                .iter()
                .zip(end)
                .map(|(a, b)| a + s * (b - a))
                .collect()
        })
        .collect())
}

/// `count` points `origin + sum_k c_k d_k` with coefficients uniform in
/// `[0, 1)`.
pub fn affine_patch(
    rng: &mut SeededRng,
    origin: &[f64],
    directions: &[Vec<f64>],
    count: usize,
) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let mut x = origin.to_vec();
            for d in directions {
                let c: f64 = rng.random();
                for (xi, di) in x.iter_mut().zip(d) {
                    *xi += c * di;
                }
            }
            x
        })
        .collect()
}

pub fn sparse_signals(
    dim: usize,
    sparsity: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, CliError> {
    if sparsity == 0 || sparsity > dim {
        return Err(CliError::problem(format!(
            "sparsity {sparsity} must lie in 1..={dim}"
        )));
    }
    let mut rng = seeded(seed);
    Ok((0..count)
        .map(|_| random_sparse(&mut rng, dim, sparsity))
        .collect())
}

/// `rows x cols` matrix with independent standard normal entries.
pub fn gaussian_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(rows, cols, normal_vector(rng, rows * cols)).expect("nonzero shape")
}

pub fn gaussian_operator(rng: &mut SeededRng, rows: usize, cols: usize) -> MatrixOperator {
    MatrixOperator::new(gaussian_matrix(rng, rows, cols)).expect("rows <= cols")
}

/// Gaussian matrix with every column scaled to unit length.
pub fn unit_column_operator(seed: u64, rows: usize, cols: usize) -> MatrixOperator {
    let mut rng = seeded(seed);
    MatrixOperator::new(normalize_columns(&gaussian_matrix(&mut rng, rows, cols)))
        .expect("rows <= cols")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_endpoints_are_exact() {
        let pts = affine_segment(&[0.3, -1.0], &[0.7, 2.0], 11).unwrap();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[0], vec![0.3, -1.0]);
        assert_eq!(pts[10], vec![0.7, 2.0]);
        assert!((pts[5][0] - 0.5).abs() < 1e-15);
        assert!(affine_segment(&[0.0], &[1.0, 2.0], 3).is_err());
        assert!(affine_segment(&[0.0], &[1.0], 0).is_err());
    }

    #[test]
    fn sparse_signals_have_requested_support() {
        let xs = sparse_signals(10, 3, 50, 4).unwrap();
        assert!(xs
            .iter()
            .all(|x| x.len() == 10 && x.iter().filter(|v| **v != 0.0).count() == 3));
        assert_eq!(xs, sparse_signals(10, 3, 50, 4).unwrap());
        assert!(sparse_signals(4, 5, 1, 0).is_err());
    }

    #[test]
    fn unit_columns() {
        let a = unit_column_operator(3, 4, 6);
        for c in 0..6 {
            let n: f64 = a.matrix().column(c).iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }
}
