//! Small dense row-major matrices for exact chain analysis.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let d = self.dim;
        &mut self.data[i * d..(i + 1) * d]
    }

    /// Row vector times matrix: `mu P`.
    pub fn left_mul(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.left_mul_into(mu, &mut out)?;
        Ok(out)
    }

    pub fn left_mul_into(&self, mu: &[f64], out: &mut [f64]) -> Result<()> {
        if mu.len() != self.dim || out.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: mu.len().min(out.len()),
            });
        }
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, &w) in mu.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += w * p;
            }
        }
        Ok(())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if other.dim != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: other.dim,
            });
        }
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            let row = self.row(i);
            let target = &mut out.data[i * d..(i + 1) * d];
            for (k, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (t, &b) in target.iter_mut().zip(other.row(k)) {
                    *t += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Largest `|sum_j P(i, j) - 1|` over rows.
    pub fn stochasticity_residual(&self) -> f64 {
        (0..self.dim)
            .map(|i| math::abs(self.row(i).iter().sum::<f64>() - 1.0))
            .fold(0.0, f64::max)
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.data.iter().all(|&x| x >= -tol) && self.stochasticity_residual() <= tol
    }

    /// Stationary row vector of an irreducible stochastic matrix, found by
    /// solving `pi (P - I) = 0`, `sum(pi) = 1` with partially pivoted
    /// Gaussian elimination.
    pub fn stationary_vector(&self) -> Result<Vec<f64>> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::Dimension { expected: 1, got: 0 });
        }
        // Row r of A is column r of (P - I); the last row becomes sum(pi) = 1.
        let mut a = vec![0.0; d * d];
        let mut b = vec![0.0; d];
        for r in 0..d {
            for c in 0..d {
                a[r * d + c] = self.get(c, r) - if r == c { 1.0 } else { 0.0 };
            }
        }
        for c in 0..d {
            a[(d - 1) * d + c] = 1.0;
        }
        b[d - 1] = 1.0;
        solve_in_place(&mut a, &mut b, d)?;
        Ok(b)
    }
}

/// Solves `A x = b` in place; `b` holds the solution on return.
fn solve_in_place(a: &mut [f64], b: &mut [f64], d: usize) -> Result<()> {
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&x, &y| math::abs(a[x * d + col]).total_cmp(&math::abs(a[y * d + col])))
            .unwrap_or(col);
        if math::abs(a[pivot * d + col]) < 1e-300 {
            return Err(Error::Contract("singular system (chain not irreducible?)".into()));
        }
        if pivot != col {
            for c in 0..d {
                a.swap(col * d + c, pivot * d + c);
            }
            b.swap(col, pivot);
        }
        let p = a[col * d + col];
        for r in col + 1..d {
            let factor = a[r * d + col] / p;
            if factor == 0.0 {
                continue;
            }
            for c in col..d {
                a[r * d + c] -= factor * a[col * d + c];
            }
            b[r] -= factor * b[col];
        }
    }
    for r in (0..d).rev() {
        let mut acc = b[r];
        for c in r + 1..d {
            acc -= a[r * d + c] * b[c];
        }
        b[r] = acc / a[r * d + r];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_stationary() {
        let p = DenseMatrix::from_rows(&[vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let pi = p.stationary_vector().unwrap();
        assert!((pi[0] - 0.75).abs() < 1e-14);
        assert!((pi[1] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn left_mul_and_matmul_agree() {
        let p = DenseMatrix::from_rows(&[vec![0.5, 0.5, 0.0], vec![0.2, 0.3, 0.5], vec![0.0, 0.4, 0.6]]).unwrap();
        let p2 = p.matmul(&p).unwrap();
        let mu = p.left_mul(&p.left_mul(&[1.0, 0.0, 0.0]).unwrap()).unwrap();
        for j in 0..3 {
            assert!((mu[j] - p2.get(0, j)).abs() < 1e-15);
        }
        assert!(p.is_row_stochastic(1e-12));
    }

    #[test]
    fn dimension_errors() {
        assert!(DenseMatrix::from_rows(&[vec![1.0, 0.0]]).is_err());
        assert!(DenseMatrix::identity(2).left_mul(&[1.0]).is_err());
    }
}
