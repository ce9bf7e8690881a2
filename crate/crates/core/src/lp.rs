//! Dense primal simplex for `max c.x  s.t.  A x <= b, x >= 0` with `b >= 0`,
//! so the origin is a feasible starting basis. Bland's rule keeps it from
//! cycling; the problems here have at most a few hundred columns.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub pivots: usize,
}

/// `a` is row-major with `b.len()` rows of `c.len()` entries.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let m = b.len();
    let nv = c.len();
    if a.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: a.len(),
        });
    }
    if let Some(row) = a.iter().find(|r| r.len() != nv) {
        return Err(Error::Dimension {
            expected: nv,
            got: row.len(),
        });
    }
    if b.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidParameter("simplex needs b >= 0".into()));
    }
    // Columns: structural, slacks, rhs. Last row: reduced costs (-c).
    let width = nv + m + 1;
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        t[i * width..i * width + nv].copy_from_slice(&a[i]);
        t[i * width + nv + i] = 1.0;
        t[i * width + width - 1] = b[i];
    }
    for j in 0..nv {
        t[m * width + j] = -c[j];
    }
    let mut basis: Vec<usize> = (nv..nv + m).collect();
    let mut pivots = 0usize;
    let limit = 50 * (m + nv + 1) * (m + nv + 1);
    while let Some(col) = (0..nv + m).find(|&j| t[m * width + j] < -EPS) {
        let mut row = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let aij = t[i * width + col];
            if aij > EPS {
                let ratio = t[i * width + width - 1] / aij;
                let better = match row {
                    None => true,
                    Some(r) => ratio < best - EPS || (ratio <= best + EPS && basis[i] < basis[r]),
                };
                if better {
                    best = ratio;
                    row = Some(i);
                }
            }
        }
        let Some(r) = row else {
            return Err(Error::Contract("linear program is unbounded".into()));
        };
        pivot(&mut t, width, m + 1, r, col);
        basis[r] = col;
        pivots += 1;
        if pivots > limit {
            return Err(Error::NotConverged {
                iterations: pivots as u64,
                grad_norm: f64::NAN,
            });
        }
    }
    let mut x = vec![0.0; nv];
    for (i, &j) in basis.iter().enumerate() {
        if j < nv {
            x[j] = t[i * width + width - 1];
        }
    }
    Ok(LpSolution {
        value: t[m * width + width - 1],
        x,
        pivots,
    })
}

fn pivot(t: &mut [f64], width: usize, rows: usize, r: usize, c: usize) {
    let p = t[r * width + c];
    for j in 0..width {
        t[r * width + j] /= p;
    }
    for i in 0..rows {
        if i == r {
            continue;
        }
        let f = t[i * width + c];
        if f == 0.0 {
            continue;
        }
        for j in 0..width {
            t[i * width + j] -= f * t[r * width + j];
        }
        t[i * width + c] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
        let s = maximize(
            &[3.0, 5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((s.value - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_reported() {
        assert!(maximize(&[1.0, 1.0], &[vec![1.0, -1.0]], &[1.0]).is_err());
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Several constraints tight at the origin.
        let s = maximize(
            &[10.0, -57.0, -9.0, -24.0],
            &[
                vec![0.5, -5.5, -2.5, 9.0],
                vec![0.5, -1.5, -0.5, 1.0],
                vec![1.0, 0.0, 0.0, 0.0],
            ],
            &[0.0, 0.0, 1.0],
        )
        .unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
    }
}
