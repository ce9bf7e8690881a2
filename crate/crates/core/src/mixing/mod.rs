//! Total-variation mixing diagnostics, coupling bounds and coupled chains.

mod bounds;
mod coupling;

pub use bounds::{
    complete_graph_bound, contraction_margins, corollary_bounds, theorem2_bound, theta, CompleteGraphBound,
    CorollaryBounds, CorollaryReport, MixingBoundReport, WeightChoice, WeightFunction, C_MIN,
};
pub use coupling::{
    adjacent_pairs, coalescence_estimate, coalescence_time, contraction_check, coupled_step, weighted_hamming,
    worst_case_start, CoalescenceReport, ContractionCheck, Coupling,
};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::math;

/// Mixing threshold `1/e`.
pub const MIXING_THRESHOLD: f64 = 0.367_879_441_171_442_33;

/// `(1/2) sum_x |mu(x) - nu(x)|`.
pub fn tv_distance(mu: &[f64], nu: &[f64]) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::Dimension {
            expected: mu.len(),
            got: nu.len(),
        });
    }
    Ok(0.5 * mu.iter().zip(nu).map(|(a, b)| math::abs(a - b)).sum::<f64>())
}

fn point_mass(dim: usize, x: usize) -> Vec<f64> {
    let mut mu = vec![0.0; dim];
    mu[x] = 1.0;
    mu
}

/// `mu_{x,0}, ..., mu_{x,t_max}` for the chain started at index `x0`.
pub fn evolve_distribution(p: &DenseMatrix, x0: usize, t_max: usize) -> Result<Vec<Vec<f64>>> {
    if x0 >= p.dim() {
        return Err(Error::Dimension {
            expected: p.dim(),
            got: x0 + 1,
        });
    }
    let mut out = Vec::with_capacity(t_max + 1);
    out.push(point_mass(p.dim(), x0));
    for t in 0..t_max {
        let next = p.left_mul(&out[t])?;
        out.push(next);
    }
    Ok(out)
}

/// `curves[x][t] = TV(mu_{x,t}, pi)` for every start `x` and `t <= t_max`.
pub fn tv_curves(p: &DenseMatrix, pi: &[f64], t_max: usize) -> Result<Vec<Vec<f64>>> {
    let d = p.dim();
    if pi.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: pi.len(),
        });
    }
    let mut curves = vec![Vec::with_capacity(t_max + 1); d];
    let mut scratch = vec![0.0; d];
    for (x, curve) in curves.iter_mut().enumerate() {
        let mut mu = point_mass(d, x);
        curve.push(tv_distance(&mu, pi)?);
        for _ in 0..t_max {
            p.left_mul_into(&mu, &mut scratch)?;
            core::mem::swap(&mut mu, &mut scratch);
            curve.push(tv_distance(&mu, pi)?);
        }
    }
    Ok(curves)
}

/// `d(t) = max_x TV(mu_{x,t}, pi)` for `t = 0..=t_max`.
pub fn max_tv_curve(p: &DenseMatrix, pi: &[f64], t_max: usize) -> Result<Vec<f64>> {
    let curves = tv_curves(p, pi, t_max)?;
    Ok((0..=t_max)
        .map(|t| curves.iter().map(|c| c[t]).fold(0.0, f64::max))
        .collect())
}

/// `max_x inf { t : TV(mu_{x,t}, pi) <= 1/e }`.
///
/// Returns 0 only when every start is already within the threshold.
pub fn empirical_mixing_time(p: &DenseMatrix, pi: &[f64], horizon: usize) -> Result<usize> {
    let d = p.dim();
    if pi.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: pi.len(),
        });
    }
    let mut worst = 0usize;
    let mut scratch = vec![0.0; d];
    for x in 0..d {
        let mut mu = point_mass(d, x);
        let mut tv = tv_distance(&mu, pi)?;
        let mut t = 0usize;
        while tv > MIXING_THRESHOLD {
            if t == horizon {
                return Err(Error::Horizon { horizon, last_tv: tv });
            }
            p.left_mul_into(&mu, &mut scratch)?;
            core::mem::swap(&mut mu, &mut scratch);
            t += 1;
            tv = tv_distance(&mu, pi)?;
        }
        worst = worst.max(t);
    }
    Ok(worst)
}
