//! Exact service rates, the log-partition objective and its maximizer, and
//! capacity-region membership, all by enumeration of the schedule space.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::FugacityVector;
use crate::error::{Error, Result};
use crate::graph::{bit, bits, InterferenceGraph, ScheduleSpace};
use crate::lp;
use crate::math;

/// Stationary per-link service rates `s_i` and idle-neighbourhood
/// probabilities `p_{i,0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector {
    pub s: Vec<f64>,
    pub p0: Vec<f64>,
}

fn check_space(g: &InterferenceGraph, space: &ScheduleSpace, len: usize) -> Result<()> {
    for got in [space.n(), len] {
        if got != g.n() {
            return Err(Error::Dimension { expected: g.n(), got });
        }
    }
    Ok(())
}

fn log_weights(space: &ScheduleSpace, r: &[f64]) -> Vec<f64> {
    space.masks().iter().map(|&m| bits(m).map(|i| r[i]).sum()).collect()
}

/// `(log Z(r), s(r))` in one pass.
fn log_partition_and_rates(space: &ScheduleSpace, r: &[f64]) -> (f64, Vec<f64>) {
    let w = log_weights(space, r);
    let lse = math::log_sum_exp(&w);
    let mut s = vec![0.0; space.n()];
    for (&m, &wm) in space.masks().iter().zip(&w) {
        let p = math::exp(wm - lse);
        for i in bits(m) {
            s[i] += p;
        }
    }
    (lse, s)
}

pub fn service_rates(g: &InterferenceGraph, space: &ScheduleSpace, fug: &FugacityVector) -> Result<RateVector> {
    check_space(g, space, fug.len())?;
    let r = fug.log_lambda();
    let w = log_weights(space, &r);
    let lse = math::log_sum_exp(&w);
    let n = g.n();
    let mut s = vec![0.0; n];
    let mut p0 = vec![0.0; n];
    for (&m, &wm) in space.masks().iter().zip(&w) {
        let p = math::exp(wm - lse);
        for i in 0..n {
            if m & bit(i) != 0 {
                s[i] += p;
            }
            if m & g.neighbor_mask(i) == 0 {
                p0[i] += p;
            }
        }
    }
    Ok(RateVector { s, p0 })
}

/// `max_i |s_i - p_i p_{i,0}|`.
pub fn verify_mrf_identity(g: &InterferenceGraph, space: &ScheduleSpace, fug: &FugacityVector) -> Result<f64> {
    let rates = service_rates(g, space, fug)?;
    Ok(rates
        .s
        .iter()
        .zip(&rates.p0)
        .zip(fug.activation())
        .map(|((&s, &p0), &p)| math::abs(s - p * p0))
        .fold(0.0, f64::max))
}

/// `F(r; nu) = sum_i nu_i r_i - log sum_sigma exp(sum_i sigma_i r_i)`.
pub fn objective(space: &ScheduleSpace, r: &[f64], nu: &[f64]) -> Result<f64> {
    dims(space, r, nu)?;
    let lse = math::log_sum_exp(&log_weights(space, r));
    Ok(nu.iter().zip(r).map(|(a, b)| a * b).sum::<f64>() - lse)
}

/// `dF/dr_i = nu_i - s_i(r)`.
pub fn gradient(space: &ScheduleSpace, r: &[f64], nu: &[f64]) -> Result<Vec<f64>> {
    dims(space, r, nu)?;
    let (_, s) = log_partition_and_rates(space, r);
    Ok(nu.iter().zip(&s).map(|(a, b)| a - b).collect())
}

fn dims(space: &ScheduleSpace, r: &[f64], nu: &[f64]) -> Result<()> {
    for got in [r.len(), nu.len()] {
        if got != space.n() {
            return Err(Error::Dimension {
                expected: space.n(),
                got,
            });
        }
    }
    Ok(())
}

/// Margin of `nu / rho` inside the capacity region:
/// `max_t min_i (sum_sigma t_sigma sigma_i - nu_i / rho)` over probability
/// vectors `t` on the maximal schedules. Nonnegative iff `nu` is in
/// `rho * Lambda`, positive iff it is in the interior.
pub fn capacity_margin(g: &InterferenceGraph, space: &ScheduleSpace, nu: &[f64], rho: f64) -> Result<f64> {
    check_space(g, space, nu.len())?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    if let Some(x) = nu.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "arrival rates must be nonnegative, got {x}"
        )));
    }
    let n = g.n();
    if n == 0 {
        return Ok(f64::INFINITY);
    }
    let scaled: Vec<f64> = nu.iter().map(|x| x / rho).collect();
    let columns: Vec<u64> = space
        .masks()
        .iter()
        .copied()
        .filter(|&m| g.is_maximal_independent(m))
        .collect();
    // Variables: t_sigma for each column, then s' = margin + K >= 0.
    // Rows: s' - sum_sigma sigma_i t_sigma <= K - nu_i/rho, and sum t <= 1.
    // Dropping the empty schedule lets the last slack stand in for it.
    let k = scaled.iter().copied().fold(0.0, f64::max) + 1.0;
    let nv = columns.len() + 1;
    let mut a = Vec::with_capacity(n + 1);
    let mut b = Vec::with_capacity(n + 1);
    for i in 0..n {
        let mut row: Vec<f64> = columns
            .iter()
            .map(|&m| if m & bit(i) != 0 { -1.0 } else { 0.0 })
            .collect();
        row.push(1.0);
        a.push(row);
        b.push(k - scaled[i]);
    }
    let mut row = vec![1.0; columns.len()];
    row.push(0.0);
    a.push(row);
    b.push(1.0);
    let mut c = vec![0.0; nv];
    c[nv - 1] = 1.0;
    let sol = lp::maximize(&c, &a, &b)?;
    Ok(sol.value - k)
}

/// Tolerance on the capacity margin for boundary decisions.
pub const CAPACITY_TOL: f64 = 1e-9;

/// `nu in rho * Lambda`.
pub fn capacity_check(g: &InterferenceGraph, space: &ScheduleSpace, nu: &[f64], rho: f64) -> Result<bool> {
    Ok(capacity_margin(g, space, nu, rho)? >= -CAPACITY_TOL)
}

/// `nu in rho * interior(Lambda)`.
pub fn capacity_interior(g: &InterferenceGraph, space: &ScheduleSpace, nu: &[f64], rho: f64) -> Result<bool> {
    Ok(capacity_margin(g, space, nu, rho)? > CAPACITY_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once `max_i |s_i - nu_i| <= tol`.
    pub tol: f64,
    pub max_iters: u64,
    /// Log-fugacities are kept in `[-r_bound, r_bound]`.
    pub r_bound: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 100_000,
            r_bound: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FugacitySolution {
    pub fugacity: FugacityVector,
    pub r: Vec<f64>,
    pub service: Vec<f64>,
    pub objective: f64,
    pub iterations: u64,
    /// `max_i |nu_i - s_i|` at the returned point.
    pub grad_norm: f64,
}

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| math::abs(*v)).fold(0.0, f64::max)
}

fn check_target(g: &InterferenceGraph, space: &ScheduleSpace, nu: &[f64], opts: &SolverOptions) -> Result<()> {
    check_space(g, space, nu.len())?;
    if !(opts.tol > 0.0) || opts.max_iters == 0 || !(opts.r_bound > 0.0) {
        return Err(Error::InvalidParameter("solver options must be positive".into()));
    }
    if let Some(x) = nu.iter().find(|x| !(x.is_finite() && **x > 0.0 && **x < 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "arrival rates must lie in (0, 1), got {x}"
        )));
    }
    let margin = capacity_margin(g, space, nu, 1.0)?;
    if margin <= CAPACITY_TOL {
        return Err(Error::Infeasible { margin });
    }
    Ok(())
}

/// Finds `lambda` with `s(lambda) = nu` by maximizing `F(.; nu)`, starting
/// from `r_i = log(nu_i / (1 - nu_i))`.
pub fn solve_fugacities(
    g: &InterferenceGraph,
    space: &ScheduleSpace,
    nu: &[f64],
    opts: SolverOptions,
) -> Result<FugacitySolution> {
    check_target(g, space, nu, &opts)?;
    let r0: Vec<f64> = nu
        .iter()
        .map(|&x| (math::ln(x) - math::ln_1p(-x)).clamp(-opts.r_bound, opts.r_bound))
        .collect();
    ascend(space, nu, r0, &opts)
}

/// Same as [`solve_fugacities`] from a caller-supplied start.
pub fn solve_from(
    g: &InterferenceGraph,
    space: &ScheduleSpace,
    nu: &[f64],
    r0: &[f64],
    opts: SolverOptions,
) -> Result<FugacitySolution> {
    check_target(g, space, nu, &opts)?;
    if r0.len() != nu.len() {
        return Err(Error::Dimension {
            expected: nu.len(),
            got: r0.len(),
        });
    }
    let r0 = r0.iter().map(|x| x.clamp(-opts.r_bound, opts.r_bound)).collect();
    ascend(space, nu, r0, &opts)
}

/// Projected gradient ascent with Barzilai-Borwein trial steps and Armijo
/// backtracking.
fn ascend(space: &ScheduleSpace, nu: &[f64], mut r: Vec<f64>, opts: &SolverOptions) -> Result<FugacitySolution> {
    let n = r.len();
    let eval = |r: &[f64]| {
        let (lse, s) = log_partition_and_rates(space, r);
        let f = nu.iter().zip(r).map(|(a, b)| a * b).sum::<f64>() - lse;
        let g: Vec<f64> = nu.iter().zip(&s).map(|(a, b)| a - b).collect();
        (f, g, s)
    };
    let (mut f, mut g, mut s) = eval(&r);
    let mut step = 1.0;
    let mut iterations = 0u64;
    let mut r_new = vec![0.0; n];
    while inf_norm(&g) > opts.tol {
        if iterations == opts.max_iters {
            return Err(Error::NotConverged {
                iterations,
                grad_norm: inf_norm(&g),
            });
        }
        iterations += 1;
        let mut t = step;
        let accepted = loop {
            for i in 0..n {
                r_new[i] = (r[i] + t * g[i]).clamp(-opts.r_bound, opts.r_bound);
            }
            let (f_new, g_new, s_new) = eval(&r_new);
            let ascent: f64 = (0..n).map(|i| g[i] * (r_new[i] - r[i])).sum();
            if f_new >= f + 1e-4 * ascent {
                break Some((f_new, g_new, s_new));
            }
            // Near the optimum F is flat to rounding; accept any step that
            // still shrinks the gradient.
            if f_new >= f - 8.0 * f64::EPSILON * (1.0 + math::abs(f)) && inf_norm(&g_new) < inf_norm(&g) {
                break Some((f_new, g_new, s_new));
            }
            t *= 0.5;
            if t < 1e-30 {
                break None;
            }
        };
        let Some((f_new, g_new, s_new)) = accepted else {
            return Err(Error::NotConverged {
                iterations,
                grad_norm: inf_norm(&g),
            });
        };
        // BB1 step for concave maximization: |dr|^2 / (-dr . dg).
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let dr = r_new[i] - r[i];
            num += dr * dr;
            den -= dr * (g_new[i] - g[i]);
        }
        step = if den > 0.0 { (num / den).clamp(1e-10, 1e10) } else { 1.0 };
        r.copy_from_slice(&r_new);
        f = f_new;
        g = g_new;
        s = s_new;
    }
    Ok(FugacitySolution {
        fugacity: FugacityVector::from_log(&r)?,
        grad_norm: inf_norm(&g),
        r,
        service: s,
        objective: f,
        iterations,
    })
}

/// Outcome of checking the fugacity bounds for `nu in rho * interior(Lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FugacityBoundReport {
    pub chi: usize,
    pub rho: f64,
    pub margin: f64,
    /// `rho <= 1/chi`, `rho < 1` and `nu in rho * interior(Lambda)`.
    pub precondition: bool,
    /// `rho / (1 - rho)`.
    pub upper: f64,
    pub max_lambda: f64,
    pub upper_holds: bool,
    /// `(nu_min, min_lambda, holds)` when a floor on the arrival rates was
    /// given and all rates meet it.
    pub lower: Option<(f64, f64, bool)>,
    pub solution: FugacitySolution,
}

pub fn fugacity_bound_check(
    g: &InterferenceGraph,
    space: &ScheduleSpace,
    nu: &[f64],
    rho: f64,
    nu_min: Option<f64>,
    opts: SolverOptions,
) -> Result<FugacityBoundReport> {
    let chi = g.interference_degree().max;
    let margin = capacity_margin(g, space, nu, rho)?;
    let precondition = rho < 1.0 && (chi == 0 || rho * chi as f64 <= 1.0 + 1e-15) && margin > CAPACITY_TOL;
    let solution = solve_fugacities(g, space, nu, opts)?;
    let lambda = solution.fugacity.lambda();
    let max_lambda = lambda.iter().copied().fold(0.0, f64::max);
    let min_lambda = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = rho / (1.0 - rho);
    let lower = nu_min
        .filter(|&m| nu.iter().all(|&x| x >= m))
        .map(|m| (m, min_lambda, min_lambda >= m * (1.0 - 1e-9)));
    Ok(FugacityBoundReport {
        chi,
        rho,
        margin,
        precondition,
        upper,
        max_lambda,
        upper_holds: max_lambda <= upper * (1.0 + 1e-9),
        lower,
        solution,
    })
}
