//! Queue dynamics under PGD-CSMA with fixed fugacities and under the
//! queue-driven frame update, plus the matching bounds and parameters.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::dynamics::{apply_decision, DecisionRule, FugacityVector};
use crate::error::{Error, Result};
use crate::fugacity::{capacity_margin, CAPACITY_TOL};
use crate::graph::{bit, InterferenceGraph, Schedule, ScheduleSpace};
use crate::math;
use crate::rng::SimStreams;
use crate::stats::WindowedTrace;

/// `Q <- [Q + a - sigma]_+` componentwise, with `a` and `sigma` as link masks.
#[inline]
pub fn queue_step(q: &mut [u64], a: u64, sigma: u64) {
    for (i, qi) in q.iter_mut().enumerate() {
        let b = bit(i);
        let up = (a & b != 0) as u64;
        let down = (sigma & b != 0) as u64;
        *qi = (*qi + up).saturating_sub(down);
    }
}

/// Independent Bernoulli(`nu_i`) arrivals. One uniform is drawn per link
/// whatever its rate, so streams stay aligned across rate vectors.
#[inline]
pub fn sample_arrivals<R: Rng + ?Sized>(nu: &[f64], rng: &mut R) -> u64 {
    let mut a = 0u64;
    for (i, &p) in nu.iter().enumerate() {
        if rng.gen::<f64>() < p {
            a |= bit(i);
        }
    }
    a
}

/// `4 (T_mix + 1) / (s - nu)^2`.
pub fn per_queue_bound(bound_tmix: u64, s: f64, nu: f64) -> Result<f64> {
    if !(s > nu) {
        return Err(Error::Inapplicable(format!(
            "queue bound needs service rate above arrival rate (s = {s}, nu = {nu})"
        )));
    }
    let gap = s - nu;
    Ok(4.0 * (bound_tmix as f64 + 1.0) / (gap * gap))
}

fn check_rates(n: usize, nu: &[f64]) -> Result<()> {
    if nu.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: nu.len(),
        });
    }
    if let Some(x) = nu.iter().find(|x| !(**x >= 0.0 && **x <= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "arrival rates must lie in [0, 1], got {x}"
        )));
    }
    Ok(())
}

/// One slot as seen by an observer: state after the slot's update.
#[derive(Debug, Clone, Copy)]
pub struct SlotRecord<'a> {
    pub slot: u64,
    pub queues: &'a [u64],
    pub arrivals: u64,
    pub schedule: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedRun {
    /// Measured slots after warmup.
    pub horizon: u64,
    pub warmup: u64,
    /// Window length for the stability series and the path-wise recursion
    /// check.
    pub window: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedSummary {
    pub run: FixedRun,
    pub mean_queue: Vec<f64>,
    pub service_rate: Vec<f64>,
    pub arrival_rate: Vec<f64>,
    pub max_queue: Vec<u64>,
    pub final_queue: Vec<u64>,
    pub final_schedule: Schedule,
    /// Window means of `sum_i Q_i` over the measured slots.
    pub total_windows: WindowedTrace,
    pub link_windows: Vec<WindowedTrace>,
    /// Slots where some queue moved by more than one.
    pub step_violations: u64,
    /// Windows where `Q(t + W) <= [Q(t) - served]_+ + arrived` failed.
    pub recursion_violations: u64,
}

/// Arrivals, then the PGD slot, then the joint queue update, every slot.
#[allow(clippy::too_many_arguments)]
pub fn simulate_fixed<R: Rng>(
    g: &InterferenceGraph,
    fug: &FugacityVector,
    rule: &DecisionRule,
    nu: &[f64],
    run: FixedRun,
    initial: &Schedule,
    streams: &mut SimStreams<R>,
) -> Result<FixedSummary> {
    simulate_fixed_observed(g, fug, rule, nu, run, initial, streams, |_| {})
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_fixed_observed<R: Rng>(
    g: &InterferenceGraph,
    fug: &FugacityVector,
    rule: &DecisionRule,
    nu: &[f64],
    run: FixedRun,
    initial: &Schedule,
    streams: &mut SimStreams<R>,
    mut observe: impl FnMut(&SlotRecord<'_>),
) -> Result<FixedSummary> {
    let n = g.n();
    check_rates(n, nu)?;
    for got in [fug.len(), rule.n(), initial.len()] {
        if got != n {
            return Err(Error::Dimension { expected: n, got });
        }
    }
    rule.require_irreducible()?;
    if !g.is_feasible(initial)? {
        return Err(Error::Contract(format!("initial schedule {initial} is not feasible")));
    }
    let mut total_windows = WindowedTrace::new(run.window)?;
    let mut link_windows = vec![WindowedTrace::new(run.window)?; n];
    let mut q = vec![0u64; n];
    let mut prev = vec![0u64; n];
    let mut sigma = initial.bits();
    let mut sum_q = vec![0u64; n];
    let mut served = vec![0u64; n];
    let mut arrived = vec![0u64; n];
    let mut max_queue = vec![0u64; n];
    let mut block_start = vec![0u64; n];
    let mut block_served = vec![0u64; n];
    let mut block_arrived = vec![0u64; n];
    let mut block_len = 0u64;
    let mut step_violations = 0u64;
    let mut recursion_violations = 0u64;
    let total = run.warmup + run.horizon;
    for slot in 1..=total {
        let a = sample_arrivals(nu, &mut streams.arrivals);
        let m = rule.sample(g, &mut streams.kernel.intent);
        sigma = apply_decision(g, sigma, m, fug, &mut streams.kernel.coins);
        prev.copy_from_slice(&q);
        queue_step(&mut q, a, sigma);
        if q.iter().zip(&prev).any(|(x, y)| x.abs_diff(*y) > 1) {
            step_violations += 1;
        }
        observe(&SlotRecord {
            slot,
            queues: &q,
            arrivals: a,
            schedule: sigma,
        });
        if slot <= run.warmup {
            if slot == run.warmup {
                block_start.copy_from_slice(&q);
            }
            continue;
        }
        let mut tot = 0u64;
        for i in 0..n {
            let b = bit(i);
            sum_q[i] += q[i];
            tot += q[i];
            max_queue[i] = max_queue[i].max(q[i]);
            let s = (sigma & b != 0) as u64;
            let arr = (a & b != 0) as u64;
            served[i] += s;
            arrived[i] += arr;
            block_served[i] += s;
            block_arrived[i] += arr;
            link_windows[i].push(q[i] as f64);
        }
        total_windows.push(tot as f64);
        block_len += 1;
        if block_len == run.window {
            for i in 0..n {
                let cap = block_start[i].saturating_sub(block_served[i]) + block_arrived[i];
                if q[i] > cap {
                    recursion_violations += 1;
                }
            }
            block_start.copy_from_slice(&q);
            block_served.iter_mut().for_each(|x| *x = 0);
            block_arrived.iter_mut().for_each(|x| *x = 0);
            block_len = 0;
        }
    }
    let h = run.horizon.max(1) as f64;
    Ok(FixedSummary {
        run,
        mean_queue: sum_q.iter().map(|&x| x as f64 / h).collect(),
        service_rate: served.iter().map(|&x| x as f64 / h).collect(),
        arrival_rate: arrived.iter().map(|&x| x as f64 / h).collect(),
        max_queue,
        final_queue: q,
        final_schedule: Schedule::from_bits(n, sigma)?,
        total_windows,
        link_windows,
        step_violations,
        recursion_violations,
    })
}

/// `delta = int_{B_eps}^{B} [logistic(r) - logistic(B_eps)] dr` in closed
/// form.
pub fn algorithm1_delta(b: f64, b_eps: f64) -> f64 {
    math::softplus(b) - math::softplus(b_eps) - (b - b_eps) * math::logistic(b_eps)
}

/// Largest frame length accepted; beyond this slot counts lose integer
/// precision in `f64`.
pub const MAX_FRAME_LEN: f64 = 9.007_199_254_740_992e15;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub n: usize,
    pub b: f64,
    pub b_eps: f64,
    /// `B - B_eps`.
    pub epsilon: f64,
    pub nu_min: f64,
    /// `log nu_min`.
    pub r_min: f64,
    pub delta: f64,
    /// `delta / n`.
    pub alpha: f64,
    pub bound_tmix: u64,
    /// Frame length in use.
    pub frame_len: u64,
    /// `ceil(T_mix 4 n (B - r_min + alpha) / delta)`.
    pub exact_frame_len: u64,
    /// Set when `frame_len` was overridden.
    pub non_paper_parameters: bool,
}

pub fn algorithm1_params(n: usize, b: f64, b_eps: f64, nu_min: f64, bound_tmix: u64) -> Result<AdaptiveConfig> {
    if n == 0 || bound_tmix == 0 {
        return Err(Error::InvalidParameter(
            "need n >= 1 and a positive mixing bound".into(),
        ));
    }
    if !(b.is_finite() && b_eps.is_finite() && b_eps < b) {
        return Err(Error::InvalidParameter(format!(
            "need finite B_eps < B, got B = {b}, B_eps = {b_eps}"
        )));
    }
    if !(nu_min > 0.0 && nu_min < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "nu_min must lie in (0, 1), got {nu_min}"
        )));
    }
    let delta = algorithm1_delta(b, b_eps);
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} is not positive; B_eps is too close to B"
        )));
    }
    let nf = n as f64;
    let alpha = delta / nf;
    let r_min = math::ln(nu_min);
    let t = math::ceil(bound_tmix as f64 * 4.0 * nf * (b - r_min + alpha) / delta);
    if !(t.is_finite() && t <= MAX_FRAME_LEN) {
        return Err(Error::InvalidParameter(format!(
            "frame length {t} is too large (delta = {delta})"
        )));
    }
    let t = (t as u64).max(1);
    Ok(AdaptiveConfig {
        n,
        b,
        b_eps,
        epsilon: b - b_eps,
        nu_min,
        r_min,
        delta,
        alpha,
        bound_tmix,
        frame_len: t,
        exact_frame_len: t,
        non_paper_parameters: false,
    })
}

impl AdaptiveConfig {
    /// Replaces the frame length and marks the configuration as not
    /// following the exact parameterization.
    pub fn with_frame_len(mut self, t: u64) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidParameter("frame length must be positive".into()));
        }
        self.non_paper_parameters = t != self.exact_frame_len;
        self.frame_len = t;
        Ok(self)
    }

    /// `r_k = (alpha / T) Q_k + r_min - alpha`.
    #[inline]
    pub fn log_fugacity(&self, q: u64) -> f64 {
        self.alpha / self.frame_len as f64 * q as f64 + self.r_min - self.alpha
    }

    /// `exp(min(r, B))`.
    #[inline]
    pub fn fugacity(&self, r: f64) -> f64 {
        math::exp(r.min(self.b))
    }

    /// Queue lengths whose log-fugacity equals `r_star`: the backlog the
    /// update rule holds in equilibrium.
    pub fn equilibrium_backlog(&self, r_star: &[f64]) -> Vec<u64> {
        r_star
            .iter()
            .map(|&r| {
                let q = (r - self.r_min + self.alpha) * self.frame_len as f64 / self.alpha;
                math::floor(q.max(0.0) + 0.5) as u64
            })
            .collect()
    }
}

/// Assumptions of the adaptive scheme for a given rate vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptivePreconditions {
    /// `logistic(B_eps)`.
    pub rho: f64,
    pub margin: f64,
    pub interior: bool,
    pub nu_min_ok: bool,
    /// `exp(B) <= 1 / (chi - 1)`, vacuous for `chi <= 1`.
    pub cap_ok: bool,
    pub chi: usize,
}

impl AdaptivePreconditions {
    pub fn all(&self) -> bool {
        self.interior && self.nu_min_ok && self.cap_ok
    }
}

pub fn adaptive_preconditions(
    g: &InterferenceGraph,
    space: &ScheduleSpace,
    nu: &[f64],
    cfg: &AdaptiveConfig,
) -> Result<AdaptivePreconditions> {
    let rho = math::logistic(cfg.b_eps);
    let margin = capacity_margin(g, space, nu, rho)?;
    let chi = g.interference_degree().max;
    let cap_ok = chi <= 1 || math::exp(cfg.b) <= 1.0 / (chi as f64 - 1.0);
    Ok(AdaptivePreconditions {
        rho,
        margin,
        interior: margin > CAPACITY_TOL,
        nu_min_ok: nu.iter().all(|&x| x >= cfg.nu_min),
        cap_ok,
        chi,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub index: u64,
    /// `Q[j]`, the queues at the start of the frame.
    pub queues: Vec<u64>,
    pub r: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Mean of `sum_k Q_k` over the frame's slots.
    pub mean_total_queue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveSummary {
    pub config: AdaptiveConfig,
    pub frames: Vec<FrameRecord>,
    /// Time-average `Q_k` over all slots.
    pub mean_queue: Vec<f64>,
    pub final_queue: Vec<u64>,
    pub max_queue: Vec<u64>,
    /// Frames where some `lambda_k > exp(B)`.
    pub cap_violations: u64,
    /// Frames where some `r_k < r_min - alpha`.
    pub floor_violations: u64,
    pub step_violations: u64,
}

impl AdaptiveSummary {
    /// `sum_k` of the time-average queue lengths.
    pub fn total_mean_queue(&self) -> f64 {
        self.mean_queue.iter().sum()
    }

    pub fn frame_means(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.mean_total_queue).collect()
    }
}

/// Runs `frames` frames of the queue-driven update. `initial_queues`
/// defaults to all zeros, which puts every `r_k[0]` at `r_min - alpha`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_adaptive<R: Rng>(
    g: &InterferenceGraph,
    rule: &DecisionRule,
    nu: &[f64],
    cfg: &AdaptiveConfig,
    frames: u64,
    initial_queues: Option<&[u64]>,
    streams: &mut SimStreams<R>,
) -> Result<AdaptiveSummary> {
    let n = g.n();
    check_rates(n, nu)?;
    if cfg.n != n || rule.n() != n {
        return Err(Error::Dimension {
            expected: n,
            got: if cfg.n != n { cfg.n } else { rule.n() },
        });
    }
    rule.require_irreducible()?;
    let mut q = match initial_queues {
        Some(q0) if q0.len() != n => {
            return Err(Error::Dimension {
                expected: n,
                got: q0.len(),
            })
        }
        Some(q0) => q0.to_vec(),
        None => vec![0; n],
    };
    let cap = math::exp(cfg.b);
    let floor = cfg.r_min - cfg.alpha;
    let t_len = cfg.frame_len;
    let mut sigma = 0u64;
    let mut sum_q = vec![0u128; n];
    let mut max_queue = q.clone();
    let mut prev = vec![0u64; n];
    let mut records = Vec::with_capacity(frames as usize);
    let (mut cap_violations, mut floor_violations, mut step_violations) = (0u64, 0u64, 0u64);
    for j in 0..frames {
        let r: Vec<f64> = q.iter().map(|&x| cfg.log_fugacity(x)).collect();
        let lambda: Vec<f64> = r.iter().map(|&x| cfg.fugacity(x)).collect();
        if lambda.iter().any(|&l| l > cap) {
            cap_violations += 1;
        }
        if r.iter().any(|&x| x < floor) {
            floor_violations += 1;
        }
        let fug = FugacityVector::new(lambda.clone())?;
        let start = q.clone();
        let mut frame_sum = 0u128;
        for _ in 0..t_len {
            let a = sample_arrivals(nu, &mut streams.arrivals);
            let m = rule.sample(g, &mut streams.kernel.intent);
            sigma = apply_decision(g, sigma, m, &fug, &mut streams.kernel.coins);
            prev.copy_from_slice(&q);
            queue_step(&mut q, a, sigma);
            for i in 0..n {
                if q[i].abs_diff(prev[i]) > 1 {
                    step_violations += 1;
                }
                sum_q[i] += q[i] as u128;
                frame_sum += q[i] as u128;
                max_queue[i] = max_queue[i].max(q[i]);
            }
        }
        records.push(FrameRecord {
            index: j,
            queues: start,
            r,
            lambda,
            mean_total_queue: frame_sum as f64 / t_len as f64,
        });
    }
    let slots = (frames * t_len).max(1) as f64;
    Ok(AdaptiveSummary {
        config: cfg.clone(),
        frames: records,
        mean_queue: sum_q.iter().map(|&x| x as f64 / slots).collect(),
        final_queue: q,
        max_queue,
        cap_violations,
        floor_violations,
        step_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn queue_step_examples() {
        let mut q = [5, 0, 0];
        queue_step(&mut q, 0b101, 0b111);
        assert_eq!(q, [5, 0, 0]);
        let mut q = [0];
        queue_step(&mut q, 0b0, 0b1);
        assert_eq!(q, [0]);
        queue_step(&mut q, 0b1, 0b1);
        assert_eq!(q, [0]);
        queue_step(&mut q, 0b1, 0b0);
        assert_eq!(q, [1]);
    }

    #[test]
    fn degenerate_arrival_rates() {
        let mut rng = crate::rng::stream(1, 0, crate::rng::StreamTag::Arrivals);
        for _ in 0..1000 {
            assert_eq!(sample_arrivals(&[0.0, 1.0, 0.0], &mut rng), 0b010);
        }
    }

    #[test]
    fn per_queue_bound_examples() {
        assert!((per_queue_bound(131, 0.3, 0.2).unwrap() - 52_800.0).abs() < 1e-6);
        assert!(per_queue_bound(131, 0.2, 0.2).is_err());
        let a = per_queue_bound(10, 0.5, 0.4).unwrap();
        let b = per_queue_bound(10, 0.6, 0.4).unwrap();
        assert!((a / b - 4.0).abs() < 1e-9);
    }

    #[test]
    fn delta_and_frame_length() {
        let d = algorithm1_delta(0.0, -0.2);
        assert!((d - 0.004_975_110_640_849).abs() < 1e-14);
        let cfg = algorithm1_params(3, 0.0, -0.2, 0.1, 10).unwrap();
        assert!((cfg.alpha - d / 3.0).abs() < 1e-18);
        let expect = math::ceil(10.0 * 12.0 * (0.0 - math::ln(0.1) + d / 3.0) / d) as u64;
        assert_eq!(cfg.frame_len, expect);
        assert!((cfg.log_fugacity(0) - (cfg.r_min - cfg.alpha)).abs() < 1e-15);
        assert!(algorithm1_params(3, 0.0, 0.0, 0.1, 10).is_err());
        assert!(algorithm1_params(3, 0.0, -1e-300, 0.1, 10).is_err());
        let o = cfg.clone().with_frame_len(100).unwrap();
        assert!(o.non_paper_parameters);
        assert!(
            !cfg.clone()
                .with_frame_len(cfg.exact_frame_len)
                .unwrap()
                .non_paper_parameters
        );
    }

    #[test]
    fn equilibrium_backlog_inverts_update() {
        let cfg = algorithm1_params(3, 0.0, -0.2, 0.05, 5).unwrap();
        let r_star = [-1.0, -2.0, cfg.r_min - cfg.alpha - 1.0];
        let q = cfg.equilibrium_backlog(&r_star);
        assert!((cfg.log_fugacity(q[0]) + 1.0).abs() < 1e-6);
        assert!((cfg.log_fugacity(q[1]) + 2.0).abs() < 1e-6);
        assert_eq!(q[2], 0);
    }

    #[test]
    fn zero_arrivals_keep_queues_empty() {
        let g = InterferenceGraph::path(3).unwrap();
        let fug = FugacityVector::uniform(3, 1.0).unwrap();
        let rule = DecisionRule::intent_uniform(&g, 0.5).unwrap();
        let mut streams = SimStreams::seeded(5, 0);
        let run = FixedRun {
            horizon: 10_000,
            warmup: 100,
            window: 100,
        };
        let s = simulate_fixed(&g, &fug, &rule, &[0.0; 3], run, &Schedule::empty(3), &mut streams).unwrap();
        assert_eq!(s.max_queue, vec![0, 0, 0]);
        assert_eq!(s.recursion_violations, 0);
        assert_eq!(s.total_windows.means().len(), 100);
    }

    #[test]
    fn adaptive_respects_cap_and_floor() {
        let g = InterferenceGraph::path(3).unwrap();
        let rule = DecisionRule::intent_uniform(&g, 0.5).unwrap();
        let cfg = algorithm1_params(3, 0.0, -0.2, 0.05, 5)
            .unwrap()
            .with_frame_len(50)
            .unwrap();
        let mut streams = SimStreams::seeded(9, 0);
        let s = simulate_adaptive(&g, &rule, &[0.3, 0.3, 0.3], &cfg, 40, None, &mut streams).unwrap();
        assert_eq!(s.frames.len(), 40);
        assert_eq!(s.cap_violations + s.floor_violations + s.step_violations, 0);
        assert!(s.frames[0]
            .r
            .iter()
            .all(|&r| (r - (cfg.r_min - cfg.alpha)).abs() < 1e-15));
    }
}
