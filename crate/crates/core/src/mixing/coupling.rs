use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::bounds::WeightFunction;
use crate::dynamics::{DecisionRule, FugacityVector};
use crate::error::{Error, Result};
use crate::graph::{bit, bits, InterferenceGraph, Schedule, ScheduleSpace, MAX_LINKS};
use crate::rng::KernelStreams;

/// `Phi(sigma, eta) = sum_{v in sigma xor eta} f(v)`.
pub fn weighted_hamming(w: &WeightFunction, sigma: u64, eta: u64) -> f64 {
    bits(sigma ^ eta).map(|v| w.get(v)).sum()
}

/// All unordered pairs `(i, j, v)` of schedules in `space` that differ
/// exactly at link `v`, with `space[i]` the one without `v`.
pub fn adjacent_pairs(space: &ScheduleSpace) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (i, &mask) in space.masks().iter().enumerate() {
        for v in 0..space.n() {
            if mask & bit(v) != 0 {
                continue;
            }
            if let Some(j) = space.index_of_bits(mask | bit(v)) {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Exact one-step expected change of `Phi` for an adjacent pair under the
/// identity coupling, next to the contraction bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionCheck {
    pub vertex: usize,
    pub exact: f64,
    /// `-q_v f(v) + sum_{w in N_v} q_w p_w f(w)`.
    pub bound: f64,
}

impl ContractionCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.exact <= self.bound + tol
    }
}

/// Under the identity coupling a link `u` is in the decision schedule with
/// probability `q_u`; if so it ends up active in both chains iff it is
/// unblocked there and the shared coin lands below `p_u`. Otherwise it keeps
/// its state. Summing over `u` gives the exact expectation.
pub fn contraction_check(
    g: &InterferenceGraph,
    fug: &FugacityVector,
    rule: &DecisionRule,
    w: &WeightFunction,
    sigma: &Schedule,
    eta: &Schedule,
) -> Result<ContractionCheck> {
    let n = g.n();
    for got in [fug.len(), rule.n(), w.len(), sigma.len(), eta.len()] {
        if got != n {
            return Err(Error::Dimension { expected: n, got });
        }
    }
    if !g.is_feasible(sigma)? || !g.is_feasible(eta)? {
        return Err(Error::Contract("contraction check needs feasible schedules".into()));
    }
    let diff = sigma.bits() ^ eta.bits();
    if diff.count_ones() != 1 {
        return Err(Error::Contract(format!("schedules {sigma} and {eta} are not adjacent")));
    }
    let v = diff.trailing_zeros() as usize;
    let q = rule.inclusion();
    let p = fug.activation();
    let (s, e) = (sigma.bits(), eta.bits());
    let mut exact = 0.0;
    for u in 0..n {
        let ub_s = g.neighbor_mask(u) & s == 0;
        let ub_e = g.neighbor_mask(u) & e == 0;
        let now = if diff & bit(u) != 0 { 1.0 } else { 0.0 };
        let after = if ub_s != ub_e { p[u] } else { 0.0 };
        exact += q[u] * w.get(u) * (after - now);
    }
    let bound = -q[v] * w.get(v) + g.neighbors(v).iter().map(|&u| q[u] * p[u] * w.get(u)).sum::<f64>();
    Ok(ContractionCheck {
        vertex: v,
        exact,
        bound,
    })
}

/// A far-apart start pair: `X0` is a greedy maximal independent set in
/// ascending link order, `Y0` a greedy independent set over the remaining
/// links.
pub fn worst_case_start(g: &InterferenceGraph) -> (Schedule, Schedule) {
    let x = g.greedy_independent(g.all_links());
    let y = g.greedy_independent(g.all_links() & !x);
    let n = g.n();
    (
        Schedule::from_bits(n, x).expect("greedy set fits"),
        Schedule::from_bits(n, y).expect("greedy set fits"),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// Same decision schedule and the same coin at every selected link.
    #[default]
    Identity,
    /// On a complete graph, when the chains sit at distinct single links
    /// `i1` and `i2` their roles are swapped in the decision schedule
    /// (selecting `i1` in one chain selects `i2` in the other). Falls back to
    /// the identity coupling in every other configuration.
    CompleteSwap,
}

fn apply_with_coins(g: &InterferenceGraph, sigma: u64, m: u64, fug: &FugacityVector, coins: &[f64; MAX_LINKS]) -> u64 {
    let p = fug.activation();
    let mut next = sigma & !m;
    for v in bits(m) {
        if g.neighbor_mask(v) & sigma == 0 && coins[v] < p[v] {
            next |= bit(v);
        }
    }
    next
}

fn swap_bits(mask: u64, i: usize, j: usize) -> u64 {
    let bi = mask & bit(i) != 0;
    let bj = mask & bit(j) != 0;
    let mut out = mask & !(bit(i) | bit(j));
    if bi {
        out |= bit(j);
    }
    if bj {
        out |= bit(i);
    }
    out
}

/// One coupled slot. Randomness is drawn exactly as a single chain would
/// draw it, so the `x` marginal is an ordinary PGD trajectory.
pub fn coupled_step<R: Rng>(
    g: &InterferenceGraph,
    fug: &FugacityVector,
    rule: &DecisionRule,
    coupling: Coupling,
    x: u64,
    y: u64,
    streams: &mut KernelStreams<R>,
) -> (u64, u64) {
    let m = rule.sample(g, &mut streams.intent);
    let mut coins = [0.0f64; MAX_LINKS];
    for v in bits(m) {
        coins[v] = streams.coins.gen::<f64>();
    }
    let nx = apply_with_coins(g, x, m, fug, &coins);
    let swap = match coupling {
        Coupling::CompleteSwap if x != y && x.count_ones() == 1 && y.count_ones() == 1 => {
            let (i1, i2) = (x.trailing_zeros() as usize, y.trailing_zeros() as usize);
            let q = rule.inclusion();
            // Swapping is a valid marginal coupling only if both links are
            // selected equally often.
            (g.is_complete() && q[i1] == q[i2]).then_some((i1, i2))
        }
        _ => None,
    };
    let ny = match swap {
        Some((i1, i2)) => {
            let my = swap_bits(m, i1, i2);
            let mut cy = coins;
            cy.swap(i1, i2);
            apply_with_coins(g, y, my, fug, &cy)
        }
        None => apply_with_coins(g, y, m, fug, &coins),
    };
    (nx, ny)
}

/// First slot at which the coupled chains agree, or `None` if they have
/// not met by `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn coalescence_time<R: Rng>(
    g: &InterferenceGraph,
    fug: &FugacityVector,
    rule: &DecisionRule,
    coupling: Coupling,
    x0: &Schedule,
    y0: &Schedule,
    horizon: u64,
    streams: &mut KernelStreams<R>,
) -> Option<u64> {
    let (mut x, mut y) = (x0.bits(), y0.bits());
    let mut t = 0;
    while x != y {
        if t == horizon {
            return None;
        }
        (x, y) = coupled_step(g, fug, rule, coupling, x, y, streams);
        t += 1;
    }
    Some(t)
}

/// Histogram of coalescence times. Merging is associative and commutative,
/// so trials can be split across workers in any way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalescenceReport {
    pub horizon: u64,
    /// `counts[t]` trials coalesced exactly at slot `t`.
    pub counts: Vec<u64>,
    pub uncoalesced: u64,
}

impl CoalescenceReport {
    pub fn new(horizon: u64) -> Self {
        Self {
            horizon,
            counts: vec![0; horizon as usize + 1],
            uncoalesced: 0,
        }
    }

    pub fn record(&mut self, outcome: Option<u64>) {
        match outcome {
            Some(t) => self.counts[t as usize] += 1,
            None => self.uncoalesced += 1,
        }
    }

    pub fn merge(mut self, other: &CoalescenceReport) -> Result<Self> {
        if self.horizon != other.horizon {
            return Err(Error::Contract("cannot merge reports with different horizons".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.uncoalesced += other.uncoalesced;
        Ok(self)
    }

    pub fn trials(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.uncoalesced
    }

    pub fn uncoalesced_fraction(&self) -> f64 {
        let n = self.trials();
        if n == 0 {
            0.0
        } else {
            self.uncoalesced as f64 / n as f64
        }
    }

    /// Mean over the trials that coalesced.
    pub fn mean_coalesced(&self) -> Option<f64> {
        let k: u64 = self.counts.iter().sum();
        if k == 0 {
            return None;
        }
        let s: f64 = self.counts.iter().enumerate().map(|(t, &c)| t as f64 * c as f64).sum();
        Some(s / k as f64)
    }

    /// Smallest `t` with at least a `level` fraction of all trials coalesced
    /// by `t`; `None` if that needs more than the horizon.
    pub fn quantile(&self, level: f64) -> Option<u64> {
        let n = self.trials();
        if n == 0 {
            return None;
        }
        let need = level * n as f64;
        let mut acc = 0u64;
        for (t, &c) in self.counts.iter().enumerate() {
            acc += c;
            if acc as f64 >= need {
                return Some(t as u64);
            }
        }
        None
    }

    pub fn median(&self) -> Option<u64> {
        self.quantile(0.5)
    }
}

/// Runs trials `first..first + count`; trial `k` uses
/// `KernelStreams::seeded(master_seed, k)`.
#[allow(clippy::too_many_arguments)]
pub fn coalescence_estimate(
    g: &InterferenceGraph,
    fug: &FugacityVector,
    rule: &DecisionRule,
    coupling: Coupling,
    start: (&Schedule, &Schedule),
    trials: core::ops::Range<u64>,
    horizon: u64,
    master_seed: u64,
) -> Result<CoalescenceReport> {
    rule.require_irreducible()?;
    for got in [fug.len(), rule.n(), start.0.len(), start.1.len()] {
        if got != g.n() {
            return Err(Error::Dimension { expected: g.n(), got });
        }
    }
    if !g.is_feasible(start.0)? || !g.is_feasible(start.1)? {
        return Err(Error::Contract("start schedules must be feasible".into()));
    }
    let mut report = CoalescenceReport::new(horizon);
    for k in trials {
        let mut streams = KernelStreams::seeded(master_seed, k);
        report.record(coalescence_time(
            g,
            fug,
            rule,
            coupling,
            start.0,
            start.1,
            horizon,
            &mut streams,
        ));
    }
    Ok(report)
}
