//! The parallel Glauber dynamics kernel.
//!
//! In every slot a decision schedule `m` (an independent set) is drawn. Each
//! link in `m` whose neighbours were all silent in the previous slot turns on
//! with probability `lambda / (1 + lambda)` and off otherwise; a link in `m`
//! with an active neighbour turns off; links outside `m` keep their state.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{bit, bits, EnumerationLimit, InterferenceGraph, Schedule, ScheduleSpace};
use crate::linalg::DenseMatrix;
use crate::math;
use crate::rng::KernelStreams;

/// Per-link fugacities `lambda_v > 0` and activation probabilities
/// `p_v = lambda_v / (1 + lambda_v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FugacityVector {
    lambda: Vec<f64>,
    activation: Vec<f64>,
}

impl FugacityVector {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if let Some((i, &l)) = lambda.iter().enumerate().find(|(_, &l)| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "fugacity of link {i} must be positive and finite, got {l}"
            )));
        }
        let activation = lambda.iter().map(|&l| l / (1.0 + l)).collect();
        Ok(Self { lambda, activation })
    }

    pub fn uniform(n: usize, lambda: f64) -> Result<Self> {
        Self::new(vec![lambda; n])
    }

    /// Fugacities `exp(r_v)` from log-fugacities.
    pub fn from_log(r: &[f64]) -> Result<Self> {
        let lambda: Vec<f64> = r.iter().map(|&x| math::exp(x)).collect();
        let activation = r.iter().map(|&x| math::logistic(x)).collect();
        if let Some((i, l)) = lambda.iter().enumerate().find(|(_, &l)| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "log-fugacity of link {i} gives lambda = {l}"
            )));
        }
        Ok(Self { lambda, activation })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    #[inline]
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    #[inline]
    pub fn activation(&self) -> &[f64] {
        &self.activation
    }

    pub fn log_lambda(&self) -> Vec<f64> {
        self.lambda.iter().map(|&l| math::ln(l)).collect()
    }

    pub fn max(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::max)
    }
}

/// How decision schedules are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionKind {
    /// Each link sends an INTENT message with probability `a_v`; a link is
    /// selected iff it sent one and none of its neighbours did.
    Intent(Vec<f64>),
    /// An explicit distribution `{q_m}` over independent sets, as
    /// `(mask, weight)` pairs sorted by mask.
    Explicit(Vec<(u64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRule {
    n: usize,
    kind: DecisionKind,
    inclusion: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DecisionRule {
    pub fn intent(g: &InterferenceGraph, a: Vec<f64>) -> Result<Self> {
        if a.len() != g.n() {
            return Err(Error::Dimension {
                expected: g.n(),
                got: a.len(),
            });
        }
        if let Some((i, &x)) = a.iter().enumerate().find(|(_, &x)| !(x > 0.0 && x < 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "INTENT probability of link {i} must lie in (0, 1), got {x}"
            )));
        }
        let inclusion = (0..g.n())
            .map(|v| a[v] * g.neighbors(v).iter().map(|&w| 1.0 - a[w]).product::<f64>())
            .collect();
        Ok(Self {
            n: g.n(),
            kind: DecisionKind::Intent(a),
            inclusion,
            cumulative: Vec::new(),
        })
    }

    pub fn intent_uniform(g: &InterferenceGraph, a: f64) -> Result<Self> {
        Self::intent(g, vec![a; g.n()])
    }

    /// Explicit `{q_m}`. Weights must be nonnegative and sum to 1 within
    /// `1e-9`; repeated sets are merged.
    pub fn explicit(g: &InterferenceGraph, table: &[(Schedule, f64)]) -> Result<Self> {
        let mut merged: BTreeMap<u64, f64> = BTreeMap::new();
        for (schedule, w) in table {
            if schedule.len() != g.n() {
                return Err(Error::Dimension {
                    expected: g.n(),
                    got: schedule.len(),
                });
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "decision weight for {schedule} must be nonnegative, got {w}"
                )));
            }
            if !g.is_independent(schedule.bits()) {
                return Err(Error::InvalidParameter(format!(
                    "decision schedule {schedule} is not an independent set"
                )));
            }
            *merged.entry(schedule.bits()).or_insert(0.0) += w;
        }
        let total: f64 = merged.values().sum();
        if math::abs(total - 1.0) > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "decision weights sum to {total}, expected 1"
            )));
        }
        let entries: Vec<(u64, f64)> = merged.into_iter().filter(|&(_, w)| w > 0.0).collect();
        let mut inclusion = vec![0.0; g.n()];
        let mut cumulative = Vec::with_capacity(entries.len());
        let mut acc = 0.0;
        for &(m, w) in &entries {
            for v in bits(m) {
                inclusion[v] += w;
            }
            acc += w;
            cumulative.push(acc);
        }
        Ok(Self {
            n: g.n(),
            kind: DecisionKind::Explicit(entries),
            inclusion,
            cumulative,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &DecisionKind {
        &self.kind
    }

    /// `q_v`, the probability that link `v` is in the decision schedule.
    #[inline]
    pub fn inclusion(&self) -> &[f64] {
        &self.inclusion
    }

    /// First link that is never selected, if any.
    pub fn unselected_link(&self) -> Option<usize> {
        self.inclusion.iter().position(|&q| q <= 0.0)
    }

    /// Irreducibility (and aperiodicity) holds iff every `q_v > 0`.
    pub fn is_irreducible(&self) -> bool {
        self.unselected_link().is_none()
    }

    pub fn require_irreducible(&self) -> Result<()> {
        match self.unselected_link() {
            Some(link) => Err(Error::NotIrreducible { link }),
            None => Ok(()),
        }
    }

    /// Draws a decision schedule. INTENT consumes one uniform per link in
    /// vertex order; an explicit rule consumes one uniform.
    pub fn sample<R: Rng + ?Sized>(&self, g: &InterferenceGraph, rng: &mut R) -> u64 {
        match &self.kind {
            DecisionKind::Intent(a) => {
                let mut intent = 0u64;
                for (v, &p) in a.iter().enumerate() {
                    if rng.gen::<f64>() < p {
                        intent |= bit(v);
                    }
                }
                isolated_intents(g, intent)
            }
            DecisionKind::Explicit(entries) => {
                let u = rng.gen::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
                let idx = self.cumulative.partition_point(|&c| c <= u);
                entries[idx.min(entries.len() - 1)].0
            }
        }
    }

    pub fn sample_schedule<R: Rng + ?Sized>(&self, g: &InterferenceGraph, rng: &mut R) -> Schedule {
        Schedule::from_bits(self.n, self.sample(g, rng)).expect("decision mask within width")
    }

    /// Exact distribution of the decision schedule.
    pub fn distribution(&self, g: &InterferenceGraph) -> Result<DecisionDistribution> {
        self.distribution_with_limit(g, EnumerationLimit::default())
    }

    pub fn distribution_with_limit(
        &self,
        g: &InterferenceGraph,
        limit: EnumerationLimit,
    ) -> Result<DecisionDistribution> {
        match &self.kind {
            DecisionKind::Explicit(entries) => Ok(DecisionDistribution {
                entries: entries.clone(),
            }),
            DecisionKind::Intent(a) => {
                let n = g.n();
                if n > limit.max_links {
                    return Err(Error::Capacity {
                        what: "links for INTENT pattern enumeration",
                        n,
                        limit: limit.max_links,
                    });
                }
                let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
                for pattern in 0u64..(1u64 << n) {
                    let p: f64 = (0..n)
                        .map(|v| if pattern & bit(v) != 0 { a[v] } else { 1.0 - a[v] })
                        .product();
                    *acc.entry(isolated_intents(g, pattern)).or_insert(0.0) += p;
                }
                Ok(DecisionDistribution {
                    entries: acc.into_iter().collect(),
                })
            }
        }
    }
}

/// Links that sent an INTENT while none of their neighbours did.
#[inline]
fn isolated_intents(g: &InterferenceGraph, intent: u64) -> u64 {
    let mut m = 0u64;
    for v in bits(intent) {
        if g.neighbor_mask(v) & intent == 0 {
            m |= bit(v);
        }
    }
    m
}

/// Exact `{q_m}` over decision schedules, sorted by mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionDistribution {
    entries: Vec<(u64, f64)>,
}

impl DecisionDistribution {
    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn probability(&self, mask: u64) -> f64 {
        self.entries
            .binary_search_by_key(&mask, |&(m, _)| m)
            .map_or(0.0, |i| self.entries[i].1)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).sum()
    }

    /// `q_v = sum_{m containing v} q_m`.
    pub fn inclusion(&self, n: usize) -> Vec<f64> {
        let mut q = vec![0.0; n];
        for &(m, w) in &self.entries {
            for v in bits(m) {
                q[v] += w;
            }
        }
        q
    }

    /// The union of the support covers every link.
    pub fn covers_all(&self, n: usize) -> bool {
        let union = self
            .entries
            .iter()
            .filter(|&&(_, w)| w > 0.0)
            .fold(0u64, |acc, &(m, _)| acc | m);
        union == crate::graph::full_mask(n)
    }
}

/// State of the scheduling chain: the transmission schedule `sigma(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainState {
    pub schedule: Schedule,
    pub slot: u64,
}

impl ChainState {
    pub fn new(schedule: Schedule) -> Self {
        Self { schedule, slot: 0 }
    }

    pub fn empty(n: usize) -> Self {
        Self::new(Schedule::empty(n))
    }
}

/// Steps 2(a)-(d) of the kernel for a given decision mask, without
/// validation. One coin is drawn for every link in `m`, in vertex order,
/// whether or not the link is blocked.
#[inline]
pub fn apply_decision<R: Rng + ?Sized>(
    g: &InterferenceGraph,
    sigma: u64,
    m: u64,
    fug: &FugacityVector,
    coins: &mut R,
) -> u64 {
    let mut next = sigma & !m;
    let p = fug.activation();
    for v in bits(m) {
        let u = coins.gen::<f64>();
        if g.neighbor_mask(v) & sigma == 0 && u < p[v] {
            next |= bit(v);
        }
    }
    next
}

fn check_dims(g: &InterferenceGraph, fug: &FugacityVector) -> Result<()> {
    if fug.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: fug.len(),
        });
    }
    Ok(())
}

fn check_state(g: &InterferenceGraph, state: &ChainState) -> Result<()> {
    if !g.is_feasible(&state.schedule)? {
        return Err(Error::Contract(format!("schedule {} is not feasible", state.schedule)));
    }
    Ok(())
}

/// One slot of PGD-CSMA.
pub fn pgd_step<R: Rng>(
    g: &InterferenceGraph,
    state: &ChainState,
    fug: &FugacityVector,
    rule: &DecisionRule,
    streams: &mut KernelStreams<R>,
) -> Result<ChainState> {
    check_dims(g, fug)?;
    check_state(g, state)?;
    if rule.n() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: rule.n(),
        });
    }
    let m = rule.sample(g, &mut streams.intent);
    let next = apply_decision(g, state.schedule.bits(), m, fug, &mut streams.coins);
    Ok(ChainState {
        schedule: Schedule::from_bits(g.n(), next)?,
        slot: state.slot + 1,
    })
}

/// One slot with a caller-supplied decision schedule.
pub fn pgd_step_with_decision<R: Rng + ?Sized>(
    g: &InterferenceGraph,
    state: &ChainState,
    decision: &Schedule,
    fug: &FugacityVector,
    coins: &mut R,
) -> Result<ChainState> {
    check_dims(g, fug)?;
    check_state(g, state)?;
    if !g.is_feasible(decision)? {
        return Err(Error::Contract(format!(
            "decision schedule {decision} is not an independent set"
        )));
    }
    let next = apply_decision(g, state.schedule.bits(), decision.bits(), fug, coins);
    Ok(ChainState {
        schedule: Schedule::from_bits(g.n(), next)?,
        slot: state.slot + 1,
    })
}

/// Exact transition matrix over `space`:
/// `P(sigma, sigma') = sum_m q_m Pr(sigma -> sigma' | m)`.
pub fn transition_matrix(
    g: &InterferenceGraph,
    space: &ScheduleSpace,
    fug: &FugacityVector,
    decisions: &DecisionDistribution,
) -> Result<DenseMatrix> {
    check_dims(g, fug)?;
    if space.n() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: space.n(),
        });
    }
    let p = fug.activation();
    let mut matrix = DenseMatrix::zeros(space.len());
    for (row, &sigma) in space.masks().iter().enumerate() {
        let out = matrix.row_mut(row);
        for &(m, qm) in decisions.entries() {
            if qm == 0.0 {
                continue;
            }
            let free: u64 = bits(m)
                .filter(|&v| g.neighbor_mask(v) & sigma == 0)
                .fold(0, |acc, v| acc | bit(v));
            let base = sigma & !m;
            // Enumerate every on/off outcome of the unblocked links in m.
            let mut sub = free;
            loop {
                let prob: f64 = bits(free)
                    .map(|v| if sub & bit(v) != 0 { p[v] } else { 1.0 - p[v] })
                    .product();
                let col = space
                    .index_of_bits(base | sub)
                    .ok_or_else(|| Error::Contract(format!("transition leaves the schedule space from {sigma:#b}")))?;
                out[col] += qm * prob;
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & free;
            }
        }
    }
    Ok(matrix)
}

/// Sum of `log lambda` magnitudes above which `pi` is computed in the log
/// domain.
pub const LOG_DOMAIN_THRESHOLD: f64 = 600.0;

/// Product-form law `pi(sigma) ∝ prod_{i in sigma} lambda_i` over `space`.
pub fn product_form_stationary(space: &ScheduleSpace, fug: &FugacityVector) -> Result<Vec<f64>> {
    if fug.len() != space.n() {
        return Err(Error::Dimension {
            expected: space.n(),
            got: fug.len(),
        });
    }
    let log_l = fug.log_lambda();
    let spread = log_l.iter().map(|&x| math::abs(x)).fold(0.0, f64::max) * space.n() as f64;
    let mut weights: Vec<f64> = if spread > LOG_DOMAIN_THRESHOLD {
        let logs: Vec<f64> = space.masks().iter().map(|&m| bits(m).map(|v| log_l[v]).sum()).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        logs.into_iter().map(|x| math::exp(x - max)).collect()
    } else {
        let l = fug.lambda();
        space.masks().iter().map(|&m| bits(m).map(|v| l[v]).product()).collect()
    };
    let z: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= z);
    Ok(weights)
}

/// `max |pi(x) P(x, y) - pi(y) P(y, x)|`.
pub fn detailed_balance_residual(p: &DenseMatrix, pi: &[f64]) -> f64 {
    let d = p.dim();
    let mut worst = 0.0f64;
    for x in 0..d {
        for y in x + 1..d {
            worst = worst.max(math::abs(pi[x] * p.get(x, y) - pi[y] * p.get(y, x)));
        }
    }
    worst
}

/// `max |(pi P)(y) - pi(y)|`.
pub fn stationarity_residual(p: &DenseMatrix, pi: &[f64]) -> Result<f64> {
    let next = p.left_mul(pi)?;
    Ok(next.iter().zip(pi).map(|(a, b)| math::abs(a - b)).fold(0.0, f64::max))
}
