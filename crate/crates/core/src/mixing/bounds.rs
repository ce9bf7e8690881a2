use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dynamics::{DecisionRule, FugacityVector};
use crate::error::{Error, Result};
use crate::graph::InterferenceGraph;
use crate::math;

/// Positive per-vertex weights `f(v)` that define the weighted Hamming metric.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    f: Vec<f64>,
    min: f64,
    max: f64,
}

impl WeightFunction {
    pub fn new(f: Vec<f64>) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::InvalidParameter("empty weight function".into()));
        }
        if let Some((v, &x)) = f.iter().enumerate().find(|(_, &x)| !(x.is_finite() && x > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "weight of vertex {v} must be positive and finite, got {x}"
            )));
        }
        let min = f.iter().copied().fold(f64::INFINITY, f64::min);
        let max = f.iter().copied().fold(0.0, f64::max);
        Ok(Self { f, min, max })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(alloc::vec![1.0; n])
    }

    pub fn for_choice(
        choice: WeightChoice,
        g: &InterferenceGraph,
        fug: &FugacityVector,
        rule: &DecisionRule,
    ) -> Result<Self> {
        let q = rule.inclusion();
        let f = match choice {
            WeightChoice::DegreeOverInclusion => (0..g.n()).map(|v| g.degree(v) as f64 / q[v]).collect(),
            WeightChoice::FugacityOverInclusion => fug.lambda().iter().zip(q).map(|(&l, &qv)| (1.0 + l) / qv).collect(),
            WeightChoice::InverseInclusion => q.iter().map(|&qv| 1.0 / qv).collect(),
        };
        Self::new(f)
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.f
    }

    #[inline]
    pub fn get(&self, v: usize) -> f64 {
        self.f[v]
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// `xi = max f / min f`.
    pub fn xi(&self) -> f64 {
        self.max / self.min
    }
}

/// The three weight functions with closed-form fast-mixing conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightChoice {
    /// `f(v) = d_v / q_v`; fast mixing when `lambda_v < 1 / (d_v - 1)`.
    DegreeOverInclusion,
    /// `f(v) = (1 + lambda_v) / q_v`; fast mixing when
    /// `1 + lambda_v - sum_{w in N_v} lambda_w > 0`.
    FugacityOverInclusion,
    /// `f(v) = 1 / q_v`; fast mixing when
    /// `b = max_v sum_{w in N_v} p_w < 1`.
    InverseInclusion,
}

impl WeightChoice {
    pub const ALL: [WeightChoice; 3] = [
        WeightChoice::DegreeOverInclusion,
        WeightChoice::FugacityOverInclusion,
        WeightChoice::InverseInclusion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WeightChoice::DegreeOverInclusion => "degree_over_q",
            WeightChoice::FugacityOverInclusion => "one_plus_lambda_over_q",
            WeightChoice::InverseInclusion => "inverse_q",
        }
    }
}

fn check(g: &InterferenceGraph, fug: &FugacityVector, rule: &DecisionRule, w: &WeightFunction) -> Result<()> {
    for got in [fug.len(), rule.n(), w.len()] {
        if got != g.n() {
            return Err(Error::Dimension { expected: g.n(), got });
        }
    }
    Ok(())
}

/// Per-vertex contraction margins
/// `q_v f(v) - sum_{w in N_v} q_w p_w f(w)`.
pub fn contraction_margins(
    g: &InterferenceGraph,
    fug: &FugacityVector,
    rule: &DecisionRule,
    w: &WeightFunction,
) -> Result<Vec<f64>> {
    check(g, fug, rule, w)?;
    let q = rule.inclusion();
    let p = fug.activation();
    Ok((0..g.n())
        .map(|v| {
            let spill: f64 = g.neighbors(v).iter().map(|&u| q[u] * p[u] * w.get(u)).sum();
            q[v] * w.get(v) - spill
        })
        .collect())
}

/// `theta = min_v { q_v f(v) - sum_{w in N_v} q_w p_w f(w) }`. May be
/// nonpositive, in which case no bound follows.
pub fn theta(g: &InterferenceGraph, fug: &FugacityVector, rule: &DecisionRule, w: &WeightFunction) -> Result<f64> {
    Ok(contraction_margins(g, fug, rule, w)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Path-coupling mixing bound for one weight function.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingBoundReport {
    pub n: usize,
    pub theta: f64,
    /// `M = max_v f(v)`.
    pub m_max: f64,
    /// `m = min_v f(v)`.
    pub m_min: f64,
    pub xi: f64,
    /// Contraction factor `1 - theta / M`.
    pub beta: f64,
    /// `D = n xi`.
    pub diameter: f64,
    /// `ceil((M / theta) ln(n xi e))`, present iff `theta > 0`.
    pub bound_tmix: Option<u64>,
    pub applicable: bool,
}

impl MixingBoundReport {
    /// TV envelope `min{1, beta^t D}`; `None` when not applicable.
    pub fn envelope(&self, t: u64) -> Option<f64> {
        if !self.applicable {
            return None;
        }
        Some(f64::min(1.0, math::pow(self.beta, t as f64) * self.diameter))
    }
}

/// Bound for an arbitrary positive weight function.
pub fn theorem2_bound(
    g: &InterferenceGraph,
    fug: &FugacityVector,
    rule: &DecisionRule,
    w: &WeightFunction,
) -> Result<MixingBoundReport> {
    let theta = theta(g, fug, rule, w)?;
    let n = g.n();
    let xi = w.xi();
    let diameter = n as f64 * xi;
    let applicable = theta > 0.0;
    let bound_tmix = applicable.then(|| {
        let t = math::ceil(w.max() / theta * (math::ln(diameter) + 1.0));
        (t as u64).max(1)
    });
    Ok(MixingBoundReport {
        n,
        theta,
        m_max: w.max(),
        m_min: w.min(),
        xi,
        beta: 1.0 - theta / w.max(),
        diameter,
        bound_tmix,
        applicable,
    })
}

/// One corollary instance: its closed-form condition and the resulting
/// bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryReport {
    pub choice: WeightChoice,
    /// Whether the corollary's sufficient condition holds.
    pub condition: bool,
    /// The scalar the condition is stated in: the largest
    /// `lambda_v (d_v - 1)` for the degree weights, the minimum of
    /// `1 + lambda_v - sum lambda_w` for the fugacity weights, and `b` for the
    /// inverse weights.
    pub condition_value: f64,
    /// `Err` carries the reason the weight function is undefined
    /// (for instance an isolated link under `f = d / q`).
    pub bound: core::result::Result<MixingBoundReport, String>,
    /// Closed-form mixing bound stated by the corollary itself (only the
    /// inverse weights have a distinct expression).
    pub closed_form_tmix: Option<u64>,
}

impl CorollaryReport {
    pub fn bound_tmix(&self) -> Option<u64> {
        self.bound.as_ref().ok().and_then(|b| b.bound_tmix)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryBounds {
    pub reports: Vec<CorollaryReport>,
}

impl CorollaryBounds {
    pub fn get(&self, choice: WeightChoice) -> &CorollaryReport {
        self.reports
            .iter()
            .find(|r| r.choice == choice)
            .expect("all weight choices are reported")
    }

    /// Smallest applicable mixing bound across the weight choices.
    pub fn best_tmix(&self) -> Option<u64> {
        self.reports.iter().filter_map(CorollaryReport::bound_tmix).min()
    }
}

pub fn corollary_bounds(g: &InterferenceGraph, fug: &FugacityVector, rule: &DecisionRule) -> Result<CorollaryBounds> {
    rule.require_irreducible()?;
    if fug.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: fug.len(),
        });
    }
    let lambda = fug.lambda();
    let p = fug.activation();
    let q = rule.inclusion();
    let n = g.n();
    let mut reports = Vec::with_capacity(3);
    for choice in WeightChoice::ALL {
        let bound = WeightFunction::for_choice(choice, g, fug, rule)
            .map_err(|e| format!("{e}"))
            .and_then(|w| theorem2_bound(g, fug, rule, &w).map_err(|e| format!("{e}")));
        let (condition, condition_value, closed_form_tmix) = match choice {
            WeightChoice::DegreeOverInclusion => {
                // lambda_v < 1/(d_v - 1) with d_v <= 1 treated as +inf.
                let worst = (0..n)
                    .map(|v| {
                        let d = g.degree(v) as f64;
                        if d <= 1.0 {
                            0.0
                        } else {
                            lambda[v] * (d - 1.0)
                        }
                    })
                    .fold(0.0, f64::max);
                (worst < 1.0, worst, None)
            }
            WeightChoice::FugacityOverInclusion => {
                let margin = (0..n)
                    .map(|v| 1.0 + lambda[v] - g.neighbors(v).iter().map(|&w| lambda[w]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                (margin > 0.0, margin, None)
            }
            WeightChoice::InverseInclusion => {
                let b = (0..n)
                    .map(|v| g.neighbors(v).iter().map(|&w| p[w]).sum::<f64>())
                    .fold(0.0, f64::max);
                let q_min = q.iter().copied().fold(f64::INFINITY, f64::min);
                let q_max = q.iter().copied().fold(0.0, f64::max);
                let xi = q_max / q_min;
                let closed = (b < 1.0).then(|| {
                    let t = math::ceil((math::ln(n as f64 * xi) + 1.0) / (q_min * (1.0 - b)));
                    (t as u64).max(1)
                });
                (b < 1.0, b, closed)
            }
        };
        reports.push(CorollaryReport {
            choice,
            condition,
            condition_value,
            bound,
            closed_form_tmix,
        });
    }
    Ok(CorollaryBounds { reports })
}

/// Lower bound on `c_n = (1 - 1/n)^(n-1)` used for complete graphs.
pub const C_MIN: f64 = 0.2;

/// Coupling bound for a complete interference graph with INTENT
/// probability `1/n`: `TV <= gamma^t`, `gamma = 1 - c_min / (n (1 + lambda_max))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompleteGraphBound {
    pub n: usize,
    pub lambda_max: f64,
    pub c_min: f64,
    /// Exact `(1 - 1/n)^(n-1)`.
    pub c_n: f64,
    pub gamma: f64,
    /// `1 / (1 - gamma) = n (1 + lambda_max) / c_min`.
    pub bound_tmix: f64,
}

impl CompleteGraphBound {
    pub fn envelope(&self, t: u64) -> f64 {
        math::pow(self.gamma, t as f64)
    }
}

pub fn complete_graph_bound(g: &InterferenceGraph, fug: &FugacityVector) -> Result<CompleteGraphBound> {
    if !g.is_complete() {
        return Err(Error::Inapplicable(
            "the complete-graph bound needs a complete interference graph".into(),
        ));
    }
    if fug.len() != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: fug.len(),
        });
    }
    let n = g.n();
    let lambda_max = fug.max();
    let nf = n as f64;
    let c_n = math::pow(1.0 - 1.0 / nf, nf - 1.0);
    let gamma = 1.0 - C_MIN / (nf * (1.0 + lambda_max));
    Ok(CompleteGraphBound {
        n,
        lambda_max,
        c_min: C_MIN,
        c_n,
        gamma,
        bound_tmix: nf * (1.0 + lambda_max) / C_MIN,
    })
}
