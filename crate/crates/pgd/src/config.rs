//! Experiment configuration. Every field is spelled out in the resolved copy
//! written next to each output, defaults included.

use std::path::{Path, PathBuf};

use pgd_core::dynamics::{DecisionRule, FugacityVector};
use pgd_core::graph::{InterferenceGraph, Schedule};
use pgd_core::rng::{stream, StreamTag};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "builtin")]
pub enum BuiltinGraph {
    Path {
        n: usize,
    },
    Star {
        n: usize,
    },
    Complete {
        n: usize,
    },
    Empty {
        n: usize,
    },
    /// `G(n, p)` drawn from the instance stream of `seed`.
    Erdos {
        n: usize,
        p: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    /// Edge-list file: the link count, then one `u v` pair per line.
    pub file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    File(GraphFile),
    Builtin(BuiltinGraph),
}

/// A single value applied to every link, or one value per link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerLink {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerLink {
    pub fn expand(&self, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
        match self {
            PerLink::Uniform(x) => Ok(vec![*x; n]),
            PerLink::Each(v) if v.len() == n => Ok(v.clone()),
            PerLink::Each(v) => Err(CliError::Config(format!(
                "{what} has {} entries but the graph has {n} links",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitEntry {
    pub links: Vec<usize>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum DecisionConfig {
    /// Per-link INTENT probability.
    Intent(PerLink),
    Explicit(Vec<ExplicitEntry>),
}

impl Default for DecisionConfig {
    fn default() -> Self {
        DecisionConfig::Intent(PerLink::Uniform(0.5))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MixingMethod {
    #[default]
    Exact,
    Montecarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CouplingChoice {
    #[default]
    Identity,
    CompleteSwap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixingConfig {
    pub method: MixingMethod,
    /// Last slot of the TV curve; defaults to twice the largest applicable
    /// bound, or 1000.
    pub t_max: Option<u64>,
    /// Coalescence trials per seed.
    pub trials: u64,
    pub coupling: CouplingChoice,
}

impl Default for MixingConfig {
    fn default() -> Self {
        Self {
            method: MixingMethod::Exact,
            t_max: None,
            trials: 10_000,
            coupling: CouplingChoice::Identity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMode {
    #[default]
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialQueues {
    /// All queues empty, so every `r_k[0] = r_min - alpha`.
    #[default]
    Zero,
    /// The backlog whose log-fugacity equals the solved `log lambda(nu)`.
    Equilibrium,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveSettings {
    pub b: f64,
    pub b_eps: f64,
    /// Defaults to the smallest arrival rate.
    #[serde(default)]
    pub nu_min: Option<f64>,
    /// Overrides the exact frame length; outputs are then marked as using
    /// non-paper parameters.
    #[serde(default)]
    pub frame_len: Option<u64>,
    #[serde(default)]
    pub initial_queues: InitialQueues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Format,
    /// Emit one per-slot row every this many slots (simulate, fixed mode).
    pub trace_every: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    /// Fugacities. Exactly one of `lambda` and `nu` must be given.
    #[serde(default)]
    pub lambda: Option<PerLink>,
    /// Target service rates; fugacities are solved so that `s(lambda) = nu`.
    #[serde(default)]
    pub nu: Option<PerLink>,
    /// Load factor for capacity and fugacity-bound checks.
    #[serde(default)]
    pub rho: Option<f64>,
    /// Arrival rates for `simulate`. Defaults to `nu` when `nu` is given,
    /// otherwise to zero.
    #[serde(default)]
    pub arrivals: Option<PerLink>,
    /// With `nu`, fixed-mode simulation solves fugacities for
    /// `s = nu + service_margin` and feeds arrivals at `nu`.
    #[serde(default)]
    pub service_margin: f64,
    #[serde(default)]
    pub decision: DecisionConfig,
    /// Measured slots per replica (fixed mode).
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    /// Slots discarded before measuring; defaults to 10 times the best
    /// mixing bound, or 10^4.
    #[serde(default)]
    pub warmup: Option<u64>,
    /// Window length for stability series; defaults to `horizon / 100`.
    #[serde(default)]
    pub window: Option<u64>,
    /// Frames per replica (adaptive mode).
    #[serde(default = "default_frames")]
    pub frames: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub mode: SimulationMode,
    #[serde(default)]
    pub adaptive: Option<AdaptiveSettings>,
    #[serde(default)]
    pub mixing: MixingConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_horizon() -> u64 {
    1_000_000
}

fn default_frames() -> u64 {
    200
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        // Graph files are resolved relative to the config file.
        if let GraphSource::File(GraphFile { file }) = &mut cfg.graph {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.lambda, &self.nu) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either lambda or nu, not both".into())),
            (None, None) => return Err(CliError::Config("one of lambda or nu is required".into())),
            _ => {}
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("seed list must not be empty".into()));
        }
        if let Some(rho) = self.rho {
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(CliError::Config(format!("rho must lie in (0, 1], got {rho}")));
            }
        }
        if !(self.service_margin >= 0.0 && self.service_margin < 1.0) {
            return Err(CliError::Config("service_margin must lie in [0, 1)".into()));
        }
        if self.horizon == 0 || self.frames == 0 {
            return Err(CliError::Config("horizon and frames must be positive".into()));
        }
        if self.window == Some(0) || self.output.trace_every == Some(0) {
            return Err(CliError::Config("window and trace_every must be positive".into()));
        }
        if self.mode == SimulationMode::Adaptive && self.adaptive.is_none() {
            return Err(CliError::Config("adaptive mode needs an \"adaptive\" section".into()));
        }
        if self.mixing.trials == 0 {
            return Err(CliError::Config("mixing.trials must be positive".into()));
        }
        Ok(())
    }

    pub fn build_graph(&self) -> Result<InterferenceGraph, CliError> {
        Ok(match &self.graph {
            GraphSource::File(GraphFile { file }) => {
                let text = std::fs::read_to_string(file)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", file.display())))?;
                InterferenceGraph::parse_edge_list(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", file.display())))?
            }
            GraphSource::Builtin(b) => match *b {
                BuiltinGraph::Path { n } => InterferenceGraph::path(n)?,
                BuiltinGraph::Star { n } => InterferenceGraph::star(n)?,
                BuiltinGraph::Complete { n } => InterferenceGraph::complete(n)?,
                BuiltinGraph::Empty { n } => InterferenceGraph::empty(n)?,
                BuiltinGraph::Erdos { n, p, seed } => {
                    let mut rng = stream(seed, 0, StreamTag::Instance);
                    InterferenceGraph::erdos_renyi(n, p, &mut rng)?
                }
            },
        })
    }

    pub fn build_rule(&self, g: &InterferenceGraph) -> Result<DecisionRule, CliError> {
        Ok(match &self.decision {
            DecisionConfig::Intent(a) => DecisionRule::intent(g, a.expand(g.n(), "decision.intent")?)?,
            DecisionConfig::Explicit(entries) => {
                let table = entries
                    .iter()
                    .map(|e| Ok((Schedule::from_members(g.n(), &e.links)?, e.prob)))
                    .collect::<Result<Vec<_>, pgd_core::Error>>()?;
                DecisionRule::explicit(g, &table)?
            }
        })
    }

    /// Fugacities given directly, if any.
    pub fn given_lambda(&self, n: usize) -> Result<Option<FugacityVector>, CliError> {
        self.lambda
            .as_ref()
            .map(|l| Ok(FugacityVector::new(l.expand(n, "lambda")?)?))
            .transpose()
    }

    pub fn target_nu(&self, n: usize) -> Result<Option<Vec<f64>>, CliError> {
        self.nu.as_ref().map(|v| v.expand(n, "nu")).transpose()
    }

    pub fn arrival_rates(&self, n: usize) -> Result<Vec<f64>, CliError> {
        match (&self.arrivals, &self.nu) {
            (Some(a), _) => a.expand(n, "arrivals"),
            (None, Some(nu)) => nu.expand(n, "nu"),
            (None, None) => Ok(vec![0.0; n]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"graph": {"builtin": "path", "n": 3}, "lambda": 0.4}"#).unwrap();
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.decision, DecisionConfig::Intent(PerLink::Uniform(0.5)));
        let g = cfg.build_graph().unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(cfg.given_lambda(3).unwrap().unwrap().lambda(), &[0.4; 3]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_json(r#"{"graph": {"builtin": "path", "n": 3}, "lambda": 1, "lamda": 2}"#);
        assert!(matches!(err, Err(CliError::Config(_))));
        let err = ExperimentConfig::from_json(r#"{"graph": {"builtin": "path", "n": 3, "m": 1}, "lambda": 1}"#);
        assert!(err.is_err());
    }

    #[test]
    fn exactly_one_of_lambda_and_nu() {
        assert!(ExperimentConfig::from_json(r#"{"graph": {"builtin": "path", "n": 3}}"#).is_err());
        assert!(
            ExperimentConfig::from_json(r#"{"graph": {"builtin": "path", "n": 3}, "lambda": 1, "nu": 0.1}"#).is_err()
        );
        assert!(
            ExperimentConfig::from_json(r#"{"graph": {"builtin": "path", "n": 3}, "nu": [0.1, 0.2, 0.1]}"#).is_ok()
        );
    }

    #[test]
    fn explicit_rule_and_bad_lengths() {
        let cfg = ExperimentConfig::from_json(
            r#"{"graph": {"builtin": "path", "n": 3}, "lambda": [1, 1],
                "decision": {"explicit": [{"links": [0, 2], "prob": 0.5}, {"links": [1], "prob": 0.5}]}}"#,
        )
        .unwrap();
        let g = cfg.build_graph().unwrap();
        assert!(cfg.given_lambda(3).is_err());
        let rule = cfg.build_rule(&g).unwrap();
        assert_eq!(rule.inclusion(), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn empty_seed_list_is_rejected() {
        assert!(
            ExperimentConfig::from_json(r#"{"graph": {"builtin": "path", "n": 3}, "lambda": 1, "seeds": []}"#).is_err()
        );
    }
}
