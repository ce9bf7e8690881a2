//! The four subcommands. Each returns its report and tables; writing them
//! out is left to the caller.

use pgd_core::dynamics::{
    detailed_balance_residual, product_form_stationary, stationarity_residual, transition_matrix, DecisionRule,
    FugacityVector,
};
use pgd_core::fugacity::{
    capacity_margin, fugacity_bound_check, service_rates, solve_fugacities, FugacitySolution, SolverOptions,
    CAPACITY_TOL,
};
use pgd_core::graph::{InterferenceGraph, Schedule, ScheduleSpace};
use pgd_core::mixing::{
    coalescence_estimate, complete_graph_bound, corollary_bounds, empirical_mixing_time, max_tv_curve, tv_distance,
    worst_case_start, CoalescenceReport, CompleteGraphBound, CorollaryBounds, Coupling, MixingBoundReport,
    WeightChoice,
};
use pgd_core::queueing::{
    adaptive_preconditions, algorithm1_params, per_queue_bound, simulate_adaptive, simulate_fixed_observed,
    AdaptiveConfig, AdaptiveSummary, FixedRun, FixedSummary,
};
use pgd_core::rng::SimStreams;
use pgd_core::stats::{mean_and_se, pool_means, StabilityReport};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CouplingChoice, ExperimentConfig, InitialQueues, MixingMethod, SimulationMode};
use crate::error::{CliError, EXIT_OK, EXIT_RESOURCE};
use crate::output::{jnum, jvec, num, opt, Outputs, Table};
use crate::stats;

/// Default horizon for TV curves when no bound applies.
const DEFAULT_T_MAX: u64 = 1000;
/// Default warmup when no mixing bound applies.
const DEFAULT_WARMUP: u64 = 10_000;
/// Coalescence trials per parallel task.
const TRIAL_CHUNK: u64 = 1000;

fn solver_options(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions {
        tol: cfg.solver.tol,
        max_iters: cfg.solver.max_iters,
        ..SolverOptions::default()
    }
}

struct Instance {
    g: InterferenceGraph,
    rule: DecisionRule,
}

fn instance(cfg: &ExperimentConfig) -> Result<Instance, CliError> {
    let g = cfg.build_graph()?;
    let rule = cfg.build_rule(&g)?;
    Ok(Instance { g, rule })
}

/// Fugacities from `lambda`, or solved for `s = nu + extra`.
fn fugacities(
    cfg: &ExperimentConfig,
    g: &InterferenceGraph,
    space: Option<&ScheduleSpace>,
    extra: f64,
) -> Result<(FugacityVector, Option<FugacitySolution>), CliError> {
    if let Some(f) = cfg.given_lambda(g.n())? {
        return Ok((f, None));
    }
    let nu = cfg.target_nu(g.n())?.expect("validated: lambda or nu");
    let target: Vec<f64> = nu.iter().map(|x| x + extra).collect();
    let owned;
    let space = match space {
        Some(s) => s,
        None => {
            owned = g.enumerate_feasible()?;
            &owned
        }
    };
    let sol = solve_fugacities(g, space, &target, solver_options(cfg))?;
    Ok((sol.fugacity.clone(), Some(sol)))
}

fn solution_json(sol: &Option<FugacitySolution>) -> Value {
    match sol {
        None => Value::Null,
        Some(s) => json!({
            "iterations": s.iterations,
            "grad_norm": jnum(s.grad_norm),
            "objective": jnum(s.objective),
        }),
    }
}

pub fn cmd_stationary(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let Instance { g, rule } = instance(cfg)?;
    rule.require_irreducible()?;
    let space = g.enumerate_feasible()?;
    let (fug, sol) = fugacities(cfg, &g, Some(&space), 0.0)?;
    let p = transition_matrix(&g, &space, &fug, &rule.distribution(&g)?)?;
    let pi = product_form_stationary(&space, &fug)?;
    let pi_matrix = p.stationary_vector()?;
    let mut table = Table::new("distribution", &["schedule", "pi_product_form", "pi_matrix"]);
    for (k, s) in space.iter().enumerate() {
        table.push(vec![s.to_string(), num(pi[k]), num(pi_matrix[k])]);
    }
    let report = json!({
        "links": g.n(),
        "schedules": space.len(),
        "lambda": jvec(fug.lambda()),
        "inclusion": jvec(rule.inclusion()),
        "solver": solution_json(&sol),
        "tv_product_form_vs_matrix": jnum(tv_distance(&pi, &pi_matrix)?),
        "detailed_balance_residual": jnum(detailed_balance_residual(&p, &pi)),
        "stationarity_residual": jnum(stationarity_residual(&p, &pi)?),
        "row_stochastic_residual": jnum(p.stochasticity_residual()),
    });
    Ok(Outputs {
        command: "stationary",
        report,
        tables: vec![table],
        exit_code: EXIT_OK,
    })
}

fn bound_json(b: &MixingBoundReport) -> Value {
    json!({
        "theta": jnum(b.theta),
        "m_max": jnum(b.m_max),
        "m_min": jnum(b.m_min),
        "xi": jnum(b.xi),
        "beta": jnum(b.beta),
        "diameter": jnum(b.diameter),
        "bound_tmix": b.bound_tmix,
        "applicable": b.applicable,
    })
}

fn corollaries_json(c: &CorollaryBounds) -> Value {
    Value::Array(
        c.reports
            .iter()
            .map(|r| {
                json!({
                    "weights": r.choice.name(),
                    "condition": r.condition,
                    "condition_value": jnum(r.condition_value),
                    "closed_form_tmix": r.closed_form_tmix,
                    "bound": match &r.bound {
                        Ok(b) => bound_json(b),
                        Err(e) => json!({ "applicable": false, "reason": e }),
                    },
                })
            })
            .collect(),
    )
}

fn complete_json(b: &Option<CompleteGraphBound>) -> Value {
    match b {
        None => json!({ "applicable": false, "reason": "graph is not complete" }),
        Some(b) => json!({
            "applicable": true,
            "lambda_max": jnum(b.lambda_max),
            "c_min": jnum(b.c_min),
            "c_n": jnum(b.c_n),
            "gamma": jnum(b.gamma),
            "bound_tmix": jnum(b.bound_tmix),
        }),
    }
}

struct Bounds {
    corollaries: CorollaryBounds,
    complete: Option<CompleteGraphBound>,
}

impl Bounds {
    fn new(g: &InterferenceGraph, fug: &FugacityVector, rule: &DecisionRule) -> Result<Self, CliError> {
        Ok(Self {
            corollaries: corollary_bounds(g, fug, rule)?,
            complete: complete_graph_bound(g, fug).ok(),
        })
    }

    fn largest(&self) -> Option<u64> {
        let c = self.corollaries.reports.iter().filter_map(|r| r.bound_tmix()).max();
        let k = self.complete.as_ref().map(|b| b.bound_tmix.ceil() as u64);
        c.into_iter().chain(k).max()
    }

    fn envelope_header(&self) -> Vec<String> {
        WeightChoice::ALL
            .iter()
            .map(|c| format!("envelope_{}", c.name()))
            .chain(std::iter::once("envelope_complete".to_string()))
            .collect()
    }

    fn envelope_cells(&self, t: u64) -> Vec<String> {
        let mut cells: Vec<String> = WeightChoice::ALL
            .iter()
            .map(|&c| match &self.corollaries.get(c).bound {
                Ok(b) => opt(b.envelope(t)),
                Err(_) => "NA".into(),
            })
            .collect();
        cells.push(opt(self.complete.as_ref().map(|b| b.envelope(t))));
        cells
    }
}

fn coupling(choice: CouplingChoice) -> Coupling {
    match choice {
        CouplingChoice::Identity => Coupling::Identity,
        CouplingChoice::CompleteSwap => Coupling::CompleteSwap,
    }
}

pub fn cmd_mixing(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let Instance { g, rule } = instance(cfg)?;
    rule.require_irreducible()?;
    let (fug, sol) = fugacities(cfg, &g, None, 0.0)?;
    let bounds = Bounds::new(&g, &fug, &rule)?;
    let t_max = cfg
        .mixing
        .t_max
        .unwrap_or_else(|| bounds.largest().map_or(DEFAULT_T_MAX, |b| 2 * b));
    let mut header: Vec<String> = vec!["t".into()];
    let mut exit_code = EXIT_OK;
    let (table, detail) = match cfg.mixing.method {
        MixingMethod::Exact => {
            header.push("tv".into());
            header.extend(bounds.envelope_header());
            let space = g.enumerate_feasible()?;
            let p = transition_matrix(&g, &space, &fug, &rule.distribution(&g)?)?;
            let pi = product_form_stationary(&space, &fug)?;
            let curve = max_tv_curve(&p, &pi, t_max as usize)?;
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut table = Table::new("tv", &h);
            for (t, tv) in curve.iter().enumerate() {
                let mut row = vec![t.to_string(), num(*tv)];
                row.extend(bounds.envelope_cells(t as u64));
                table.push(row);
            }
            let detail = match empirical_mixing_time(&p, &pi, t_max as usize) {
                Ok(t) => json!({ "method": "exact", "schedules": space.len(), "mixing_time": t }),
                Err(pgd_core::Error::Horizon { horizon, last_tv }) => {
                    exit_code = EXIT_RESOURCE;
                    json!({
                        "method": "exact",
                        "schedules": space.len(),
                        "mixing_time": Value::Null,
                        "horizon_exhausted": horizon,
                        "last_tv": jnum(last_tv),
                    })
                }
                Err(e) => return Err(e.into()),
            };
            (table, detail)
        }
        MixingMethod::Montecarlo => {
            header.push("coalesced_fraction".into());
            header.extend(bounds.envelope_header());
            let (x0, y0) = worst_case_start(&g);
            let coupling = coupling(cfg.mixing.coupling);
            let trials = cfg.mixing.trials;
            let tasks: Vec<(u64, u64)> = cfg
                .seeds
                .iter()
                .flat_map(|&s| (0..trials.div_ceil(TRIAL_CHUNK)).map(move |c| (s, c)))
                .collect();
            let parts: Vec<CoalescenceReport> = tasks
                .par_iter()
                .map(|&(seed, chunk)| {
                    let lo = chunk * TRIAL_CHUNK;
                    let hi = (lo + TRIAL_CHUNK).min(trials);
                    coalescence_estimate(&g, &fug, &rule, coupling, (&x0, &y0), lo..hi, t_max, seed)
                })
                .collect::<Result<_, _>>()?;
            let mut merged = CoalescenceReport::new(t_max);
            for p in &parts {
                merged = merged.merge(p)?;
            }
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut table = Table::new("coalescence", &h);
            let total = merged.trials() as f64;
            let mut acc = 0u64;
            for (t, &c) in merged.counts.iter().enumerate() {
                acc += c;
                let mut row = vec![t.to_string(), num(acc as f64 / total)];
                row.extend(bounds.envelope_cells(t as u64));
                table.push(row);
            }
            if merged.uncoalesced > 0 {
                exit_code = EXIT_RESOURCE;
            }
            let detail = json!({
                "method": "montecarlo",
                "coupling": cfg.mixing.coupling,
                "start": [x0.to_string(), y0.to_string()],
                "trials": merged.trials(),
                "mean_coalescence": merged.mean_coalesced().map(jnum),
                "median_coalescence": merged.median(),
                "q90_coalescence": merged.quantile(0.9),
                "uncoalesced_fraction": jnum(merged.uncoalesced_fraction()),
            });
            (table, detail)
        }
    };
    let report = json!({
        "links": g.n(),
        "lambda": jvec(fug.lambda()),
        "inclusion": jvec(rule.inclusion()),
        "solver": solution_json(&sol),
        "t_max": t_max,
        "corollaries": corollaries_json(&bounds.corollaries),
        "best_corollary_tmix": bounds.corollaries.best_tmix(),
        "complete_graph": complete_json(&bounds.complete),
        "result": detail,
    });
    Ok(Outputs {
        command: "mixing",
        report,
        tables: vec![table],
        exit_code,
    })
}

pub fn cmd_fugacity(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let g = cfg.build_graph()?;
    let Some(nu) = cfg.target_nu(g.n())? else {
        return Err(CliError::Config("the fugacity command needs nu".into()));
    };
    let space = g.enumerate_feasible()?;
    let opts = solver_options(cfg);
    let margin = capacity_margin(&g, &space, &nu, 1.0)?;
    if margin <= CAPACITY_TOL {
        return Err(pgd_core::Error::Infeasible { margin }.into());
    }
    let rho = cfg.rho.unwrap_or(1.0);
    let nu_min = nu.iter().copied().fold(f64::INFINITY, f64::min);
    let (sol, lemma) = if rho < 1.0 {
        let rep = fugacity_bound_check(&g, &space, &nu, rho, Some(nu_min), opts)?;
        let lemma = json!({
            "rho": jnum(rho),
            "chi": rep.chi,
            "margin_at_rho": jnum(rep.margin),
            "precondition": rep.precondition,
            "upper": jnum(rep.upper),
            "max_lambda": jnum(rep.max_lambda),
            "upper_holds": rep.upper_holds,
        });
        (rep.solution, lemma)
    } else {
        (solve_fugacities(&g, &space, &nu, opts)?, Value::Null)
    };
    let rates = service_rates(&g, &space, &sol.fugacity)?;
    let lambda = sol.fugacity.lambda();
    let min_lambda = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let mut table = Table::new("links", &["link", "nu", "lambda", "r", "s", "p0"]);
    for i in 0..g.n() {
        table.push(vec![
            i.to_string(),
            num(nu[i]),
            num(lambda[i]),
            num(sol.r[i]),
            num(rates.s[i]),
            num(rates.p0[i]),
        ]);
    }
    let report = json!({
        "links": g.n(),
        "capacity_margin": jnum(margin),
        "lambda": jvec(lambda),
        "service": jvec(&rates.s),
        "objective": jnum(sol.objective),
        "iterations": sol.iterations,
        "grad_norm": jnum(sol.grad_norm),
        "fugacity_upper_bound": lemma,
        "fugacity_lower_bound": {
            "nu_min": jnum(nu_min),
            "min_lambda": jnum(min_lambda),
            "holds": min_lambda >= nu_min * (1.0 - 1e-9),
        },
    });
    Ok(Outputs {
        command: "fugacity",
        report,
        tables: vec![table],
        exit_code: EXIT_OK,
    })
}

fn stability_json(s: &StabilityReport) -> Value {
    json!({
        "proxy": s.proxy,
        "window": s.window,
        "windows": s.windows,
        "level": jnum(s.level),
        "slope": jnum(s.trend.slope),
        "std_error": jnum(s.trend.std_error),
        "df": s.trend.df,
        "ci": [jnum(s.ci.0), jnum(s.ci.1)],
        "ols_slope": jnum(s.trend.ols_slope),
        "stable": s.stable,
        "mean": jnum(s.mean),
        "max_window_mean": jnum(s.max_window_mean),
    })
}

fn stability_or_null(window: u64, means: &[f64]) -> Result<Value, CliError> {
    if means.len() < 3 {
        return Ok(json!({ "stable": Value::Null, "reason": "fewer than 3 windows" }));
    }
    Ok(stability_json(&stats::stability(window, means)?))
}

fn exact_rates(g: &InterferenceGraph, fug: &FugacityVector) -> Option<Vec<f64>> {
    let space = g.enumerate_feasible().ok()?;
    service_rates(g, &space, fug).ok().map(|r| r.s)
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    match cfg.mode {
        SimulationMode::Fixed => simulate_fixed_cmd(cfg),
        SimulationMode::Adaptive => simulate_adaptive_cmd(cfg),
    }
}

struct FixedReplica {
    seed: u64,
    summary: FixedSummary,
    trace: Vec<Vec<String>>,
}

fn simulate_fixed_cmd(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let Instance { g, rule } = instance(cfg)?;
    rule.require_irreducible()?;
    let n = g.n();
    let (fug, sol) = fugacities(cfg, &g, None, cfg.service_margin)?;
    let nu = cfg.arrival_rates(n)?;
    let bounds = Bounds::new(&g, &fug, &rule)?;
    let t_mix = bounds.corollaries.best_tmix();
    let warmup = cfg.warmup.unwrap_or_else(|| t_mix.map_or(DEFAULT_WARMUP, |t| 10 * t));
    let window = cfg.window.unwrap_or((cfg.horizon / 100).max(1));
    let run = FixedRun {
        horizon: cfg.horizon,
        warmup,
        window,
    };
    let every = cfg.output.trace_every;
    let replicas: Vec<FixedReplica> = cfg
        .seeds
        .par_iter()
        .enumerate()
        .map(|(k, &seed)| {
            let mut streams = SimStreams::seeded(seed, k as u64);
            let mut trace = Vec::new();
            let summary = simulate_fixed_observed(&g, &fug, &rule, &nu, run, &Schedule::empty(n), &mut streams, |r| {
                if every.is_some_and(|e| r.slot % e == 0) {
                    for i in 0..n {
                        trace.push(vec![
                            seed.to_string(),
                            r.slot.to_string(),
                            i.to_string(),
                            r.queues[i].to_string(),
                            ((r.arrivals >> i) & 1).to_string(),
                            ((r.schedule >> i) & 1).to_string(),
                        ]);
                    }
                }
            })?;
            Ok(FixedReplica { seed, summary, trace })
        })
        .collect::<Result<_, CliError>>()?;
    let service = exact_rates(&g, &fug);
    let mut links = Table::new(
        "links",
        &[
            "seed",
            "link",
            "mean_queue",
            "max_queue",
            "service_rate",
            "arrival_rate",
        ],
    );
    let mut windows = Table::new("windows", &["seed", "window", "total_queue_mean"]);
    let mut trace = Table::new("trace", &["seed", "slot", "link", "queue", "arrival", "scheduled"]);
    let mut per_replica = Vec::new();
    for r in &replicas {
        let s = &r.summary;
        for i in 0..n {
            links.push(vec![
                r.seed.to_string(),
                i.to_string(),
                num(s.mean_queue[i]),
                s.max_queue[i].to_string(),
                num(s.service_rate[i]),
                num(s.arrival_rate[i]),
            ]);
        }
        for (w, m) in s.total_windows.means().iter().enumerate() {
            windows.push(vec![r.seed.to_string(), w.to_string(), num(*m)]);
        }
        trace.rows.extend(r.trace.iter().cloned());
        per_replica.push(json!({
            "seed": r.seed,
            "mean_queue": jvec(&s.mean_queue),
            "max_queue": s.max_queue,
            "service_rate": jvec(&s.service_rate),
            "step_violations": s.step_violations,
            "recursion_violations": s.recursion_violations,
            "stability": stability_or_null(window, s.total_windows.means())?,
        }));
    }
    let series: Vec<&[f64]> = replicas.iter().map(|r| r.summary.total_windows.means()).collect();
    let pooled = pool_means(&series)?;
    let per_link: Vec<Value> = (0..n)
        .map(|i| {
            let xs: Vec<f64> = replicas.iter().map(|r| r.summary.mean_queue[i]).collect();
            let (m, se) = mean_and_se(&xs);
            let bound = match (t_mix, &service) {
                (Some(t), Some(s)) => per_queue_bound(t, s[i], nu[i]).ok(),
                _ => None,
            };
            json!({
                "link": i,
                "nu": jnum(nu[i]),
                "service_rate_exact": service.as_ref().map(|s| jnum(s[i])),
                "mean_queue": jnum(m),
                "std_error": jnum(se),
                "queue_bound": bound.map(jnum),
                "within_bound": bound.map(|b| m <= b),
            })
        })
        .collect();
    let report = json!({
        "mode": "fixed",
        "links": n,
        "lambda": jvec(fug.lambda()),
        "solver": solution_json(&sol),
        "arrivals": jvec(&nu),
        "horizon": cfg.horizon,
        "warmup": warmup,
        "window": window,
        "mixing_bound_tmix": t_mix,
        "per_link": per_link,
        "pooled_stability": stability_or_null(window, &pooled)?,
        "replicas": per_replica,
    });
    let mut tables = vec![links, windows];
    if every.is_some() {
        tables.push(trace);
    }
    Ok(Outputs {
        command: "simulate",
        report,
        tables,
        exit_code: EXIT_OK,
    })
}

fn adaptive_config(
    cfg: &ExperimentConfig,
    g: &InterferenceGraph,
    rule: &DecisionRule,
    nu: &[f64],
) -> Result<AdaptiveConfig, CliError> {
    let a = cfg.adaptive.as_ref().expect("validated: adaptive section");
    let nu_min = a
        .nu_min
        .unwrap_or_else(|| nu.iter().copied().fold(f64::INFINITY, f64::min));
    // Fugacities never exceed e^B, and the bounds only grow with lambda, so
    // the uniform cap gives a mixing bound valid in every frame.
    let cap = FugacityVector::uniform(g.n(), a.b.exp())?;
    let t_mix = corollary_bounds(g, &cap, rule)?.best_tmix().ok_or_else(|| {
        pgd_core::Error::Inapplicable(format!(
            "no mixing bound applies at the fugacity cap e^B = {}",
            a.b.exp()
        ))
    })?;
    let params = algorithm1_params(g.n(), a.b, a.b_eps, nu_min, t_mix)?;
    Ok(match a.frame_len {
        Some(t) => params.with_frame_len(t)?,
        None => params,
    })
}

fn simulate_adaptive_cmd(cfg: &ExperimentConfig) -> Result<Outputs, CliError> {
    let Instance { g, rule } = instance(cfg)?;
    rule.require_irreducible()?;
    let n = g.n();
    let nu = cfg.arrival_rates(n)?;
    let params = adaptive_config(cfg, &g, &rule, &nu)?;
    let settings = cfg.adaptive.as_ref().expect("validated: adaptive section");
    let space = g.enumerate_feasible().ok();
    let pre = match &space {
        Some(s) => {
            let p = adaptive_preconditions(&g, s, &nu, &params)?;
            json!({
                "rho": jnum(p.rho),
                "capacity_margin": jnum(p.margin),
                "interior": p.interior,
                "nu_min_ok": p.nu_min_ok,
                "cap_within_mixing_condition": p.cap_ok,
                "chi": p.chi,
                "all": p.all(),
            })
        }
        None => json!({ "checked": false, "reason": "schedule space too large to enumerate" }),
    };
    let initial = match settings.initial_queues {
        InitialQueues::Zero => None,
        InitialQueues::Equilibrium => {
            let Some(space) = &space else {
                return Err(pgd_core::Error::Capacity {
                    what: "equilibrium backlog needs an enumerable schedule space",
                    n,
                    limit: pgd_core::graph::EnumerationLimit::default().max_links,
                }
                .into());
            };
            let sol = solve_fugacities(&g, space, &nu, solver_options(cfg))?;
            Some(params.equilibrium_backlog(&sol.r))
        }
    };
    let replicas: Vec<(u64, AdaptiveSummary)> = cfg
        .seeds
        .par_iter()
        .enumerate()
        .map(|(k, &seed)| {
            let mut streams = SimStreams::seeded(seed, k as u64);
            let s = simulate_adaptive(&g, &rule, &nu, &params, cfg.frames, initial.as_deref(), &mut streams)?;
            Ok((seed, s))
        })
        .collect::<Result<_, CliError>>()?;
    let mut frames = Table::new("frames", &["seed", "frame", "link", "queue", "r", "lambda"]);
    let mut totals = Table::new("frame_totals", &["seed", "frame", "total_queue_mean"]);
    let mut per_replica = Vec::new();
    for (seed, s) in &replicas {
        for f in &s.frames {
            for i in 0..n {
                frames.push(vec![
                    seed.to_string(),
                    f.index.to_string(),
                    i.to_string(),
                    f.queues[i].to_string(),
                    num(f.r[i]),
                    num(f.lambda[i]),
                ]);
            }
            totals.push(vec![seed.to_string(), f.index.to_string(), num(f.mean_total_queue)]);
        }
        per_replica.push(json!({
            "seed": seed,
            "mean_queue": jvec(&s.mean_queue),
            "total_mean_queue": jnum(s.total_mean_queue()),
            "max_queue": s.max_queue,
            "cap_violations": s.cap_violations,
            "floor_violations": s.floor_violations,
            "step_violations": s.step_violations,
            "stability": stability_or_null(params.frame_len, &s.frame_means())?,
        }));
    }
    let series: Vec<Vec<f64>> = replicas.iter().map(|(_, s)| s.frame_means()).collect();
    let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
    let pooled = pool_means(&refs)?;
    let report = json!({
        "mode": "adaptive",
        "links": n,
        "arrivals": jvec(&nu),
        "non_paper_parameters": params.non_paper_parameters,
        "parameters": {
            "b": jnum(params.b),
            "b_eps": jnum(params.b_eps),
            "epsilon": jnum(params.epsilon),
            "nu_min": jnum(params.nu_min),
            "r_min": jnum(params.r_min),
            "delta": jnum(params.delta),
            "alpha": jnum(params.alpha),
            "bound_tmix": params.bound_tmix,
            "frame_len": params.frame_len,
            "exact_frame_len": params.exact_frame_len,
        },
        "initial_queues": initial,
        "frames": cfg.frames,
        "preconditions": pre,
        "pooled_stability": stability_or_null(params.frame_len, &pooled)?,
        "replicas": per_replica,
    });
    Ok(Outputs {
        command: "simulate",
        report,
        tables: vec![frames, totals],
        exit_code: EXIT_OK,
    })
}
