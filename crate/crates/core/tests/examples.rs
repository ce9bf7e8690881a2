mod common;

use common::*;
use pgd_core::dynamics::{product_form_stationary, transition_matrix, DecisionRule, FugacityVector};
use pgd_core::fugacity::{fugacity_bound_check, service_rates, solve_fugacities, SolverOptions};
use pgd_core::graph::{InterferenceGraph, Schedule};
use pgd_core::mixing::{
    coalescence_estimate, corollary_bounds, empirical_mixing_time, max_tv_curve, theorem2_bound, tv_curves,
    worst_case_start, Coupling, WeightChoice, WeightFunction, MIXING_THRESHOLD,
};
use pgd_core::queueing::{per_queue_bound, sample_arrivals, simulate_fixed, FixedRun};
use pgd_core::rng::{stream, SimStreams, StreamTag};

fn chain(
    g: &InterferenceGraph,
    lambda: f64,
    a: f64,
) -> (pgd_core::linalg::DenseMatrix, Vec<f64>, FugacityVector, DecisionRule) {
    let space = g.enumerate_feasible().unwrap();
    let fug = FugacityVector::uniform(g.n(), lambda).unwrap();
    let rule = DecisionRule::intent_uniform(g, a).unwrap();
    let p = transition_matrix(g, &space, &fug, &rule.distribution(g).unwrap()).unwrap();
    let pi = product_form_stationary(&space, &fug).unwrap();
    (p, pi, fug, rule)
}

#[test]
fn path3_converges_from_every_start() {
    let g = InterferenceGraph::path(3).unwrap();
    let (p, pi, _, _) = chain(&g, 1.0, 0.5);
    for curve in tv_curves(&p, &pi, 500).unwrap() {
        assert!(curve[500] < 1e-8);
    }
}

#[test]
fn single_link_mixing_time_closed_form() {
    // Two states, stay-probabilities give TV_t = (1 - c)^t TV_0 with
    // c = q (p + (1 - p)) = q for lambda = 1.
    let g = InterferenceGraph::empty(1).unwrap();
    for a in [0.1, 0.35, 0.8] {
        let (p, pi, _, _) = chain(&g, 1.0, a);
        let tv0: f64 = 0.5;
        let mut t = 0;
        while tv0 * (1.0 - a).powi(t) > MIXING_THRESHOLD {
            t += 1;
        }
        assert_eq!(empirical_mixing_time(&p, &pi, 1000).unwrap(), t as usize);
    }
}

#[test]
fn path3_exact_tv_under_envelope_and_bound() {
    let g = InterferenceGraph::path(3).unwrap();
    let (p, pi, fug, rule) = chain(&g, 0.4, 0.5);
    let w = WeightFunction::for_choice(WeightChoice::DegreeOverInclusion, &g, &fug, &rule).unwrap();
    let rep = theorem2_bound(&g, &fug, &rule, &w).unwrap();
    assert_eq!(rep.bound_tmix, Some(131));
    let curve = max_tv_curve(&p, &pi, 262).unwrap();
    for (t, tv) in curve.iter().enumerate() {
        assert!(*tv <= rep.envelope(t as u64).unwrap());
    }
    assert!(empirical_mixing_time(&p, &pi, 262).unwrap() < 131);
}

#[test]
fn complete3_exact_tv_under_gamma_power() {
    let g = InterferenceGraph::complete(3).unwrap();
    let (p, pi, fug, _) = chain(&g, 1.0, 1.0 / 3.0);
    let b = pgd_core::mixing::complete_graph_bound(&g, &fug).unwrap();
    for (t, tv) in max_tv_curve(&p, &pi, 200).unwrap().iter().enumerate() {
        assert!(*tv <= b.envelope(t as u64));
    }
    assert!(empirical_mixing_time(&p, &pi, 200).unwrap() as f64 <= 30.0);
}

#[test]
fn single_link_coalescence_is_geometric() {
    let g = InterferenceGraph::empty(1).unwrap();
    let fug = FugacityVector::uniform(1, 1.0).unwrap();
    let c = 0.25;
    let rule = DecisionRule::intent_uniform(&g, c).unwrap();
    let (x, y) = (Schedule::empty(1), Schedule::from_members(1, &[0]).unwrap());
    let trials = 40_000u64;
    let rep = coalescence_estimate(&g, &fug, &rule, Coupling::Identity, (&x, &y), 0..trials, 10_000, 17).unwrap();
    assert_eq!(rep.uncoalesced, 0);
    let mean = rep.mean_coalesced().unwrap();
    // Geometric(c): sd = sqrt(1 - c) / c.
    let se = (1.0 - c).sqrt() / c / (trials as f64).sqrt();
    assert!((mean - 1.0 / c).abs() < 4.0 * se, "mean {mean}");
}

#[test]
fn path3_median_coalescence_within_bound() {
    let g = InterferenceGraph::path(3).unwrap();
    let fug = FugacityVector::uniform(3, 0.4).unwrap();
    let rule = DecisionRule::intent_uniform(&g, 0.5).unwrap();
    let (x, y) = worst_case_start(&g);
    let bound = corollary_bounds(&g, &fug, &rule)
        .unwrap()
        .get(WeightChoice::DegreeOverInclusion)
        .bound_tmix()
        .unwrap();
    let rep = coalescence_estimate(&g, &fug, &rule, Coupling::Identity, (&x, &y), 0..5_000, 2 * bound, 3).unwrap();
    assert!(rep.median().unwrap() <= bound);
}

#[test]
fn swap_coupling_coalesces_faster_on_complete_graph() {
    let g = InterferenceGraph::complete(4).unwrap();
    let fug = FugacityVector::uniform(4, 1.0).unwrap();
    let rule = DecisionRule::intent_uniform(&g, 0.25).unwrap();
    let (x, y) = (
        Schedule::from_members(4, &[0]).unwrap(),
        Schedule::from_members(4, &[1]).unwrap(),
    );
    let b = pgd_core::mixing::complete_graph_bound(&g, &fug).unwrap();
    let rep = coalescence_estimate(&g, &fug, &rule, Coupling::CompleteSwap, (&x, &y), 0..4_000, 1_000, 8).unwrap();
    assert!(rep.mean_coalesced().unwrap() <= b.bound_tmix);
}

#[test]
fn path3_fixed_point_oracle_agrees_with_solver() {
    let g = InterferenceGraph::path(3).unwrap();
    let space = g.enumerate_feasible().unwrap();
    let nu = [0.3, 0.2, 0.3];
    let sol = solve_fugacities(&g, &space, &nu, SolverOptions::default()).unwrap();
    let s = service_rates(&g, &space, &sol.fugacity).unwrap().s;
    assert!(s.iter().zip(&nu).all(|(a, b)| (a - b).abs() <= 1e-8));
    let fp = fixed_point_fugacities(3, g.edges(), &nu).unwrap();
    for (a, b) in sol.fugacity.lambda().iter().zip(&fp) {
        assert!((a - b).abs() < 1e-7);
    }
}

#[test]
fn fugacity_bound_examples() {
    let g = InterferenceGraph::path(3).unwrap();
    let space = g.enumerate_feasible().unwrap();
    // 0.4 * (0.5, 0.45, 0.5) sits inside 0.4 * Lambda.
    let nu = [0.2, 0.18, 0.2];
    let rep = fugacity_bound_check(&g, &space, &nu, 0.4, None, SolverOptions::default()).unwrap();
    assert_eq!(rep.chi, 2);
    assert!(rep.precondition);
    assert!(rep.upper_holds && rep.max_lambda <= 2.0 / 3.0);
    let one = InterferenceGraph::empty(1).unwrap();
    let one_space = one.enumerate_feasible().unwrap();
    let rep = fugacity_bound_check(&one, &one_space, &[0.3], 0.5, Some(0.3), SolverOptions::default()).unwrap();
    let (_, min_l, ok) = rep.lower.unwrap();
    assert!(ok && (min_l - 3.0 / 7.0).abs() < 1e-7);
}

#[test]
fn arrival_means_follow_rates() {
    let nu = [0.05, 0.3, 0.77];
    let mut rng = stream(2024, 0, StreamTag::Arrivals);
    let slots = 1_000_000;
    let mut hits = [0u64; 3];
    for _ in 0..slots {
        let a = sample_arrivals(&nu, &mut rng);
        for (i, h) in hits.iter_mut().enumerate() {
            *h += (a >> i) & 1;
        }
    }
    for i in 0..3 {
        let se = (nu[i] * (1.0 - nu[i]) / slots as f64).sqrt();
        assert!((hits[i] as f64 / slots as f64 - nu[i]).abs() < 3.0 * se);
    }
}

#[test]
fn empirical_service_rates_converge() {
    let g = InterferenceGraph::path(3).unwrap();
    let space = g.enumerate_feasible().unwrap();
    let fug = FugacityVector::uniform(3, 0.7).unwrap();
    let rule = DecisionRule::intent_uniform(&g, 0.5).unwrap();
    let exact = service_rates(&g, &space, &fug).unwrap().s;
    let run = FixedRun {
        horizon: 2_000_000,
        warmup: 1_000,
        window: 10_000,
    };
    let reps = 8;
    let mut est = vec![vec![]; 3];
    for k in 0..reps {
        let mut st = SimStreams::seeded(99, k);
        let s = simulate_fixed(&g, &fug, &rule, &[0.0; 3], run, &Schedule::empty(3), &mut st).unwrap();
        for i in 0..3 {
            est[i].push(s.service_rate[i]);
        }
    }
    for i in 0..3 {
        let (m, se) = pgd_core::stats::mean_and_se(&est[i]);
        assert!(
            (m - exact[i]).abs() < 3.0 * se.max(1e-4),
            "link {i}: {m} vs {}",
            exact[i]
        );
    }
}

#[test]
fn path3_mean_queues_below_bound() {
    let g = InterferenceGraph::path(3).unwrap();
    let space = g.enumerate_feasible().unwrap();
    let nu = [0.2, 0.1, 0.2];
    let target: Vec<f64> = nu.iter().map(|x| x + 0.1).collect();
    let sol = solve_fugacities(&g, &space, &target, SolverOptions::default()).unwrap();
    let rule = DecisionRule::intent_uniform(&g, 0.5).unwrap();
    let t_mix = corollary_bounds(&g, &sol.fugacity, &rule).unwrap().best_tmix().unwrap();
    let run = FixedRun {
        horizon: 500_000,
        warmup: 10 * t_mix,
        window: 5_000,
    };
    let mut st = SimStreams::seeded(1, 0);
    let s = simulate_fixed(&g, &sol.fugacity, &rule, &nu, run, &Schedule::empty(3), &mut st).unwrap();
    assert_eq!(s.recursion_violations + s.step_violations, 0);
    for i in 0..3 {
        let bound = per_queue_bound(t_mix, target[i], nu[i]).unwrap();
        assert!(s.mean_queue[i] <= bound, "link {i}: {} > {bound}", s.mean_queue[i]);
    }
}
