//! Independent brute-force oracles. Nothing here calls the library's
//! enumeration, kernel or solver code.
#![allow(dead_code)]

use pgd_core::graph::InterferenceGraph;

pub fn adjacent(edges: &[(usize, usize)], u: usize, v: usize) -> bool {
    edges.iter().any(|&(a, b)| (a == u && b == v) || (a == v && b == u))
}

pub fn independent(edges: &[(usize, usize)], mask: u64) -> bool {
    edges.iter().all(|&(a, b)| mask & (1 << a) == 0 || mask & (1 << b) == 0)
}

/// Independent sets in ascending mask order.
pub fn brute_space(n: usize, edges: &[(usize, usize)]) -> Vec<u64> {
    (0u64..1 << n).filter(|&m| independent(edges, m)).collect()
}

pub fn brute_product_form(n: usize, edges: &[(usize, usize)], lambda: &[f64]) -> Vec<f64> {
    let space = brute_space(n, edges);
    let w: Vec<f64> = space
        .iter()
        .map(|&m| (0..n).filter(|&i| m & (1 << i) != 0).map(|i| lambda[i]).product())
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Decision-schedule law under INTENT with probabilities `a`, by summing
/// over all 2^n intent patterns.
pub fn brute_intent_law(n: usize, edges: &[(usize, usize)], a: &[f64]) -> Vec<(u64, f64)> {
    let mut law: Vec<(u64, f64)> = Vec::new();
    for pattern in 0u64..1 << n {
        let mut p = 1.0;
        for v in 0..n {
            p *= if pattern & (1 << v) != 0 { a[v] } else { 1.0 - a[v] };
        }
        let m = (0..n)
            .filter(|&v| {
                pattern & (1 << v) != 0 && (0..n).all(|w| w == v || !adjacent(edges, v, w) || pattern & (1 << w) == 0)
            })
            .fold(0u64, |acc, v| acc | 1 << v);
        match law.iter_mut().find(|(mm, _)| *mm == m) {
            Some(e) => e.1 += p,
            None => law.push((m, p)),
        }
    }
    law
}

fn blocked(n: usize, edges: &[(usize, usize)], sigma: u64, v: usize) -> bool {
    (0..n).any(|w| adjacent(edges, v, w) && sigma & (1 << w) != 0)
}

/// Transition matrix over `brute_space`, built link by link from the
/// kernel's description.
pub fn brute_transition(n: usize, edges: &[(usize, usize)], lambda: &[f64], law: &[(u64, f64)]) -> Vec<Vec<f64>> {
    let space = brute_space(n, edges);
    let d = space.len();
    let mut p = vec![vec![0.0; d]; d];
    for (i, &s) in space.iter().enumerate() {
        for (j, &t) in space.iter().enumerate() {
            let mut total = 0.0;
            for &(m, qm) in law {
                if (s ^ t) & !m != 0 {
                    continue;
                }
                let mut pr = qm;
                for v in (0..n).filter(|&v| m & (1 << v) != 0) {
                    let on = t & (1 << v) != 0;
                    let pv = lambda[v] / (1.0 + lambda[v]);
                    pr *= if blocked(n, edges, s, v) {
                        if on {
                            0.0
                        } else {
                            1.0
                        }
                    } else if on {
                        pv
                    } else {
                        1.0 - pv
                    };
                }
                total += pr;
            }
            p[i][j] = total;
        }
    }
    p
}

/// `E[Phi(X', Y')] - Phi(X, Y)` under the identity coupling, by summing over
/// decision schedules and the shared coin outcomes of the selected links.
pub fn brute_expected_delta(
    n: usize,
    edges: &[(usize, usize)],
    lambda: &[f64],
    law: &[(u64, f64)],
    f: &[f64],
    sigma: u64,
    eta: u64,
) -> f64 {
    let phi = |a: u64, b: u64| -> f64 { (0..n).filter(|&v| (a ^ b) & (1 << v) != 0).map(|v| f[v]).sum() };
    let mut expect = 0.0;
    for &(m, qm) in law {
        let links: Vec<usize> = (0..n).filter(|&v| m & (1 << v) != 0).collect();
        for coins in 0u64..1 << links.len() {
            let mut pr = qm;
            let (mut x, mut y) = (sigma & !m, eta & !m);
            for (k, &v) in links.iter().enumerate() {
                let pv = lambda[v] / (1.0 + lambda[v]);
                let heads = coins & (1 << k) != 0;
                pr *= if heads { pv } else { 1.0 - pv };
                if heads && !blocked(n, edges, sigma, v) {
                    x |= 1 << v;
                }
                if heads && !blocked(n, edges, eta, v) {
                    y |= 1 << v;
                }
            }
            expect += pr * phi(x, y);
        }
    }
    expect - phi(sigma, eta)
}

/// `(s_i, p_{i,0})` by direct summation.
pub fn brute_rates(n: usize, edges: &[(usize, usize)], lambda: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let space = brute_space(n, edges);
    let pi = brute_product_form(n, edges, lambda);
    let mut s = vec![0.0; n];
    let mut p0 = vec![0.0; n];
    for (&m, &p) in space.iter().zip(&pi) {
        for i in 0..n {
            if m & (1 << i) != 0 {
                s[i] += p;
            }
            if !blocked(n, edges, m, i) {
                p0[i] += p;
            }
        }
    }
    (s, p0)
}

/// Damped fixed point `lambda_i <- x / (1 - x)`, `x = nu_i / p_{i,0}`, in log
/// space. Returns `None` if it fails to converge.
pub fn fixed_point_fugacities(n: usize, edges: &[(usize, usize)], nu: &[f64]) -> Option<Vec<f64>> {
    let mut r: Vec<f64> = nu.iter().map(|&x| (x / (1.0 - x)).ln()).collect();
    let damping = 0.5;
    for _ in 0..200_000 {
        let lambda: Vec<f64> = r.iter().map(|x| x.exp()).collect();
        let (s, p0) = brute_rates(n, edges, &lambda);
        let err = s.iter().zip(nu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if err <= 1e-12 {
            return Some(lambda);
        }
        for i in 0..n {
            let x = (nu[i] / p0[i]).min(1.0 - 1e-12);
            let target = (x / (1.0 - x)).ln();
            r[i] = (1.0 - damping) * r[i] + damping * target;
        }
    }
    None
}

/// Midpoint rule for `int_{lo}^{hi} [logistic(r) - logistic(lo)] dr`.
pub fn midpoint_delta(hi: f64, lo: f64, points: usize) -> f64 {
    let logistic = |x: f64| 1.0 / (1.0 + (-x).exp());
    let h = (hi - lo) / points as f64;
    let base = logistic(lo);
    (0..points)
        .map(|k| logistic(lo + (k as f64 + 0.5) * h) - base)
        .sum::<f64>()
        * h
}

pub fn graph(n: usize, edges: &[(usize, usize)]) -> InterferenceGraph {
    InterferenceGraph::new(n, edges.iter().copied()).expect("valid test graph")
}

/// Edges of the graph on `n` vertices encoded by the bits of `code` over
/// the pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn edges_from_code(n: usize, code: u64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if code & (1 << k) != 0 {
                out.push((i, j));
            }
            k += 1;
        }
    }
    out
}
