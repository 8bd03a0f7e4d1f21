#![allow(dead_code)]

use stablelab::CostMatrix;

/// Every perfect matching of `m` with no blocking pair, found by walking
/// all `n!` permutations (Heap's algorithm).
pub fn enumerate_stable(m: &CostMatrix) -> Vec<Vec<usize>> {
    let n = m.n();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut found = Vec::new();
    if is_stable(m, &perm) {
        found.push(perm.clone());
    }
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            if is_stable(m, &perm) {
                found.push(perm.clone());
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    found
}

/// Blocking-pair check written against the definition, independent of the
/// library's verifier.
pub fn is_stable(m: &CostMatrix, partner: &[usize]) -> bool {
    let n = m.n();
    let mut left_cost = vec![0.0; n];
    let mut right_cost = vec![0.0; n];
    for (v, &w) in partner.iter().enumerate() {
        left_cost[v] = m.cost(v, w);
        right_cost[w] = m.cost(v, w);
    }
    for v in 0..n {
        for (w, &rc) in right_cost.iter().enumerate() {
            if partner[v] != w && m.cost(v, w) < left_cost[v].min(rc) {
                return false;
            }
        }
    }
    true
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Integrand of the γ(d) Monte Carlo estimator at a point of the unit cube.
///
/// With t = u^q, q = d/(d-2), and z = 1 - w^d inside each inner integral,
/// γ(d) = (q/d²) E[g(u, w1) g(u, w2)], where
/// g(u, w) = d (1 - w^d)^{1-1/d} (1 - t (1 - w^d))^{1/d-1} w^{d-1} ≤ d.
pub fn gamma_mc_integrand(d: f64, u: f64, w1: f64, w2: f64) -> f64 {
    let q = d / (d - 2.0);
    let t = u.powf(q);
    let g = |w: f64| {
        let wd = w.powf(d);
        let z = 1.0 - wd;
        let rest = 1.0 - t * z;
        if rest <= 0.0 {
            // only reachable at w = 0, t = 1 where the product tends to d
            return d;
        }
        d * z.powf(1.0 - 1.0 / d) * rest.powf(1.0 / d - 1.0) * w.powf(d - 1.0)
    };
    q / (d * d) * g(w1) * g(w2)
}
