use std::sync::{Arc, OnceLock};

use dashmap::DashMap;

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn cache() -> &'static DashMap<usize, Rule> {
    static CACHE: OnceLock<DashMap<usize, Rule>> = OnceLock::new();
    CACHE.get_or_init(DashMap::new)
}

/// Gauss–Legendre nodes and weights of the given order on `[0, 1]`.
pub fn gauss_legendre(order: usize) -> Rule {
    if let Some(r) = cache().get(&order) {
        return r.clone();
    }
    let rule = Arc::new(compute(order.max(1)));
    cache().entry(order).or_insert(rule).clone()
}

fn compute(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton from the Chebyshev-like initial guess for the i-th root of P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] to [0,1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}
