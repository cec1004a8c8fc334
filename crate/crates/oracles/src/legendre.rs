use toric_core::MetricFunction;

fn grid_min(g: &MetricFunction, x: &[f64], center: &[f64], half_width: f64, resolution: usize) -> (f64, Vec<f64>) {
    let n = x.len();
    // odd, so the center is a node
    let res = resolution.max(3) | 1;
    let step = 2.0 * half_width / (res - 1) as f64;
    let total = res.pow(n as u32);
    let mut best = (f64::INFINITY, center.to_vec());
    let mut u = vec![0.0; n];
    for flat in 0..total {
        let mut rem = flat;
        for (d, ud) in u.iter_mut().enumerate() {
            *ud = center[d] - half_width + step * (rem % res) as f64;
            rem /= res;
        }
        let v: f64 = x.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() - g.value(&u);
        if v < best.0 {
            best = (v, u.clone());
        }
    }
    best
}

/// `min ⟨x,u⟩ − g(u)` over a uniform grid on `[−radius, radius]^n`, refined
/// once on a grid of the same resolution around the best point.
pub fn legendre_grid_oracle(g: &MetricFunction, x: &[f64], radius: f64, resolution: usize) -> f64 {
    let n = x.len();
    let (coarse, at) = grid_min(g, x, &vec![0.0; n], radius, resolution);
    let h = 2.0 * radius / (resolution.max(3) | 1) as f64;
    let (fine, _) = grid_min(g, x, &at, 2.0 * h, resolution);
    coarse.min(fine)
}
