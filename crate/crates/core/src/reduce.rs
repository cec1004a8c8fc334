//! Deterministic floating-point reduction.
//!
//! Values are summed in fixed-size blocks with Neumaier compensation, and the
//! block partials are combined by a fixed-shape pairwise tree. The result only
//! depends on the order of the input slice, never on how it was produced.

const BLOCK: usize = 64;

fn neumaier(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn pairwise(partials: &[f64]) -> f64 {
    match partials.len() {
        0 => 0.0,
        1 => partials[0],
        n => {
            let mid = n / 2;
            pairwise(&partials[..mid]) + pairwise(&partials[mid..])
        }
    }
}

pub fn tree_sum(values: &[f64]) -> f64 {
    let partials: Vec<f64> = values.chunks(BLOCK).map(neumaier).collect();
    pairwise(&partials)
}
