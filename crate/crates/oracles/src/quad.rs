use std::f64::consts::FRAC_PI_2;

use toric_core::Fan;

/// Exp-sinh nodes and weights for `∫_0^∞`, step `h`, keeping nodes below `cap`.
pub fn exp_sinh_rule(h: f64, cap: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let m = (5.0 / h).ceil() as i64;
    for j in -m..=m {
        let t = j as f64 * h;
        let x = (FRAC_PI_2 * t.sinh()).exp();
        if x > cap || x < 1e-300 {
            continue;
        }
        out.push((x, h * FRAC_PI_2 * t.cosh() * x));
    }
    out
}

/// `∫ f(u) du` over cocharacter space: a tensor exp-sinh rule in the
/// coordinates of each maximal cone (unimodular, so the Jacobian is one).
pub fn integrate_over_fan(f: &dyn Fn(&[f64]) -> f64, fan: &Fan, h: f64, cap: f64) -> f64 {
    let n = fan.rank();
    let rule = exp_sinh_rule(h, cap);
    let m = rule.len();
    let mut total = 0.0;
    let mut lam = vec![0.0; n];
    for c in 0..fan.max_cones().len() {
        for flat in 0..m.pow(n as u32) {
            let mut rem = flat;
            let mut w = 1.0;
            for l in lam.iter_mut() {
                let (x, wx) = rule[rem % m];
                *l = x;
                w *= wx;
                rem /= m;
            }
            total += w * f(&fan.from_cone_coordinates(c, &lam));
        }
    }
    total
}
