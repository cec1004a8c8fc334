use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{gauss_legendre, Integral};
use crate::error::{Error, Result};
use crate::metric::{Decay, MeasureSpec};
use crate::toric::Fan;
use crate::par;
use crate::reduce::tree_sum;

const HIGH: usize = 10;
const LOW: usize = 5;
const BATCH: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxTolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_boxes: usize,
}

impl BoxTolerance {
    pub fn for_dim(n: usize) -> Self {
        if n <= 1 {
            Self {
                rtol: 1e-12,
                atol: 0.0,
                max_boxes: 20_000,
            }
        } else {
            Self {
                rtol: 1e-9,
                atol: 0.0,
                max_boxes: 20_000,
            }
        }
    }
}

#[derive(Clone, Debug)]
struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
    value: f64,
    error: f64,
    id: usize,
}

struct Ranked(f64, usize);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then_with(|| other.1.cmp(&self.1))
    }
}

fn tensor_rule(f: &(dyn Fn(&[f64]) -> f64 + Sync), lo: &[f64], hi: &[f64], order: usize) -> Result<f64> {
    let n = lo.len();
    let rule = gauss_legendre(order);
    let (t, w) = (&rule.0, &rule.1);
    let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    let total = order.pow(n as u32);
    let mut terms = Vec::with_capacity(total);
    let mut x = vec![0.0; n];
    for flat in 0..total {
        let mut rem = flat;
        let mut weight = vol;
        for d in (0..n).rev() {
            let i = rem % order;
            rem /= order;
            x[d] = lo[d] + t[i] * (hi[d] - lo[d]);
            weight *= w[i];
        }
        let v = f(&x);
        if v.is_nan() {
            return Err(Error::NanIntegrand(x));
        }
        terms.push(weight * v);
    }
    Ok(tree_sum(&terms))
}

fn evaluate(f: &(dyn Fn(&[f64]) -> f64 + Sync), lo: Vec<f64>, hi: Vec<f64>, id: usize) -> Result<Cell> {
    let value = tensor_rule(f, &lo, &hi, HIGH)?;
    let coarse = tensor_rule(f, &lo, &hi, LOW)?;
    Ok(Cell {
        lo,
        hi,
        value,
        error: (value - coarse).abs(),
        id,
    })
}

fn split(cell: &Cell) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = cell.lo.len();
    (0..1usize << n)
        .map(|mask| {
            let mut lo = cell.lo.clone();
            let mut hi = cell.hi.clone();
            for d in 0..n {
                let mid = 0.5 * (cell.lo[d] + cell.hi[d]);
                if mask >> d & 1 == 0 {
                    hi[d] = mid;
                } else {
                    lo[d] = mid;
                }
            }
            (lo, hi)
        })
        .collect()
}

/// Globally adaptive tensor Gauss–Legendre cubature over the product of the
/// given per-axis breakpoint grids. The result does not depend on the thread count.
pub fn integrate_box(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    breaks: &[Vec<f64>],
    tol: &BoxTolerance,
) -> Result<Integral> {
    let n = breaks.len();
    let per_eval = HIGH.pow(n as u32) + LOW.pow(n as u32);
    let mut initial = vec![(Vec::new(), Vec::new())];
    for axis in breaks {
        let mut next = Vec::new();
        for (lo, hi) in &initial {
            for w in axis.windows(2) {
                if w[1] > w[0] {
                    let mut l: Vec<f64> = lo.clone();
                    let mut h: Vec<f64> = hi.clone();
                    l.push(w[0]);
                    h.push(w[1]);
                    next.push((l, h));
                }
            }
        }
        initial = next;
    }
    let mut next_id = 0;
    let seeded: Vec<(Vec<f64>, Vec<f64>, usize)> = initial
        .into_iter()
        .map(|(l, h)| {
            next_id += 1;
            (l, h, next_id - 1)
        })
        .collect();
    let mut cells: Vec<Option<Cell>> = par::try_map(&seeded, |(l, h, id)| evaluate(f, l.clone(), h.clone(), *id))?
        .into_iter()
        .map(Some)
        .collect();
    let mut heap: BinaryHeap<Ranked> = cells.iter().flatten().map(|c| Ranked(c.error, c.id)).collect();
    let mut live = cells.len();
    let mut evals = live * per_eval;
    let mut running_value: f64 = cells.iter().flatten().map(|c| c.value).sum();
    let mut running_error: f64 = cells.iter().flatten().map(|c| c.error).sum();
    loop {
        let running_done = running_error <= tol.atol.max(tol.rtol * running_value.abs());
        if running_done || live >= tol.max_boxes || heap.is_empty() {
            let live_cells: Vec<&Cell> = cells.iter().flatten().collect();
            let value = tree_sum(&live_cells.iter().map(|c| c.value).collect::<Vec<_>>());
            let error = tree_sum(&live_cells.iter().map(|c| c.error).collect::<Vec<_>>());
            running_value = value;
            running_error = error;
            if error <= tol.atol.max(tol.rtol * value.abs()) || live >= tol.max_boxes || heap.is_empty() {
                return Ok(Integral {
                    value,
                    error_estimate: error,
                    nodes_used: evals,
                });
            }
        }
        let mut children = Vec::new();
        for _ in 0..BATCH {
            let Some(Ranked(_, id)) = heap.pop() else { break };
            let cell = cells[id].take().expect("live cell");
            live -= 1;
            running_value -= cell.value;
            running_error -= cell.error;
            for (l, h) in split(&cell) {
                children.push((l, h, next_id));
                next_id += 1;
            }
        }
        let fresh = par::try_map(&children, |(l, h, id)| evaluate(f, l.clone(), h.clone(), *id))?;
        evals += fresh.len() * per_eval;
        for c in fresh {
            heap.push(Ranked(c.error, c.id));
            live += 1;
            running_value += c.value;
            running_error += c.error;
            debug_assert_eq!(cells.len(), c.id);
            cells.push(Some(c));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedOptions {
    /// `|f(u)| ≤ amplitude · exp(growth · |u|)` in the fan gauge.
    pub growth: f64,
    pub amplitude: f64,
    pub tolerance: BoxTolerance,
    /// Points of cocharacter space where the integrand concentrates.
    pub peaks: Vec<Vec<f64>>,
    /// Length scales of the integrand near its peaks and near the origin.
    pub scales: Vec<f64>,
}

impl WeightedOptions {
    pub fn for_dim(n: usize) -> Self {
        Self {
            growth: 0.0,
            amplitude: 1.0,
            tolerance: BoxTolerance::for_dim(n),
            peaks: Vec::new(),
            scales: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedIntegral {
    pub value: f64,
    pub error_estimate: f64,
    pub tail_bound: f64,
    pub radius: f64,
    pub nodes_used: usize,
}

/// `∫_{|λ|_1 > r} e^{-γ|λ|_1} dλ` over the positive orthant of dimension `n`.
fn orthant_tail(n: usize, gamma: f64, r: f64) -> f64 {
    let mut term = 1.0 / gamma.powi(n as i32);
    let mut sum = term;
    for j in 1..n {
        term *= r * gamma / j as f64;
        sum += term;
    }
    sum * (-gamma * r).exp()
}

fn axis_breaks(base: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut v: Vec<f64> = base.iter().copied().filter(|x| *x > lo && *x < hi).collect();
    v.push(lo);
    v.push(hi);
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * hi.max(1.0));
    v
}

/// Cone coordinates from gauge radius `r` and stick-breaking simplex
/// coordinates `t ∈ [0,1]^{n-1}`, with the Jacobian of the change of variables.
fn radial_to_cone(r: f64, t: &[f64]) -> (Vec<f64>, f64) {
    let n = t.len() + 1;
    let mut lam = Vec::with_capacity(n);
    let mut rest = 1.0;
    let mut jac = r.powi(n as i32 - 1);
    for (i, &ti) in t.iter().enumerate() {
        lam.push(r * rest * ti);
        jac *= (1.0 - ti).powi((n - 2 - i) as i32);
        rest *= 1.0 - ti;
    }
    lam.push(r * rest);
    (lam, jac)
}

/// Inverse of [`radial_to_cone`] on the open cone.
fn cone_to_radial(lam: &[f64]) -> (f64, Vec<f64>) {
    let r: f64 = lam.iter().sum();
    let mut t = Vec::with_capacity(lam.len().saturating_sub(1));
    let mut rest = r;
    for &l in &lam[..lam.len() - 1] {
        t.push(if rest > 0.0 { (l / rest).clamp(0.0, 1.0) } else { 0.5 });
        rest -= l;
    }
    (r, t)
}

/// `∫ f dμ` for a torus-invariant measure `μ`.
pub fn integrate_weighted(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    measure: &MeasureSpec,
    opts: &WeightedOptions,
) -> Result<WeightedIntegral> {
    let integrand = |u: &[f64]| {
        let v = f(u);
        if v == 0.0 {
            0.0
        } else {
            v * measure.density(u)
        }
    };
    integrate_fan(&integrand, measure.fan(), measure.decay(), measure.breakpoints(), opts)
}

/// `∫ h(u) du` over cocharacter space for `|h(u)| ≤ A·C·e^{(β−α)|u|}`, where
/// `A, β` come from `opts` and `C, α` from `decay`. Integrates cone by cone in
/// radial/simplex coordinates, truncated at a gauge radius chosen from the tail bound.
pub fn integrate_fan(
    integrand: &(dyn Fn(&[f64]) -> f64 + Sync),
    fan: &Fan,
    decay: Decay,
    breakpoints: &[f64],
    opts: &WeightedOptions,
) -> Result<WeightedIntegral> {
    let gamma = decay.rate - opts.growth;
    if !(gamma > 0.0) {
        return Err(Error::NonIntegrable {
            growth: opts.growth,
            decay: decay.rate,
        });
    }
    let n = fan.rank();
    let cones = fan.max_cones().len();
    let tail_at = |r: f64| cones as f64 * opts.amplitude * decay.constant * orthant_tail(n, gamma, r);

    let mut radial = vec![0.05, 0.25, 1.0, 3.0, 8.0];
    radial.extend_from_slice(breakpoints);
    for &s in &opts.scales {
        radial.extend([0.25 * s, s, 4.0 * s, 16.0 * s]);
    }
    let mut radius = (30.0 / gamma).max(breakpoints.iter().copied().fold(0.0, f64::max) + 1.0);
    loop {
        let mut value_parts = Vec::with_capacity(cones);
        let mut err = 0.0;
        let mut nodes = 0;
        for c in 0..cones {
            let mut r_axis = radial.clone();
            let mut t_axes = vec![vec![0.5]; n - 1];
            for p in &opts.peaks {
                let lam = fan.cone_coordinates_f64(c, p);
                if lam.iter().any(|&l| l < -1e-9) {
                    continue;
                }
                let lam: Vec<f64> = lam.iter().map(|l| l.max(0.0)).collect();
                let (r, t) = cone_to_radial(&lam);
                r_axis.push(r);
                for &s in &opts.scales {
                    r_axis.extend([r - 4.0 * s, r - s, r + s, r + 4.0 * s]);
                }
                for (axis, &ti) in t_axes.iter_mut().zip(&t) {
                    axis.push(ti);
                    for &s in &opts.scales {
                        let w = s / r.max(s);
                        axis.extend([ti - 4.0 * w, ti - w, ti + w, ti + 4.0 * w]);
                    }
                }
            }
            let mut breaks = vec![axis_breaks(&r_axis, 0.0, radius)];
            breaks.extend(t_axes.iter().map(|a| axis_breaks(a, 0.0, 1.0)));
            let g = |x: &[f64]| {
                let (lam, jac) = radial_to_cone(x[0], &x[1..]);
                if jac == 0.0 {
                    return 0.0;
                }
                jac * integrand(&fan.from_cone_coordinates(c, &lam))
            };
            let r = integrate_box(&g, &breaks, &opts.tolerance)?;
            value_parts.push(r.value);
            err += r.error_estimate;
            nodes += r.nodes_used;
        }
        let value = tree_sum(&value_parts);
        let tail = tail_at(radius);
        let target = opts.tolerance.atol.max(0.1 * opts.tolerance.rtol * value.abs());
        if tail <= target || gamma * radius > 700.0 {
            return Ok(WeightedIntegral {
                value,
                error_estimate: err + tail,
                tail_bound: tail,
                radius,
                nodes_used: nodes,
            });
        }
        radius += 15.0 / gamma;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toric::StandardFan;

    #[test]
    fn box_rule_on_smooth_and_kinked_integrands() {
        let tol = BoxTolerance::for_dim(1);
        let r = integrate_box(&|x| x[0].exp(), &[vec![0.0, 1.0]], &tol).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-14);
        let r = integrate_box(&|x| (x[0] - 0.3).abs(), &[vec![0.0, 1.0]], &tol).unwrap();
        assert!((r.value - 0.29).abs() < 1e-10, "{r:?}");
        let tol2 = BoxTolerance::for_dim(2);
        let r = integrate_box(&|x| (x[0] * x[1]).sin(), &[vec![0.0, 1.0], vec![0.0, 2.0]], &tol2).unwrap();
        // ∫_0^1 (1 - cos 2x)/x dx = Σ_k (-1)^{k+1} 4^k / (2k (2k)!)
        let mut exact = 0.0;
        let mut fact = 1.0;
        for k in 1..20 {
            fact *= (2 * k - 1) as f64 * (2 * k) as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            exact += sign * 4f64.powi(k) / (2.0 * k as f64 * fact);
        }
        assert!((r.value - exact).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn measures_have_unit_mass() {
        for name in [StandardFan::P1, StandardFan::P2, StandardFan::Hirzebruch(1)] {
            let fan = Fan::standard(name);
            let m = MeasureSpec::laplace(&fan);
            let r = integrate_weighted(&|_| 1.0, &m, &WeightedOptions::for_dim(fan.rank())).unwrap();
            assert!((r.value - 1.0).abs() < 1e-9, "{name}: {r:?}");
            let b = MeasureSpec::uniform_ball(&fan, 2.0).unwrap();
            let r = integrate_weighted(&|_| 1.0, &b, &WeightedOptions::for_dim(fan.rank())).unwrap();
            assert!((r.value - 1.0).abs() < 1e-6, "{name}: {r:?}");
        }
    }

    #[test]
    fn laplace_moment_on_the_line() {
        let fan = Fan::standard(StandardFan::P1);
        let m = MeasureSpec::laplace(&fan);
        let mut opts = WeightedOptions::for_dim(1);
        opts.growth = 1.0;
        let r = integrate_weighted(&|u| u[0].cosh(), &m, &opts).unwrap();
        // ∫ cosh(u) e^{-2|u|} du = 4/3
        assert!((r.value - 4.0 / 3.0).abs() < 1e-11, "{r:?}");
    }

    #[test]
    fn growth_beyond_decay_is_rejected() {
        let fan = Fan::standard(StandardFan::P1);
        let m = MeasureSpec::laplace(&fan);
        let mut opts = WeightedOptions::for_dim(1);
        opts.growth = 2.5;
        assert!(matches!(
            integrate_weighted(&|_| 1.0, &m, &opts),
            Err(Error::NonIntegrable { .. })
        ));
    }

    #[test]
    fn radial_coordinates_round_trip() {
        for lam in [vec![0.3], vec![0.2, 0.7], vec![0.1, 0.5, 0.25]] {
            let (r, t) = cone_to_radial(&lam);
            let (back, _) = radial_to_cone(r, &t);
            for (a, b) in lam.iter().zip(&back) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        // Volume of {Σλ ≤ 1} in three dimensions is 1/6.
        let tol = BoxTolerance::for_dim(3);
        let f = |x: &[f64]| radial_to_cone(x[0], &x[1..]).1;
        let r = integrate_box(&f, &[vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]], &tol).unwrap();
        assert!((r.value - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn deterministic_order() {
        let tol = BoxTolerance::for_dim(2);
        let f = |x: &[f64]| (-(x[0] - 0.2).powi(2) * 400.0 - x[1]).exp();
        let a = integrate_box(&f, &[vec![0.0, 1.0], vec![0.0, 1.0]], &tol).unwrap();
        let b = integrate_box(&f, &[vec![0.0, 1.0], vec![0.0, 1.0]], &tol).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
