//! Legendre–Fenchel conjugates `x ↦ inf_u (<x,u> - g(u))` and biconjugates.

use dashmap::DashMap;
use serde::{Deserialize, Serialize};

use super::solve::{minimize_pattern, newton_with, NewtonOptions};
use super::{dot, MetricFunction, MetricKind};
use crate::error::{Error, Result};
use crate::lattice::Polytope;
use crate::par;
use crate::rational::to_f64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegendreOptions {
    /// Target accuracy of conjugate values.
    pub tol: f64,
    /// Lattice distance below which a point is treated as a boundary point.
    pub delta_floor: f64,
    /// Points per axis of the global grid used for non-concave metrics.
    pub grid_resolution: usize,
    /// Width of the membership band for floating-point points.
    pub membership_tol: f64,
}

impl LegendreOptions {
    pub fn for_dim(n: usize) -> Self {
        Self {
            tol: if n <= 1 { 1e-8 } else { 1e-6 },
            delta_floor: 1e-3,
            grid_resolution: if n <= 1 { 4001 } else { 401 },
            membership_tol: 1e-12,
        }
    }
}

/// One conjugate evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Conjugate {
    /// `-∞` outside the polytope.
    pub value: f64,
    /// Minimizer in cocharacter space, when one was located.
    pub argmin: Option<Vec<f64>>,
    /// The minimizer ran into the search box: the infimum is approached at infinity.
    pub escaped: bool,
}

impl Conjugate {
    fn outside() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            argmin: None,
            escaped: false,
        }
    }
}

/// Radius, in the fan gauge, of a box certain to contain the minimizer for a
/// point at lattice distance `delta` from the boundary.
pub(crate) fn search_radius(gap: f64, delta: f64) -> f64 {
    (2.0 * gap + 1.0) / delta
}

pub fn legendre_transform(g: &MetricFunction, x: &[f64], opts: &LegendreOptions) -> Result<Conjugate> {
    let n = g.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    if !g.polytope().contains_f64(x, opts.membership_tol) {
        return Ok(Conjugate::outside());
    }
    match g.kind() {
        MetricKind::Canonical { .. } => Ok(Conjugate {
            value: 0.0,
            argmin: Some(vec![0.0; n]),
            escaped: false,
        }),
        MetricKind::Shifted { base, shift } => {
            let mut c = legendre_transform(base, x, opts)?;
            c.value -= shift;
            Ok(c)
        }
        MetricKind::Translated { base, by } => {
            let y: Vec<f64> = x.iter().zip(by).map(|(a, m)| a - *m as f64).collect();
            legendre_transform(base, &y, opts)
        }
        MetricKind::Scaled { base, factor } => {
            let f = to_f64(factor);
            let y: Vec<f64> = x.iter().map(|a| a / f).collect();
            let mut c = legendre_transform(base, &y, opts)?;
            c.value *= f;
            Ok(c)
        }
        _ => numeric(g, x, opts),
    }
}

fn numeric(g: &MetricFunction, x: &[f64], opts: &LegendreOptions) -> Result<Conjugate> {
    let poly = g.polytope();
    let fan = g.divisor().fan();
    let delta = poly.min_slack_f64(x).max(0.0);
    let boundary = delta < opts.delta_floor;
    let radius = search_radius(g.gap_bound(), delta.max(opts.delta_floor));
    let radius = if boundary { 10.0 * radius } else { radius };
    let objective = |u: &[f64]| dot(x, u) - g.value(u);
    let feasible = |u: &[f64]| fan.gauge(u) <= radius;
    let start = vec![0.0; x.len()];

    if g.is_smooth() && g.is_concave() {
        let grad = |u: &[f64]| {
            let gg = g.gradient(u).expect("smooth metric has a gradient");
            x.iter().zip(&gg).map(|(a, b)| a - b).collect::<Vec<f64>>()
        };
        let hess = |u: &[f64]| -g.hessian(u).expect("smooth metric has a Hessian");
        let opts_n = NewtonOptions::default();
        match newton_with(&objective, &grad, &hess, &start, &feasible, &opts_n) {
            Ok(out) => {
                return Ok(Conjugate {
                    value: out.value,
                    argmin: Some(out.point),
                    escaped: out.hit_box,
                })
            }
            Err(_) if boundary => {}
            Err(e) => return Err(e),
        }
    }
    if g.is_concave() {
        let extra = ray_directions(g);
        let out = minimize_pattern(&objective, &start, 1.0, opts.tol * 1e-3, &extra, &feasible);
        let escaped = out.touched_boundary && fan.gauge(&out.point) > 0.5 * radius;
        return Ok(Conjugate {
            value: out.value,
            argmin: Some(out.point),
            escaped,
        });
    }
    grid_minimize(g, x, radius, opts)
}

fn ray_directions(g: &MetricFunction) -> Vec<Vec<f64>> {
    g.divisor()
        .fan()
        .rays()
        .iter()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect()
}

/// Symmetric axis with spacing `scale·h` near the origin growing geometrically outward.
fn sinh_axis(half_width: f64, points: usize) -> Vec<f64> {
    let scale = 0.05;
    let tmax = (half_width / scale).asinh();
    let m = points.max(3);
    (0..m)
        .map(|i| {
            let t = -tmax + 2.0 * tmax * i as f64 / (m - 1) as f64;
            scale * t.sinh()
        })
        .collect()
}

/// Global search for non-concave metrics: a sinh-graded tensor grid over the
/// search box, followed by pattern-search refinement of the best local minima.
fn grid_minimize(g: &MetricFunction, x: &[f64], radius: f64, opts: &LegendreOptions) -> Result<Conjugate> {
    let n = x.len();
    let fan = g.divisor().fan();
    let reach = fan
        .rays()
        .iter()
        .flat_map(|r| r.iter().map(|v| v.unsigned_abs()))
        .max()
        .unwrap_or(1) as f64;
    let axis = sinh_axis(radius * reach, opts.grid_resolution);
    let m = axis.len();
    let total = m.pow(n as u32);
    let objective = |u: &[f64]| dot(x, u) - g.value(u);
    let point_of = |flat: usize| {
        let mut rem = flat;
        let mut u = vec![0.0; n];
        for d in (0..n).rev() {
            u[d] = axis[rem % m];
            rem /= m;
        }
        u
    };
    let indices: Vec<usize> = (0..total).collect();
    let values = par::map(&indices, |&i| objective(&point_of(i)));

    let is_local_min = |flat: usize| {
        let mut rem = flat;
        let mut coords = vec![0usize; n];
        for d in (0..n).rev() {
            coords[d] = rem % m;
            rem /= m;
        }
        let mut stride = 1;
        for d in (0..n).rev() {
            for delta in [-1i64, 1] {
                let c = coords[d] as i64 + delta;
                if c < 0 || c >= m as i64 {
                    continue;
                }
                let nb = (flat as i64 + delta * stride as i64) as usize;
                if values[nb] < values[flat] {
                    return false;
                }
            }
            stride *= m;
        }
        true
    };
    let mut minima: Vec<usize> = (0..total).filter(|&i| values[i].is_finite() && is_local_min(i)).collect();
    minima.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    minima.truncate(4);
    let Some(&first) = minima.first() else {
        return Err(Error::NonConvergence {
            what: "grid conjugate search",
            iterations: total,
            residual: f64::NAN,
        });
    };

    let feasible = |u: &[f64]| fan.gauge(u) <= radius;
    let mut best = (point_of(first), values[first]);
    for &idx in &minima {
        let start = point_of(idx);
        let spacing = start
            .iter()
            .map(|&c| {
                let i = axis.partition_point(|&a| a < c).min(m - 1);
                let lo = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
                let hi = if i + 1 < m { axis[i + 1] - axis[i] } else { 0.0 };
                lo.max(hi)
            })
            .fold(0.0, f64::max);
        let out = minimize_pattern(&objective, &start, spacing, opts.tol * 1e-3, &[], &feasible);
        if out.value < best.1 {
            best = (out.point, out.value);
        }
    }
    let edge = best.0.iter().any(|c| (c.abs() - axis[m - 1]).abs() <= 1e-9 * axis[m - 1]);
    let escaped = edge || fan.gauge(&best.0) > 0.99 * radius;
    Ok(Conjugate {
        value: best.1,
        argmin: Some(best.0),
        escaped,
    })
}

/// The conjugate of a metric on its polytope, with an append-only cache of
/// evaluations keyed by the exact bits of the evaluation point.
pub struct ConjugateFunction {
    source: MetricFunction,
    opts: LegendreOptions,
    cache: DashMap<Vec<u64>, Conjugate>,
}

impl ConjugateFunction {
    pub fn new(source: &MetricFunction, opts: LegendreOptions) -> Self {
        Self {
            source: source.clone(),
            opts,
            cache: DashMap::new(),
        }
    }

    pub fn with_defaults(source: &MetricFunction) -> Self {
        Self::new(source, LegendreOptions::for_dim(source.dim()))
    }

    pub fn source(&self) -> &MetricFunction {
        &self.source
    }

    pub fn domain(&self) -> &Polytope {
        self.source.polytope()
    }

    pub fn tolerance(&self) -> f64 {
        self.opts.tol
    }

    pub fn options(&self) -> &LegendreOptions {
        &self.opts
    }

    pub fn cached_points(&self) -> usize {
        self.cache.len()
    }

    pub fn eval_full(&self, x: &[f64]) -> Result<Conjugate> {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let c = legendre_transform(&self.source, x, &self.opts)?;
        // Evaluation is deterministic, so a racing fill writes the same value.
        self.cache.entry(key).or_insert_with(|| c.clone());
        Ok(c)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval_full(x)?.value)
    }
}

#[derive(Clone, Debug)]
pub struct BiconjugateOptions {
    /// Sample points per axis of the polytope's bounding box.
    pub resolution: usize,
    /// Polish each evaluation by a pattern search in the polytope with exact
    /// conjugate values. `None` enables it for concave sources.
    pub refine: Option<bool>,
    pub legendre: LegendreOptions,
}

impl BiconjugateOptions {
    pub fn for_dim(n: usize) -> Self {
        Self {
            resolution: if n <= 1 { 2001 } else { 101 },
            refine: None,
            legendre: LegendreOptions::for_dim(n),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Samples {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    refine: Option<(MetricFunction, LegendreOptions)>,
    spacing: f64,
}

/// The concave envelope `u ↦ inf_x (<x,u> - ǧ(x))` of a metric, realized from
/// conjugate samples on the polytope.
pub fn biconjugate_metric(g: &MetricFunction, opts: &BiconjugateOptions) -> Result<MetricFunction> {
    let poly = g.polytope();
    if poly.is_empty() {
        return Err(Error::EmptyPolytope);
    }
    let n = g.dim();
    let verts = poly.vertices_f64();
    let lo: Vec<f64> = (0..n).map(|i| verts.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..n).map(|i| verts.iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let m = opts.resolution.max(2);
    let mut points = verts.clone();
    let total = m.pow(n as u32);
    for flat in 0..total {
        let mut rem = flat;
        let mut p = vec![0.0; n];
        for d in (0..n).rev() {
            let i = rem % m;
            rem /= m;
            p[d] = lo[d] + (hi[d] - lo[d]) * i as f64 / (m - 1) as f64;
        }
        if poly.contains_f64(&p, 1e-12) && !verts.contains(&p) {
            points.push(p);
        }
    }
    let values = par::try_map(&points, |p| legendre_transform(g, p, &opts.legendre).map(|c| c.value))?;
    let (points, values): (Vec<_>, Vec<_>) = points
        .into_iter()
        .zip(values)
        .filter(|(_, v)| v.is_finite())
        .unzip();
    let spacing = (0..n).map(|d| (hi[d] - lo[d]) / (m - 1) as f64).fold(0.0, f64::max);
    let refine = opts.refine.unwrap_or_else(|| g.is_concave());
    let samples = Samples {
        points,
        values,
        refine: refine.then(|| (g.clone(), opts.legendre.clone())),
        spacing,
    };
    Ok(MetricFunction::from_samples(g, samples))
}

pub(crate) fn biconjugate_value(s: &Samples, u: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    let mut best_i = 0;
    for (i, (p, v)) in s.points.iter().zip(&s.values).enumerate() {
        let t = dot(p, u) - v;
        if t < best {
            best = t;
            best_i = i;
        }
    }
    let Some((source, lopts)) = &s.refine else {
        return best;
    };
    let poly = source.polytope();
    let objective = |x: &[f64]| match legendre_transform(source, x, lopts) {
        Ok(c) if c.value.is_finite() => dot(x, u) - c.value,
        _ => f64::INFINITY,
    };
    let feasible = |x: &[f64]| poly.contains_f64(x, 0.0);
    let out = minimize_pattern(&objective, &s.points[best_i], s.spacing, 1e-13, &[], &feasible);
    best.min(out.value)
}
