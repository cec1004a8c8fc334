//! Torus-invariant metrics as functions on cocharacter space, with a certified
//! bound on their distance to the support function of the divisor.

mod conjugate;
mod moment;
mod solve;
mod spec;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::lattice::Polytope;
use crate::rational::{int, to_f64, Rat};
use crate::toric::ToricDivisor;

use conjugate::Samples;
pub use conjugate::{
    biconjugate_metric, legendre_transform, BiconjugateOptions, Conjugate, ConjugateFunction,
    LegendreOptions,
};
pub use moment::{
    gradient_map_inverse, ma_density, AngularDensity, Decay, MeasureSpec, Provenance, TorusMeasure,
};
pub(crate) use moment::ma_decay_rate;
pub use solve::{minimize_newton, minimize_pattern, NewtonOutcome};
pub use spec::{MeasureConfig, MetricConfig};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Fubini–Study type metric `-(1/(2β))·log Σ_e c_e·exp(-2β<e,u>)` over the
/// lattice points `e` of the polytope.
#[derive(Clone, Debug)]
pub struct FubiniStudy {
    points: Vec<Vec<f64>>,
    log_weights: Vec<f64>,
    temperature: f64,
}

impl FubiniStudy {
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    fn exponents<'a>(&'a self, u: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        let b = self.temperature;
        self.points
            .iter()
            .zip(&self.log_weights)
            .map(move |(e, lw)| -2.0 * b * dot(e, u) + lw)
    }

    fn value(&self, u: &[f64]) -> f64 {
        let m = self.exponents(u).fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = self.exponents(u).map(|t| (t - m).exp()).sum();
        -(m + s.ln()) / (2.0 * self.temperature)
    }

    /// Softmax weights of the lattice points at `u`.
    fn probabilities(&self, u: &[f64]) -> Vec<f64> {
        let t: Vec<f64> = self.exponents(u).collect();
        let m = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = t.iter().map(|x| (x - m).exp()).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let p = self.probabilities(u);
        let n = u.len();
        (0..n).map(|i| p.iter().zip(&self.points).map(|(pe, e)| pe * e[i]).sum()).collect()
    }

    /// `det(-Hess g)` as a sum of nonnegative terms: over `(n+1)`-subsets of
    /// lattice points, the product of their weights times the squared simplex
    /// determinant. Free of the cancellation in the covariance determinant.
    pub(crate) fn hessian_determinant(&self, u: &[f64]) -> f64 {
        let n = u.len();
        let p = self.probabilities(u);
        let mut total = 0.0;
        for subset in crate::lattice::subsets(self.points.len(), n + 1) {
            let weight: f64 = subset.iter().map(|&i| p[i]).product();
            if weight == 0.0 {
                continue;
            }
            let base = &self.points[subset[0]];
            let rows: Vec<Vec<f64>> = subset[1..]
                .iter()
                .map(|&i| self.points[i].iter().zip(base).map(|(a, b)| a - b).collect())
                .collect();
            let d = crate::linalg::det_f64(&rows);
            total += weight * d * d;
        }
        (2.0 * self.temperature).powi(n as i32) * total
    }

    fn hessian(&self, u: &[f64]) -> DMatrix<f64> {
        let p = self.probabilities(u);
        let n = u.len();
        let mean: Vec<f64> =
            (0..n).map(|i| p.iter().zip(&self.points).map(|(pe, e)| pe * e[i]).sum()).collect();
        DMatrix::from_fn(n, n, |i, j| {
            let cov: f64 = p
                .iter()
                .zip(&self.points)
                .map(|(pe, e)| pe * (e[i] - mean[i]) * (e[j] - mean[j]))
                .sum();
            -2.0 * self.temperature * cov
        })
    }
}

/// Metric sampled on a tensor grid; the residual to the support function is
/// interpolated multilinearly and held constant outside the grid box.
#[derive(Clone, Debug)]
pub struct GridMetric {
    axes: Vec<Vec<f64>>,
    residuals: Vec<f64>,
    concave: bool,
}

impl GridMetric {
    fn residual(&self, u: &[f64]) -> f64 {
        let n = self.axes.len();
        let mut lo = Vec::with_capacity(n);
        let mut frac = Vec::with_capacity(n);
        for (axis, &x) in self.axes.iter().zip(u) {
            let x = x.clamp(axis[0], *axis.last().unwrap());
            let i = match axis.partition_point(|&a| a <= x) {
                0 => 0,
                p => (p - 1).min(axis.len() - 2),
            };
            lo.push(i);
            frac.push((x - axis[i]) / (axis[i + 1] - axis[i]));
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut flat = 0;
            for d in 0..n {
                let bit = (corner >> d) & 1;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
                flat = flat * self.axes[d].len() + lo[d] + bit;
            }
            if w != 0.0 {
                acc += w * self.residuals[flat];
            }
        }
        acc
    }
}

#[derive(Clone)]
pub struct CustomMetric {
    func: ScalarFn,
    concave: bool,
    smooth: bool,
}

impl fmt::Debug for CustomMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMetric")
            .field("concave", &self.concave)
            .field("smooth", &self.smooth)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
#[allow(private_interfaces)]
pub enum MetricKind {
    Canonical { vertices: Vec<Vec<f64>> },
    FubiniStudy(FubiniStudy),
    Shifted { base: MetricFunction, shift: f64 },
    Translated { base: MetricFunction, by: Vec<i64> },
    Scaled { base: MetricFunction, factor: Rat },
    Blend { t: f64, first: MetricFunction, second: MetricFunction },
    Sum { first: MetricFunction, second: MetricFunction },
    Custom(CustomMetric),
    Grid(GridMetric),
    #[doc(hidden)]
    Biconjugate(Samples),
}

#[derive(Debug)]
struct Inner {
    divisor: ToricDivisor,
    polytope: Polytope,
    kind: MetricKind,
    gap: f64,
}

/// A continuous metric on a toric divisor, given by its radial profile.
#[derive(Clone, Debug)]
pub struct MetricFunction {
    inner: Arc<Inner>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dim(expected: usize, u: &[f64]) {
    debug_assert_eq!(expected, u.len(), "point has wrong dimension");
}

impl MetricFunction {
    fn build(divisor: ToricDivisor, kind: MetricKind, gap: f64) -> Self {
        let polytope = divisor.polytope();
        Self {
            inner: Arc::new(Inner {
                divisor,
                polytope,
                kind,
                gap,
            }),
        }
    }

    /// `u ↦ min_v <v,u>` over the vertices of the polytope.
    pub fn canonical(divisor: &ToricDivisor) -> Result<Self> {
        let poly = divisor.polytope();
        if poly.is_empty() {
            return Err(Error::EmptyPolytope);
        }
        if !divisor.is_nef() {
            // The gap to a non-concave support function grows linearly.
            return Err(Error::NotNef);
        }
        let vertices = poly.vertices_f64();
        Ok(Self::build(divisor.clone(), MetricKind::Canonical { vertices }, 0.0))
    }

    /// Fubini–Study pullback along the monomial embedding given by the lattice points.
    pub fn fubini_study(divisor: &ToricDivisor) -> Result<Self> {
        Self::fubini_study_with(divisor, 1.0, None)
    }

    pub fn fubini_study_with(
        divisor: &ToricDivisor,
        temperature: f64,
        log_weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if !divisor.is_nef() {
            return Err(Error::NotNef);
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidMetric("temperature must be positive".into()));
        }
        let poly = divisor.polytope();
        let pts = poly.lattice_points(1);
        if pts.is_empty() {
            return Err(Error::EmptyPolytope);
        }
        let points: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|&x| x as f64).collect()).collect();
        let log_weights = log_weights.unwrap_or_else(|| vec![0.0; points.len()]);
        if log_weights.len() != points.len() || log_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidMetric("one finite log-weight per lattice point".into()));
        }
        // Every vertex must be a weighted lattice point for the gap to stay bounded.
        let verts = poly.vertices_f64();
        let mut min_vertex_lw = f64::INFINITY;
        for v in &verts {
            match points.iter().position(|p| p == v) {
                Some(i) => min_vertex_lw = min_vertex_lw.min(log_weights[i]),
                None => {
                    return Err(Error::InvalidMetric(format!(
                        "vertex {v:?} is not a lattice point"
                    )))
                }
            }
        }
        let lmax = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_total = lmax + log_weights.iter().map(|w| (w - lmax).exp()).sum::<f64>().ln();
        let gap = log_total.max(-min_vertex_lw).max(0.0) / (2.0 * temperature);
        let fs = FubiniStudy {
            points,
            log_weights,
            temperature,
        };
        Ok(Self::build(divisor.clone(), MetricKind::FubiniStudy(fs), gap))
    }

    /// A user-supplied profile with a declared gap bound.
    pub fn custom(
        divisor: &ToricDivisor,
        func: ScalarFn,
        gap_bound: f64,
        concave: bool,
        smooth: bool,
    ) -> Result<Self> {
        if !(gap_bound >= 0.0 && gap_bound.is_finite()) {
            return Err(Error::InvalidMetric("gap bound must be finite and nonnegative".into()));
        }
        let kind = MetricKind::Custom(CustomMetric {
            func,
            concave,
            smooth,
        });
        Ok(Self::build(divisor.clone(), kind, gap_bound))
    }

    /// Metric sampled on a tensor grid (values in row-major order, last axis fastest).
    pub fn grid(
        divisor: &ToricDivisor,
        axes: Vec<Vec<f64>>,
        values: Vec<f64>,
        gap_bound: f64,
        concave: bool,
    ) -> Result<Self> {
        let n = divisor.rank();
        if axes.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: axes.len(),
            });
        }
        if axes.iter().any(|a| a.len() < 2 || a.windows(2).any(|w| w[1] <= w[0])) {
            return Err(Error::InvalidMetric("grid axes must be strictly increasing".into()));
        }
        let total: usize = axes.iter().map(Vec::len).product();
        if values.len() != total {
            return Err(Error::DimensionMismatch {
                expected: total,
                found: values.len(),
            });
        }
        let mut residuals = Vec::with_capacity(total);
        for (flat, v) in values.iter().enumerate() {
            let mut rem = flat;
            let mut u = vec![0.0; n];
            for d in (0..n).rev() {
                u[d] = axes[d][rem % axes[d].len()];
                rem /= axes[d].len();
            }
            residuals.push(v - divisor.support_function_f64(&u));
        }
        let worst = residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
        if worst > gap_bound + 1e-12 {
            return Err(Error::InvalidMetric(format!(
                "sampled gap {worst} exceeds declared bound {gap_bound}"
            )));
        }
        let kind = MetricKind::Grid(GridMetric {
            axes,
            residuals,
            concave,
        });
        Ok(Self::build(divisor.clone(), kind, gap_bound))
    }

    pub fn shifted(&self, shift: f64) -> Self {
        let gap = self.gap_bound() + shift.abs();
        Self::build(
            self.divisor().clone(),
            MetricKind::Shifted {
                base: self.clone(),
                shift,
            },
            gap,
        )
    }

    /// `u ↦ g(u) + <m,u>`, a metric on the divisor translated by the character `m`.
    pub fn translated(&self, by: &[i64]) -> Result<Self> {
        let n = self.dim();
        if by.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: by.len(),
            });
        }
        let d = self.divisor();
        let vals = d
            .fan()
            .rays()
            .iter()
            .zip(d.ray_values())
            .map(|(r, a)| a + int(r.iter().zip(by).map(|(x, y)| x * y).sum()))
            .collect();
        let divisor = ToricDivisor::new(d.fan().clone(), vals)?;
        Ok(Self::build(
            divisor,
            MetricKind::Translated {
                base: self.clone(),
                by: by.to_vec(),
            },
            self.gap_bound(),
        ))
    }

    /// `factor·g` on the divisor `factor·D`.
    pub fn scaled(&self, factor: &Rat) -> Result<Self> {
        if !factor.is_positive() {
            return Err(Error::InvalidMetric("scale factor must be positive".into()));
        }
        Ok(Self::build(
            self.divisor().scale(factor),
            MetricKind::Scaled {
                base: self.clone(),
                factor: factor.clone(),
            },
            self.gap_bound() * to_f64(factor),
        ))
    }

    /// `(1-t)·first + t·second` on their common divisor.
    pub fn blend(first: &Self, second: &Self, t: f64) -> Result<Self> {
        if first.divisor() != second.divisor() {
            return Err(Error::DivisorMismatch);
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidMetric("blend parameter must lie in [0,1]".into()));
        }
        let gap = first.gap_bound().max(second.gap_bound());
        Ok(Self::build(
            first.divisor().clone(),
            MetricKind::Blend {
                t,
                first: first.clone(),
                second: second.clone(),
            },
            gap,
        ))
    }

    /// Tensor product metric on the sum of the divisors.
    pub fn sum(first: &Self, second: &Self) -> Result<Self> {
        let divisor = first.divisor().add(second.divisor())?;
        let gap = first.gap_bound() + second.gap_bound();
        Ok(Self::build(
            divisor,
            MetricKind::Sum {
                first: first.clone(),
                second: second.clone(),
            },
            gap,
        ))
    }

    pub(crate) fn from_samples(source: &Self, samples: Samples) -> Self {
        Self::build(source.divisor().clone(), MetricKind::Biconjugate(samples), source.gap_bound())
    }

    pub fn kind(&self) -> &MetricKind {
        &self.inner.kind
    }

    pub fn divisor(&self) -> &ToricDivisor {
        &self.inner.divisor
    }

    pub fn polytope(&self) -> &Polytope {
        &self.inner.polytope
    }

    pub fn dim(&self) -> usize {
        self.inner.divisor.rank()
    }

    /// Certified bound on `sup_u |g(u) - Ψ(u)|`.
    pub fn gap_bound(&self) -> f64 {
        self.inner.gap
    }

    pub fn is_smooth(&self) -> bool {
        match self.kind() {
            MetricKind::Canonical { .. } | MetricKind::Grid(_) | MetricKind::Biconjugate(_) => false,
            MetricKind::FubiniStudy(_) => true,
            MetricKind::Shifted { base, .. }
            | MetricKind::Translated { base, .. }
            | MetricKind::Scaled { base, .. } => base.is_smooth(),
            MetricKind::Blend { t, first, second } => {
                (*t == 1.0 || first.is_smooth()) && (*t == 0.0 || second.is_smooth())
            }
            MetricKind::Sum { first, second } => first.is_smooth() && second.is_smooth(),
            MetricKind::Custom(c) => c.smooth,
        }
    }

    pub fn is_concave(&self) -> bool {
        match self.kind() {
            MetricKind::Canonical { .. } | MetricKind::FubiniStudy(_) | MetricKind::Biconjugate(_) => true,
            MetricKind::Shifted { base, .. }
            | MetricKind::Translated { base, .. }
            | MetricKind::Scaled { base, .. } => base.is_concave(),
            MetricKind::Blend { first, second, .. } | MetricKind::Sum { first, second } => {
                first.is_concave() && second.is_concave()
            }
            MetricKind::Custom(c) => c.concave,
            MetricKind::Grid(g) => g.concave,
        }
    }

    /// Conservative structural identity: true only when both describe the same function.
    pub fn same_as(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.inner, &other.inner) {
            return true;
        }
        if self.divisor() != other.divisor() {
            return false;
        }
        match (self.kind(), other.kind()) {
            (MetricKind::Canonical { .. }, MetricKind::Canonical { .. }) => true,
            (MetricKind::FubiniStudy(a), MetricKind::FubiniStudy(b)) => {
                a.temperature == b.temperature && a.log_weights == b.log_weights
            }
            (MetricKind::Shifted { base: a, shift: s }, MetricKind::Shifted { base: b, shift: t }) => {
                s == t && a.same_as(b)
            }
            (MetricKind::Translated { base: a, by: p }, MetricKind::Translated { base: b, by: q }) => {
                p == q && a.same_as(b)
            }
            (MetricKind::Scaled { base: a, factor: p }, MetricKind::Scaled { base: b, factor: q }) => {
                p == q && a.same_as(b)
            }
            (
                MetricKind::Blend { t, first: a0, second: a1 },
                MetricKind::Blend { t: s, first: b0, second: b1 },
            ) => t == s && a0.same_as(b0) && a1.same_as(b1),
            (MetricKind::Sum { first: a0, second: a1 }, MetricKind::Sum { first: b0, second: b1 }) => {
                a0.same_as(b0) && a1.same_as(b1)
            }
            (MetricKind::Custom(a), MetricKind::Custom(b)) => Arc::ptr_eq(&a.func, &b.func),
            _ => false,
        }
    }

    /// Split off accumulated constant shifts: `self = base + shift`.
    pub fn peel_shift(&self) -> (&Self, f64) {
        let mut cur = self;
        let mut total = 0.0;
        while let MetricKind::Shifted { base, shift } = cur.kind() {
            total += shift;
            cur = base;
        }
        (cur, total)
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        check_dim(self.dim(), u);
        match self.kind() {
            MetricKind::Canonical { vertices } => {
                vertices.iter().map(|v| dot(v, u)).fold(f64::INFINITY, f64::min)
            }
            MetricKind::FubiniStudy(fs) => fs.value(u),
            MetricKind::Shifted { base, shift } => base.value(u) + shift,
            MetricKind::Translated { base, by } => {
                base.value(u) + by.iter().zip(u).map(|(m, x)| *m as f64 * x).sum::<f64>()
            }
            MetricKind::Scaled { base, factor } => to_f64(factor) * base.value(u),
            MetricKind::Blend { t, first, second } => {
                let a = if *t == 1.0 { 0.0 } else { (1.0 - t) * first.value(u) };
                let b = if *t == 0.0 { 0.0 } else { t * second.value(u) };
                a + b
            }
            MetricKind::Sum { first, second } => first.value(u) + second.value(u),
            MetricKind::Custom(c) => (c.func)(u),
            MetricKind::Grid(g) => self.divisor().support_function_f64(u) + g.residual(u),
            MetricKind::Biconjugate(s) => conjugate::biconjugate_value(s, u),
        }
    }

    /// Gradient, for smooth metrics.
    pub fn gradient(&self, u: &[f64]) -> Option<Vec<f64>> {
        if !self.is_smooth() {
            return None;
        }
        Some(match self.kind() {
            MetricKind::FubiniStudy(fs) => fs.gradient(u),
            MetricKind::Shifted { base, .. } => base.gradient(u)?,
            MetricKind::Translated { base, by } => {
                let mut g = base.gradient(u)?;
                g.iter_mut().zip(by).for_each(|(gi, m)| *gi += *m as f64);
                g
            }
            MetricKind::Scaled { base, factor } => {
                let f = to_f64(factor);
                base.gradient(u)?.into_iter().map(|x| f * x).collect()
            }
            MetricKind::Blend { t, first, second } => {
                let a = if *t == 1.0 { vec![0.0; u.len()] } else { first.gradient(u)? };
                let b = if *t == 0.0 { vec![0.0; u.len()] } else { second.gradient(u)? };
                a.iter().zip(&b).map(|(x, y)| (1.0 - t) * x + t * y).collect()
            }
            MetricKind::Sum { first, second } => {
                let a = first.gradient(u)?;
                let b = second.gradient(u)?;
                a.iter().zip(&b).map(|(x, y)| x + y).collect()
            }
            MetricKind::Custom(_) => solve::fd_gradient(|v| self.value(v), u),
            _ => return None,
        })
    }

    /// Hessian, for smooth metrics.
    pub fn hessian(&self, u: &[f64]) -> Option<DMatrix<f64>> {
        if !self.is_smooth() {
            return None;
        }
        Some(match self.kind() {
            MetricKind::FubiniStudy(fs) => fs.hessian(u),
            MetricKind::Shifted { base, .. } | MetricKind::Translated { base, .. } => base.hessian(u)?,
            MetricKind::Scaled { base, factor } => base.hessian(u)? * to_f64(factor),
            MetricKind::Blend { t, first, second } => {
                let n = u.len();
                let a = if *t == 1.0 { DMatrix::zeros(n, n) } else { first.hessian(u)? };
                let b = if *t == 0.0 { DMatrix::zeros(n, n) } else { second.hessian(u)? };
                a * (1.0 - t) + b * *t
            }
            MetricKind::Sum { first, second } => first.hessian(u)? + second.hessian(u)?,
            MetricKind::Custom(_) => solve::fd_hessian(|v| self.value(v), u),
            _ => return None,
        })
    }

    /// Largest value of `g(u) - Ψ(u)` guaranteed nonpositive after shifting by
    /// minus this amount; uses the certified gap unless a sharper bound is known.
    pub fn sup_bound(&self) -> f64 {
        match self.kind() {
            MetricKind::Canonical { .. } => 0.0,
            MetricKind::FubiniStudy(fs) => {
                match fs.points.iter().position(|p| p.iter().all(|&x| x == 0.0)) {
                    Some(i) => -fs.log_weights[i] / (2.0 * fs.temperature),
                    None => self.gap_bound(),
                }
            }
            MetricKind::Shifted { base, shift } => base.sup_bound() + shift,
            _ => self.gap_bound(),
        }
    }
}
