//! Moment maps, Monge–Ampère densities and torus-invariant probability measures.

use std::fmt;
use std::sync::Arc;

use super::conjugate::{legendre_transform, LegendreOptions};
use super::{MetricFunction, MetricKind, ScalarFn};
use crate::error::{Error, Result};
use crate::rational::to_f64;
use crate::toric::Fan;

/// Inverse of `u ↦ ∇g(u)` at an interior point of the polytope.
pub fn gradient_map_inverse(g: &MetricFunction, x: &[f64]) -> Result<Vec<f64>> {
    if !(g.is_smooth() && g.is_concave()) {
        return Err(Error::InvalidMetric("moment map needs a smooth concave metric".into()));
    }
    let slack = g.polytope().min_slack_f64(x);
    if slack <= 0.0 {
        return Err(Error::OutsidePolytope(x.to_vec()));
    }
    let c = legendre_transform(g, x, &LegendreOptions::for_dim(g.dim()))?;
    let mut u = c.argmin.ok_or_else(|| Error::OutsidePolytope(x.to_vec()))?;
    let residual_at = |u: &[f64]| -> f64 {
        let grad = g.gradient(u).expect("smooth");
        grad.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let mut residual = residual_at(&u);
    // Newton polish on ∇g(u) = x, accepting only steps that reduce the residual
    for _ in 0..8 {
        if residual <= 1e-12 {
            break;
        }
        let (Some(grad), Some(hess)) = (g.gradient(&u), g.hessian(&u)) else { break };
        let rhs = nalgebra::DVector::from_iterator(x.len(), grad.iter().zip(x).map(|(a, b)| b - a));
        let Some(step) = hess.lu().solve(&rhs) else { break };
        let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let r = residual_at(&trial);
        if !(r < residual) {
            break;
        }
        u = trial;
        residual = r;
    }
    if c.escaped || residual > 1e-9 {
        return Err(Error::NonConvergence {
            what: "moment map inversion",
            iterations: 0,
            residual,
        });
    }
    Ok(u)
}

/// The Monge–Ampère density `(-1)^n det Hess g(u)`, whose pushforward under
/// the gradient map is Lebesgue measure on the polytope.
pub fn ma_density(g: &MetricFunction, u: &[f64]) -> Result<f64> {
    match g.kind() {
        MetricKind::Canonical { .. } => return Ok(0.0),
        MetricKind::FubiniStudy(fs) if fs.points().len() <= 64 => return Ok(fs.hessian_determinant(u)),
        MetricKind::Shifted { base, .. } | MetricKind::Translated { base, .. } => return ma_density(base, u),
        MetricKind::Scaled { base, factor } => {
            return Ok(to_f64(factor).powi(g.dim() as i32) * ma_density(base, u)?)
        }
        _ => {}
    }
    let h = g
        .hessian(u)
        .ok_or_else(|| Error::InvalidMetric("Monge-Ampere density needs a smooth metric".into()))?;
    let sign = if g.dim().is_multiple_of(2) { 1.0 } else { -1.0 };
    let d = sign * h.determinant();
    if d < -1e-8 {
        return Err(Error::ConcavityViolation {
            at: u.to_vec(),
            value: d,
        });
    }
    Ok(d.max(0.0))
}

/// `ρ(u) ≤ constant · exp(-rate · |u|)`, with `|u|` the fan gauge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decay {
    pub constant: f64,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    MongeAmpere,
    Explicit(String),
}

/// A torus-invariant probability measure with a density on the open orbit.
#[derive(Clone)]
pub struct MeasureSpec {
    fan: Fan,
    density: ScalarFn,
    normalization: f64,
    decay: Decay,
    provenance: Provenance,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasureSpec")
            .field("normalization", &self.normalization)
            .field("decay", &self.decay)
            .field("provenance", &self.provenance)
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// The exponential-decay rate of the Monge–Ampère density of `g` in the fan gauge.
pub(crate) fn ma_decay_rate(g: &MetricFunction) -> Option<f64> {
    match g.kind() {
        MetricKind::FubiniStudy(fs) => Some(2.0 * fs.temperature()),
        MetricKind::Shifted { base, .. }
        | MetricKind::Translated { base, .. }
        | MetricKind::Scaled { base, .. } => ma_decay_rate(base),
        MetricKind::Blend { t, first, second } => match (*t == 0.0, *t == 1.0) {
            (true, _) => ma_decay_rate(first),
            (_, true) => ma_decay_rate(second),
            _ => Some(ma_decay_rate(first)?.min(ma_decay_rate(second)?)),
        },
        MetricKind::Sum { first, second } => Some(ma_decay_rate(first)?.min(ma_decay_rate(second)?)),
        _ => None,
    }
}

impl MeasureSpec {
    /// `(2^n/#cones)·exp(-2|u|)` in the fan gauge; on the projective line this is `e^{-2|u|}`.
    pub fn laplace(fan: &Fan) -> Self {
        let n = fan.rank();
        let c = 2f64.powi(n as i32) / fan.max_cones().len() as f64;
        let f = fan.clone();
        Self {
            fan: fan.clone(),
            density: Arc::new(move |u: &[f64]| c * (-2.0 * f.gauge(u)).exp()),
            normalization: 1.0,
            decay: Decay { constant: c, rate: 2.0 },
            provenance: Provenance::Explicit("laplace".into()),
            breakpoints: Vec::new(),
        }
    }

    /// Uniform density on the gauge ball of the given radius (compact support).
    pub fn uniform_ball(fan: &Fan, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidMeasure("radius must be positive".into()));
        }
        let n = fan.rank();
        let vol = fan.max_cones().len() as f64 * radius.powi(n as i32) / factorial(n);
        let c = 1.0 / vol;
        let f = fan.clone();
        let rate = 2.0;
        Ok(Self {
            fan: fan.clone(),
            density: Arc::new(move |u: &[f64]| if f.gauge(u) <= radius { c } else { 0.0 }),
            normalization: 1.0,
            decay: Decay {
                constant: c * (rate * radius).exp(),
                rate,
            },
            provenance: Provenance::Explicit(format!("uniform-ball({radius})")),
            breakpoints: vec![radius],
        })
    }

    /// A caller-supplied density, used as given (already normalized).
    pub fn explicit(fan: &Fan, density: ScalarFn, decay: Decay, breakpoints: Vec<f64>, name: &str) -> Result<Self> {
        if !(decay.rate > 0.0 && decay.constant > 0.0) {
            return Err(Error::InvalidMeasure("decay constants must be positive".into()));
        }
        Ok(Self {
            fan: fan.clone(),
            density,
            normalization: 1.0,
            decay,
            provenance: Provenance::Explicit(name.into()),
            breakpoints,
        })
    }

    /// Normalized Monge–Ampère measure of a smooth strictly concave metric.
    pub fn from_metric(g: &MetricFunction) -> Result<Self> {
        if !(g.is_smooth() && g.is_concave()) {
            return Err(Error::InvalidMeasure("metric must be smooth and concave".into()));
        }
        let n = g.dim();
        let vol = to_f64(&g.polytope().volume());
        if vol <= 0.0 {
            return Err(Error::NotBig);
        }
        let at_origin = ma_density(g, &vec![0.0; n])?;
        if at_origin <= 0.0 {
            return Err(Error::InvalidMeasure("metric is not strictly concave".into()));
        }
        let rate = ma_decay_rate(g).unwrap_or(1.0);
        let fan = g.divisor().fan().clone();
        let constant = match g.kind() {
            MetricKind::FubiniStudy(fs) => {
                // Covariance entries are bounded by the squared diameter of the
                // point set times the relative weight ratio; Hadamard bounds the determinant.
                let lw = fs.log_weights();
                let lmax = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lmin = lw.iter().copied().fold(f64::INFINITY, f64::min);
                let ratio = lw.iter().map(|w| (w - lmax).exp()).sum::<f64>() * (lmax - lmin).exp();
                let pts = fs.points();
                let diam2 = pts
                    .iter()
                    .flat_map(|a| pts.iter().map(move |b| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()))
                    .fold(0.0, f64::max);
                (2.0 * fs.temperature() * ratio * diam2).powi(n as i32) / vol
            }
            _ => sampled_decay_constant(g, &fan, rate, vol)?,
        };
        let gg = g.clone();
        Ok(Self {
            fan,
            density: Arc::new(move |u: &[f64]| ma_density(&gg, u).unwrap_or(f64::NAN) / vol),
            normalization: 1.0 / vol,
            decay: Decay { constant, rate },
            provenance: Provenance::MongeAmpere,
            breakpoints: Vec::new(),
        })
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn dim(&self) -> usize {
        self.fan.rank()
    }

    pub fn density(&self, u: &[f64]) -> f64 {
        (self.density)(u)
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Gauge radii where the density is not smooth.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Largest observed violation ratio `ρ(u) / (C·e^{-α|u|})` over the samples.
    pub fn decay_violation(&self, samples: &[Vec<f64>]) -> f64 {
        samples
            .iter()
            .map(|u| {
                let bound = self.decay.constant * (-self.decay.rate * self.fan.gauge(u)).exp();
                self.density(u) / bound
            })
            .fold(0.0, f64::max)
    }
}

fn sampled_decay_constant(g: &MetricFunction, fan: &Fan, rate: f64, vol: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let n = fan.rank();
    for c in 0..fan.max_cones().len() {
        for step in 0..=60 {
            let r = step as f64 * 0.5;
            for dir in 0..=4 {
                let mut lam = vec![0.0; n];
                if n == 1 {
                    lam[0] = r;
                } else {
                    let t = dir as f64 / 4.0;
                    lam[0] = r * t;
                    lam[1] = r * (1.0 - t);
                }
                let u = fan.from_cone_coordinates(c, &lam);
                worst = worst.max(ma_density(g, &u)? / vol * (rate * r).exp());
            }
        }
    }
    Ok(4.0 * worst.max(f64::MIN_POSITIVE))
}

/// Angular profile of a measure on the compact torus, relative to Haar measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AngularDensity {
    Uniform,
    /// `1 + amplitude·cos θ_axis`.
    Cosine { axis: usize, amplitude: f64 },
}

impl AngularDensity {
    pub fn weight(&self, theta: &[f64]) -> f64 {
        match *self {
            AngularDensity::Uniform => 1.0,
            AngularDensity::Cosine { axis, amplitude } => 1.0 + amplitude * theta[axis].cos(),
        }
    }

    pub fn is_invariant(&self) -> bool {
        matches!(self, AngularDensity::Uniform) || matches!(self, AngularDensity::Cosine { amplitude, .. } if *amplitude == 0.0)
    }
}

/// A measure on the open orbit written in (radial, angular) coordinates.
#[derive(Clone, Debug)]
pub struct TorusMeasure {
    pub radial: MeasureSpec,
    pub angular: AngularDensity,
}

impl TorusMeasure {
    pub fn invariant(radial: MeasureSpec) -> Self {
        Self {
            radial,
            angular: AngularDensity::Uniform,
        }
    }
}
