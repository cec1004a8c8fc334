//! The conjugate-gap integral, the energy at equilibrium, the Monge–Ampère
//! side of the energy identity and the Minkowski scaling limit.

use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::DMatrix;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{ma_decay_rate, ConjugateFunction, Decay, LegendreOptions, MetricFunction};
use crate::quadrature::{integrate_fan, integrate_polytope, mixed_discriminant, Integral, Scheme, WeightedOptions};
use crate::rational::{rat, to_f64};
use crate::toric::Fan;

/// Boundary shrink applied when a conjugate minimizer escapes its search box.
const ESCAPE_SHRINK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyOptions {
    pub scheme: Scheme,
    pub legendre: LegendreOptions,
    pub cubature: WeightedOptions,
}

impl EnergyOptions {
    pub fn for_dim(n: usize) -> Self {
        Self {
            scheme: Scheme::for_dim(n),
            legendre: LegendreOptions::for_dim(n),
            cubature: WeightedOptions::for_dim(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    #[serde(rename = "J")]
    pub j: f64,
    pub j_error: f64,
    pub eeq_diff: f64,
    pub eeq_error: f64,
    pub diff_side: Option<f64>,
    pub diff_side_error: Option<f64>,
    pub volume: f64,
}

fn check_pair(g1: &MetricFunction, g0: &MetricFunction) -> Result<f64> {
    if g1.divisor() != g0.divisor() {
        return Err(Error::DivisorMismatch);
    }
    let poly = g1.polytope();
    if poly.is_empty() {
        return Err(Error::EmptyPolytope);
    }
    if !poly.is_full_dimensional() {
        return Err(Error::NotFullDimensional {
            affine_dim: poly.affine_dim().unwrap_or(0),
            ambient: poly.dim(),
        });
    }
    Ok(to_f64(&poly.volume()))
}

/// `∫_Δ f(ǧ(x)) dx` style integrals of conjugates, shrinking the domain when
/// minimizers escape.
fn integrate_conjugates(
    conjugates: &[&ConjugateFunction],
    combine: &(dyn Fn(&[f64]) -> f64 + Sync),
    scheme: &Scheme,
) -> Result<Integral> {
    let poly = conjugates[0].domain();
    let escaped = AtomicBool::new(false);
    let f = |x: &[f64]| -> Result<f64> {
        let mut vals = Vec::with_capacity(conjugates.len());
        for c in conjugates {
            let r = c.eval_full(x)?;
            if r.escaped {
                escaped.store(true, Ordering::Relaxed);
            }
            vals.push(r.value);
        }
        Ok(combine(&vals))
    };
    let first = integrate_polytope(&f, poly, scheme)?;
    if escaped.load(Ordering::Relaxed) && scheme.boundary_shrink == 0.0 {
        let mut shrunk = scheme.clone();
        shrunk.boundary_shrink = ESCAPE_SHRINK;
        return integrate_polytope(&f, poly, &shrunk);
    }
    Ok(first)
}

/// `∫_Δ ǧ dx`.
pub fn conjugate_integral(g: &MetricFunction, opts: &EnergyOptions) -> Result<Integral> {
    let vol = check_pair(g, g)?;
    let (base, shift) = g.peel_shift();
    let c = ConjugateFunction::new(base, opts.legendre.clone());
    let mut r = integrate_conjugates(&[&c], &|v| v[0], &opts.scheme)?;
    r.value -= shift * vol;
    Ok(r)
}

/// `∫_Δ (ǧ₁ − ǧ₀) dx` over unshifted bases, and the shift difference `c₁ − c₀`.
fn base_gap(g1: &MetricFunction, g0: &MetricFunction, opts: &EnergyOptions) -> Result<(Integral, f64)> {
    let (b1, c1) = g1.peel_shift();
    let (b0, c0) = g0.peel_shift();
    if b1.same_as(b0) {
        return Ok((
            Integral {
                value: 0.0,
                error_estimate: 0.0,
                nodes_used: 0,
            },
            c1 - c0,
        ));
    }
    let f1 = ConjugateFunction::new(b1, opts.legendre.clone());
    let f0 = ConjugateFunction::new(b0, opts.legendre.clone());
    let r = integrate_conjugates(&[&f1, &f0], &|v| v[0] - v[1], &opts.scheme)?;
    let tol = 2.0 * opts.legendre.tol * to_f64(&g1.polytope().volume());
    Ok((
        Integral {
            error_estimate: r.error_estimate + tol,
            ..r
        },
        c1 - c0,
    ))
}

/// `J = ∫_Δ (ǧ₁ − ǧ₀) dx`.
pub fn conjugate_gap_integral(g1: &MetricFunction, g0: &MetricFunction, opts: &EnergyOptions) -> Result<Integral> {
    let vol = check_pair(g1, g0)?;
    let (base, shift) = base_gap(g1, g0, opts)?;
    Ok(Integral {
        value: base.value - shift * vol,
        ..base
    })
}

/// The energy-at-equilibrium difference `J / vol(Δ)`.
pub fn energy_equilibrium_difference(
    g1: &MetricFunction,
    g0: &MetricFunction,
    opts: &EnergyOptions,
) -> Result<Integral> {
    let vol = check_pair(g1, g0)?;
    let (base, shift) = base_gap(g1, g0, opts)?;
    Ok(Integral {
        value: base.value / vol - shift,
        error_estimate: base.error_estimate / vol,
        nodes_used: base.nodes_used,
    })
}

/// `(1/(n+1)) Σ_j (−1)^n D(H₁^j, H₀^{n−j})(u)`.
fn mixed_density(g1: &MetricFunction, g0: &MetricFunction, u: &[f64]) -> f64 {
    let n = u.len();
    let (Some(h1), Some(h0)) = (g1.hessian(u), g0.hessian(u)) else {
        return f64::NAN;
    };
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut total = 0.0;
    for j in 0..=n {
        let mats: Vec<DMatrix<f64>> = (0..n).map(|i| if i < j { h1.clone() } else { h0.clone() }).collect();
        total += mixed_discriminant(&mats).unwrap_or(f64::NAN);
    }
    sign * total / (n + 1) as f64
}

/// Sampled envelope constant `C` with `|h(u)| ≤ C·e^{−rate|u|}`, inflated by 4.
fn sampled_envelope(h: &(dyn Fn(&[f64]) -> f64 + Sync), fan: &Fan, rate: f64) -> f64 {
    let n = fan.rank();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for cone in 0..fan.max_cones().len() {
        for i in 0..n {
            let mut lam = vec![0.0; n];
            lam[i] = 1.0;
            dirs.push(fan.from_cone_coordinates(cone, &lam));
        }
        dirs.push(fan.from_cone_coordinates(cone, &vec![1.0 / n as f64; n]));
    }
    let mut worst: f64 = 0.0;
    for d in &dirs {
        for step in 0..=60 {
            let r = step as f64 * 0.5 / rate;
            let u: Vec<f64> = d.iter().map(|x| x * r).collect();
            worst = worst.max(h(&u).abs() * (rate * r).exp());
        }
    }
    4.0 * worst.max(f64::MIN_POSITIVE)
}

/// The Monge–Ampère side `−(1/(n+1)) Σ_j ∫ (g₁−g₀)(−1)^n D(H₁^j, H₀^{n−j}) du`,
/// which equals `J` for smooth strictly concave metrics.
pub fn energy_difference_smooth(
    g1: &MetricFunction,
    g0: &MetricFunction,
    opts: &EnergyOptions,
) -> Result<Integral> {
    let vol = check_pair(g1, g0)?;
    for g in [g1, g0] {
        if !(g.is_smooth() && g.is_concave()) {
            return Err(Error::InvalidMetric("Monge-Ampere side needs smooth concave metrics".into()));
        }
    }
    let (b1, c1) = g1.peel_shift();
    let (b0, c0) = g0.peel_shift();
    let constant_part = -(c1 - c0) * vol;
    if b1.same_as(b0) {
        return Ok(Integral {
            value: constant_part,
            error_estimate: 0.0,
            nodes_used: 0,
        });
    }
    let n = g1.dim();
    let origin = vec![0.0; n];
    let m0 = mixed_density(b1, b0, &origin);
    if m0.is_nan() {
        return Err(Error::NanIntegrand(origin));
    }
    let rate = match (ma_decay_rate(b1), ma_decay_rate(b0)) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => 1.0,
    };
    let density = |u: &[f64]| mixed_density(b1, b0, u);
    let constant = sampled_envelope(&density, g1.divisor().fan(), rate);
    let integrand = |u: &[f64]| {
        let m = density(u);
        if m < -1e-8 {
            return f64::NAN;
        }
        (b1.value(u) - b0.value(u)) * m
    };
    let mut wopts = opts.cubature.clone();
    wopts.growth = 0.0;
    wopts.amplitude = b1.gap_bound() + b0.gap_bound() + b1.sup_bound().abs() + b0.sup_bound().abs();
    wopts.scales.push(1.0 / rate);
    let r = integrate_fan(&integrand, g1.divisor().fan(), Decay { constant, rate }, &[], &wopts)?;
    Ok(Integral {
        value: constant_part - r.value,
        error_estimate: r.error_estimate,
        nodes_used: r.nodes_used,
    })
}

/// `J`, the equilibrium difference and, for smooth concave pairs, the
/// Monge–Ampère side.
pub fn energy_report(g1: &MetricFunction, g0: &MetricFunction, opts: &EnergyOptions) -> Result<EnergyReport> {
    let vol = check_pair(g1, g0)?;
    let (base, shift) = base_gap(g1, g0, opts)?;
    let smooth = [g1, g0].iter().all(|g| g.is_smooth() && g.is_concave());
    let diff = if smooth {
        Some(energy_difference_smooth(g1, g0, opts)?)
    } else {
        None
    };
    Ok(EnergyReport {
        j: base.value - shift * vol,
        j_error: base.error_estimate,
        eeq_diff: base.value / vol - shift,
        eeq_error: base.error_estimate / vol,
        diff_side: diff.map(|d| d.value),
        diff_side_error: diff.map(|d| d.error_estimate),
        volume: vol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingEntry {
    pub l: u32,
    pub value: f64,
    pub error_estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub entries: Vec<ScalingEntry>,
    pub target: f64,
    pub target_error: f64,
    /// Constant subtracted from the ample metric so that it is nonpositive.
    pub preshift: f64,
}

impl ScalingTable {
    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        self.entries.windows(2).all(|w| w[1].value <= w[0].value + slack)
    }
}

/// For each `l`, `∫_{Δ_D + Δ_A/l} (g_D + g_A/l)ˇ dx`, alongside `∫_{Δ_D} ǧ_D dx`.
pub fn minkowski_scaling_limit(
    gd: &MetricFunction,
    ga: &MetricFunction,
    ls: &[u32],
    opts: &EnergyOptions,
) -> Result<ScalingTable> {
    let a = ga.divisor();
    if a.fan() != gd.divisor().fan() {
        return Err(Error::DivisorMismatch);
    }
    if !a.is_ample() {
        return Err(Error::NotAmple);
    }
    let origin = vec![num_rational::BigRational::zero(); a.rank()];
    if !ga.polytope().contains(&origin) {
        return Err(Error::NotEffective);
    }
    if !(gd.divisor().is_nef() && gd.divisor().is_big()) {
        return Err(if gd.divisor().is_nef() { Error::NotBig } else { Error::NotNef });
    }
    let preshift = ga.sup_bound().max(0.0);
    let ga = ga.shifted(-preshift);
    let target = conjugate_integral(gd, opts)?;
    let mut entries = Vec::with_capacity(ls.len());
    for &l in ls {
        if l == 0 {
            return Err(Error::Config("scaling parameters must be positive".into()));
        }
        let m = MetricFunction::sum(gd, &ga.scaled(&rat(1, l as i64))?)?;
        let r = conjugate_integral(&m, opts)?;
        entries.push(ScalingEntry {
            l,
            value: r.value,
            error_estimate: r.error_estimate,
        });
    }
    Ok(ScalingTable {
        entries,
        target: target.value,
        target_error: target.error_estimate,
        preshift,
    })
}
