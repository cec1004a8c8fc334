//! Monomial sections of multiples of a divisor: sup and L² norms, the
//! diagonal Gram matrix, ball-volume differences, Bergman distortion and
//! Bernstein–Markov diagnostics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Polytope;
use crate::metric::{ConjugateFunction, LegendreOptions, MeasureSpec, MetricFunction, TorusMeasure};
use crate::par;
use crate::quadrature::{integrate_weighted, WeightedOptions};
use crate::rational::int;
use crate::reduce::tree_sum;

/// A lattice point `e` of `k·Δ`, indexing the monomial section `χ^e` of `O(kD)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SectionIndex {
    k: u32,
    e: Vec<i64>,
}

impl SectionIndex {
    pub fn new(poly: &Polytope, k: u32, e: Vec<i64>) -> Result<Self> {
        if e.len() != poly.dim() {
            return Err(Error::DimensionMismatch {
                expected: poly.dim(),
                found: e.len(),
            });
        }
        let scaled = poly.scale(&int(k as i64))?;
        let er: Vec<_> = e.iter().map(|&c| int(c)).collect();
        if !scaled.contains(&er) {
            return Err(Error::OutsidePolytope(e.iter().map(|&c| c as f64).collect()));
        }
        Ok(Self { k, e })
    }

    /// All sections at level `k`, in lexicographic order of `e`.
    pub fn all(poly: &Polytope, k: u32) -> Vec<Self> {
        poly.lattice_points(k).into_iter().map(|e| Self { k, e }).collect()
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn e(&self) -> &[i64] {
        &self.e
    }

    /// `e/k` in the polytope; the origin when `k = 0`.
    pub fn point(&self) -> Vec<f64> {
        if self.k == 0 {
            return vec![0.0; self.e.len()];
        }
        self.e.iter().map(|&c| c as f64 / self.k as f64).collect()
    }

    fn pairing(&self, u: &[f64]) -> f64 {
        self.e.iter().zip(u).map(|(&a, b)| a as f64 * b).sum()
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + tree_sum(&values.iter().map(|v| (v - m).exp()).collect::<Vec<_>>()).ln()
}

/// `log ‖χ^e‖_sup = −k·ǧ(e/k)`.
pub fn log_sup_norm(idx: &SectionIndex, conj: &ConjugateFunction) -> Result<f64> {
    if idx.k == 0 {
        return Ok(0.0);
    }
    let c = conj.eval(&idx.point())?;
    if c == f64::NEG_INFINITY {
        return Err(Error::OutsidePolytope(idx.point()));
    }
    Ok(-(idx.k as f64) * c)
}

/// `‖χ^e‖_sup = exp(−k·ǧ(e/k))`.
pub fn sup_norm(idx: &SectionIndex, g: &MetricFunction) -> Result<f64> {
    Ok(log_sup_norm(idx, &ConjugateFunction::with_defaults(g))?.exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionOptions {
    pub legendre: LegendreOptions,
    pub cubature: WeightedOptions,
}

impl SectionOptions {
    pub fn for_dim(n: usize) -> Self {
        Self {
            legendre: LegendreOptions::for_dim(n),
            cubature: WeightedOptions::for_dim(n),
        }
    }
}

/// `log ‖χ^e‖²_{L²}` with the relative quadrature error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogNorm {
    pub log_value: f64,
    pub rel_error: f64,
}

/// `log ∫ exp(2k·g(u) − 2⟨e,u⟩)·ρ(u) du`, computed against the peak value
/// `exp(−2k·ǧ(e/k))` so that large levels neither overflow nor underflow.
pub fn l2_log_norm_sq(
    idx: &SectionIndex,
    conj: &ConjugateFunction,
    measure: &MeasureSpec,
    opts: &SectionOptions,
) -> Result<LogNorm> {
    let g = conj.source();
    if measure.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: measure.dim(),
        });
    }
    let (base, shift) = g.peel_shift();
    let k = idx.k as f64;
    let mut wopts = opts.cubature.clone();
    wopts.growth = 0.0;
    wopts.amplitude = 1.0;
    if idx.k == 0 {
        let r = integrate_weighted(&|_| 1.0, measure, &wopts)?;
        return Ok(LogNorm {
            log_value: r.value.ln(),
            rel_error: r.error_estimate / r.value,
        });
    }
    let c = conj.eval_full(&idx.point())?;
    if c.value == f64::NEG_INFINITY {
        return Err(Error::OutsidePolytope(idx.point()));
    }
    // ǧ of the unshifted base
    let base_conj = c.value + shift;
    let peak = -2.0 * k * base_conj;
    wopts.peaks.push(vec![0.0; g.dim()]);
    if let Some(u) = c.argmin.filter(|_| !c.escaped) {
        wopts.peaks.push(u);
    }
    wopts.scales.extend([0.5 / k, (0.5 / k).sqrt()]);
    let f = |u: &[f64]| (2.0 * (k * base.value(u) - idx.pairing(u)) - peak).exp();
    let r = integrate_weighted(&f, measure, &wopts)?;
    if !(r.value > 0.0) {
        return Err(Error::NonConvergence {
            what: "L2 norm quadrature",
            iterations: r.nodes_used,
            residual: r.value,
        });
    }
    Ok(LogNorm {
        log_value: peak + r.value.ln() + 2.0 * k * shift,
        rel_error: r.error_estimate / r.value,
    })
}

/// `‖χ^e‖²_{L²(μ, kD̄)}`.
pub fn l2_norm_sq(idx: &SectionIndex, g: &MetricFunction, measure: &MeasureSpec) -> Result<f64> {
    let opts = SectionOptions::for_dim(g.dim());
    let conj = ConjugateFunction::new(g, opts.legendre.clone());
    Ok(l2_log_norm_sq(idx, &conj, measure, &opts)?.log_value.exp())
}

/// Diagonal of the Gram matrix of the monomial basis at level `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramDiagonal {
    pub k: u32,
    pub sections: Vec<SectionIndex>,
    /// `log ‖χ^e‖²` per section.
    pub log_entries: Vec<f64>,
    pub rel_errors: Vec<f64>,
    /// Bound on off-diagonal magnitudes; distinct characters are orthogonal
    /// for torus-invariant measures, so this is zero.
    pub offdiag_bound: f64,
}

pub fn gram_diagonal(
    g: &MetricFunction,
    measure: &MeasureSpec,
    k: u32,
    opts: &SectionOptions,
) -> Result<GramDiagonal> {
    let sections = SectionIndex::all(g.polytope(), k);
    gram_diagonal_on(g, measure, sections, k, opts)
}

/// Diagonal entries for a chosen subset of the sections at level `k`.
pub fn gram_diagonal_on(
    g: &MetricFunction,
    measure: &MeasureSpec,
    sections: Vec<SectionIndex>,
    k: u32,
    opts: &SectionOptions,
) -> Result<GramDiagonal> {
    let conj = ConjugateFunction::new(g, opts.legendre.clone());
    let norms = par::try_map(&sections, |s| l2_log_norm_sq(s, &conj, measure, opts))?;
    Ok(GramDiagonal {
        k,
        sections,
        log_entries: norms.iter().map(|n| n.log_value).collect(),
        rel_errors: norms.iter().map(|n| n.rel_error).collect(),
        offdiag_bound: 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LkDifference {
    pub k: u32,
    pub n_k: usize,
    pub value: f64,
    pub error_estimate: f64,
}

/// `(1/(2kN_k)) Σ_e log(‖χ^e‖²_{μ₀,g₀} / ‖χ^e‖²_{μ₁,g₁})`.
pub fn lk_difference(
    mu1: &MeasureSpec,
    g1: &MetricFunction,
    mu0: &MeasureSpec,
    g0: &MetricFunction,
    k: u32,
    opts: &SectionOptions,
) -> Result<LkDifference> {
    let sections = SectionIndex::all(g1.polytope(), k);
    lk_difference_on(mu1, g1, mu0, g0, k, sections, opts)
}

/// As [`lk_difference`], averaged over a chosen subset of the sections.
pub fn lk_difference_on(
    mu1: &MeasureSpec,
    g1: &MetricFunction,
    mu0: &MeasureSpec,
    g0: &MetricFunction,
    k: u32,
    sections: Vec<SectionIndex>,
    opts: &SectionOptions,
) -> Result<LkDifference> {
    if g1.divisor() != g0.divisor() {
        return Err(Error::DivisorMismatch);
    }
    if k == 0 {
        return Err(Error::Config("ball-volume differences need a positive level".into()));
    }
    let (b1, c1) = g1.peel_shift();
    let (b0, c0) = g0.peel_shift();
    let n_k = sections.len();
    let kf = k as f64;
    let d1 = gram_diagonal_on(b1, mu1, sections.clone(), k, opts)?;
    let same = b1.same_as(b0) && std::ptr::eq(mu1, mu0);
    let d0 = if same {
        d1.clone()
    } else {
        gram_diagonal_on(b0, mu0, sections, k, opts)?
    };
    let per_entry: Vec<f64> = d0.log_entries.iter().zip(&d1.log_entries).map(|(a, b)| a - b).collect();
    let err = tree_sum(&d0.rel_errors) + tree_sum(&d1.rel_errors);
    let value = if same {
        0.0
    } else {
        tree_sum(&per_entry) / (2.0 * kf * n_k as f64)
    };
    Ok(LkDifference {
        k,
        n_k,
        value: value - (c1 - c0),
        error_estimate: err / (2.0 * kf * n_k as f64),
    })
}

/// Log of the Bergman distortion at `u` from a computed diagonal.
pub fn log_bergman_distortion_with(gram: &GramDiagonal, g: &MetricFunction, u: &[f64]) -> f64 {
    let k = gram.k as f64;
    let gu = g.value(u);
    let terms: Vec<f64> = gram
        .sections
        .iter()
        .zip(&gram.log_entries)
        .map(|(s, l)| 2.0 * (k * gu - s.pairing(u)) - l)
        .collect();
    log_sum_exp(&terms)
}

/// `Σ_e ‖χ^e(u)‖² / ‖χ^e‖²_{L²}`.
pub fn bergman_distortion(measure: &MeasureSpec, g: &MetricFunction, k: u32, u: &[f64]) -> Result<f64> {
    let gram = gram_diagonal(g, measure, k, &SectionOptions::for_dim(g.dim()))?;
    Ok(log_bergman_distortion_with(&gram, g, u).exp())
}

/// Points of cocharacter space at gauge radii `0, r/steps, …, r` along every
/// ray and every cone barycenter direction.
pub fn radial_grid(g: &MetricFunction, radius: f64, steps: usize) -> Vec<Vec<f64>> {
    let fan = g.divisor().fan();
    let n = fan.rank();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for c in 0..fan.max_cones().len() {
        for i in 0..n {
            let mut lam = vec![0.0; n];
            lam[i] = 1.0;
            dirs.push(fan.from_cone_coordinates(c, &lam));
        }
        if n > 1 {
            dirs.push(fan.from_cone_coordinates(c, &vec![1.0 / n as f64; n]));
        }
    }
    dirs.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    dirs.dedup();
    let mut pts = vec![vec![0.0; n]];
    for d in &dirs {
        for s in 1..=steps {
            let r = radius * s as f64 / steps as f64;
            pts.push(d.iter().map(|x| x * r).collect());
        }
    }
    pts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinMarkovRow {
    pub k: u32,
    pub n_k: usize,
    /// `max_grid (1/(2k)) log ρ_k`.
    pub max_log_distortion: f64,
    /// `(1/(2k)) log N_k`, the value at which an orthonormal basis saturates.
    pub log_dimension: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinMarkovReport {
    pub rows: Vec<BernsteinMarkovRow>,
    /// Excess `max(0, M_k − (1/(2k)) log N_k)` at the last level.
    pub final_excess: f64,
    pub verdict: bool,
}

/// Threshold on the final excess over `(1/(2k)) log N_k` for a passing verdict.
const BM_EXCESS_TOL: f64 = 0.05;

/// Growth of the Bergman distortion along a level schedule. Passes when the
/// excess of `M_k` over `(1/(2k)) log N_k` is nonincreasing over the last
/// three levels and ends below a fixed threshold.
pub fn bernstein_markov_diagnostic(
    measure: &MeasureSpec,
    g: &MetricFunction,
    ks: &[u32],
    grid: &[Vec<f64>],
    opts: &SectionOptions,
) -> Result<BernsteinMarkovReport> {
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        if k == 0 {
            return Err(Error::Config("levels must be positive".into()));
        }
        let gram = gram_diagonal(g, measure, k, opts)?;
        let vals = par::map(grid, |u| log_bergman_distortion_with(&gram, g, u));
        let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) / (2.0 * k as f64);
        rows.push(BernsteinMarkovRow {
            k,
            n_k: gram.sections.len(),
            max_log_distortion: m,
            log_dimension: (gram.sections.len() as f64).ln() / (2.0 * k as f64),
        });
    }
    let excess: Vec<f64> = rows.iter().map(|r| (r.max_log_distortion - r.log_dimension).max(0.0)).collect();
    let tail = &excess[excess.len().saturating_sub(3)..];
    let trend = tail.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let final_excess = excess.last().copied().unwrap_or(0.0);
    Ok(BernsteinMarkovReport {
        rows,
        final_excess,
        verdict: trend && final_excess < BM_EXCESS_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagonalEntry {
    pub first: Vec<i64>,
    pub second: Vec<i64>,
    /// `|⟨χ^e, χ^{e′}⟩|`, natural log.
    pub log_abs: f64,
    /// `|⟨χ^e, χ^{e′}⟩| / sqrt(‖χ^e‖² ‖χ^{e′}‖²)`.
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagonalReport {
    pub entries: Vec<OffDiagonalEntry>,
    pub max_relative: f64,
    /// Whether every entry is below `1e-6` relative to the diagonal.
    pub orthogonal: bool,
}

/// Angular points per axis for the trapezoid rule on the compact torus.
const ANGULAR_POINTS: usize = 32;

/// `(2π)^{−n} ∫ w(θ) e^{i⟨m,θ⟩} dθ` by the trapezoid rule (exact for
/// trigonometric polynomials of degree below the point count).
fn angular_coefficient(w: &crate::metric::AngularDensity, m: &[i64]) -> (f64, f64) {
    let n = m.len();
    let total = ANGULAR_POINTS.pow(n as u32);
    let mut re = Vec::with_capacity(total);
    let mut im = Vec::with_capacity(total);
    let mut theta = vec![0.0; n];
    for flat in 0..total {
        let mut rem = flat;
        for t in theta.iter_mut() {
            *t = 2.0 * PI * (rem % ANGULAR_POINTS) as f64 / ANGULAR_POINTS as f64;
            rem /= ANGULAR_POINTS;
        }
        let phase: f64 = m.iter().zip(&theta).map(|(&a, t)| a as f64 * t).sum();
        let wt = w.weight(&theta);
        re.push(wt * phase.cos());
        im.push(wt * phase.sin());
    }
    (tree_sum(&re) / total as f64, tree_sum(&im) / total as f64)
}

/// Full torus inner products `⟨χ^e, χ^{e′}⟩` for the given pairs: the radial
/// integral over cocharacter space times the angular integral over the torus.
pub fn gram_offdiagonal_check(
    measure: &TorusMeasure,
    g: &MetricFunction,
    k: u32,
    pairs: &[(Vec<i64>, Vec<i64>)],
    opts: &SectionOptions,
) -> Result<OffDiagonalReport> {
    let poly = g.polytope();
    let conj = ConjugateFunction::new(g, opts.legendre.clone());
    let mut entries = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let sa = SectionIndex::new(poly, k, a.clone())?;
        let sb = SectionIndex::new(poly, k, b.clone())?;
        let la = l2_log_norm_sq(&sa, &conj, &measure.radial, opts)?.log_value;
        let lb = l2_log_norm_sq(&sb, &conj, &measure.radial, opts)?.log_value;
        // The radial part of the product is the squared norm of the midpoint character.
        let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y) as f64).collect();
        let radial = radial_log_integral(&conj, &measure.radial, k, &mid, opts)?;
        let diff: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let (re, im) = angular_coefficient(&measure.angular, &diff);
        let log_abs = radial + re.hypot(im).ln();
        entries.push(OffDiagonalEntry {
            first: a.clone(),
            second: b.clone(),
            log_abs,
            relative: (log_abs - 0.5 * (la + lb)).exp(),
        });
    }
    let max_relative = entries.iter().map(|e| e.relative).fold(0.0, f64::max);
    Ok(OffDiagonalReport {
        entries,
        max_relative,
        orthogonal: max_relative < 1e-6,
    })
}

/// `log ∫ exp(2k·g(u) − 2⟨m,u⟩)ρ(u) du` for a real point `m` of `k·Δ`.
fn radial_log_integral(
    conj: &ConjugateFunction,
    measure: &MeasureSpec,
    k: u32,
    m: &[f64],
    opts: &SectionOptions,
) -> Result<f64> {
    let g = conj.source();
    let kf = k as f64;
    let x: Vec<f64> = m.iter().map(|v| v / kf).collect();
    let c = conj.eval_full(&x)?;
    let peak = -2.0 * kf * c.value;
    let mut wopts = opts.cubature.clone();
    wopts.growth = 0.0;
    wopts.amplitude = 1.0;
    wopts.peaks.push(vec![0.0; g.dim()]);
    if let Some(u) = c.argmin.filter(|_| !c.escaped) {
        wopts.peaks.push(u);
    }
    wopts.scales.extend([0.5 / kf, (0.5 / kf).sqrt()]);
    let f = |u: &[f64]| {
        let p: f64 = m.iter().zip(u).map(|(a, b)| a * b).sum();
        (2.0 * (kf * g.value(u) - p) - peak).exp()
    };
    let r = integrate_weighted(&f, measure, &wopts)?;
    Ok(peak + r.value.ln())
}
