use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{ConjugateConfig, DistortionConfig, EnergyConfig, ExperimentConfig, PolytopeConfig, Tolerances};
use crate::energy::{energy_equilibrium_difference, energy_report, EnergyReport};
use crate::error::{Error, Result};
use crate::lattice::Polytope;
use crate::metric::{ConjugateFunction, MeasureSpec};
use crate::par;
use crate::quadrature::integrate_weighted;
use crate::rational::{format_rat, int, to_f64};
use crate::sections::{
    bernstein_markov_diagnostic, gram_diagonal, log_bergman_distortion_with, lk_difference_on, radial_grid,
    BernsteinMarkovReport, SectionIndex,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k: u32,
    pub n_k: usize,
    pub lk_diff: f64,
    pub eeq_diff: f64,
    pub gap: f64,
    pub runtime_ms: u64,
    /// Whether only a sample of the sections entered `lk_diff`.
    pub approximate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub tolerances: serde_json::Value,
    pub eeq_diff: f64,
    pub eeq_error: f64,
    pub final_gap: f64,
    /// Gaps nonincreasing over the last three doublings.
    pub trend_decreasing: bool,
    pub rows_completed: usize,
    pub truncated_by_budget: bool,
    pub approximate: bool,
    pub normalization: Vec<f64>,
    pub checks: Vec<(String, bool)>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRun {
    pub rows: Vec<ConvergenceRow>,
    pub summary: ConvergenceSummary,
}

/// Fixed-format float with 17 significant digits.
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl ConvergenceRun {
    pub fn csv(&self) -> String {
        let mut s = String::from("k,N_k,lk_diff,eeq_diff,gap,runtime_ms\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.k,
                r.n_k,
                fmt17(r.lk_diff),
                fmt17(r.eeq_diff),
                fmt17(r.gap),
                r.runtime_ms
            );
        }
        s
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }
}

fn check_measure(m: &MeasureSpec, tol: &Tolerances) -> Result<f64> {
    let r = integrate_weighted(&|_| 1.0, m, &tol.cubature(m.dim()))?;
    if (r.value - 1.0).abs() > tol.normalization_tol() {
        return Err(Error::InvalidMeasure(format!("total mass {} differs from one", r.value)));
    }
    Ok(r.value)
}

/// Interior sections, thinned by a fixed stride to at most `max` entries.
fn subsample(poly: &Polytope, k: u32, max: usize) -> Vec<SectionIndex> {
    let scaled = poly.scale(&int(k as i64)).expect("positive level");
    let interior: Vec<SectionIndex> = SectionIndex::all(poly, k)
        .into_iter()
        .filter(|s| {
            let e: Vec<f64> = s.e().iter().map(|&c| c as f64).collect();
            scaled.min_slack_f64(&e) > 0.0
        })
        .collect();
    if interior.len() <= max {
        return interior;
    }
    let stride = interior.len().div_ceil(max);
    interior.into_iter().step_by(stride).collect()
}

/// Gaps nonincreasing across the last four rows (three doublings).
fn trend(gaps: &[f64]) -> bool {
    let tail = &gaps[gaps.len().saturating_sub(4)..];
    tail.len() >= 2 && tail.windows(2).all(|w| w[1] <= w[0])
}

pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceRun> {
    par::with_threads(config.threads, || convergence(config))
}

fn convergence(config: &ExperimentConfig) -> Result<ConvergenceRun> {
    let d = &config.divisor;
    if !d.is_nef() {
        return Err(Error::NotNef);
    }
    if !d.is_big() {
        return Err(Error::NotBig);
    }
    let levels = config.k_schedule.levels()?;
    let n = d.rank();
    let tol = &config.tolerances;
    let g0 = config.g0.build(d)?;
    let g1 = config.g1.build(d)?;
    let mu0 = config.mu0.build(d)?;
    let same_measure = config.mu1.is_none() || config.mu1.as_ref() == Some(&config.mu0);
    let mu1_owned = if same_measure { None } else { Some(config.mu1().build(d)?) };
    let mu1 = mu1_owned.as_ref().unwrap_or(&mu0);
    let mut normalization = vec![check_measure(&mu0, tol)?];
    if !same_measure {
        normalization.push(check_measure(mu1, tol)?);
    }

    let eopts = tol.energy(n);
    let eeq = energy_equilibrium_difference(&g1, &g0, &eopts)?;
    let sopts = tol.sections(n);
    let poly = d.polytope();
    let mut rows = Vec::with_capacity(levels.len());
    let mut truncated = false;
    for &k in &levels {
        let start = Instant::now();
        let all = SectionIndex::all(&poly, k);
        let (sections, approximate) = match &config.subsample {
            Some(s) if all.len() > s.max_sections => (subsample(&poly, k, s.max_sections), true),
            _ => (all, false),
        };
        let lk = lk_difference_on(mu1, &g1, &mu0, &g0, k, sections.clone(), &sopts)?;
        let n_k = if approximate { SectionIndex::all(&poly, k).len() } else { lk.n_k };
        let runtime_ms = start.elapsed().as_millis() as u64;
        rows.push(ConvergenceRow {
            k,
            n_k,
            lk_diff: lk.value,
            eeq_diff: eeq.value,
            gap: (lk.value - eeq.value).abs(),
            runtime_ms,
            approximate,
        });
        if config.row_budget_ms.is_some_and(|b| runtime_ms > b) {
            truncated = rows.len() < levels.len();
            break;
        }
    }
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let final_gap = *gaps.last().expect("at least one row");
    let trend_decreasing = trend(&gaps);
    let mut checks = vec![
        ("finite".to_string(), rows.iter().all(|r| r.lk_diff.is_finite())),
        ("trend".to_string(), trend_decreasing || gaps.iter().all(|&g| g == 0.0)),
    ];
    if let Some(t) = config.max_final_gap {
        checks.push(("final_gap".to_string(), final_gap < t));
    }
    let passed = checks.iter().all(|c| c.1);
    let summary = ConvergenceSummary {
        config_hash: config.hash(),
        config: config.clone(),
        tolerances: json!({
            "conjugate": sopts.legendre.tol,
            "cubature_rtol": sopts.cubature.tolerance.rtol,
            "max_boxes": sopts.cubature.tolerance.max_boxes,
            "normalization": tol.normalization_tol(),
            "polytope_order": eopts.scheme.order,
            "polytope_subdivision": eopts.scheme.subdivision,
        }),
        eeq_diff: eeq.value,
        eeq_error: eeq.error_estimate,
        final_gap,
        trend_decreasing,
        rows_completed: rows.len(),
        truncated_by_budget: truncated,
        approximate: rows.iter().any(|r| r.approximate),
        normalization,
        checks,
        passed,
    };
    Ok(ConvergenceRun { rows, summary })
}

/// Polytope data of a divisor: facets, vertices, volume, positivity and lattice points.
pub fn run_polytope(config: &PolytopeConfig) -> Result<serde_json::Value> {
    let d = &config.divisor;
    let p = d.polytope();
    let vertices: Vec<Vec<String>> = p.vertices().iter().map(|v| v.iter().map(format_rat).collect()).collect();
    let points = p.lattice_points(config.k);
    let full = p.is_full_dimensional();
    Ok(json!({
        "polytope": p.to_json(),
        "vertices": vertices,
        "volume": format_rat(&p.volume()),
        "volume_f64": to_f64(&p.volume()),
        "degree": d.degree().ok().map(|r| format_rat(&r)),
        "nef": d.is_nef(),
        "ample": d.is_ample(),
        "big": d.is_big(),
        "full_dimensional": full,
        "k": config.k,
        "lattice_point_count": points.len(),
        "lattice_points": points,
    }))
}

/// Conjugate values at the requested points.
pub fn run_conjugate(config: &ConjugateConfig) -> Result<serde_json::Value> {
    let g = config.metric.build(&config.divisor)?;
    let conj = ConjugateFunction::new(&g, config.tolerances.legendre(g.dim()));
    let vals = par::try_map(&config.points, |x| conj.eval_full(x))?;
    let rows: Vec<_> = config
        .points
        .iter()
        .zip(&vals)
        .map(|(x, c)| {
            json!({
                "x": x,
                "value": if c.value.is_finite() { json!(c.value) } else { json!(null) },
                "inside": c.value.is_finite(),
                "argmin": c.argmin,
                "escaped": c.escaped,
            })
        })
        .collect();
    Ok(json!({ "tolerance": conj.tolerance(), "values": rows }))
}

/// Energy report for a pair of metrics, with the identity check when both are smooth.
pub fn run_energy(config: &EnergyConfig) -> Result<(EnergyReport, bool)> {
    let d = &config.divisor;
    if !(d.is_nef() && d.is_big()) {
        return Err(if d.is_nef() { Error::NotBig } else { Error::NotNef });
    }
    let g0 = config.g0.build(d)?;
    let g1 = config.g1.build(d)?;
    let r = energy_report(&g1, &g0, &config.tolerances.energy(d.rank()))?;
    let ok = match (r.diff_side, r.diff_side_error) {
        (Some(m), Some(e)) => (m - r.j).abs() <= 10.0 * (e + r.j_error),
        _ => true,
    };
    Ok((r, ok))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionRun {
    pub grid: Vec<Vec<f64>>,
    /// One row of distortion values per level.
    pub values: Vec<(u32, Vec<f64>)>,
    pub report: BernsteinMarkovReport,
}

impl DistortionRun {
    pub fn csv(&self) -> String {
        let n = self.grid.first().map_or(0, Vec::len);
        let mut s = String::from("k");
        for i in 0..n {
            let _ = write!(s, ",u{i}");
        }
        s.push_str(",rho_value\n");
        for (k, vals) in &self.values {
            for (u, v) in self.grid.iter().zip(vals) {
                let _ = write!(s, "{k}");
                for x in u {
                    let _ = write!(s, ",{}", fmt17(*x));
                }
                let _ = writeln!(s, ",{}", fmt17(*v));
            }
        }
        s
    }
}

pub fn run_distortion(config: &DistortionConfig) -> Result<DistortionRun> {
    let d = &config.divisor;
    let g = config.metric.build(d)?;
    let mu = config.measure.build(d)?;
    check_measure(&mu, &config.tolerances)?;
    let opts = config.tolerances.sections(d.rank());
    let grid = radial_grid(&g, config.radius, config.steps.max(1));
    let mut values = Vec::with_capacity(config.ks.len());
    for &k in &config.ks {
        let gram = gram_diagonal(&g, &mu, k, &opts)?;
        values.push((k, par::map(&grid, |u| log_bergman_distortion_with(&gram, &g, u).exp())));
    }
    let report = bernstein_markov_diagnostic(&mu, &g, &config.ks, &grid, &opts)?;
    Ok(DistortionRun { grid, values, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1_config(g1: serde_json::Value, ks: &[u32]) -> ExperimentConfig {
        serde_json::from_value(json!({
            "divisor": {"fan": "P1", "ray_values": [0, -1]},
            "g0": {"kind": "bergman"},
            "g1": g1,
            "k_schedule": ks,
        }))
        .unwrap()
    }

    #[test]
    fn shift_rows_are_exact() {
        let c = p1_config(json!({"kind": "shift", "c": 0.3, "base": {"kind": "bergman"}}), &[1, 2, 4]);
        let run = run_convergence(&c).unwrap();
        for r in &run.rows {
            assert_eq!(r.lk_diff, -0.3);
            assert_eq!(r.gap, 0.0);
        }
        assert!(run.summary.passed);
        let csv = run.csv();
        assert!(csv.starts_with("k,N_k,lk_diff,eeq_diff,gap,runtime_ms\n1,2,-2.9999999999999999e-1,"));
    }

    #[test]
    fn hypotheses_are_checked_first() {
        let c: ExperimentConfig = serde_json::from_value(json!({
            "divisor": {"fan": "Hirzebruch(1)", "ray_values": [0, 0, -1, 0]},
            "g0": {"kind": "canonical"}, "g1": {"kind": "canonical"},
        }))
        .unwrap();
        assert!(matches!(run_convergence(&c), Err(Error::NotBig)));
    }

    #[test]
    fn polytope_report() {
        let c: PolytopeConfig =
            serde_json::from_value(json!({"divisor": {"fan": "P2", "ray_values": [0, 0, -1]}, "k": 2})).unwrap();
        let v = run_polytope(&c).unwrap();
        assert_eq!(v["lattice_point_count"], 6);
        assert_eq!(v["volume"], "1/2");
        assert_eq!(v["degree"], "1");
    }
}
