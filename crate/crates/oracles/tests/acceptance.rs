//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fail.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toric_core::energy::{conjugate_gap_integral, energy_equilibrium_difference, energy_report, minkowski_scaling_limit, EnergyOptions};
use toric_core::experiments::{run_convergence, ExperimentConfig};
use toric_core::metric::{ConjugateFunction, MeasureSpec, TorusMeasure};
use toric_core::quadrature::riemann_lattice_sum;
use toric_core::sections::{gram_diagonal, lk_difference, SectionOptions};
use toric_core::{Fan, MetricFunction, StandardFan, ToricDivisor};
use toric_oracles::{full_gram_oracle, GramOracleOptions};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn divisor(fan: StandardFan, values: &[i64]) -> ToricDivisor {
    ToricDivisor::from_ints(Fan::standard(fan), values).unwrap()
}

fn p1() -> ToricDivisor {
    divisor(StandardFan::P1, &[0, -1])
}

fn p2() -> ToricDivisor {
    divisor(StandardFan::P2, &[0, 0, -1])
}

fn fs(d: &ToricDivisor, temperature: f64, weights: Option<Vec<f64>>) -> MetricFunction {
    MetricFunction::fubini_study_with(d, temperature, weights).unwrap()
}

fn simplex_grid(steps: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for i in 1..steps {
        for j in 1..(steps - i) {
            pts.push(vec![i as f64 / steps as f64, j as f64 / steps as f64]);
        }
    }
    pts
}

fn interval_grid(steps: usize) -> Vec<Vec<f64>> {
    (0..=steps).map(|i| vec![(0.005 + 0.99 * i as f64 / steps as f64)]).collect()
}

fn conjugate_golden() -> Outcome {
    let third = 1.0 / 3.0;
    let a = ConjugateFunction::with_defaults(&MetricFunction::fubini_study(&p1()).unwrap()).eval(&[0.5]).unwrap();
    let b = ConjugateFunction::with_defaults(&MetricFunction::fubini_study(&p2()).unwrap()).eval(&[third, third]).unwrap();
    let mut worst: f64 = 0.0;
    for (d, grid) in [(p1(), interval_grid(100)), (p2(), simplex_grid(20))] {
        let c = ConjugateFunction::with_defaults(&MetricFunction::canonical(&d).unwrap());
        let corners = d.polytope().vertices_f64();
        for x in grid.iter().chain(&corners) {
            worst = worst.max(c.eval(x).unwrap().abs());
        }
    }
    let ea = (a - 0.5 * 2f64.ln()).abs();
    let eb = (b - 0.5 * 3f64.ln()).abs();
    outcome(
        ea < 1e-8 && eb < 1e-5 && worst < 1e-10,
        format!("P1 err {ea:.1e}, P2 err {eb:.1e}, canonical sup {worst:.1e}"),
    )
}

fn energy_identity() -> Outcome {
    let d1 = p1();
    let pairs = [
        (fs(&d1, 2.0, None), fs(&d1, 1.0, None), 1e-5),
        (fs(&d1, 0.7, Some(vec![0.3, -0.5])), fs(&d1, 1.0, None), 1e-5),
        (fs(&d1, 1.5, None), fs(&d1, 0.8, Some(vec![-0.4, 0.2])), 1e-5),
        (fs(&p2(), 1.5, None), fs(&p2(), 1.0, Some(vec![0.0, 0.3, -0.2])), 1e-4),
    ];
    let mut ok = true;
    let mut gaps = Vec::new();
    for (g1, g0, tol) in &pairs {
        let r = energy_report(g1, g0, &EnergyOptions::for_dim(g1.dim())).unwrap();
        let gap = r.diff_side.map_or(f64::INFINITY, |d| (d - r.j).abs());
        ok &= gap <= *tol;
        gaps.push(format!("{gap:.1e}"));
    }
    outcome(ok, format!("|diff_side − J| = [{}]", gaps.join(", ")))
}

fn energy_golden() -> Outcome {
    let mut errs = Vec::new();
    for (d, exact, tol) in [(p1(), 0.25, 1e-6), (p2(), 5.0 / 24.0, 1e-5)] {
        let fs = MetricFunction::fubini_study(&d).unwrap();
        let can = MetricFunction::canonical(&d).unwrap();
        let j = conjugate_gap_integral(&fs, &can, &EnergyOptions::for_dim(d.rank())).unwrap().value;
        errs.push(((j - exact).abs(), tol));
    }
    outcome(
        errs.iter().all(|(e, t)| e < t),
        format!("P1 err {:.1e}, P2 err {:.1e}", errs[0].0, errs[1].0),
    )
}

fn convergence(json: &str) -> toric_core::experiments::ConvergenceRun {
    run_convergence(&ExperimentConfig::from_json(json).unwrap()).unwrap()
}

fn convergence_line() -> Outcome {
    let run = convergence(
        r#"{"divisor": {"fan": "P1", "ray_values": [0, -1]},
            "g0": {"kind": "canonical"}, "g1": {"kind": "bergman"}, "mu0": {"kind": "laplace"},
            "k_schedule": [1, 2, 4, 8, 16, 32, 64, 128]}"#,
    );
    let first = (run.rows[0].lk_diff - 0.5 * 1.5f64.ln()).abs();
    let gaps: Vec<f64> = run.rows.iter().map(|r| (r.lk_diff - 0.25).abs()).collect();
    let last = *gaps.last().unwrap();
    outcome(
        first < 1e-9 && run.summary.trend_decreasing && last < 0.01 && run.rows.len() == 8,
        format!("k=1 err {first:.1e}, gap(128) {last:.5}, gaps {gaps:.4?}"),
    )
}

fn convergence_surface() -> Outcome {
    let d = divisor(StandardFan::Hirzebruch(1), &[0, 0, 0, -1]);
    let kind = d.is_nef() && d.is_big() && !d.is_ample();
    let run = convergence(
        r#"{"divisor": {"fan": "Hirzebruch(1)", "ray_values": [0, 0, 0, -1]},
            "g0": {"kind": "canonical"}, "g1": {"kind": "bergman"}, "mu0": {"kind": "laplace"},
            "k_schedule": [1, 2, 4, 8, 16, 32]}"#,
    );
    let gaps: Vec<f64> = run.rows.iter().map(|r| r.gap).collect();
    let last = *gaps.last().unwrap();
    outcome(
        kind && run.summary.trend_decreasing && last < 0.05 && run.rows.len() == 6,
        format!("nef ∧ big ∧ ¬ample: {kind}, eeq {:.9}, gaps {gaps:.4?}", run.summary.eeq_diff),
    )
}

fn shift_law() -> Outcome {
    let c = 0.3;
    let mut worst: f64 = 0.0;
    let mut eeq_exact = true;
    for d in [p1(), p2()] {
        let g0 = MetricFunction::fubini_study(&d).unwrap();
        let g1 = g0.shifted(c);
        let mu = MeasureSpec::laplace(d.fan());
        let opts = SectionOptions::for_dim(d.rank());
        for k in 1..=8 {
            let lk = lk_difference(&mu, &g1, &mu, &g0, k, &opts).unwrap();
            worst = worst.max((lk.value + c).abs());
        }
        let eeq = energy_equilibrium_difference(&g1, &g0, &EnergyOptions::for_dim(d.rank())).unwrap();
        eeq_exact &= eeq.value == -c;
    }
    outcome(worst < 1e-12 && eeq_exact, format!("max |lk + c| {worst:.1e}, eeq exact {eeq_exact}"))
}

fn gram() -> Outcome {
    let mut off: f64 = 0.0;
    let mut det: f64 = 0.0;
    for d in [p1(), p2()] {
        let mu = MeasureSpec::laplace(d.fan());
        let opts = SectionOptions::for_dim(d.rank());
        for g in [MetricFunction::fubini_study(&d).unwrap(), MetricFunction::canonical(&d).unwrap()] {
            for k in 1..=2 {
                let full = full_gram_oracle(&TorusMeasure::invariant(mu.clone()), &g, k, &GramOracleOptions::default());
                let diag: f64 = gram_diagonal(&g, &mu, k, &opts).unwrap().log_entries.iter().sum();
                off = off.max(full.max_offdiagonal);
                det = det.max((full.log_det - diag).abs());
            }
        }
    }
    outcome(off < 1e-8 && det < 1e-7, format!("max off-diagonal {off:.1e}, log-det gap {det:.1e}"))
}

fn entropy(x: &[f64]) -> f64 {
    let xlogx = |t: f64| if t <= 0.0 { 0.0 } else { t * t.ln() };
    let rest = 1.0 - x.iter().sum::<f64>();
    -0.5 * (x.iter().map(|&t| xlogx(t)).sum::<f64>() + xlogx(rest))
}

fn riemann_sums() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, d, exact) in [("interval", p1(), 0.25), ("simplex", p2(), 5.0 / 24.0)] {
        let poly = d.polytope();
        let e8 = (riemann_lattice_sum(&entropy, &poly, 8).unwrap() - exact).abs();
        let e64 = (riemann_lattice_sum(&entropy, &poly, 64).unwrap() - exact).abs();
        ok &= e64 < e8 && e64 < 5e-3;
        detail.push(format!("{name}: err(8) {e8:.5}, err(64) {e64:.5}"));
    }
    outcome(ok, detail.join("; "))
}

fn scaling() -> Outcome {
    let d = p1();
    let g = MetricFunction::fubini_study(&d).unwrap();
    let table = minkowski_scaling_limit(&g, &g, &[1, 2, 4, 8, 16], &EnergyOptions::for_dim(1)).unwrap();
    let last = table.entries.last().unwrap().value;
    let gap = (last - table.target).abs();
    let values: Vec<f64> = table.entries.iter().map(|e| e.value).collect();
    outcome(
        table.is_nonincreasing(0.0) && gap < 1e-3,
        format!("entries {values:.5?}, target {:.5}, gap(16) {gap:.5}", table.target),
    )
}

fn sup_abs_diff(g: &MetricFunction, h: &MetricFunction) -> f64 {
    let n = g.dim();
    let per_axis: usize = if n == 1 { 4001 } else { 241 };
    let mut center = vec![0.0; n];
    let mut half = 60.0;
    let mut best = 0.0;
    for _ in 0..5 {
        let step = 2.0 * half / (per_axis - 1) as f64;
        let mut arg = center.clone();
        for flat in 0..per_axis.pow(n as u32) {
            let mut rem = flat;
            let u: Vec<f64> = (0..n)
                .map(|d| {
                    let i = rem % per_axis;
                    rem /= per_axis;
                    center[d] - half + step * i as f64
                })
                .collect();
            let v = (g.value(&u) - h.value(&u)).abs();
            if v > best {
                best = v;
                arg = u;
            }
        }
        center = arg;
        half = 2.0 * step;
    }
    best
}

fn contraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for pair in 0..200 {
        let d = if pair % 2 == 0 { p1() } else { p2() };
        let rays = d.polytope().vertices_f64().len();
        let random_fs = |rng: &mut ChaCha8Rng| {
            let w: Vec<f64> = (0..rays).map(|_| rng.random_range(-1.0..1.0)).collect();
            fs(&d, rng.random_range(0.5..2.0), Some(w))
        };
        let g = random_fs(&mut rng);
        let other = match pair % 3 {
            0 => random_fs(&mut rng),
            1 => MetricFunction::canonical(&d).unwrap(),
            _ => random_fs(&mut rng).shifted(rng.random_range(-0.5..0.5)),
        };
        let h = MetricFunction::blend(&g, &other, rng.random_range(0.0..1.0)).unwrap();
        let rhs = sup_abs_diff(&g, &h);
        let (cg, ch) = (ConjugateFunction::with_defaults(&g), ConjugateFunction::with_defaults(&h));
        let grid = if d.rank() == 1 { interval_grid(100) } else { simplex_grid(12) };
        let lhs = grid
            .iter()
            .map(|x| (cg.eval(x).unwrap() - ch.eval(x).unwrap()).abs())
            .fold(0.0, f64::max);
        let tol = cg.tolerance().max(ch.tolerance());
        let excess = lhs - rhs - 2.0 * tol;
        worst = worst.max(excess);
        if excess > 0.0 {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("violations {failures}/200, worst excess {worst:.1e}"))
}

type Criterion = (u32, &'static str, u64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "conjugate golden values", 1, conjugate_golden),
        (2, "energy identity on smooth pairs", 30, energy_identity),
        (3, "energy golden values", 60, energy_golden),
        (4, "convergence on the line", 120, convergence_line),
        (5, "convergence on a big nef surface", 600, convergence_surface),
        (6, "exact shift law", 60, shift_law),
        (7, "gram orthogonality", 120, gram),
        (8, "concave riemann sums", 60, riemann_sums),
        (9, "minkowski scaling limit", 120, scaling),
        (10, "conjugate contraction", 300, contraction),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let passed = out.passed && elapsed <= Duration::from_secs(budget);
        if !passed {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2}: {name} ({} ms, budget {budget} s) {}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_millis(),
            out.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
