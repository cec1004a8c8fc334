use proptest::prelude::*;
use toric_core::energy::{conjugate_integral, EnergyOptions};
use toric_core::metric::{ma_density, AngularDensity, ConjugateFunction, MeasureSpec, TorusMeasure};
use toric_core::quadrature::{integrate_weighted, WeightedOptions};
use toric_core::rational::{ints_to_rat, to_f64};
use toric_core::sections::{gram_diagonal, l2_log_norm_sq, SectionIndex, SectionOptions};
use toric_core::{Fan, MetricFunction, Polytope, StandardFan, ToricDivisor};
use toric_oracles::*;

fn divisor(fan: StandardFan, values: &[i64]) -> ToricDivisor {
    ToricDivisor::from_ints(Fan::standard(fan), values).unwrap()
}

fn p1() -> ToricDivisor {
    divisor(StandardFan::P1, &[0, -1])
}

fn p2() -> ToricDivisor {
    divisor(StandardFan::P2, &[0, 0, -1])
}

fn corpus() -> Vec<ToricDivisor> {
    vec![
        p1(),
        p2(),
        divisor(StandardFan::P1xP1, &[0, 0, -1, -1]),
        divisor(StandardFan::Hirzebruch(1), &[0, 0, -1, -1]),
    ]
}

fn metrics(d: &ToricDivisor) -> Vec<MetricFunction> {
    let fs = MetricFunction::fubini_study(d).unwrap();
    let can = MetricFunction::canonical(d).unwrap();
    vec![
        fs.clone(),
        can.clone(),
        fs.shifted(0.3),
        MetricFunction::blend(&fs, &can, 0.5).unwrap(),
    ]
}

// legendre

#[test]
fn grid_legendre_golden_values() {
    let d = p1();
    let fs = MetricFunction::fubini_study(&d).unwrap();
    let can = MetricFunction::canonical(&d).unwrap();
    assert!(legendre_grid_oracle(&can, &[0.5], 40.0, 4000).abs() < 1e-6);
    assert!((legendre_grid_oracle(&fs, &[0.5], 40.0, 4000) - 0.5 * 2f64.ln()).abs() < 1e-6);
    let fs2 = MetricFunction::fubini_study(&p2()).unwrap();
    let third = 1.0 / 3.0;
    assert!((legendre_grid_oracle(&fs2, &[third, third], 20.0, 1000) - 0.5 * 3f64.ln()).abs() < 1e-5);
}

#[test]
fn fast_legendre_matches_grid_on_corpus() {
    for d in corpus() {
        let poly = d.polytope();
        let verts = poly.vertices_f64();
        let n = d.rank();
        let bary: Vec<f64> = (0..n).map(|i| verts.iter().map(|v| v[i]).sum::<f64>() / verts.len() as f64).collect();
        // barycenter and a point pulled toward the first vertex
        let near: Vec<f64> = bary.iter().zip(&verts[0]).map(|(b, v)| 0.3 * b + 0.7 * v).collect();
        for g in metrics(&d) {
            let c = ConjugateFunction::with_defaults(&g);
            for x in [&bary, &near] {
                let fast = c.eval(x).unwrap();
                let slow = legendre_grid_oracle(&g, x, 20.0, if n == 1 { 4000 } else { 1000 });
                assert!((fast - slow).abs() < 1e-5, "{:?} {:?} at {x:?}: {fast} vs {slow}", d, g.kind());
            }
        }
    }
}

// hessians

#[test]
fn finite_difference_hessians() {
    let fs = MetricFunction::fubini_study(&p1()).unwrap();
    let h = finite_difference_hessian_oracle(&fs, &[0.0], 1e-3);
    assert!((h[(0, 0)] + 0.5).abs() < 1e-6);
    let can = MetricFunction::canonical(&p2()).unwrap();
    let h = finite_difference_hessian_oracle(&can, &[-2.0, 1.0], 1e-3);
    assert!(h.iter().all(|v| v.abs() < 1e-12));
    let fs2 = MetricFunction::fubini_study(&p2()).unwrap();
    let h = finite_difference_hessian_oracle(&fs2, &[0.0, 0.0], 1e-3);
    let expect = [[-4.0 / 9.0, 2.0 / 9.0], [2.0 / 9.0, -4.0 / 9.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((h[(i, j)] - expect[i][j]).abs() < 1e-6);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn analytic_hessian_matches_finite_differences(
        which in 0usize..4, u in prop::collection::vec(-3.0f64..3.0, 2), temp in 0.5f64..2.0,
    ) {
        let d = &corpus()[which];
        let g = MetricFunction::fubini_study_with(d, temp, None).unwrap();
        let u = &u[..d.rank()];
        let fast = g.hessian(u).unwrap();
        let slow = finite_difference_hessian_oracle(&g, u, 1e-3);
        prop_assert!((&fast - &slow).abs().max() < 1e-5);
        let det = (-1f64).powi(d.rank() as i32) * fast.determinant();
        let rho = ma_density(&g, u).unwrap();
        let fact: f64 = (1..=d.rank()).map(|i| i as f64).product();
        let vol = to_f64(&d.polytope().volume());
        prop_assert!((rho - det / (fact * vol)).abs() < 1e-9 * (1.0 + rho.abs()) || (rho - det).abs() < 1e-9 * (1.0 + rho.abs()));
    }
}

// geometry

#[test]
fn hull_and_area_oracles() {
    let square = [[0, 0], [1, 0], [1, 1], [0, 1]];
    let simplex = [[0, 0], [1, 0], [0, 1]];
    let sums: Vec<[i64; 2]> = simplex
        .iter()
        .flat_map(|a| square.iter().map(move |b| [a[0] + b[0], a[1] + b[1]]))
        .collect();
    let hull = convex_hull_2d(&sums);
    let to_poly = |pts: &[[i64; 2]]| {
        Polytope::from_vertices(&pts.iter().map(|p| ints_to_rat(p)).collect::<Vec<_>>()).unwrap()
    };
    let fast = to_poly(&simplex).minkowski_sum(&to_poly(&square)).unwrap();
    assert_eq!(fast, to_poly(&hull));
    let f: Vec<[f64; 2]> = hull.iter().map(|p| [p[0] as f64, p[1] as f64]).collect();
    assert_eq!(to_f64(&fast.volume()), shoelace_area(&f));

    let trap = to_poly(&[[0, 0], [2, 0], [1, 1], [0, 1]]);
    assert_eq!(shoelace_area(&[[0.0, 0.0], [2.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), 1.5);
    assert_eq!(to_f64(&trap.volume()), 1.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lattice_counts_and_volumes_match_brute_force(
        pts in prop::collection::vec((-4i64..=4, -4i64..=4), 3..8), k in 1u32..4,
    ) {
        let hull = convex_hull_2d(&pts.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>());
        prop_assume!(hull.len() >= 3);
        let poly = Polytope::from_vertices(&hull.iter().map(|p| ints_to_rat(p)).collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(poly.lattice_points(k).len(), brute_lattice_count(&poly, k));
        let f: Vec<[f64; 2]> = hull.iter().map(|p| [p[0] as f64, p[1] as f64]).collect();
        prop_assert!((to_f64(&poly.volume()) - shoelace_area(&f)).abs() < 1e-12);
    }
}

// integrals

#[test]
fn fan_integrals_match_exp_sinh_oracle() {
    for d in corpus() {
        let fan = d.fan();
        let laplace = MeasureSpec::laplace(fan);
        let f = |u: &[f64]| laplace.density(u) * (1.0 + u.iter().map(|x| x.tanh()).sum::<f64>().powi(2));
        let fast = integrate_weighted(
            &|u: &[f64]| 1.0 + u.iter().map(|x| x.tanh()).sum::<f64>().powi(2),
            &laplace,
            &WeightedOptions::for_dim(d.rank()),
        )
        .unwrap();
        let slow = integrate_over_fan(&f, fan, 1.0 / 32.0, 60.0);
        assert!((fast.value - slow).abs() < 1e-7, "{fast:?} vs {slow}");
    }
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let d = p1();
    let fan = d.fan().clone();
    let one = mc_integral_oracle(&|_| 1.0, &FanLaplaceSampler { fan: fan.clone() }, 1000, 1);
    assert_eq!((one.mean, one.stderr), (1.0, 0.0));

    let can = MetricFunction::canonical(&d).unwrap();
    let laplace = MeasureSpec::laplace(&fan);
    let opts = SectionOptions::for_dim(1);
    let s = SectionIndex::new(&d.polytope(), 1, vec![0]).unwrap();
    let fast = l2_log_norm_sq(&s, &ConjugateFunction::new(&can, opts.legendre.clone()), &laplace, &opts)
        .unwrap()
        .log_value
        .exp();
    assert!((fast - 0.75).abs() < 1e-10);
    let mc = mc_integral_oracle(&|u| (2.0 * can.value(u)).exp(), &FanLaplaceSampler { fan }, 1_000_000, 7);
    assert!((mc.mean - fast).abs() < 3.0 * mc.stderr, "{mc:?}");

    // ∫ρ_FS = 1: importance-sample the sech² density against Laplace
    let fs = MetricFunction::fubini_study(&d).unwrap();
    let ma = MeasureSpec::from_metric(&fs).unwrap();
    let laplace_density = |u: &[f64]| (-2.0 * u[0].abs()).exp();
    let mc = mc_integral_oracle(
        &|u| ma.density(u) / laplace_density(u),
        &FanLaplaceSampler { fan: d.fan().clone() },
        200_000,
        11,
    );
    assert!((mc.mean - 1.0).abs() < 3.0 * mc.stderr, "{mc:?}");
    let direct = mc_integral_oracle(&|_| 1.0, &Sech2Sampler, 1000, 3);
    assert_eq!(direct.mean, 1.0);
}

#[test]
fn moment_sampler_recovers_conjugate_integral() {
    // ∫_Δ ǧ dx / vol equals the MA-average of ǧ(∇g(u))
    let d = p2();
    let fs = MetricFunction::fubini_study(&d).unwrap();
    let conj = ConjugateFunction::with_defaults(&fs);
    let fast = conjugate_integral(&fs, &EnergyOptions::for_dim(2)).unwrap().value / 0.5;
    let mc = mc_integral_oracle(
        &|u| conj.eval(&fs.gradient(u).unwrap()).unwrap(),
        &MomentSampler { metric: fs.clone() },
        20_000,
        5,
    );
    assert!((mc.mean - fast).abs() < 4.0 * mc.stderr, "{mc:?} vs {fast}");
}

// gram

#[test]
fn full_gram_agrees_with_diagonal_path() {
    let opts = SectionOptions::for_dim(1);
    for d in [p1(), p2()] {
        for g in [MetricFunction::fubini_study(&d).unwrap(), MetricFunction::canonical(&d).unwrap()] {
            let laplace = MeasureSpec::laplace(d.fan());
            for k in 1..=2 {
                let opts = SectionOptions::for_dim(d.rank());
                let full = full_gram_oracle(&TorusMeasure::invariant(laplace.clone()), &g, k, &GramOracleOptions::default());
                let diag = gram_diagonal(&g, &laplace, k, &opts).unwrap();
                let fast: f64 = diag.log_entries.iter().sum();
                assert!(full.max_offdiagonal < 1e-8, "k={k}: {}", full.max_offdiagonal);
                assert!((full.log_det - fast).abs() < 1e-7, "k={k}: {} vs {fast}", full.log_det);
                assert!((full.log_det - full.diagonal_log_sum).abs() < 1e-12);
            }
        }
    }
    let _ = opts;
}

#[test]
fn full_gram_closed_form_and_non_invariant_margin() {
    let d = p1();
    let can = MetricFunction::canonical(&d).unwrap();
    let laplace = MeasureSpec::laplace(d.fan());
    let full = full_gram_oracle(&TorusMeasure::invariant(laplace.clone()), &can, 1, &GramOracleOptions::default());
    assert!((full.log_det - 2.0 * 0.75f64.ln()).abs() < 1e-9);

    let tilted = TorusMeasure {
        radial: laplace,
        angular: AngularDensity::Cosine { axis: 0, amplitude: 0.8 },
    };
    let full = full_gram_oracle(&tilted, &can, 1, &GramOracleOptions::default());
    assert!(full.max_offdiagonal > 0.1);
    assert!(full.diagonal_log_sum - full.log_det > 0.05);
}
