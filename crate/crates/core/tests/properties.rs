use nalgebra::DMatrix;
use proptest::prelude::*;
use toric_core::energy::{conjugate_gap_integral, EnergyOptions};
use toric_core::metric::{biconjugate_metric, gradient_map_inverse, BiconjugateOptions, ConjugateFunction, MeasureSpec};
use toric_core::quadrature::{integrate_polytope, mixed_discriminant, Scheme};
use toric_core::rational::{int, ints_to_rat, rat, Rat};
use toric_core::sections::{l2_log_norm_sq, log_sup_norm, SectionIndex, SectionOptions};
use toric_core::{Fan, MetricFunction, Polytope, StandardFan, ToricDivisor};

fn polygon() -> impl Strategy<Value = Polytope> {
    prop::collection::vec((-3i64..=3, -3i64..=3), 3..7).prop_filter_map("full-dimensional", |pts| {
        let v: Vec<Vec<Rat>> = pts.iter().map(|&(a, b)| ints_to_rat(&[a, b])).collect();
        Polytope::from_vertices(&v).ok().filter(|p| p.is_full_dimensional())
    })
}

fn standard_fan() -> impl Strategy<Value = Fan> {
    prop_oneof![
        Just(Fan::standard(StandardFan::P2)),
        Just(Fan::standard(StandardFan::P1xP1)),
        Just(Fan::standard(StandardFan::Hirzebruch(1))),
    ]
}

fn nef_divisor(fan: Fan) -> impl Strategy<Value = ToricDivisor> {
    let rays = fan.rays().len();
    prop::collection::vec(-3i64..=1, rays)
        .prop_filter_map("nef", move |v| ToricDivisor::from_ints(fan.clone(), &v).ok().filter(|d| d.is_nef()))
}

fn point_set(p: &Polytope, k: u32) -> std::collections::BTreeSet<Vec<i64>> {
    p.lattice_points(k).into_iter().collect()
}

// lattice

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lattice_hrep_vrep_round_trip(p in polygon()) {
        let again = Polytope::from_hrep(2, p.hrep().to_vec()).unwrap();
        prop_assert_eq!(again.vertices(), p.vertices());
        prop_assert_eq!(again, p);
    }

    #[test]
    fn lattice_points_of_dilation(p in polygon(), k in 1u32..4) {
        let scaled = p.scale(&int(k as i64)).unwrap();
        prop_assert_eq!(point_set(&p, k), point_set(&scaled, 1));
    }

    #[test]
    fn lattice_minkowski_volume_grows(a in polygon(), b in polygon(), px in -2i64..=2, py in -2i64..=2) {
        let s = a.minkowski_sum(&b).unwrap();
        prop_assert!(s.volume() > a.volume());
        let point = Polytope::from_vertices(&[ints_to_rat(&[px, py])]).unwrap();
        prop_assert_eq!(a.minkowski_sum(&point).unwrap().volume(), a.volume());
    }
}

#[test]
fn lattice_ehrhart_ratio_approaches_volume() {
    let corpus = [
        Polytope::from_vertices(&[ints_to_rat(&[0, 0]), ints_to_rat(&[1, 0]), ints_to_rat(&[0, 1])]).unwrap(),
        Polytope::from_vertices(&[ints_to_rat(&[0, 0]), ints_to_rat(&[2, 1]), ints_to_rat(&[1, 3])]).unwrap(),
        Polytope::from_vertices(&[ints_to_rat(&[0]), ints_to_rat(&[3])]).unwrap(),
    ];
    for p in &corpus {
        let vol = toric_core::rational::to_f64(&p.volume());
        let err = |k: u32| (p.lattice_points(k).len() as f64 / (k as f64).powi(p.dim() as i32) - vol).abs();
        let errs: Vec<f64> = [1, 2, 5, 10, 25, 50].iter().map(|&k| err(k)).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
    }
}

// toric

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn toric_polytope_of_sum_is_minkowski_sum(
        (d1, d2) in standard_fan().prop_flat_map(|f| (nef_divisor(f.clone()), nef_divisor(f)))
    ) {
        let sum = d1.add(&d2).unwrap();
        prop_assert_eq!(sum.polytope(), d1.polytope().minkowski_sum(&d2.polytope()).unwrap());
    }

    #[test]
    fn toric_ample_implies_nef_and_big(fan in standard_fan(), v in prop::collection::vec(-3i64..=1, 4)) {
        let vals = &v[..fan.rays().len()];
        let d = ToricDivisor::from_ints(fan, vals).unwrap();
        if d.is_ample() {
            prop_assert!(d.is_nef() && d.is_big());
        }
    }

    #[test]
    fn toric_support_function_homogeneous_and_min_over_vertices(
        d in standard_fan().prop_flat_map(nef_divisor),
        a in -5i64..=5, b in -5i64..=5, q in 1i64..=4, num in 0i64..=6, den in 1i64..=3,
    ) {
        let u = vec![rat(a, q), rat(b, q)];
        let lam = rat(num, den);
        let lu: Vec<Rat> = u.iter().map(|x| x * &lam).collect();
        let psi = d.support_function(&u).unwrap();
        prop_assert_eq!(d.support_function(&lu).unwrap(), &lam * &psi);
        let p = d.polytope();
        if !p.is_empty() {
            let m = p.vertices().iter().map(|v| toric_core::pairing(v, &u).unwrap()).min().unwrap();
            prop_assert_eq!(psi, m);
        }
    }
}

// conjugate

fn p1() -> ToricDivisor {
    ToricDivisor::from_ints(Fan::standard(StandardFan::P1), &[0, -1]).unwrap()
}

fn p2() -> ToricDivisor {
    ToricDivisor::from_ints(Fan::standard(StandardFan::P2), &[0, 0, -1]).unwrap()
}

fn simplex_point() -> impl Strategy<Value = Vec<f64>> {
    (0.02f64..0.96, 0.02f64..0.96).prop_filter_map("inside", |(a, b)| (a + b < 0.98).then(|| vec![a, b]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conjugate_shift_equivariance(x in simplex_point(), c in -2.0f64..2.0) {
        let g = MetricFunction::fubini_study(&p2()).unwrap();
        let base = ConjugateFunction::with_defaults(&g).eval(&x).unwrap();
        let shifted = ConjugateFunction::with_defaults(&g.shifted(c)).eval(&x).unwrap();
        prop_assert!((shifted - (base - c)).abs() < 1e-12);
    }

    #[test]
    fn conjugate_translation_equivariance(x in simplex_point(), m0 in -2i64..=2, m1 in -2i64..=2) {
        let g = MetricFunction::fubini_study(&p2()).unwrap();
        let t = g.translated(&[m0, m1]).unwrap();
        let moved = vec![x[0] + m0 as f64, x[1] + m1 as f64];
        let a = ConjugateFunction::with_defaults(&t).eval(&moved).unwrap();
        let b = ConjugateFunction::with_defaults(&g).eval(&x).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn conjugate_midpoint_concavity(x in simplex_point(), y in simplex_point(), t in 0.0f64..1.0) {
        let fs = MetricFunction::fubini_study(&p2()).unwrap();
        let can = MetricFunction::canonical(&p2()).unwrap();
        let g = MetricFunction::blend(&fs, &can, t).unwrap();
        let c = ConjugateFunction::with_defaults(&g);
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let tol = c.tolerance();
        prop_assert!(c.eval(&mid).unwrap() >= 0.5 * (c.eval(&x).unwrap() + c.eval(&y).unwrap()) - tol);
    }

    #[test]
    fn conjugate_moment_map_consistency(x in simplex_point(), temp in 0.5f64..3.0) {
        let g = MetricFunction::fubini_study_with(&p2(), temp, None).unwrap();
        let u = gradient_map_inverse(&g, &x).unwrap();
        let grad = g.gradient(&u).unwrap();
        prop_assert!((grad[0] - x[0]).abs() < 1e-9 && (grad[1] - x[1]).abs() < 1e-9);
    }

    #[test]
    fn conjugate_contraction(w in prop::collection::vec(-1.0f64..1.0, 2), temp in 0.5f64..2.0, t in 0.0f64..1.0) {
        let d = p1();
        let g = MetricFunction::fubini_study(&d).unwrap();
        let other = MetricFunction::fubini_study_with(&d, temp, Some(w)).unwrap();
        let h = MetricFunction::blend(&g, &other, t).unwrap();
        let diff = |u: f64| (g.value(&[u]) - h.value(&[u])).abs();
        let coarse = (-4000..=4000).map(|i| i as f64 * 0.01).fold(0.0, |best: f64, u| if diff(u) > diff(best) { u } else { best });
        let sup_g = (-2000..=2000).map(|i| diff(coarse + i as f64 * 1e-5)).fold(0.0, f64::max);
        let (cg, ch) = (ConjugateFunction::with_defaults(&g), ConjugateFunction::with_defaults(&h));
        let sup_c = (0..=100)
            .map(|i| { let x = [i as f64 / 100.0]; (cg.eval(&x).unwrap() - ch.eval(&x).unwrap()).abs() })
            .fold(0.0, f64::max);
        prop_assert!(sup_c <= sup_g + 2.0 * cg.tolerance(), "{} vs {}", sup_c, sup_g);
    }
}

#[test]
fn conjugate_biconjugate_idempotent() {
    let d = p1();
    let fs = MetricFunction::fubini_study(&d).unwrap();
    let can = MetricFunction::canonical(&d).unwrap();
    let g = MetricFunction::blend(&fs, &can, 0.4).unwrap();
    let opts = BiconjugateOptions { refine: Some(false), ..BiconjugateOptions::for_dim(1) };
    let once = biconjugate_metric(&g, &opts).unwrap();
    let twice = biconjugate_metric(&once, &opts).unwrap();
    let tol = opts.legendre.tol;
    for i in -40..=40 {
        let u = [i as f64 * 0.1];
        assert!((once.value(&u) - twice.value(&u)).abs() <= 2.0 * tol, "u={u:?}");
    }
}

// quadrature

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| {
        let m = DMatrix::from_vec(n, n, v);
        (&m + m.transpose()) * 0.5
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadrature_mixed_discriminant_diagonal_and_symmetric(a in symmetric(3), b in symmetric(3), c in symmetric(3)) {
        let d = mixed_discriminant(&[a.clone(), a.clone(), a.clone()]).unwrap();
        prop_assert!((d - a.determinant()).abs() < 1e-12 * (1.0 + a.determinant().abs()));
        let abc = mixed_discriminant(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let cab = mixed_discriminant(&[c.clone(), a.clone(), b.clone()]).unwrap();
        let bca = mixed_discriminant(&[b, c, a]).unwrap();
        prop_assert!((abc - cab).abs() < 1e-12 && (abc - bca).abs() < 1e-12);
    }

    #[test]
    fn quadrature_exact_on_quintics(coef in prop::collection::vec(-3.0f64..3.0, 21)) {
        // Σ c_{ab} x^a y^b over a + b ≤ 5, with ∫ x^a y^b = a! b! / (a + b + 2)!
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        let mut terms = Vec::new();
        for a in 0..=5usize {
            for b in 0..=(5 - a) {
                terms.push((a, b));
            }
        }
        let exact: f64 = terms.iter().zip(&coef).map(|(&(a, b), c)| c * fact(a) * fact(b) / fact(a + b + 2)).sum();
        let tri = Polytope::from_vertices(&[ints_to_rat(&[0, 0]), ints_to_rat(&[1, 0]), ints_to_rat(&[0, 1])]).unwrap();
        let f = |x: &[f64]| Ok(terms.iter().zip(&coef).map(|(&(a, b), c)| c * x[0].powi(a as i32) * x[1].powi(b as i32)).sum());
        let scheme = Scheme { order: 4, subdivision: 1, boundary_shrink: 0.0, graded: false };
        let r = integrate_polytope(&f, &tri, &scheme).unwrap();
        prop_assert!((r.value - exact).abs() < 1e-13);
    }
}

#[test]
fn quadrature_measures_are_normalized() {
    use toric_core::quadrature::{integrate_weighted, WeightedOptions};
    let mut corpus = Vec::new();
    for fan in [StandardFan::P1, StandardFan::P2, StandardFan::P1xP1, StandardFan::Hirzebruch(1)] {
        corpus.push(MeasureSpec::laplace(&Fan::standard(fan)));
    }
    corpus.push(MeasureSpec::from_metric(&MetricFunction::fubini_study(&p1()).unwrap()).unwrap());
    corpus.push(MeasureSpec::from_metric(&MetricFunction::fubini_study(&p2()).unwrap()).unwrap());
    for m in &corpus {
        let r = integrate_weighted(&|_| 1.0, m, &WeightedOptions::for_dim(m.dim())).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8, "{m:?}: {r:?}");
    }
}

#[test]
fn quadrature_riemann_sums_converge_for_concave() {
    use toric_core::quadrature::riemann_lattice_sum;
    let seg = Polytope::from_vertices(&[ints_to_rat(&[0]), ints_to_rat(&[1])]).unwrap();
    let phi = |x: &[f64]| (x[0] * (1.0 - x[0])).sqrt();
    let exact = std::f64::consts::PI / 8.0;
    let e8 = (riemann_lattice_sum(&phi, &seg, 8).unwrap() - exact).abs();
    let e64 = (riemann_lattice_sum(&phi, &seg, 64).unwrap() - exact).abs();
    assert!(e64 < e8);
}

// energy

fn smooth_corpus_p1() -> Vec<MetricFunction> {
    let d = p1();
    vec![
        MetricFunction::fubini_study(&d).unwrap(),
        MetricFunction::fubini_study_with(&d, 2.0, None).unwrap(),
        MetricFunction::fubini_study_with(&d, 0.7, Some(vec![0.3, -0.5])).unwrap(),
    ]
}

#[test]
fn energy_antisymmetry_and_cocycle() {
    let c = smooth_corpus_p1();
    let o = EnergyOptions::for_dim(1);
    let j = |a: &MetricFunction, b: &MetricFunction| conjugate_gap_integral(a, b, &o).unwrap().value;
    let tol = o.legendre.tol;
    assert!((j(&c[0], &c[1]) + j(&c[1], &c[0])).abs() <= 2.0 * tol);
    assert!((j(&c[2], &c[0]) - j(&c[2], &c[1]) - j(&c[1], &c[0])).abs() <= 3.0 * tol);
}

#[test]
fn energy_equilibrium_invariance() {
    let d = p1();
    let o = EnergyOptions::for_dim(1);
    let fs = MetricFunction::fubini_study(&d).unwrap();
    let can = MetricFunction::canonical(&d).unwrap();
    let opts = BiconjugateOptions { refine: Some(false), ..BiconjugateOptions::for_dim(1) };
    let env = biconjugate_metric(&fs, &opts).unwrap();
    let a = conjugate_gap_integral(&fs, &can, &o).unwrap().value;
    let b = conjugate_gap_integral(&env, &can, &o).unwrap().value;
    assert!((a - b).abs() < 1e-5, "{a} vs {b}");
}

#[test]
fn energy_pushforward_identity() {
    use toric_core::metric::ma_density;
    use toric_core::quadrature::{integrate_fan, WeightedOptions};
    let d = p2();
    let g = MetricFunction::fubini_study(&d).unwrap();
    // φ(u) = exp(-|u|²) has rapidly decaying pullback
    let phi = |u: &[f64]| (-(u[0] * u[0] + u[1] * u[1])).exp();
    let lhs = integrate_fan(
        &|u: &[f64]| phi(u) * ma_density(&g, u).unwrap(),
        d.fan(),
        toric_core::metric::Decay { constant: 8.0, rate: 2.0 },
        &[],
        &WeightedOptions::for_dim(2),
    )
    .unwrap()
    .value;
    let rhs = integrate_polytope(
        &|x: &[f64]| Ok(phi(&gradient_map_inverse(&g, x)?)),
        &d.polytope(),
        &Scheme::for_dim(2),
    )
    .unwrap()
    .value;
    assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
}

// sections

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sections_l2_below_sup(k in 1u32..6, blend in 0.0f64..1.0, two_dim in any::<bool>()) {
        let d = if two_dim { p2() } else { p1() };
        let fs = MetricFunction::fubini_study(&d).unwrap();
        let can = MetricFunction::canonical(&d).unwrap();
        let g = MetricFunction::blend(&fs, &can, blend).unwrap();
        let mu = MeasureSpec::laplace(d.fan());
        let opts = SectionOptions::for_dim(d.rank());
        let conj = ConjugateFunction::new(&g, opts.legendre.clone());
        for s in SectionIndex::all(&d.polytope(), k) {
            let l2 = l2_log_norm_sq(&s, &conj, &mu, &opts).unwrap().log_value;
            let sup = log_sup_norm(&s, &conj).unwrap();
            prop_assert!(0.5 * l2 <= sup + 2.0 * k as f64 * opts.legendre.tol, "{:?}", s);
        }
    }
}

#[test]
fn sections_symmetric_entries_on_the_line() {
    let d = p1();
    let g = MetricFunction::fubini_study(&d).unwrap();
    let mu = MeasureSpec::laplace(d.fan());
    let opts = SectionOptions::for_dim(1);
    let conj = ConjugateFunction::new(&g, opts.legendre.clone());
    let k = 7;
    let poly = d.polytope();
    for e in 0..=k as i64 {
        let a = l2_log_norm_sq(&SectionIndex::new(&poly, k, vec![e]).unwrap(), &conj, &mu, &opts).unwrap();
        let b = l2_log_norm_sq(&SectionIndex::new(&poly, k, vec![k as i64 - e]).unwrap(), &conj, &mu, &opts).unwrap();
        assert!((a.log_value - b.log_value).abs() < 1e-9, "e={e}");
    }
}

#[test]
fn sections_bernstein_markov_lower_half() {
    let d = p1();
    let g = MetricFunction::fubini_study(&d).unwrap();
    let mu = MeasureSpec::from_metric(&g).unwrap();
    let opts = SectionOptions::for_dim(1);
    let conj = ConjugateFunction::new(&g, opts.legendre.clone());
    let poly = d.polytope();
    let mut worst = Vec::new();
    for k in [2u32, 8, 32] {
        let mut w: f64 = 0.0;
        for s in SectionIndex::all(&poly, k) {
            let l2 = l2_log_norm_sq(&s, &conj, &mu, &opts).unwrap().log_value;
            let gap = (log_sup_norm(&s, &conj).unwrap() - 0.5 * l2) / k as f64;
            assert!(gap >= -1e-9);
            w = w.max(gap);
        }
        worst.push(w);
    }
    assert!(worst.windows(2).all(|p| p[1] < p[0]), "{worst:?}");
}
