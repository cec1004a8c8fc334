use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use toric_core::metric::TorusMeasure;
use toric_core::MetricFunction;

use crate::quad::integrate_over_fan;

#[derive(Clone, Debug, PartialEq)]
pub struct GramOracleOptions {
    /// Exp-sinh step in every cone coordinate.
    pub step: f64,
    /// Trapezoid points per angle.
    pub angular_points: usize,
}

impl Default for GramOracleOptions {
    fn default() -> Self {
        Self {
            step: 1.0 / 16.0,
            angular_points: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FullGram {
    pub sections: Vec<Vec<i64>>,
    pub matrix: DMatrix<Complex64>,
    pub log_det: f64,
    /// `Σ log` of the diagonal entries.
    pub diagonal_log_sum: f64,
    pub max_offdiagonal: f64,
}

/// Every inner product `⟨χ^e, χ^{e′}⟩` at level `k` by a tensor rule over the
/// full torus: exp-sinh in cone coordinates times the trapezoid rule in each
/// angle. The log-determinant comes from a complex Cholesky factorization.
pub fn full_gram_oracle(measure: &TorusMeasure, g: &MetricFunction, k: u32, opts: &GramOracleOptions) -> FullGram {
    let sections = g.polytope().lattice_points(k);
    let n = g.dim();
    let nk = sections.len();
    let m = opts.angular_points;
    let kf = k as f64;
    let fan = g.divisor().fan();
    let decay = measure.radial.decay().rate;
    let cap = 700.0 / decay;

    // angular nodes and weights of the tensor trapezoid rule
    let mut thetas = Vec::with_capacity(m.pow(n as u32));
    for flat in 0..m.pow(n as u32) {
        let mut rem = flat;
        let mut th = vec![0.0; n];
        for t in th.iter_mut() {
            *t = 2.0 * PI * (rem % m) as f64 / m as f64;
            rem /= m;
        }
        thetas.push(th);
    }
    let ang_w = 1.0 / thetas.len() as f64;

    let mut matrix = DMatrix::<Complex64>::zeros(nk, nk);
    for i in 0..nk {
        for j in 0..nk {
            let (a, b) = (&sections[i], &sections[j]);
            let radial = integrate_over_fan(
                &|u: &[f64]| {
                    let pair: f64 = a.iter().zip(b).zip(u).map(|((x, y), v)| (x + y) as f64 * v).sum();
                    let r = measure.radial.density(u);
                    if r == 0.0 {
                        0.0
                    } else {
                        (2.0 * kf * g.value(u) - pair).exp() * r
                    }
                },
                fan,
                opts.step,
                cap,
            );
            let mut angular = Complex64::new(0.0, 0.0);
            for th in &thetas {
                let phase: f64 = a.iter().zip(b).zip(th).map(|((x, y), t)| (x - y) as f64 * t).sum();
                angular += Complex64::from_polar(ang_w * measure.angular.weight(th), phase);
            }
            matrix[(i, j)] = angular * radial;
        }
    }
    let diagonal_log_sum: f64 = (0..nk).map(|i| matrix[(i, i)].re.ln()).sum();
    let max_offdiagonal = (0..nk)
        .flat_map(|i| (0..nk).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| matrix[(i, j)].norm())
        .fold(0.0, f64::max);
    let log_det = match matrix.clone().cholesky() {
        Some(ch) => 2.0 * (0..nk).map(|i| ch.l()[(i, i)].re.ln()).sum::<f64>(),
        None => f64::NAN,
    };
    FullGram {
        sections,
        matrix,
        log_det,
        diagonal_log_sum,
        max_offdiagonal,
    }
}
