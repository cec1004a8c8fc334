use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use toric_core::metric::gradient_map_inverse;
use toric_core::{Fan, MetricFunction};

/// A distribution on cocharacter space that can be sampled directly.
pub trait Sampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
}

/// `(2^n/#cones)·e^{−2|u|}` in the fan gauge: a uniform cone, then
/// independent exponential cone coordinates.
pub struct FanLaplaceSampler {
    pub fan: Fan,
}

impl Sampler for FanLaplaceSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let c = rng.random_range(0..self.fan.max_cones().len());
        let exp = Exp::new(2.0).expect("positive rate");
        let lam: Vec<f64> = (0..self.fan.rank()).map(|_| exp.sample(rng)).collect();
        self.fan.from_cone_coordinates(c, &lam)
    }
}

/// `(1/2)·sech²(u)` on the line, by inverse CDF.
pub struct Sech2Sampler;

impl Sampler for Sech2Sampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let p: f64 = rng.random_range(f64::EPSILON..1.0);
        vec![0.5 * (p / (1.0 - p)).ln()]
    }
}

/// The normalized Monge–Ampère measure of a smooth concave metric: uniform
/// points of the polytope (by rejection from its bounding box) pulled back by
/// the gradient map.
pub struct MomentSampler {
    pub metric: MetricFunction,
}

impl Sampler for MomentSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let verts = self.metric.polytope().vertices_f64();
        let n = self.metric.dim();
        let lo: Vec<f64> = (0..n).map(|d| verts.iter().map(|v| v[d]).fold(f64::INFINITY, f64::min)).collect();
        let hi: Vec<f64> = (0..n).map(|d| verts.iter().map(|v| v[d]).fold(f64::NEG_INFINITY, f64::max)).collect();
        loop {
            let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
            if self.metric.polytope().min_slack_f64(&x) > 1e-9 {
                if let Ok(u) = gradient_map_inverse(&self.metric, &x) {
                    return u;
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Seeded Monte Carlo mean of `f` under the sampler.
pub fn mc_integral_oracle(f: &dyn Fn(&[f64]) -> f64, sampler: &dyn Sampler, samples: usize, seed: u64) -> McEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..samples {
        let v = f(&sampler.sample(&mut rng));
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = if samples > 1 { m2 / (samples - 1) as f64 } else { 0.0 };
    McEstimate {
        mean,
        stderr: (var / samples.max(1) as f64).sqrt(),
    }
}
