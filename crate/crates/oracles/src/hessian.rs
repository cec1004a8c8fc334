use nalgebra::DMatrix;
use toric_core::MetricFunction;

/// Central second differences of the metric at `u` with step `h`.
pub fn finite_difference_hessian_oracle(g: &MetricFunction, u: &[f64], h: f64) -> DMatrix<f64> {
    let n = u.len();
    let at = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut p = u.to_vec();
        p[di] += si * h;
        p[dj] += sj * h;
        g.value(&p)
    };
    DMatrix::from_fn(n, n, |i, j| {
        (at(i, 1.0, j, 1.0) - at(i, 1.0, j, -1.0) - at(i, -1.0, j, 1.0) + at(i, -1.0, j, -1.0)) / (4.0 * h * h)
    })
}
