//! Minimizers used by the conjugate and moment-map computations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// The iteration left the feasible region and was stopped there.
    pub hit_box: bool,
}

pub(crate) struct NewtonOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
    pub max_step: f64,
    /// Residual at which an unconverged run still counts as usable.
    pub accept_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-13,
            max_iter: 500,
            max_step: 5.0,
            accept_tol: 1e-7,
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton for a smooth convex objective with Levenberg regularization
/// and Armijo backtracking.
pub fn minimize_newton(
    f: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    hess: &dyn Fn(&[f64]) -> DMatrix<f64>,
    start: &[f64],
    feasible: &dyn Fn(&[f64]) -> bool,
) -> Result<NewtonOutcome> {
    newton_with(f, grad, hess, start, feasible, &NewtonOptions::default())
}

pub(crate) fn newton_with(
    f: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    hess: &dyn Fn(&[f64]) -> DMatrix<f64>,
    start: &[f64],
    feasible: &dyn Fn(&[f64]) -> bool,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    let n = start.len();
    let mut u = start.to_vec();
    let mut fu = f(&u);
    let mut g = grad(&u);
    let mut gn = inf_norm(&g);
    for it in 0..opts.max_iter {
        if gn <= opts.grad_tol {
            return Ok(NewtonOutcome {
                point: u,
                value: fu,
                grad_norm: gn,
                iterations: it,
                hit_box: false,
            });
        }
        let h = hess(&u);
        let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let rhs = DVector::from_iterator(n, g.iter().map(|x| -x));
        let mut lambda = 0.0;
        let dir = loop {
            let reg = &h + DMatrix::identity(n, n) * lambda;
            if let Some(ch) = reg.cholesky() {
                let d = ch.solve(&rhs);
                if d.iter().all(|x| x.is_finite()) {
                    break d;
                }
            }
            lambda = if lambda == 0.0 { 1e-12 * scale.max(1e-12) } else { lambda * 10.0 };
            if lambda > 1e12 * scale.max(1.0) {
                break rhs.clone();
            }
        };
        let mut d: Vec<f64> = dir.iter().copied().collect();
        let dn = inf_norm(&d);
        if dn > opts.max_step {
            d.iter_mut().for_each(|x| *x *= opts.max_step / dn);
        }
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-14 {
            let cand: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let fc = f(&cand);
            if fc <= fu + 1e-4 * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            // No decrease representable in floating point: the iterate is as good as it gets.
            break;
        };
        if !feasible(&cand) {
            return Ok(NewtonOutcome {
                point: u,
                value: fu,
                grad_norm: gn,
                iterations: it,
                hit_box: true,
            });
        }
        u = cand;
        fu = fc;
        g = grad(&u);
        gn = inf_norm(&g);
    }
    if gn <= opts.accept_tol {
        Ok(NewtonOutcome {
            point: u,
            value: fu,
            grad_norm: gn,
            iterations: opts.max_iter,
            hit_box: false,
        })
    } else {
        Err(Error::NonConvergence {
            what: "Newton iteration",
            iterations: opts.max_iter,
            residual: gn,
        })
    }
}

#[derive(Clone, Debug)]
pub struct PatternOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Some poll direction at the final step left the feasible region.
    pub touched_boundary: bool,
}

pub(crate) fn poll_directions(n: usize, extra: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e.clone());
        dirs.push(e.iter().map(|x| -x).collect());
    }
    for i in 0..n {
        for j in (i + 1)..n {
            for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut e = vec![0.0; n];
                e[i] = a;
                e[j] = b;
                dirs.push(e);
            }
        }
    }
    for v in extra {
        let m = inf_norm(v);
        if m > 0.0 {
            dirs.push(v.iter().map(|x| x / m).collect());
            dirs.push(v.iter().map(|x| -x / m).collect());
        }
    }
    dirs
}

/// Compass search with step expansion on success. In two dimensions every
/// contraction also polls a rotated pair of directions, which keeps the search
/// from stalling on kinks that are not aligned with the fixed directions.
pub fn minimize_pattern(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    min_step: f64,
    extra_dirs: &[Vec<f64>],
    feasible: &dyn Fn(&[f64]) -> bool,
) -> PatternOutcome {
    let n = start.len();
    let base = poll_directions(n, extra_dirs);
    let mut p = start.to_vec();
    let mut fp = f(&p);
    let mut evals = 1;
    let mut s = step;
    let mut level = 0usize;
    let mut touched = false;
    let max_step = step * 1024.0;
    while s >= min_step && evals < 200_000 {
        let mut dirs = base.clone();
        if n == 2 {
            let ang = level as f64 * 2.399_963_229_728_653;
            let (sn, cs) = ang.sin_cos();
            dirs.extend([vec![cs, sn], vec![-cs, -sn], vec![-sn, cs], vec![sn, -cs]]);
        }
        let mut best: Option<(Vec<f64>, f64)> = None;
        touched = false;
        for d in &dirs {
            let cand: Vec<f64> = p.iter().zip(d).map(|(a, b)| a + s * b).collect();
            if !feasible(&cand) {
                touched = true;
                continue;
            }
            let fc = f(&cand);
            evals += 1;
            if fc < best.as_ref().map_or(fp, |b| b.1) {
                best = Some((cand, fc));
            }
        }
        match best {
            Some((c, fc)) => {
                p = c;
                fp = fc;
                s = (s * 2.0).min(max_step);
            }
            None => {
                s *= 0.5;
                level += 1;
            }
        }
    }
    PatternOutcome {
        point: p,
        value: fp,
        evaluations: evals,
        touched_boundary: touched,
    }
}

const FD_STEP: f64 = 1e-4;

/// Central-difference gradient with one Richardson extrapolation.
pub(crate) fn fd_gradient(f: impl Fn(&[f64]) -> f64, u: &[f64]) -> Vec<f64> {
    let diff = |i: usize, h: f64| {
        let mut a = u.to_vec();
        let mut b = u.to_vec();
        a[i] += h;
        b[i] -= h;
        (f(&a) - f(&b)) / (2.0 * h)
    };
    (0..u.len())
        .map(|i| (4.0 * diff(i, FD_STEP / 2.0) - diff(i, FD_STEP)) / 3.0)
        .collect()
}

/// Central-difference Hessian with one Richardson extrapolation.
pub(crate) fn fd_hessian(f: impl Fn(&[f64]) -> f64, u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let f0 = f(u);
    let second = |i: usize, j: usize, h: f64| {
        let at = |si: f64, sj: f64| {
            let mut v = u.to_vec();
            v[i] += si * h;
            v[j] += sj * h;
            f(&v)
        };
        if i == j {
            (at(1.0, 0.0) - 2.0 * f0 + at(-1.0, 0.0)) / (h * h)
        } else {
            (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h)
        }
    };
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = (4.0 * second(i, j, FD_STEP / 2.0) - second(i, j, FD_STEP)) / 3.0;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}
