//! Quadrature over polytopes and over cocharacter space, lattice Riemann sums
//! and mixed discriminants.

mod cubature;
mod rules;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Polytope;
use crate::par;
use crate::rational::to_f64;
use crate::reduce::tree_sum;

pub use cubature::{integrate_box, integrate_fan, integrate_weighted, BoxTolerance, WeightedIntegral, WeightedOptions};
pub use rules::gauss_legendre;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    /// Gauss–Legendre points per axis of the collapsed cube.
    pub order: usize,
    /// Levels of uniform simplex refinement (each level splits a simplex into `2^n`).
    pub subdivision: u32,
    /// Shrink factor toward the centroid; 0 integrates over the polytope itself.
    pub boundary_shrink: f64,
    /// Apply the quintic endpoint grading `s ↦ 10s³ − 15s⁴ + 6s⁵` on every
    /// collapsed axis, which tames logarithmic singularities on facets.
    #[serde(default)]
    pub graded: bool,
}

impl Scheme {
    pub fn for_dim(n: usize) -> Self {
        match n {
            0 | 1 => Self {
                order: 32,
                subdivision: 0,
                boundary_shrink: 0.0,
                graded: true,
            },
            _ => Self {
                order: 16,
                subdivision: 2,
                boundary_shrink: 0.0,
                graded: true,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub nodes_used: usize,
}

fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

/// Split a simplex into `2^n` children of equal volume (n ≤ 2 exactly; higher
/// dimensions are returned unchanged).
fn refine(simplex: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
    match simplex.len() {
        2 => {
            let m = midpoint(&simplex[0], &simplex[1]);
            vec![vec![simplex[0].clone(), m.clone()], vec![m, simplex[1].clone()]]
        }
        3 => {
            let (a, b, c) = (&simplex[0], &simplex[1], &simplex[2]);
            let (ab, bc, ca) = (midpoint(a, b), midpoint(b, c), midpoint(c, a));
            vec![
                vec![a.clone(), ab.clone(), ca.clone()],
                vec![ab.clone(), b.clone(), bc.clone()],
                vec![ca.clone(), bc.clone(), c.clone()],
                vec![ab, bc, ca],
            ]
        }
        _ => vec![simplex.to_vec()],
    }
}

/// Collapsed-coordinate (Duffy) rule on a simplex: nodes and weights.
fn simplex_rule(simplex: &[Vec<f64>], order: usize, graded: bool) -> Vec<(Vec<f64>, f64)> {
    let n = simplex.len() - 1;
    let rule = gauss_legendre(order);
    let (t, w): (Vec<f64>, Vec<f64>) = if graded {
        rule.0
            .iter()
            .zip(&rule.1)
            .map(|(&s, &w)| {
                let (s2, r2) = (s * s, (1.0 - s) * (1.0 - s));
                (s * s2 * (10.0 - 15.0 * s + 6.0 * s2), w * 30.0 * s2 * r2)
            })
            .unzip()
    } else {
        rule.as_ref().clone()
    };
    let edges: Vec<Vec<f64>> = (1..=n)
        .map(|i| simplex[i].iter().zip(&simplex[i - 1]).map(|(a, b)| a - b).collect())
        .collect();
    let rows: Vec<Vec<f64>> = (1..=n)
        .map(|i| simplex[i].iter().zip(&simplex[0]).map(|(a, b)| a - b).collect())
        .collect();
    let jac = crate::linalg::det_f64(&rows).abs();
    let total = order.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut idx = vec![0; n];
        for d in (0..n).rev() {
            idx[d] = rem % order;
            rem /= order;
        }
        // x = v0 + t1[(v1-v0) + t2[(v2-v1) + ...]]
        let mut x = simplex[0].clone();
        let mut prod = 1.0;
        let mut weight = jac;
        for d in 0..n {
            let td = t[idx[d]];
            prod *= td;
            weight *= w[idx[d]] * td.powi((n - 1 - d) as i32);
            for (xi, ei) in x.iter_mut().zip(&edges[d]) {
                *xi += prod * ei;
            }
        }
        out.push((x, weight));
    }
    out
}

fn nodes_for(poly: &Polytope, order: usize, scheme: &Scheme, shrink: f64) -> Result<Vec<(Vec<f64>, f64)>> {
    if !poly.is_full_dimensional() {
        return Err(Error::NotFullDimensional {
            affine_dim: poly.affine_dim().unwrap_or(0),
            ambient: poly.dim(),
        });
    }
    let centroid = poly.centroid_f64();
    let mut simplices: Vec<Vec<Vec<f64>>> = poly
        .triangulate()
        .iter()
        .map(|s| {
            s.iter()
                .map(|v| {
                    v.iter()
                        .zip(&centroid)
                        .map(|(x, c)| c + (1.0 - shrink) * (to_f64(x) - c))
                        .collect()
                })
                .collect()
        })
        .collect();
    for _ in 0..scheme.subdivision {
        simplices = simplices.iter().flat_map(|s| refine(s)).collect();
    }
    Ok(simplices.iter().flat_map(|s| simplex_rule(s, order, scheme.graded)).collect())
}

fn weighted_sum(nodes: &[(Vec<f64>, f64)], f: &(dyn Fn(&[f64]) -> Result<f64> + Sync)) -> Result<f64> {
    let vals = par::try_map(nodes, |(x, w)| {
        let v = f(x)?;
        if v.is_nan() {
            return Err(Error::NanIntegrand(x.clone()));
        }
        Ok(w * v)
    })?;
    Ok(tree_sum(&vals))
}

/// Integrate `f` over a full-dimensional polytope.
pub fn integrate_polytope(
    f: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
    poly: &Polytope,
    scheme: &Scheme,
) -> Result<Integral> {
    let shrink = scheme.boundary_shrink.clamp(0.0, 0.5);
    let nodes = nodes_for(poly, scheme.order, scheme, shrink)?;
    let value = weighted_sum(&nodes, f)?;
    let coarse_nodes = nodes_for(poly, (scheme.order / 2).max(1), scheme, shrink)?;
    let coarse = weighted_sum(&coarse_nodes, f)?;
    let mut error_estimate = (value - coarse).abs();
    if shrink > 0.0 {
        let verts = poly.vertices_f64();
        let diam = verts
            .iter()
            .flat_map(|a| verts.iter().map(move |b| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()))
            .fold(0.0, f64::max)
            .sqrt();
        let sup = par::try_map(&nodes, |(x, _)| f(x).map(f64::abs))?.into_iter().fold(0.0, f64::max);
        error_estimate += shrink * diam * sup;
    }
    Ok(Integral {
        value,
        error_estimate,
        nodes_used: nodes.len() + coarse_nodes.len(),
    })
}

/// `(1/l^n) Σ φ(e/l)` over the lattice points `e` of `l·P`.
pub fn riemann_lattice_sum(phi: &(dyn Fn(&[f64]) -> f64 + Sync), poly: &Polytope, l: u32) -> Result<f64> {
    if l == 0 {
        return Err(Error::Config("lattice refinement must be positive".into()));
    }
    let pts = poly.lattice_points(l);
    let lf = l as f64;
    let vals = par::map(&pts, |e| {
        let x: Vec<f64> = e.iter().map(|&c| c as f64 / lf).collect();
        phi(&x)
    });
    Ok(tree_sum(&vals) / lf.powi(poly.dim() as i32))
}

/// The symmetric multilinear form with `D(A,…,A) = det A`, by polarization.
pub fn mixed_discriminant(mats: &[DMatrix<f64>]) -> Result<f64> {
    let n = mats.len();
    if n == 0 {
        return Ok(1.0);
    }
    for m in mats {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows().max(m.ncols()),
            });
        }
    }
    let mut terms = Vec::with_capacity(1 << n);
    for mask in 1usize..(1 << n) {
        let mut s = DMatrix::zeros(n, n);
        for (i, m) in mats.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s += m;
            }
        }
        let sign = if (n - mask.count_ones() as usize).is_multiple_of(2) { 1.0 } else { -1.0 };
        terms.push(sign * s.determinant());
    }
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    Ok(tree_sum(&terms) / fact)
}
