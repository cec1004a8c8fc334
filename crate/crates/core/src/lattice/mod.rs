//! Exact rational polytopes in character space.

mod hull;

use std::sync::OnceLock;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{det, dot, nullspace, rank, solve, sub};
use crate::rational::{
    ceil_i64, floor_i64, int, primitive_integer, serde_rat, serde_rat_vec, serde_rat_vec_vec,
    to_f64, Rat,
};

pub(crate) use hull::subsets;

/// Pairing between a character `x` and a cocharacter `u`.
pub fn pairing(x: &[Rat], u: &[Rat]) -> Result<Rat> {
    if x.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: u.len(),
        });
    }
    Ok(dot(x, u))
}

/// The closed halfspace `{x : <x, normal> >= offset}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Halfspace {
    #[serde(with = "serde_rat_vec")]
    pub normal: Vec<Rat>,
    #[serde(with = "serde_rat")]
    pub offset: Rat,
}

impl Halfspace {
    pub fn new(normal: Vec<Rat>, offset: Rat) -> Self {
        Self { normal, offset }
    }

    /// `<x, normal> - offset`, nonnegative exactly on the halfspace.
    pub fn slack(&self, x: &[Rat]) -> Rat {
        dot(x, &self.normal) - &self.offset
    }

    pub fn slack_f64(&self, x: &[f64]) -> f64 {
        self.normal
            .iter()
            .zip(x)
            .map(|(a, b)| to_f64(a) * b)
            .sum::<f64>()
            - to_f64(&self.offset)
    }
}

/// A bounded rational polytope given by inequalities; vertices are derived lazily.
#[derive(Debug)]
pub struct Polytope {
    dim: usize,
    hrep: Vec<Halfspace>,
    vrep: OnceLock<Vec<Vec<Rat>>>,
}

impl Clone for Polytope {
    fn clone(&self) -> Self {
        let vrep = OnceLock::new();
        if let Some(v) = self.vrep.get() {
            let _ = vrep.set(v.clone());
        }
        Self {
            dim: self.dim,
            hrep: self.hrep.clone(),
            vrep,
        }
    }
}

impl PartialEq for Polytope {
    /// Point-set equality, compared through the canonical vertex list.
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.vertices() == other.vertices()
    }
}

fn normalize(h: Halfspace) -> Option<Halfspace> {
    if h.normal.iter().all(Zero::is_zero) {
        return None;
    }
    let prim = primitive_integer(&h.normal);
    let first = h.normal.iter().position(|x| !x.is_zero()).unwrap();
    let scale = Rat::from_integer(prim[first].clone()) / &h.normal[first];
    Some(Halfspace {
        normal: prim.into_iter().map(Rat::from_integer).collect(),
        offset: h.offset * scale,
    })
}

impl Polytope {
    /// Build from inequalities. Normals are rescaled to primitive integer vectors.
    /// Fails when the described set is unbounded.
    pub fn from_hrep(dim: usize, hrep: Vec<Halfspace>) -> Result<Self> {
        let mut rows = Vec::with_capacity(hrep.len());
        let mut trivially_empty = false;
        for h in hrep {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: h.normal.len(),
                });
            }
            match normalize(h.clone()) {
                Some(n) => rows.push(n),
                None if h.offset.is_positive() => trivially_empty = true,
                None => {}
            }
        }
        rows.sort();
        rows.dedup();
        if trivially_empty {
            // 0 >= positive: keep a contradictory pair so the set stays empty.
            rows = contradiction(dim);
        }
        let poly = Self {
            dim,
            hrep: rows,
            vrep: OnceLock::new(),
        };
        if !poly.is_bounded() {
            return Err(Error::Unbounded);
        }
        Ok(poly)
    }

    /// Convex hull of a finite nonempty point set.
    pub fn from_vertices(points: &[Vec<Rat>]) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::EmptyPolytope);
        };
        let dim = first.len();
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        if dim == 0 {
            return Self::from_hrep(0, Vec::new());
        }
        let h = hull::hull(points);
        let mut rows = Vec::new();
        for (e, c) in h.equalities {
            rows.push(Halfspace::new(e.iter().map(|x| -x).collect(), -c.clone()));
            rows.push(Halfspace::new(e, c));
        }
        rows.extend(h.facets.into_iter().map(|(w, c)| Halfspace::new(w, c)));
        Self::from_hrep(dim, rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hrep(&self) -> &[Halfspace] {
        &self.hrep
    }

    fn is_bounded(&self) -> bool {
        let n = self.dim;
        if n == 0 {
            return true;
        }
        let normals: Vec<Vec<Rat>> = self.hrep.iter().map(|h| h.normal.clone()).collect();
        if normals.is_empty() || rank(&normals) < n {
            return false;
        }
        // The recession cone {d : <d, normal> >= 0} is pointed; it is trivial iff
        // none of its candidate extreme rays is feasible.
        for subset in subsets(normals.len(), n - 1) {
            let rows: Vec<Vec<Rat>> = subset.iter().map(|&i| normals[i].clone()).collect();
            let ns = nullspace(&rows, n);
            if ns.len() != 1 {
                continue;
            }
            for sign in [1, -1] {
                let d: Vec<Rat> = ns[0].iter().map(|x| x * int(sign)).collect();
                if normals.iter().all(|nr| !dot(nr, &d).is_negative()) {
                    return false;
                }
            }
        }
        true
    }

    /// Extreme points in lexicographic order; empty for an empty polytope.
    pub fn vertices(&self) -> &[Vec<Rat>] {
        self.vrep.get_or_init(|| self.enumerate_vertices())
    }

    fn enumerate_vertices(&self) -> Vec<Vec<Rat>> {
        let n = self.dim;
        if n == 0 {
            return if self.hrep.is_empty() { vec![Vec::new()] } else { Vec::new() };
        }
        let mut out = Vec::new();
        for subset in subsets(self.hrep.len(), n) {
            let a: Vec<Vec<Rat>> = subset.iter().map(|&i| self.hrep[i].normal.clone()).collect();
            let b: Vec<Rat> = subset.iter().map(|&i| self.hrep[i].offset.clone()).collect();
            if let Some(x) = solve(&a, &b) {
                if self.contains(&x) {
                    out.push(x);
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices().iter().map(|v| v.iter().map(to_f64).collect()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices().is_empty()
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        self.hrep.iter().all(|h| !h.slack(x).is_negative())
    }

    /// Membership in floating point with an absolute tolerance band.
    pub fn contains_f64(&self, x: &[f64], tol: f64) -> bool {
        self.hrep.iter().all(|h| h.slack_f64(x) >= -tol)
    }

    /// Smallest facet slack of `x`; with primitive normals this is the lattice distance
    /// to the boundary for points inside.
    pub fn min_slack_f64(&self, x: &[f64]) -> f64 {
        self.hrep
            .iter()
            .map(|h| h.slack_f64(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn affine_dim(&self) -> Option<usize> {
        let v = self.vertices();
        if v.is_empty() {
            None
        } else {
            Some(hull::affine_dim(v))
        }
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.affine_dim() == Some(self.dim)
    }

    /// Dilation by a nonnegative rational factor.
    pub fn scale(&self, factor: &Rat) -> Result<Self> {
        if factor.is_negative() {
            return Err(Error::Config("dilation factor must be nonnegative".into()));
        }
        if factor.is_zero() {
            return Self::from_vertices(&[vec![Rat::zero(); self.dim]]);
        }
        let rows = self
            .hrep
            .iter()
            .map(|h| Halfspace::new(h.normal.clone(), &h.offset * factor))
            .collect();
        Self::from_hrep(self.dim, rows)
    }

    pub fn translate(&self, m: &[Rat]) -> Result<Self> {
        if m.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.len(),
            });
        }
        let rows = self
            .hrep
            .iter()
            .map(|h| Halfspace::new(h.normal.clone(), &h.offset + dot(&h.normal, m)))
            .collect();
        Self::from_hrep(self.dim, rows)
    }

    pub fn minkowski_sum(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let (a, b) = (self.vertices(), other.vertices());
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptyPolytope);
        }
        let sums: Vec<Vec<Rat>> = a
            .iter()
            .flat_map(|p| b.iter().map(move |q| p.iter().zip(q).map(|(x, y)| x + y).collect()))
            .collect();
        Self::from_vertices(&sums)
    }

    /// Integer points of `k·P`, in lexicographic order.
    pub fn lattice_points(&self, k: u32) -> Vec<Vec<i64>> {
        let verts = self.vertices();
        if verts.is_empty() {
            return Vec::new();
        }
        let kr = int(k as i64);
        let lo: Vec<i64> = (0..self.dim)
            .map(|i| ceil_i64(&verts.iter().map(|v| &v[i] * &kr).min().unwrap()))
            .collect();
        let hi: Vec<i64> = (0..self.dim)
            .map(|i| floor_i64(&verts.iter().map(|v| &v[i] * &kr).max().unwrap()))
            .collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Vec::new();
        }
        let scaled: Vec<(Vec<i64>, Rat)> = self
            .hrep
            .iter()
            .map(|h| {
                let ints = h.normal.iter().map(floor_i64).collect();
                (ints, &h.offset * &kr)
            })
            .collect();
        let mut out = Vec::new();
        let mut cur = lo.clone();
        loop {
            let inside = scaled.iter().all(|(nrm, off)| {
                let s: i64 = nrm.iter().zip(&cur).map(|(a, b)| a * b).sum();
                int(s) >= *off
            });
            if inside {
                out.push(cur.clone());
            }
            // odometer over the bounding box, last coordinate fastest
            let mut i = self.dim;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < hi[i] {
                    cur[i] += 1;
                    for j in (i + 1)..self.dim {
                        cur[j] = lo[j];
                    }
                    break;
                }
            }
        }
    }

    /// Triangulation into simplices (each given by its `dim + 1` vertices) when the
    /// polytope is full-dimensional; otherwise an empty list.
    pub fn triangulate(&self) -> Vec<Vec<Vec<Rat>>> {
        if !self.is_full_dimensional() {
            return Vec::new();
        }
        pulling_triangulation(self.vertices())
    }

    /// Exact Lebesgue volume in the ambient dimension.
    pub fn volume(&self) -> Rat {
        if self.dim == 0 {
            return if self.is_empty() { Rat::zero() } else { Rat::one() };
        }
        let fact: i64 = (1..=self.dim as i64).product();
        self.triangulate()
            .iter()
            .map(|s| {
                let rows: Vec<Vec<Rat>> = s[1..].iter().map(|p| sub(p, &s[0])).collect();
                det(&rows).abs()
            })
            .sum::<Rat>()
            / int(fact)
    }

    pub fn centroid_f64(&self) -> Vec<f64> {
        let v = self.vertices_f64();
        let m = v.len().max(1) as f64;
        (0..self.dim).map(|i| v.iter().map(|p| p[i]).sum::<f64>() / m).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(PolytopeRepr::from(self)).expect("polytope serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let repr: PolytopeRepr = serde_json::from_value(value.clone())?;
        repr.try_into()
    }
}

fn contradiction(dim: usize) -> Vec<Halfspace> {
    let mut e = vec![Rat::zero(); dim.max(1)];
    e[0] = Rat::one();
    let e: Vec<Rat> = e.into_iter().take(dim).collect();
    let neg: Vec<Rat> = e.iter().map(|x| -x).collect();
    let mut rows = vec![Halfspace::new(e, Rat::one()), Halfspace::new(neg, Rat::zero())];
    // bound the remaining directions so the empty set is still "bounded"
    for i in 1..dim {
        let mut f = vec![Rat::zero(); dim];
        f[i] = Rat::one();
        rows.push(Halfspace::new(f.clone(), Rat::zero()));
        rows.push(Halfspace::new(f.iter().map(|x| -x).collect(), Rat::zero()));
    }
    rows
}

/// Pulling triangulation from the lexicographically first vertex.
fn pulling_triangulation(points: &[Vec<Rat>]) -> Vec<Vec<Vec<Rat>>> {
    let d = hull::affine_dim(points);
    match d {
        0 => return vec![vec![points[0].clone()]],
        1 => {
            let dir = points
                .iter()
                .map(|p| sub(p, &points[0]))
                .find(|v| v.iter().any(|x| !x.is_zero()))
                .unwrap();
            let proj = |p: &Vec<Rat>| dot(p, &dir);
            let a = points.iter().min_by(|x, y| proj(x).cmp(&proj(y))).unwrap();
            let b = points.iter().max_by(|x, y| proj(x).cmp(&proj(y))).unwrap();
            return vec![vec![a.clone(), b.clone()]];
        }
        _ => {}
    }
    let h = hull::hull(points);
    let mut verts = points.to_vec();
    verts.sort();
    let apex = verts[0].clone();
    let mut out = Vec::new();
    for (w, c) in &h.facets {
        if dot(w, &apex) == *c {
            continue;
        }
        let face: Vec<Vec<Rat>> = verts.iter().filter(|p| dot(w, p) == *c).cloned().collect();
        for mut simplex in pulling_triangulation(&face) {
            simplex.insert(0, apex.clone());
            out.push(simplex);
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct PolytopeRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default)]
    hrep: Vec<Halfspace>,
    #[serde(default, with = "serde_rat_vec_vec")]
    vrep: Vec<Vec<Rat>>,
}

impl From<&Polytope> for PolytopeRepr {
    fn from(p: &Polytope) -> Self {
        Self {
            dim: Some(p.dim),
            hrep: p.hrep.clone(),
            vrep: p.vertices().to_vec(),
        }
    }
}

impl TryFrom<PolytopeRepr> for Polytope {
    type Error = Error;

    fn try_from(r: PolytopeRepr) -> Result<Self> {
        if !r.hrep.is_empty() {
            let dim = r.dim.unwrap_or(r.hrep[0].normal.len());
            Polytope::from_hrep(dim, r.hrep)
        } else if !r.vrep.is_empty() {
            Polytope::from_vertices(&r.vrep)
        } else {
            Err(Error::Config("polytope needs hrep or vrep".into()))
        }
    }
}
