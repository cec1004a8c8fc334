//! Complete nonsingular fans, torus-invariant divisors and their support functions.

use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Halfspace, Polytope};
use crate::linalg::{det, dot, solve};
use crate::rational::{int, ints_to_rat, serde_rat_vec, to_f64, Rat};

/// A complete fan whose maximal cones are each spanned by a lattice basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FanRepr", into = "FanRepr")]
pub struct Fan {
    rays: Vec<Vec<i64>>,
    max_cones: Vec<Vec<usize>>,
    /// Per cone, the inverse of the ray matrix (rows are rays), exact.
    inverses: Vec<Vec<Vec<Rat>>>,
}

#[derive(Serialize, Deserialize)]
struct FanRepr {
    rays: Vec<Vec<i64>>,
    max_cones: Vec<Vec<usize>>,
}

impl TryFrom<FanRepr> for Fan {
    type Error = Error;
    fn try_from(r: FanRepr) -> Result<Self> {
        Fan::new(r.rays, r.max_cones)
    }
}

impl From<Fan> for FanRepr {
    fn from(f: Fan) -> Self {
        Self {
            rays: f.rays,
            max_cones: f.max_cones,
        }
    }
}

fn transpose_inverse(rows: &[Vec<Rat>]) -> Option<Vec<Vec<Rat>>> {
    // Columns of the inverse of R^T: solve R^T c = e_j.
    let n = rows.len();
    let rt: Vec<Vec<Rat>> = (0..n).map(|i| (0..n).map(|j| rows[j][i].clone()).collect()).collect();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<Rat> = (0..n).map(|i| int((i == j) as i64)).collect();
        cols.push(solve(&rt, &e)?);
    }
    // inverse[i][j] = cols[j][i]
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

impl Fan {
    pub fn new(rays: Vec<Vec<i64>>, max_cones: Vec<Vec<usize>>) -> Result<Self> {
        let n = rays.first().map(Vec::len).ok_or_else(|| Error::InvalidFan("no rays".into()))?;
        if n == 0 {
            return Err(Error::InvalidFan("rank must be positive".into()));
        }
        for r in &rays {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
            let g = r.iter().fold(0i64, |acc, &x| num_integer::gcd(acc, x));
            if g != 1 {
                return Err(Error::InvalidFan(format!("ray {r:?} is not primitive")));
            }
        }
        let mut inverses = Vec::with_capacity(max_cones.len());
        for cone in &max_cones {
            if cone.len() != n || cone.iter().any(|&i| i >= rays.len()) {
                return Err(Error::InvalidFan(format!("cone {cone:?} is malformed")));
            }
            let m: Vec<Vec<Rat>> = cone.iter().map(|&i| ints_to_rat(&rays[i])).collect();
            if det(&m).abs() != int(1) {
                return Err(Error::InvalidFan(format!("cone {cone:?} is not unimodular")));
            }
            inverses.push(transpose_inverse(&m).expect("unimodular matrix is invertible"));
        }
        let fan = Self {
            rays,
            max_cones,
            inverses,
        };
        fan.check_complete()?;
        Ok(fan)
    }

    pub fn standard(name: StandardFan) -> Self {
        let (rays, cones): (Vec<Vec<i64>>, Vec<Vec<usize>>) = match name {
            StandardFan::P1 => (vec![vec![1], vec![-1]], vec![vec![0], vec![1]]),
            StandardFan::P2 => (
                vec![vec![1, 0], vec![0, 1], vec![-1, -1]],
                vec![vec![0, 1], vec![1, 2], vec![2, 0]],
            ),
            StandardFan::P1xP1 => (
                vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]],
                vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]],
            ),
            StandardFan::Hirzebruch(a) => (
                vec![vec![1, 0], vec![0, 1], vec![-1, a as i64], vec![0, -1]],
                vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]],
            ),
        };
        Self::new(rays, cones).expect("standard fans are valid")
    }

    pub fn rank(&self) -> usize {
        self.rays[0].len()
    }

    pub fn rays(&self) -> &[Vec<i64>] {
        &self.rays
    }

    pub fn max_cones(&self) -> &[Vec<usize>] {
        &self.max_cones
    }

    /// Coordinates of `u` in the ray basis of cone `c`.
    pub fn cone_coordinates(&self, c: usize, u: &[Rat]) -> Vec<Rat> {
        self.inverses[c].iter().map(|row| dot(row, u)).collect()
    }

    pub fn cone_coordinates_f64(&self, c: usize, u: &[f64]) -> Vec<f64> {
        self.inverses[c]
            .iter()
            .map(|row| row.iter().zip(u).map(|(a, b)| to_f64(a) * b).sum())
            .collect()
    }

    /// A maximal cone containing the rational point `u`.
    pub fn locate(&self, u: &[Rat]) -> Option<usize> {
        (0..self.max_cones.len())
            .find(|&c| self.cone_coordinates(c, u).iter().all(|x| !x.is_negative()))
    }

    /// The cone whose coordinates of `u` are least negative, with those coordinates.
    pub fn locate_f64(&self, u: &[f64]) -> (usize, Vec<f64>) {
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        for c in 0..self.max_cones.len() {
            let lam = self.cone_coordinates_f64(c, u);
            let worst = lam.iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= 0.0 {
                return (c, lam);
            }
            if best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((c, lam, worst));
            }
        }
        let (c, lam, _) = best.expect("fan has cones");
        (c, lam)
    }

    /// The piecewise-linear gauge `u ↦ Σ λ_i` of the fan: the sum of cone coordinates.
    pub fn gauge(&self, u: &[f64]) -> f64 {
        let (_, lam) = self.locate_f64(u);
        lam.iter().map(|x| x.max(0.0)).sum()
    }

    /// Image of cone coordinates `lam` of cone `c` in cocharacter space.
    pub fn from_cone_coordinates(&self, c: usize, lam: &[f64]) -> Vec<f64> {
        let n = self.rank();
        let mut u = vec![0.0; n];
        for (&ri, &l) in self.max_cones[c].iter().zip(lam) {
            for (j, uj) in u.iter_mut().enumerate() {
                *uj += l * self.rays[ri][j] as f64;
            }
        }
        u
    }

    fn check_complete(&self) -> Result<()> {
        // Every sample must lie in some cone, and in the interior of at most one.
        let n = self.rank();
        let span = 4i64;
        let side = (2 * span + 1) as usize;
        let total = side.pow(n as u32);
        for idx in 0..total {
            let mut rem = idx;
            let mut u = Vec::with_capacity(n);
            for _ in 0..n {
                u.push((rem % side) as i64 - span);
                rem /= side;
            }
            // skew off lattice walls with a small rational offset
            let u: Vec<Rat> = u
                .iter()
                .enumerate()
                .map(|(i, &x)| int(x) + Rat::new(1.into(), (7 + 3 * i as i64).into()))
                .collect();
            let mut containing = 0;
            let mut interior = 0;
            for c in 0..self.max_cones.len() {
                let lam = self.cone_coordinates(c, &u);
                if lam.iter().all(|x| !x.is_negative()) {
                    containing += 1;
                    if lam.iter().all(|x| x.is_positive()) {
                        interior += 1;
                    }
                }
            }
            if containing == 0 {
                return Err(Error::InvalidFan("fan is not complete".into()));
            }
            if interior > 1 {
                return Err(Error::InvalidFan("maximal cones overlap".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StandardFan {
    P1,
    P2,
    P1xP1,
    Hirzebruch(u32),
}

impl fmt::Display for StandardFan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StandardFan::P1 => write!(f, "P1"),
            StandardFan::P2 => write!(f, "P2"),
            StandardFan::P1xP1 => write!(f, "P1xP1"),
            StandardFan::Hirzebruch(a) => write!(f, "Hirzebruch({a})"),
        }
    }
}

impl FromStr for StandardFan {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "p1" => return Ok(StandardFan::P1),
            "p2" => return Ok(StandardFan::P2),
            "p1xp1" => return Ok(StandardFan::P1xP1),
            _ => {}
        }
        let lower = t.to_ascii_lowercase();
        if let Some(rest) = lower.strip_prefix("hirzebruch(").and_then(|r| r.strip_suffix(')')) {
            if let Ok(a) = rest.trim().parse() {
                return Ok(StandardFan::Hirzebruch(a));
            }
        }
        Err(Error::UnknownFan(s.to_string()))
    }
}

impl TryFrom<String> for StandardFan {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<StandardFan> for String {
    fn from(f: StandardFan) -> String {
        f.to_string()
    }
}

/// A torus-invariant divisor: one rational value per ray of a fan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DivisorRepr", into = "DivisorRepr")]
pub struct ToricDivisor {
    fan: Fan,
    ray_values: Vec<Rat>,
    cone_forms: Vec<Vec<Rat>>,
}

#[derive(Serialize, Deserialize)]
struct DivisorRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fan: Option<StandardFan>,
    #[serde(default)]
    rays: Vec<Vec<i64>>,
    #[serde(default)]
    max_cones: Vec<Vec<usize>>,
    #[serde(with = "serde_rat_vec")]
    ray_values: Vec<Rat>,
}

impl TryFrom<DivisorRepr> for ToricDivisor {
    type Error = Error;
    fn try_from(r: DivisorRepr) -> Result<Self> {
        let fan = match r.fan {
            Some(name) => Fan::standard(name),
            None => Fan::new(r.rays, r.max_cones)?,
        };
        ToricDivisor::new(fan, r.ray_values)
    }
}

impl From<ToricDivisor> for DivisorRepr {
    fn from(d: ToricDivisor) -> Self {
        Self {
            fan: None,
            rays: d.fan.rays.clone(),
            max_cones: d.fan.max_cones.clone(),
            ray_values: d.ray_values,
        }
    }
}

impl ToricDivisor {
    pub fn new(fan: Fan, ray_values: Vec<Rat>) -> Result<Self> {
        if ray_values.len() != fan.rays.len() {
            return Err(Error::DimensionMismatch {
                expected: fan.rays.len(),
                found: ray_values.len(),
            });
        }
        let cone_forms = fan
            .max_cones
            .iter()
            .map(|cone| {
                let a: Vec<Vec<Rat>> = cone.iter().map(|&i| ints_to_rat(&fan.rays[i])).collect();
                let b: Vec<Rat> = cone.iter().map(|&i| ray_values[i].clone()).collect();
                solve(&a, &b).expect("unimodular cone")
            })
            .collect();
        Ok(Self {
            fan,
            ray_values,
            cone_forms,
        })
    }

    pub fn from_ints(fan: Fan, values: &[i64]) -> Result<Self> {
        Self::new(fan, ints_to_rat(values))
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn rank(&self) -> usize {
        self.fan.rank()
    }

    pub fn ray_values(&self) -> &[Rat] {
        &self.ray_values
    }

    /// The linear form `m_σ` of the support function on each maximal cone.
    pub fn cone_forms(&self) -> &[Vec<Rat>] {
        &self.cone_forms
    }

    pub fn support_function(&self, u: &[Rat]) -> Result<Rat> {
        if u.len() != self.rank() {
            return Err(Error::DimensionMismatch {
                expected: self.rank(),
                found: u.len(),
            });
        }
        let c = self.fan.locate(u).expect("complete fan covers every point");
        Ok(dot(&self.cone_forms[c], u))
    }

    pub fn support_function_f64(&self, u: &[f64]) -> f64 {
        let (c, _) = self.fan.locate_f64(u);
        self.cone_forms[c].iter().zip(u).map(|(m, x)| to_f64(m) * x).sum()
    }

    pub fn polytope(&self) -> Polytope {
        let hrep = self
            .fan
            .rays
            .iter()
            .zip(&self.ray_values)
            .map(|(r, a)| Halfspace::new(ints_to_rat(r), a.clone()))
            .collect();
        Polytope::from_hrep(self.rank(), hrep).expect("complete fan gives a bounded polytope")
    }

    fn wall_slacks(&self) -> impl Iterator<Item = Rat> + '_ {
        self.fan.max_cones.iter().enumerate().flat_map(move |(c, cone)| {
            (0..self.fan.rays.len())
                .filter(move |r| !cone.contains(r))
                .map(move |r| dot(&self.cone_forms[c], &ints_to_rat(&self.fan.rays[r])) - &self.ray_values[r])
        })
    }

    pub fn is_nef(&self) -> bool {
        self.wall_slacks().all(|s| !s.is_negative())
    }

    pub fn is_ample(&self) -> bool {
        if !self.wall_slacks().all(|s| s.is_positive()) {
            return false;
        }
        let f = &self.cone_forms;
        (0..f.len()).all(|i| (i + 1..f.len()).all(|j| f[i] != f[j]))
    }

    pub fn is_big(&self) -> bool {
        self.polytope().is_full_dimensional()
    }

    /// Top self-intersection `n!·vol(Δ)`.
    pub fn degree(&self) -> Result<Rat> {
        if !self.is_nef() {
            return Err(Error::NotNef);
        }
        let fact: i64 = (1..=self.rank() as i64).product();
        Ok(self.polytope().volume() * int(fact))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.fan != other.fan {
            return Err(Error::DivisorMismatch);
        }
        let vals = self.ray_values.iter().zip(&other.ray_values).map(|(a, b)| a + b).collect();
        Self::new(self.fan.clone(), vals)
    }

    pub fn scale(&self, k: &Rat) -> Self {
        let vals = self.ray_values.iter().map(|a| a * k).collect();
        Self::new(self.fan.clone(), vals).expect("same fan")
    }

    pub fn is_zero(&self) -> bool {
        self.ray_values.iter().all(Zero::is_zero)
    }
}
