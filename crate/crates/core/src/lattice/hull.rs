//! Exact facet enumeration for small point sets, aware of the affine hull.

use num_traits::{One, Signed, Zero};

use crate::linalg::{dot, nullspace, rank, sub};
use crate::rational::{primitive_integer, Rat};

/// Inequality `<x, normal> >= offset`.
pub(crate) type Ineq = (Vec<Rat>, Rat);

pub(crate) struct Hull {
    /// Each equality `<x, e> = c` is stored once.
    pub equalities: Vec<Ineq>,
    pub facets: Vec<Ineq>,
}

fn primitive(v: &[Rat]) -> Vec<Rat> {
    primitive_integer(v).into_iter().map(Rat::from_integer).collect()
}

pub(crate) fn affine_dim(points: &[Vec<Rat>]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let diffs: Vec<Vec<Rat>> = points[1..].iter().map(|p| sub(p, &points[0])).collect();
    rank(&diffs)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    combinations(n, k)
}

/// Facets of conv(points) inside its affine hull, with primitive integer normals
/// orthogonal to the equality normals. Output is sorted and deduplicated.
pub(crate) fn hull(points: &[Vec<Rat>]) -> Hull {
    let n = points[0].len();
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    let d = affine_dim(&pts);
    let diffs: Vec<Vec<Rat>> = pts[1..].iter().map(|p| sub(p, &pts[0])).collect();
    let eq_normals: Vec<Vec<Rat>> = if diffs.is_empty() {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect())
            .collect()
    } else {
        nullspace(&diffs, n).iter().map(|v| primitive(v)).collect()
    };
    let equalities: Vec<Ineq> = eq_normals
        .iter()
        .map(|e| (e.clone(), dot(e, &pts[0])))
        .collect();

    let mut facets: Vec<Ineq> = Vec::new();
    if d >= 1 {
        for subset in combinations(pts.len(), d) {
            let base = &pts[subset[0]];
            let mut rows: Vec<Vec<Rat>> = subset[1..].iter().map(|&i| sub(&pts[i], base)).collect();
            if rank(&rows) != d - 1 {
                continue;
            }
            rows.extend(eq_normals.iter().cloned());
            let ns = nullspace(&rows, n);
            if ns.len() != 1 {
                continue;
            }
            let w = primitive(&ns[0]);
            let c = dot(&w, base);
            let signs: Vec<Rat> = pts.iter().map(|p| dot(&w, p) - &c).collect();
            let any_pos = signs.iter().any(|s| s.is_positive());
            let any_neg = signs.iter().any(|s| s.is_negative());
            let facet = match (any_pos, any_neg) {
                (true, false) => (w, c),
                (false, true) => (w.iter().map(|x| -x).collect(), -c),
                _ => continue,
            };
            facets.push(facet);
        }
    }
    facets.sort();
    facets.dedup();
    Hull {
        equalities,
        facets,
    }
}
