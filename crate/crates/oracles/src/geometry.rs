use toric_core::rational::{ceil_i64, floor_i64, int};
use toric_core::Polytope;

fn cross(o: &[i64; 2], a: &[i64; 2], b: &[i64; 2]) -> i64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Vertices of the convex hull of integer points in the plane, counterclockwise
/// (monotone chain, exact integer orientation tests).
pub fn convex_hull_2d(points: &[[i64; 2]]) -> Vec<[i64; 2]> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[i64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[i64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Area of a polygon given by its vertices in cyclic order.
pub fn shoelace_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    0.5 * twice.abs()
}

/// Number of lattice points of `k·P` by scanning its bounding box with exact membership tests.
pub fn brute_lattice_count(poly: &Polytope, k: u32) -> usize {
    let n = poly.dim();
    let kk = int(k as i64);
    let verts = poly.vertices();
    if verts.is_empty() {
        return 0;
    }
    let lo: Vec<i64> = (0..n).map(|d| verts.iter().map(|v| floor_i64(&(&v[d] * &kk))).min().unwrap()).collect();
    let hi: Vec<i64> = (0..n).map(|d| verts.iter().map(|v| ceil_i64(&(&v[d] * &kk))).max().unwrap()).collect();
    let scaled = poly.scale(&kk).expect("nonnegative dilation");
    let mut count = 0;
    let mut cur = lo.clone();
    loop {
        let p: Vec<_> = cur.iter().map(|&c| int(c)).collect();
        if scaled.contains(&p) {
            count += 1;
        }
        let mut d = 0;
        loop {
            if d == n {
                return count;
            }
            cur[d] += 1;
            if cur[d] <= hi[d] {
                break;
            }
            cur[d] = lo[d];
            d += 1;
        }
    }
}
