//! Brute-force and independent-formula oracles. Nothing here calls the
//! predicate it checks.

use fct_core::{Aabb, Vec3};

/// Closed segment vs closed box, by slab clipping.
pub fn segment_hits_box(p0: &Vec3, p1: &Vec3, bx: &Aabb) -> bool {
    let d = p1 - p0;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for a in 0..3 {
        if d[a] == 0.0 {
            if p0[a] < bx.min[a] || p0[a] > bx.max[a] {
                return false;
            }
            continue;
        }
        let (mut lo, mut hi) = ((bx.min[a] - p0[a]) / d[a], (bx.max[a] - p0[a]) / d[a]);
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        t0 = t0.max(lo);
        t1 = t1.min(hi);
        if t0 > t1 {
            return false;
        }
    }
    true
}

/// Segment vs triangle by explicit plane intersection and sub-triangle
/// area signs. Coplanar segments report no hit.
pub fn segment_triangle(p0: &Vec3, p1: &Vec3, tri: &[Vec3; 3]) -> Option<(f64, [f64; 3])> {
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let denom = n.dot(&(p1 - p0));
    if denom == 0.0 {
        return None;
    }
    let t = n.dot(&(tri[0] - p0)) / denom;
    if !(0.0..=1.0).contains(&t) {
        return None;
    }
    let q = p0 + (p1 - p0) * t;
    let bary = barycentric(&q, tri, &n)?;
    bary.iter().all(|&b| b >= 0.0).then_some((t, bary))
}

/// Barycentric coordinates of `q` (in the plane) from signed sub-areas.
pub fn barycentric(q: &Vec3, tri: &[Vec3; 3], n: &Vec3) -> Option<[f64; 3]> {
    let nn = n.norm_squared();
    if nn == 0.0 {
        return None;
    }
    let area = |a: &Vec3, b: &Vec3| (b - a).cross(&(q - a)).dot(n) / nn;
    Some([area(&tri[1], &tri[2]), area(&tri[2], &tri[0]), area(&tri[0], &tri[1])])
}

pub fn box_edges(bx: &Aabb) -> Vec<(Vec3, Vec3)> {
    let corner = |i: usize| {
        Vec3::new(
            if i & 4 != 0 { bx.max.x } else { bx.min.x },
            if i & 2 != 0 { bx.max.y } else { bx.min.y },
            if i & 1 != 0 { bx.max.z } else { bx.min.z },
        )
    };
    let mut out = Vec::new();
    for i in 0..8 {
        for bit in [1, 2, 4] {
            if i & bit == 0 {
                out.push((corner(i), corner(i | bit)));
            }
        }
    }
    out
}

/// Triangle-box overlap: dense barycentric sampling of the triangle, its
/// edges against the box, and the box edges against the triangle.
pub fn triangle_box_oracle(tri: &[Vec3; 3], bx: &Aabb) -> bool {
    const STEPS: usize = 10;
    for i in 0..=STEPS {
        for j in 0..=STEPS - i {
            let (u, v) = (i as f64 / STEPS as f64, j as f64 / STEPS as f64);
            let p = tri[0] + (tri[1] - tri[0]) * u + (tri[2] - tri[0]) * v;
            if bx.contains(&p, 0.0) {
                return true;
            }
        }
    }
    (0..3).any(|k| segment_hits_box(&tri[k], &tri[(k + 1) % 3], bx))
        || box_edges(bx).iter().any(|(a, b)| segment_triangle(a, b, tri).is_some())
}

pub fn grown(bx: &Aabb, by: f64) -> Aabb {
    let d = Vec3::repeat(by);
    Aabb::new(bx.min - d, bx.max + d)
}

/// Vertices of triangle ∩ box: triangle vertices inside, triangle edges
/// crossing box face planes, and box edges piercing the triangle.
pub fn intersection_vertices(tri: &[Vec3; 3], bx: &Aabb) -> Vec<Vec3> {
    let tol = 1e-12;
    let mut pts: Vec<Vec3> = tri.iter().filter(|p| bx.contains(p, tol)).copied().collect();
    for k in 0..3 {
        let (a, b) = (tri[k], tri[(k + 1) % 3]);
        for axis in 0..3 {
            for plane in [bx.min[axis], bx.max[axis]] {
                let (da, db) = (a[axis] - plane, b[axis] - plane);
                if da * db < 0.0 {
                    let t = da / (da - db);
                    let mut p = a + (b - a) * t;
                    p[axis] = plane;
                    if bx.contains(&p, tol) {
                        pts.push(p);
                    }
                }
            }
        }
    }
    for (a, b) in box_edges(bx) {
        if let Some((t, _)) = segment_triangle(&a, &b, tri) {
            pts.push(a + (b - a) * t);
        }
    }
    pts
}

/// Area and centroid of the convex hull of coplanar points, by angular
/// sort in the plane and the 2D shoelace formula.
pub fn planar_hull_area_centroid(pts: &[Vec3], normal: &Vec3) -> Option<(f64, Vec3)> {
    if pts.len() < 3 {
        return None;
    }
    let n = normal.normalize();
    let u = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = (u - n * n.dot(&u)).normalize();
    let w = n.cross(&u);
    let mean = pts.iter().sum::<Vec3>() / pts.len() as f64;
    let mut p2: Vec<(f64, f64)> = pts.iter().map(|p| ((p - mean).dot(&u), (p - mean).dot(&w))).collect();
    p2.sort_by(|a, b| a.1.atan2(a.0).total_cmp(&b.1.atan2(b.0)));
    p2.dedup_by(|a, b| (a.0 - b.0).hypot(a.1 - b.1) < 1e-13);
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for k in 0..p2.len() {
        let (x0, y0) = p2[k];
        let (x1, y1) = p2[(k + 1) % p2.len()];
        let cr = x0 * y1 - x1 * y0;
        a2 += cr;
        cx += (x0 + x1) * cr;
        cy += (y0 + y1) * cr;
    }
    if a2 <= 0.0 {
        return None;
    }
    let (cx, cy) = (cx / (3.0 * a2), cy / (3.0 * a2));
    Some((a2 / 2.0, mean + u * cx + w * cy))
}

/// Radical-inverse low-discrepancy sequence.
pub fn halton(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Centroid of triangle ∩ box from `n` quasi-random uniform triangle
/// samples.
pub fn monte_carlo_centroid(tri: &[Vec3; 3], bx: &Aabb, n: u64) -> Option<Vec3> {
    let mut sum = Vec3::zeros();
    let mut hits = 0usize;
    for i in 1..=n {
        let (r1, r2) = (halton(i, 2), halton(i, 3));
        let s = r1.sqrt();
        let p = tri[0] * (1.0 - s) + tri[1] * (s * (1.0 - r2)) + tri[2] * (s * r2);
        if bx.contains(&p, 0.0) {
            sum += p;
            hits += 1;
        }
    }
    (hits > 0).then(|| sum / hits as f64)
}

/// `n` near-uniform unit vectors on a Fibonacci spiral.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

pub fn angle_deg(a: &Vec3, b: &Vec3) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos().to_degrees()
}
