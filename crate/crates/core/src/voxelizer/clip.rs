use arrayvec::ArrayVec;

use crate::geom::{Aabb, Vec3};

/// Capacity of a clipped polygon. Convex clipping of a triangle by six planes
/// yields at most 9 vertices; the headroom absorbs near-degenerate rounding.
pub const MAX_POLYGON: usize = 16;

pub type Polygon = ArrayVec<Vec3, MAX_POLYGON>;

/// Relative area below which a clipped polygon counts as empty, in units of
/// the clipping box's face area.
pub const EMPTY_AREA_REL: f64 = 1e-12;

/// Ordered vertices of `triangle ∩ box` with the face and cell they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct ClippedPolygon {
    pub vertices: Polygon,
    pub face: u32,
    pub cell: u64,
}

/// One reliable geometric sample: centroid of a clipped polygon, its source
/// triangle normal and the polygon area.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceSample {
    pub centroid: Vec3,
    pub normal: Vec3,
    pub weight: f64,
    pub face: u32,
}

/// Sutherland–Hodgman clipping of `tri` against the closed box, planes in
/// order -x, +x, -y, +y, -z, +z. Returns the raw polygon (possibly with
/// fewer than 3 vertices, or zero area).
pub fn clip_polygon(tri: &[Vec3; 3], bx: &Aabb) -> Polygon {
    let mut poly: Polygon = tri.iter().copied().collect();
    for axis in 0..3 {
        poly = clip_plane(&poly, axis, bx.min[axis], false);
        if poly.is_empty() {
            return poly;
        }
        poly = clip_plane(&poly, axis, bx.max[axis], true);
        if poly.is_empty() {
            return poly;
        }
    }
    poly
}

/// Clips against `x[axis] >= bound` (`upper == false`) or `x[axis] <= bound`.
fn clip_plane(poly: &Polygon, axis: usize, bound: f64, upper: bool) -> Polygon {
    let inside = |p: &Vec3| if upper { p[axis] <= bound } else { p[axis] >= bound };
    let mut out = Polygon::new();
    let n = poly.len();
    if n == 0 {
        return out;
    }
    for idx in 0..n {
        let s = &poly[(idx + n - 1) % n];
        let e = &poly[idx];
        let (s_in, e_in) = (inside(s), inside(e));
        if s_in != e_in {
            push(&mut out, intersect(s, e, axis, bound));
        }
        if e_in {
            push(&mut out, *e);
        }
    }
    out
}

fn push(out: &mut Polygon, p: Vec3) {
    // Capacity is only reachable on pathological rounding; dropping the
    // vertex then keeps the polygon inside the box.
    let _ = out.try_push(p);
}

/// Point where segment `s e` meets the plane `x[axis] = bound`. The endpoints
/// are put in a canonical order first so the same edge always produces the
/// same point, and the clipped coordinate is set exactly to the bound.
fn intersect(s: &Vec3, e: &Vec3, axis: usize, bound: f64) -> Vec3 {
    let (a, b) = if (s[axis], s.x, s.y, s.z) <= (e[axis], e.x, e.y, e.z) {
        (s, e)
    } else {
        (e, s)
    };
    let t = (bound - a[axis]) / (b[axis] - a[axis]);
    let mut p = a + (b - a) * t;
    p[axis] = bound;
    p
}

/// Fan area `sum A_k` and centroid `(1 / 3A) sum A_k (q1 + qk + qk+1)`.
pub fn fan_area_centroid(poly: &[Vec3]) -> (f64, Vec3) {
    if poly.len() < 3 {
        return (0.0, Vec3::zeros());
    }
    let q1 = poly[0];
    let mut area = 0.0;
    let mut acc = Vec3::zeros();
    for k in 1..poly.len() - 1 {
        let ak = 0.5 * (poly[k] - q1).cross(&(poly[k + 1] - q1)).norm();
        area += ak;
        acc += (q1 + poly[k] + poly[k + 1]) * ak;
    }
    if area > 0.0 {
        (area, acc / (3.0 * area))
    } else {
        (0.0, Vec3::zeros())
    }
}

/// Clips `tri` to `bx`, returning `None` when the intersection is empty or
/// has (relatively) zero area.
pub fn clip_triangle_to_box(tri: &[Vec3; 3], bx: &Aabb, face: u32, cell: u64) -> Option<ClippedPolygon> {
    let vertices = clip_polygon(tri, bx);
    let (area, _) = fan_area_centroid(&vertices);
    let e = bx.extent();
    let face_area = e.x.max(e.y).max(e.z).powi(2);
    if vertices.len() < 3 || area <= EMPTY_AREA_REL * face_area {
        return None;
    }
    Some(ClippedPolygon { vertices, face, cell })
}

/// Area-weighted centroid sample of a clipped polygon with its source normal.
pub fn polygon_centroid(poly: &ClippedPolygon, normal: Vec3) -> Option<SurfaceSample> {
    let (area, centroid) = fan_area_centroid(&poly.vertices);
    (area > 0.0).then_some(SurfaceSample {
        centroid,
        normal,
        weight: area,
        face: poly.face,
    })
}
