use crate::geom::{Aabb, Vec3};

/// Tolerance on projection-interval separation (relative to unit axes).
pub const SAT_EPS: f64 = 1e-9;

/// Closed triangle vs closed box overlap by the separating axis theorem.
///
/// Tests the 3 box axes, the triangle normal and the 9 edge-axis cross
/// products. Axes that vanish (degenerate triangles) never separate, which
/// reduces the test to the segment or point case automatically.
pub fn triangle_box_overlap(tri: &[Vec3; 3], bx: &Aabb) -> bool {
    let c = bx.center();
    let h = bx.half_extent();
    let v = [tri[0] - c, tri[1] - c, tri[2] - c];

    for a in 0..3 {
        let lo = v[0][a].min(v[1][a]).min(v[2][a]);
        let hi = v[0][a].max(v[1][a]).max(v[2][a]);
        if lo > h[a] + SAT_EPS || hi < -h[a] - SAT_EPS {
            return false;
        }
    }

    let edges = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    if separated(&edges[0].cross(&edges[1]), &v, &h) {
        return false;
    }
    for e in &edges {
        for a in 0..3 {
            let mut unit = Vec3::zeros();
            unit[a] = 1.0;
            if separated(&e.cross(&unit), &v, &h) {
                return false;
            }
        }
    }
    true
}

fn separated(axis: &Vec3, v: &[Vec3; 3], h: &Vec3) -> bool {
    let len = axis.norm();
    if len == 0.0 {
        return false;
    }
    let p = [axis.dot(&v[0]), axis.dot(&v[1]), axis.dot(&v[2])];
    let r = h.x * axis.x.abs() + h.y * axis.y.abs() + h.z * axis.z.abs();
    let lo = p[0].min(p[1]).min(p[2]);
    let hi = p[0].max(p[1]).max(p[2]);
    let eps = SAT_EPS * len;
    lo > r + eps || hi < -r - eps
}
