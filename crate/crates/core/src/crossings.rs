//! Semi-axis crossings: Möller–Trumbore segment tests from each voxel center
//! toward its six face centers, encoded as signs of the anchor normal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh_io::TriangleMesh;
use crate::voxelizer::{VoxelGrid, VoxelIndex};

/// Relative tolerance on the determinant and barycentric bounds.
pub const SEGMENT_EPS: f64 = 1e-9;
pub const DEFAULT_TAU: f64 = 1e-4;

/// Semi-axis order: `+x, -x, +y, -y, +z, -z`; entry `e` is axis `e / 2`,
/// negative when `e` is odd.
pub const SEMI_AXES: [(usize, bool); 6] = [(0, false), (0, true), (1, false), (1, true), (2, false), (2, true)];

pub fn semi_axis_index(axis: usize, negative: bool) -> usize {
    2 * axis + negative as usize
}

pub fn semi_axis_vector(e: usize) -> Vec3 {
    let (axis, neg) = SEMI_AXES[e];
    let mut v = Vec3::zeros();
    v[axis] = if neg { -1.0 } else { 1.0 };
    v
}

/// Six orientation entries in `{-1, 0, 1}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SemiAxisCode(pub [i8; 6]);

impl SemiAxisCode {
    pub fn get(&self, e: usize) -> i8 {
        self.0[e]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Two bits per entry, entry `e` at bits `2e..2e+2`: `00 = 0`, `01 = +1`, `10 = -1`.
    pub fn pack(&self) -> u16 {
        self.0.iter().enumerate().fold(0u16, |acc, (e, &c)| {
            let bits = match c {
                1 => 0b01,
                -1 => 0b10,
                _ => 0b00,
            };
            acc | (bits << (2 * e))
        })
    }

    pub fn unpack(bits: u16) -> Result<Self> {
        if bits >> 12 != 0 {
            return Err(Error::MalformedPayload(format!("semi-axis code {bits:#06x} has stray high bits")));
        }
        let mut code = [0i8; 6];
        for (e, c) in code.iter_mut().enumerate() {
            *c = match (bits >> (2 * e)) & 0b11 {
                0b00 => 0,
                0b01 => 1,
                0b10 => -1,
                _ => {
                    return Err(Error::MalformedPayload(format!(
                        "semi-axis code {bits:#06x} has invalid entry {e}"
                    )))
                }
            };
        }
        Ok(SemiAxisCode(code))
    }
}

/// Smallest parameter `t in [0, 1]` where segment `p0 p1` meets the closed
/// triangle, or `None`. Segments (near-)parallel to the triangle's plane
/// never hit.
pub fn segment_triangle_intersect(p0: &Vec3, p1: &Vec3, tri: &[Vec3; 3]) -> Option<f64> {
    let d = p1 - p0;
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let pvec = d.cross(&e2);
    let det = e1.dot(&pvec);
    let scale = d.norm() * e1.cross(&e2).norm();
    if !(det.abs() > SEGMENT_EPS * scale) {
        return None;
    }
    let inv = 1.0 / det;
    let s = p0 - tri[0];
    let u = s.dot(&pvec) * inv;
    if !(-SEGMENT_EPS..=1.0 + SEGMENT_EPS).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = d.dot(&q) * inv;
    if v < -SEGMENT_EPS || u + v > 1.0 + SEGMENT_EPS {
        return None;
    }
    let t = e2.dot(&q) * inv;
    if !(-SEGMENT_EPS..=1.0 + SEGMENT_EPS).contains(&t) {
        return None;
    }
    Some(t.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Crossings {
    pub code: SemiAxisCode,
    /// Distinct crossing parameters found per semi-axis.
    pub counts: [u32; 6],
}

/// Crossings of `faces` along the six semi-axes of `voxel`, oriented by the
/// anchor normal.
///
/// A surface through the voxel center is credited to the positive semi-axes
/// only (negative semi-axes require `t > eps`).
pub fn semi_axis_code(
    voxel: VoxelIndex,
    faces: &[u32],
    normal: &Vec3,
    grid: &VoxelGrid,
    mesh: &TriangleMesh,
    tau: f64,
) -> Crossings {
    let center = grid.voxel_center(voxel);
    let half = 0.5 * grid.cell_size();
    let tris: Vec<[Vec3; 3]> = faces.iter().map(|&f| mesh.triangle(f as usize)).collect();
    let mut out = Crossings::default();
    for (e, &(_, negative)) in SEMI_AXES.iter().enumerate() {
        let dir = semi_axis_vector(e);
        let end = center + dir * half;
        let mut hits: Vec<f64> = tris
            .iter()
            .filter_map(|tri| segment_triangle_intersect(&center, &end, tri))
            .filter(|&t| !negative || t > SEGMENT_EPS)
            .collect();
        if hits.is_empty() {
            continue;
        }
        hits.sort_by(f64::total_cmp);
        hits.dedup_by(|a, b| (*a - *b).abs() <= SEGMENT_EPS);
        out.counts[e] = hits.len() as u32;
        let d = normal.dot(&dir);
        out.code.0[e] = if d.abs() < tau { 0 } else { d.signum() as i8 };
    }
    out
}
