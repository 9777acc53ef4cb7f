//! Active voxel detection and per-cell surface samples.
//!
//! Candidate (voxel, face) pairs are enumerated triangle-major: every face is
//! rasterized over the columns of its bounding box (narrowed by the
//! triangle's plane along its dominant normal axis) and each candidate is
//! confirmed with the separating axis test on closed boxes. A triangle lying
//! exactly on a shared voxel face therefore activates both voxels.

mod clip;
mod grid;
mod sat;

use std::collections::BTreeMap;

use rayon::prelude::*;

pub use clip::{
    clip_polygon, clip_triangle_to_box, fan_area_centroid, polygon_centroid, ClippedPolygon, Polygon,
    SurfaceSample, EMPTY_AREA_REL, MAX_POLYGON,
};
pub use grid::{dual_slot_of_offset, dual_slot_offset, VoxelGrid, VoxelIndex, MAX_RESOLUTION, MIN_RESOLUTION};
pub use sat::{triangle_box_overlap, SAT_EPS};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};
use crate::mesh_io::TriangleMesh;

/// Active voxels with their overlapping faces, in compressed row form and
/// sorted by linear voxel index.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ActiveVoxels {
    voxels: Vec<u64>,
    offsets: Vec<usize>,
    faces: Vec<u32>,
}

impl ActiveVoxels {
    fn from_sorted_pairs(pairs: &[(u64, u32)]) -> Self {
        let mut out = ActiveVoxels {
            voxels: Vec::new(),
            offsets: vec![0],
            faces: Vec::with_capacity(pairs.len()),
        };
        for &(v, f) in pairs {
            if out.voxels.last() != Some(&v) {
                if !out.voxels.is_empty() {
                    out.offsets.push(out.faces.len());
                }
                out.voxels.push(v);
            }
            out.faces.push(f);
        }
        if !out.voxels.is_empty() {
            out.offsets.push(out.faces.len());
        }
        out
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    /// Sorted linear indices of the active voxels.
    pub fn linear_indices(&self) -> &[u64] {
        &self.voxels
    }

    pub fn faces_at(&self, slot: usize) -> &[u32] {
        &self.faces[self.offsets[slot]..self.offsets[slot + 1]]
    }

    pub fn position(&self, linear: u64) -> Option<usize> {
        self.voxels.binary_search(&linear).ok()
    }

    pub fn faces_of(&self, linear: u64) -> Option<&[u32]> {
        self.position(linear).map(|s| self.faces_at(s))
    }

    pub fn pair_count(&self) -> usize {
        self.faces.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[u32])> + '_ {
        (0..self.len()).map(move |s| (self.voxels[s], self.faces_at(s)))
    }

    pub fn to_map(&self, grid: &VoxelGrid) -> BTreeMap<VoxelIndex, Vec<u32>> {
        self.iter().map(|(v, f)| (grid.from_linear(v), f.to_vec())).collect()
    }
}

/// Rejects meshes with any vertex outside the closed domain `[-1, 1]^3`.
pub fn check_domain(mesh: &TriangleMesh) -> Result<()> {
    match mesh.vertices.iter().position(|v| v.iter().any(|c| !(c.abs() <= 1.0))) {
        Some(index) => {
            let v = mesh.vertices[index];
            Err(Error::OutOfDomain {
                index,
                x: v.x,
                y: v.y,
                z: v.z,
            })
        }
        None => Ok(()),
    }
}

/// Voxels overlapped (closed-box SAT) by at least one face of `mesh`.
pub fn find_active_voxels(mesh: &TriangleMesh, grid: &VoxelGrid) -> Result<ActiveVoxels> {
    mesh.validate()?;
    check_domain(mesh)?;
    let mut pairs: Vec<(u64, u32)> = (0..mesh.faces.len())
        .into_par_iter()
        .flat_map_iter(|f| {
            let tri = mesh.triangle(f);
            face_voxels(&tri, grid).into_iter().map(move |v| (v, f as u32))
        })
        .collect();
    pairs.par_sort_unstable();
    Ok(ActiveVoxels::from_sorted_pairs(&pairs))
}

/// Linear indices of all voxels the triangle overlaps.
pub fn face_voxels(tri: &[Vec3; 3], grid: &VoxelGrid) -> Vec<u64> {
    let eps = 4.0 * SAT_EPS;
    let bounds = Aabb::from_points(tri.iter());
    let range: [(u32, u32); 3] =
        std::array::from_fn(|a| grid.index_range(bounds.min[a], bounds.max[a], eps));
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let dom = n.iamax();
    let (u, w) = ((dom + 1) % 3, (dom + 2) % 3);
    let plane_ok = n[dom].abs() > 1e-3 * n.norm() && n.norm() > 0.0;
    let mut out = Vec::new();
    for a in range[u].0..=range[u].1 {
        for b in range[w].0..=range[w].1 {
            let (lo, hi) = if plane_ok {
                column_span(tri, &n, dom, u, w, a, b, grid, &bounds, eps)
            } else {
                range[dom]
            };
            if lo > hi {
                continue;
            }
            for c in lo..=hi {
                let mut idx = [0u32; 3];
                idx[u] = a;
                idx[w] = b;
                idx[dom] = c;
                let v = VoxelIndex::from_array(idx);
                if triangle_box_overlap(tri, &grid.voxel_box(v)) {
                    out.push(grid.linear(v));
                }
            }
        }
    }
    out
}

/// Index range along `dom` where the triangle's plane can meet column `(a, b)`.
#[allow(clippy::too_many_arguments)]
fn column_span(
    tri: &[Vec3; 3],
    n: &Vec3,
    dom: usize,
    u: usize,
    w: usize,
    a: u32,
    b: u32,
    grid: &VoxelGrid,
    bounds: &Aabb,
    eps: f64,
) -> (u32, u32) {
    let d = n.dot(&tri[0]);
    let us = [grid.plane(a as i64), grid.plane(a as i64 + 1)];
    let ws = [grid.plane(b as i64), grid.plane(b as i64 + 1)];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for pu in us {
        for pw in ws {
            let x = (d - n[u] * pu - n[w] * pw) / n[dom];
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    let slack = eps + 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    let lo = lo.max(bounds.min[dom]);
    let hi = hi.min(bounds.max[dom]);
    if lo > hi + 2.0 * slack {
        return (1, 0);
    }
    grid.index_range(lo, hi, slack)
}

/// Surface samples of `faces` clipped to `bx`; degenerate faces and empty
/// intersections contribute nothing.
pub fn samples_in_box(
    mesh: &TriangleMesh,
    normals: &[Option<Vec3>],
    faces: &[u32],
    bx: &Aabb,
    cell: u64,
) -> Vec<SurfaceSample> {
    faces
        .iter()
        .filter_map(|&f| {
            let normal = normals[f as usize]?;
            let poly = clip_triangle_to_box(&mesh.triangle(f as usize), bx, f, cell)?;
            polygon_centroid(&poly, normal)
        })
        .collect()
}

/// Total clipped area over all active voxels, counting a polygon that lies
/// on a shared voxel face only in the lower-index voxel.
pub fn conserved_area(mesh: &TriangleMesh, grid: &VoxelGrid, active: &ActiveVoxels) -> f64 {
    let normals = mesh.face_normals();
    let parts: Vec<f64> = (0..active.len())
        .into_par_iter()
        .map(|slot| {
            let v = grid.from_linear(active.linear_indices()[slot]);
            let bx = grid.voxel_box(v);
            active
                .faces_at(slot)
                .iter()
                .filter(|&&f| normals[f as usize].is_some())
                .map(|&f| {
                    let poly = clip_polygon(&mesh.triangle(f as usize), &bx);
                    let on_lower_face = (0..3).any(|a| {
                        v.get(a) > 0 && poly.iter().all(|q| q[a] == bx.min[a])
                    });
                    if on_lower_face {
                        0.0
                    } else {
                        fan_area_centroid(&poly).0
                    }
                })
                .sum()
        })
        .collect();
    parts.iter().sum()
}
