use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};

pub const MIN_RESOLUTION: u32 = 2;
pub const MAX_RESOLUTION: u32 = 4096;

/// Integer coordinates of a primal voxel, `0 <= i, j, k < R`.
///
/// The derived ordering is lexicographic in `(i, j, k)`, which matches the
/// linearized index `i R^2 + j R + k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VoxelIndex {
    pub i: u32,
    pub j: u32,
    pub k: u32,
}

impl VoxelIndex {
    pub fn new(i: u32, j: u32, k: u32) -> Self {
        VoxelIndex { i, j, k }
    }

    pub fn get(&self, axis: usize) -> u32 {
        match axis {
            0 => self.i,
            1 => self.j,
            _ => self.k,
        }
    }

    pub fn with(mut self, axis: usize, value: u32) -> Self {
        match axis {
            0 => self.i = value,
            1 => self.j = value,
            _ => self.k = value,
        }
        self
    }

    pub fn as_array(&self) -> [u32; 3] {
        [self.i, self.j, self.k]
    }

    pub fn from_array(a: [u32; 3]) -> Self {
        VoxelIndex::new(a[0], a[1], a[2])
    }
}

/// Uniform `R^3` lattice over `[-1, 1]^3`, cell size `h = 2 / R`.
///
/// Dual cells are indexed by lattice corners `(a, b, c)`, `0 <= a, b, c <= R`:
/// the dual cell of a corner is the cube of side `h` centered on it, so the
/// dual lattice is the primal one shifted by `h / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoxelGrid {
    resolution: u32,
}

impl VoxelGrid {
    pub fn new(resolution: u32) -> Result<Self> {
        if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&resolution) {
            return Err(Error::InvalidResolution(resolution));
        }
        Ok(VoxelGrid { resolution })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn cell_size(&self) -> f64 {
        2.0 / self.resolution as f64
    }

    /// World coordinate of lattice plane `index` along any axis.
    pub fn plane(&self, index: i64) -> f64 {
        -1.0 + index as f64 * self.cell_size()
    }

    /// World coordinate of the dual-cell boundary halfway between planes
    /// `index` and `index + 1`.
    pub fn half_plane(&self, index: i64) -> f64 {
        -1.0 + (index as f64 + 0.5) * self.cell_size()
    }

    pub fn voxel_box(&self, v: VoxelIndex) -> Aabb {
        let [i, j, k] = v.as_array().map(|x| x as i64);
        Aabb::new(
            Vec3::new(self.plane(i), self.plane(j), self.plane(k)),
            Vec3::new(self.plane(i + 1), self.plane(j + 1), self.plane(k + 1)),
        )
    }

    pub fn voxel_center(&self, v: VoxelIndex) -> Vec3 {
        let [i, j, k] = v.as_array().map(|x| x as i64);
        Vec3::new(self.half_plane(i), self.half_plane(j), self.half_plane(k))
    }

    pub fn corner_position(&self, c: VoxelIndex) -> Vec3 {
        let [a, b, d] = c.as_array().map(|x| x as i64);
        Vec3::new(self.plane(a), self.plane(b), self.plane(d))
    }

    /// Dual cell centered on lattice corner `c`.
    pub fn dual_box(&self, c: VoxelIndex) -> Aabb {
        let [a, b, d] = c.as_array().map(|x| x as i64);
        Aabb::new(
            Vec3::new(self.half_plane(a - 1), self.half_plane(b - 1), self.half_plane(d - 1)),
            Vec3::new(self.half_plane(a), self.half_plane(b), self.half_plane(d)),
        )
    }

    pub fn contains_voxel(&self, v: VoxelIndex) -> bool {
        v.as_array().iter().all(|&x| x < self.resolution)
    }

    pub fn linear(&self, v: VoxelIndex) -> u64 {
        let r = self.resolution as u64;
        (v.i as u64 * r + v.j as u64) * r + v.k as u64
    }

    pub fn from_linear(&self, index: u64) -> VoxelIndex {
        let r = self.resolution as u64;
        VoxelIndex::new((index / (r * r)) as u32, ((index / r) % r) as u32, (index % r) as u32)
    }

    pub fn corner_linear(&self, c: VoxelIndex) -> u64 {
        let r = self.resolution as u64 + 1;
        (c.i as u64 * r + c.j as u64) * r + c.k as u64
    }

    pub fn corner_from_linear(&self, index: u64) -> VoxelIndex {
        let r = self.resolution as u64 + 1;
        VoxelIndex::new((index / (r * r)) as u32, ((index / r) % r) as u32, (index % r) as u32)
    }

    /// Neighbor of `v` one step along `axis` in direction `sign`, if inside.
    pub fn neighbor(&self, v: VoxelIndex, axis: usize, positive: bool) -> Option<VoxelIndex> {
        let x = v.get(axis);
        if positive {
            (x + 1 < self.resolution).then(|| v.with(axis, x + 1))
        } else {
            (x > 0).then(|| v.with(axis, x - 1))
        }
    }

    /// Voxel-index range touched by `[lo, hi]` along one axis, widened by
    /// `eps` so boundary contacts include both adjacent cells.
    pub fn index_range(&self, lo: f64, hi: f64, eps: f64) -> (u32, u32) {
        let h = self.cell_size();
        let r = self.resolution as i64;
        let a = (((lo + 1.0 - eps) / h).floor() as i64).clamp(0, r - 1);
        let b = (((hi + 1.0 + eps) / h).floor() as i64).clamp(0, r - 1);
        (a as u32, b as u32)
    }

    /// Maps `p` into coordinates local to `cell`, scaled so the cell is `[0,1]^3`.
    pub fn to_local(&self, cell: &Aabb, p: &Vec3) -> Vec3 {
        (p - cell.min) / self.cell_size()
    }

    pub fn from_local(&self, cell: &Aabb, local: &Vec3) -> Vec3 {
        cell.min + local * self.cell_size()
    }
}

/// Offset of dual slot `d` (bit `d = z + 2y + 4x`) from a voxel's min corner.
pub fn dual_slot_offset(d: usize) -> [u32; 3] {
    [((d >> 2) & 1) as u32, ((d >> 1) & 1) as u32, (d & 1) as u32]
}

pub fn dual_slot_of_offset(o: [u32; 3]) -> usize {
    ((o[0] << 2) | (o[1] << 1) | o[2]) as usize
}
