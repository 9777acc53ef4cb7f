use serde::{Deserialize, Serialize};

use crate::crossings::{SemiAxisCode, DEFAULT_TAU};
use crate::anchorfit::{DEFAULT_LAMBDA, DEFAULT_MU};
use crate::geom::{Aabb, Vec3};
use crate::mesh_io::NormalizationTransform;
use crate::voxelizer::{dual_slot_offset, VoxelGrid, VoxelIndex};

pub const FORMAT_VERSION: u16 = 1;

/// Provenance flag: the encoding was produced by decode, transform and
/// re-encode rather than a token-native edit.
pub const FLAG_REENCODED: u8 = 1;

/// Cell-local anchor: position in `[0,1]^3` relative to its cell, unit normal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnchorRecord {
    pub position: [f32; 3],
    pub normal: [f32; 3],
}

impl AnchorRecord {
    pub fn new(position: Vec3, normal: Vec3) -> Self {
        AnchorRecord {
            position: position.map(|x| x as f32).into(),
            normal: normal.map(|x| x as f32).into(),
        }
    }

    pub fn local(&self) -> Vec3 {
        Vec3::new(self.position[0] as f64, self.position[1] as f64, self.position[2] as f64)
    }

    pub fn normal(&self) -> Vec3 {
        Vec3::new(self.normal[0] as f64, self.normal[1] as f64, self.normal[2] as f64)
    }

    pub fn bits(&self) -> [u32; 6] {
        let p = self.position.map(f32::to_bits);
        let n = self.normal.map(f32::to_bits);
        [p[0], p[1], p[2], n[0], n[1], n[2]]
    }
}

/// One active voxel.
///
/// Dual slot `d` belongs to the lattice corner at offset `(d >> 2, d >> 1, d) & 1`
/// from the voxel's minimum corner; its position is relative to that
/// corner's dual cell. Slots whose mask bit is clear hold the zero record.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FctToken {
    pub voxel: VoxelIndex,
    pub primal: AnchorRecord,
    pub mask: u8,
    pub duals: [AnchorRecord; 8],
    pub code: SemiAxisCode,
    pub attributes: Vec<f32>,
}

impl FctToken {
    pub fn has_dual(&self, d: usize) -> bool {
        self.mask & (1 << d) != 0
    }

    pub fn dual(&self, d: usize) -> Option<&AnchorRecord> {
        self.has_dual(d).then(|| &self.duals[d])
    }

    /// Lattice corner of dual slot `d`.
    pub fn dual_corner(&self, d: usize) -> VoxelIndex {
        let o = dual_slot_offset(d);
        VoxelIndex::new(self.voxel.i + o[0], self.voxel.j + o[1], self.voxel.k + o[2])
    }

    pub fn primal_position(&self, grid: &VoxelGrid) -> Vec3 {
        grid.from_local(&grid.voxel_box(self.voxel), &self.primal.local())
    }

    pub fn dual_position(&self, grid: &VoxelGrid, d: usize) -> Option<Vec3> {
        let bx: Aabb = grid.dual_box(self.dual_corner(d));
        self.dual(d).map(|r| grid.from_local(&bx, &r.local()))
    }

    /// Field-for-field equality including float bit patterns.
    pub fn bit_eq(&self, other: &FctToken) -> bool {
        self.voxel == other.voxel
            && self.primal.bits() == other.primal.bits()
            && self.mask == other.mask
            && self.duals.iter().zip(&other.duals).all(|(a, b)| a.bits() == b.bits())
            && self.code == other.code
            && self.attributes.len() == other.attributes.len()
            && self
                .attributes
                .iter()
                .zip(&other.attributes)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Encoder parameters as persisted with the tokens.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingParams {
    pub lambda: f32,
    pub mu: f32,
    pub tau: f32,
}

impl Default for EncodingParams {
    fn default() -> Self {
        EncodingParams {
            lambda: DEFAULT_LAMBDA as f32,
            mu: DEFAULT_MU as f32,
            tau: DEFAULT_TAU as f32,
        }
    }
}

/// A full token set over one grid, sorted by linear voxel index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FctEncoding {
    pub grid: VoxelGrid,
    pub version: u16,
    pub params: EncodingParams,
    pub flags: u8,
    /// Maps the original mesh into the grid domain.
    pub normalization: NormalizationTransform,
    /// Attribute channel names, one `f32` per channel per token.
    pub channels: Vec<String>,
    pub tokens: Vec<FctToken>,
}

impl FctEncoding {
    pub fn empty(grid: VoxelGrid) -> Self {
        FctEncoding {
            grid,
            version: FORMAT_VERSION,
            params: EncodingParams::default(),
            flags: 0,
            normalization: NormalizationTransform::identity(),
            channels: Vec::new(),
            tokens: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_reencoded(&self) -> bool {
        self.flags & FLAG_REENCODED != 0
    }

    pub fn linear_indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.tokens.iter().map(|t| self.grid.linear(t.voxel))
    }

    /// Position of the token at voxel `v`, if present.
    pub fn find(&self, v: VoxelIndex) -> Option<usize> {
        self.tokens.binary_search_by(|t| t.voxel.cmp(&v)).ok()
    }

    /// Checks canonical order, index ranges, masks and attribute widths.
    pub fn check(&self) -> Result<(), String> {
        for w in self.tokens.windows(2) {
            if w[0].voxel >= w[1].voxel {
                return Err(format!("tokens not strictly increasing at {:?}", w[1].voxel));
            }
        }
        for t in &self.tokens {
            if !self.grid.contains_voxel(t.voxel) {
                return Err(format!("voxel {:?} outside the grid", t.voxel));
            }
            if t.attributes.len() != self.channels.len() {
                return Err(format!(
                    "token {:?} has {} attributes, expected {}",
                    t.voxel,
                    t.attributes.len(),
                    self.channels.len()
                ));
            }
            for d in 0..8 {
                if !t.has_dual(d) && t.duals[d] != AnchorRecord::default() {
                    return Err(format!("token {:?} slot {d} is masked but not zeroed", t.voxel));
                }
            }
        }
        Ok(())
    }

    /// Sorts tokens into canonical order.
    pub fn canonicalize(&mut self) {
        self.tokens.sort_by(|a, b| a.voxel.cmp(&b.voxel));
    }

    pub fn bit_eq(&self, other: &FctEncoding) -> bool {
        self.grid == other.grid
            && self.version == other.version
            && self.params.lambda.to_bits() == other.params.lambda.to_bits()
            && self.params.mu.to_bits() == other.params.mu.to_bits()
            && self.params.tau.to_bits() == other.params.tau.to_bits()
            && self.flags == other.flags
            && self.normalization.scale.to_bits() == other.normalization.scale.to_bits()
            && self.normalization.margin.to_bits() == other.normalization.margin.to_bits()
            && (0..3).all(|a| {
                self.normalization.translation[a].to_bits() == other.normalization.translation[a].to_bits()
            })
            && self.channels == other.channels
            && self.tokens.len() == other.tokens.len()
            && self.tokens.iter().zip(&other.tokens).all(|(a, b)| a.bit_eq(b))
    }
}
