use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::token::{AnchorRecord, EncodingParams, FctEncoding, FctToken};
use crate::anchorfit::{fit_cell, Anchor, AnchorConfig, DEFAULT_LAMBDA, DEFAULT_MU};
use crate::crossings::{semi_axis_code, semi_axis_index, Crossings, DEFAULT_TAU};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh_io::TriangleMesh;
use crate::voxelizer::{dual_slot_offset, find_active_voxels, samples_in_box, ActiveVoxels, VoxelGrid, VoxelIndex};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    /// Position regularization (cell-local units).
    pub lambda: f64,
    /// Normal regularization.
    pub mu: f64,
    /// Near-parallel cutoff for semi-axis orientation.
    pub tau: f64,
    /// Weight samples by clipped polygon area.
    pub weighted: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            lambda: DEFAULT_LAMBDA,
            mu: DEFAULT_MU,
            tau: DEFAULT_TAU,
            weighted: true,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.tau >= 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidParameter(format!("tau must be in [0, 1), got {}", self.tau)));
        }
        Ok(())
    }

    pub fn anchor(&self) -> AnchorConfig {
        AnchorConfig {
            lambda: self.lambda,
            mu: self.mu,
            weighted: self.weighted,
        }
    }

    pub fn params(&self) -> EncodingParams {
        EncodingParams {
            lambda: self.lambda as f32,
            mu: self.mu as f32,
            tau: self.tau as f32,
        }
    }
}

/// Wall-clock seconds per encoder stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub voxelize: f64,
    pub fit: f64,
    pub crossings: f64,
}

/// Encoder diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodeReport {
    pub faces: usize,
    pub degenerate_faces: usize,
    pub active_voxels: usize,
    pub candidate_pairs: usize,
    /// Active voxels without any positive-area sample.
    pub degenerate_voxels: usize,
    pub dual_cells: usize,
    pub valid_duals: usize,
    pub ambiguous_anchors: usize,
    pub normal_fallbacks: usize,
    /// Semi-axes with more than one distinct crossing.
    pub multi_crossings: usize,
    /// Shared faces where both sides report nonzero, same-sheet, non-opposite codes.
    pub antisymmetry_violations: usize,
    pub timings: StageTimings,
}

struct PrimalFit {
    anchor: Anchor,
    degenerate: bool,
}

/// Encodes a mesh already inside `[-1, 1]^3`.
pub fn encode(mesh: &TriangleMesh, grid: &VoxelGrid, config: &EncoderConfig) -> Result<FctEncoding> {
    encode_with_report(mesh, grid, config).map(|(e, _)| e)
}

pub fn encode_with_report(
    mesh: &TriangleMesh,
    grid: &VoxelGrid,
    config: &EncoderConfig,
) -> Result<(FctEncoding, EncodeReport)> {
    config.validate()?;
    let mut report = EncodeReport {
        faces: mesh.faces.len(),
        degenerate_faces: mesh.degenerate_faces().len(),
        ..Default::default()
    };

    let start = Instant::now();
    let active = find_active_voxels(mesh, grid)?;
    report.timings.voxelize = start.elapsed().as_secs_f64();
    report.active_voxels = active.len();
    report.candidate_pairs = active.pair_count();

    let start = Instant::now();
    let normals = mesh.face_normals();
    let anchor_config = config.anchor();
    let primal: Vec<PrimalFit> = (0..active.len())
        .into_par_iter()
        .map(|slot| fit_primal(mesh, &normals, grid, &active, slot, &anchor_config))
        .collect::<Result<_>>()?;
    let corners = active_corners(grid, &active);
    let duals: Vec<Option<Anchor>> = corners
        .par_iter()
        .map(|&c| fit_dual(mesh, &normals, grid, &active, grid.corner_from_linear(c), &anchor_config))
        .collect::<Result<_>>()?;
    report.timings.fit = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let crossings: Vec<Crossings> = (0..active.len())
        .into_par_iter()
        .map(|slot| {
            let v = grid.from_linear(active.linear_indices()[slot]);
            semi_axis_code(v, active.faces_at(slot), &primal[slot].anchor.normal, grid, mesh, config.tau)
        })
        .collect();
    report.timings.crossings = start.elapsed().as_secs_f64();

    let tokens: Vec<FctToken> = (0..active.len())
        .into_par_iter()
        .map(|slot| {
            let v = grid.from_linear(active.linear_indices()[slot]);
            let mut token = FctToken {
                voxel: v,
                primal: AnchorRecord::new(primal[slot].anchor.local, primal[slot].anchor.normal),
                code: crossings[slot].code,
                ..Default::default()
            };
            for d in 0..8 {
                let o = dual_slot_offset(d);
                let c = VoxelIndex::new(v.i + o[0], v.j + o[1], v.k + o[2]);
                let at = corners
                    .binary_search(&grid.corner_linear(c))
                    .expect("every corner of an active voxel is enumerated");
                if let Some(a) = &duals[at] {
                    token.mask |= 1 << d;
                    token.duals[d] = AnchorRecord::new(a.local, a.normal);
                }
            }
            token
        })
        .collect();

    report.degenerate_voxels = primal.iter().filter(|p| p.degenerate).count();
    report.dual_cells = corners.len();
    report.valid_duals = duals.iter().flatten().count();
    report.ambiguous_anchors = primal.iter().filter(|p| p.anchor.ambiguous).count()
        + duals.iter().flatten().filter(|a| a.ambiguous).count();
    report.normal_fallbacks = primal.iter().filter(|p| p.anchor.normal_fallback).count()
        + duals.iter().flatten().filter(|a| a.normal_fallback).count();
    report.multi_crossings = crossings.iter().flat_map(|c| c.counts).filter(|&n| n > 1).count();
    report.antisymmetry_violations = antisymmetry_violations(grid, &active, &primal, &crossings);

    for (kind, n) in [
        ("degenerate faces", report.degenerate_faces),
        ("degenerate voxels", report.degenerate_voxels),
        ("ambiguous anchors", report.ambiguous_anchors),
        ("normal fallbacks", report.normal_fallbacks),
        ("multi-crossing semi-axes", report.multi_crossings),
        ("antisymmetry violations", report.antisymmetry_violations),
    ] {
        if n > 0 {
            log::debug!("encode: {n} {kind}");
        }
    }

    let encoding = FctEncoding {
        params: config.params(),
        tokens,
        ..FctEncoding::empty(*grid)
    };
    Ok((encoding, report))
}

fn fit_primal(
    mesh: &TriangleMesh,
    normals: &[Option<Vec3>],
    grid: &VoxelGrid,
    active: &ActiveVoxels,
    slot: usize,
    config: &AnchorConfig,
) -> Result<PrimalFit> {
    let linear = active.linear_indices()[slot];
    let v = grid.from_linear(linear);
    let bx = grid.voxel_box(v);
    let faces = active.faces_at(slot);
    let samples = samples_in_box(mesh, normals, faces, &bx, linear);
    if let Some(anchor) = fit_cell(&samples, &bx, config)? {
        return Ok(PrimalFit {
            anchor,
            degenerate: false,
        });
    }
    let sum: Vec3 = faces.iter().filter_map(|&f| normals[f as usize]).sum();
    let normal = if sum.norm() > 1e-12 { sum.normalize() } else { Vec3::z() };
    Ok(PrimalFit {
        anchor: Anchor {
            position: bx.center(),
            local: Vec3::repeat(0.5),
            normal,
            sample_count: 0,
            residual: 0.0,
            ambiguous: false,
            normal_fallback: false,
        },
        degenerate: true,
    })
}

/// Sorted, deduplicated corner indices of every active voxel.
fn active_corners(grid: &VoxelGrid, active: &ActiveVoxels) -> Vec<u64> {
    let mut corners: Vec<u64> = active
        .linear_indices()
        .par_iter()
        .flat_map_iter(|&linear| {
            let v = grid.from_linear(linear);
            (0..8).map(move |d| {
                let o = dual_slot_offset(d);
                grid.corner_linear(VoxelIndex::new(v.i + o[0], v.j + o[1], v.k + o[2]))
            })
        })
        .collect();
    corners.par_sort_unstable();
    corners.dedup();
    corners
}

/// Anchor of the dual cell around `corner` from every face clipped to it.
///
/// A face meeting the dual cell meets one of the (up to eight) primal
/// voxels sharing the corner, so their face lists are a complete candidate
/// set.
fn fit_dual(
    mesh: &TriangleMesh,
    normals: &[Option<Vec3>],
    grid: &VoxelGrid,
    active: &ActiveVoxels,
    corner: VoxelIndex,
    config: &AnchorConfig,
) -> Result<Option<Anchor>> {
    let r = grid.resolution();
    let mut faces: Vec<u32> = Vec::new();
    for d in 0..8 {
        let o = dual_slot_offset(d);
        let c = corner.as_array();
        if (0..3).any(|a| c[a] < o[a] || c[a] - o[a] >= r) {
            continue;
        }
        let v = VoxelIndex::new(c[0] - o[0], c[1] - o[1], c[2] - o[2]);
        if let Some(f) = active.faces_of(grid.linear(v)) {
            faces.extend_from_slice(f);
        }
    }
    faces.sort_unstable();
    faces.dedup();
    let bx = grid.dual_box(corner);
    let samples = samples_in_box(mesh, normals, &faces, &bx, grid.corner_linear(corner));
    fit_cell(&samples, &bx, config)
}

fn antisymmetry_violations(
    grid: &VoxelGrid,
    active: &ActiveVoxels,
    primal: &[PrimalFit],
    crossings: &[Crossings],
) -> usize {
    let mut count = 0;
    for slot in 0..active.len() {
        let v = grid.from_linear(active.linear_indices()[slot]);
        for axis in 0..3 {
            let Some(u) = grid.neighbor(v, axis, true) else { continue };
            let Some(other) = active.position(grid.linear(u)) else { continue };
            let mine = crossings[slot].code.get(semi_axis_index(axis, false));
            let theirs = crossings[other].code.get(semi_axis_index(axis, true));
            let same_sheet = primal[slot].anchor.normal.dot(&primal[other].anchor.normal) > 0.0;
            if mine != 0 && theirs != 0 && same_sheet && mine != -theirs {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn empty_mesh_encodes_to_nothing() {
        let g = VoxelGrid::new(8).unwrap();
        let e = encode(&TriangleMesh::default(), &g, &EncoderConfig::default()).unwrap();
        assert!(e.is_empty());
    }

    #[test]
    fn small_triangle_one_token_with_touched_duals() {
        let g = VoxelGrid::new(8).unwrap();
        // Inside voxel (4,4,4) = [0, 0.25]^3; dual cells split at 0.125.
        let tri = [
            Vec3::new(0.05, 0.05, 0.05),
            Vec3::new(0.2, 0.06, 0.07),
            Vec3::new(0.06, 0.1, 0.08),
        ];
        let m = TriangleMesh::new(tri.to_vec(), vec![[0, 1, 2]]).unwrap();
        let e = encode(&m, &g, &EncoderConfig::default()).unwrap();
        assert_eq!(e.len(), 1);
        let t = &e.tokens[0];
        // The triangle spans x in [0.05, 0.2], y, z below 0.125: only the
        // corners (4,4,4) and (5,4,4) see it, slots 0 and 4.
        assert_eq!(t.mask, 0b0001_0001);
        let c = (tri[0] + tri[1] + tri[2]) / 3.0;
        assert!((t.primal_position(&g) - c).norm() < 1e-7);
    }

    #[test]
    fn plane_tokens_have_z_normals_and_z_codes() {
        let g = VoxelGrid::new(8).unwrap();
        let e = encode(&fixtures::plane(0.1), &g, &EncoderConfig::default()).unwrap();
        assert_eq!(e.len(), 64);
        for t in &e.tokens {
            assert!((t.primal.normal() - Vec3::z()).norm() < 1e-12);
            assert!(t.code.0[..4].iter().all(|&c| c == 0));
            assert!(!t.code.is_zero());
        }
    }
}
