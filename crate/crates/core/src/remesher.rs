//! Decoding tokens back into a triangle mesh.
//!
//! Dual anchors reported by every token around a lattice corner are gathered
//! into one vertex. Each crossed primal face then becomes a quad over the
//! four dual vertices at its corners, oriented by the semi-axis code and
//! split along the diagonal whose triangles deviate least from the mean
//! dual normal.
//!
//! A primal face between voxels `L` (lower) and `U = L + e_a` is handled
//! once: by `L` when `L` is a token, otherwise by `U`. `L` reports the face
//! through `code_L[+a]`, `U` through `-code_U[-a]`. When both report and
//! disagree, the side whose anchor normal is more aligned with the axis wins,
//! and `L` wins ties.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossings::semi_axis_index;
use crate::fct::FctEncoding;
use crate::geom::Vec3;
use crate::mesh_io::TriangleMesh;
use crate::voxelizer::VoxelIndex;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatherMode {
    /// Plain mean of positions, normalized sum of normals.
    #[default]
    Mean,
    /// Positions weighted by agreement of each contribution's normal with the
    /// summed normal.
    NormalWeighted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodeOptions {
    pub gather: GatherMode,
}

/// One unified dual anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct DualVertex {
    pub corner: VoxelIndex,
    pub position: Vec3,
    pub normal: Vec3,
    /// Number of tokens that reported this dual.
    pub count: u32,
    /// Mean attributes of the reporting tokens.
    pub attributes: Vec<f64>,
}

/// Unified dual anchors keyed by corner linear index (sorted).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DualVertexTable {
    keys: Vec<u64>,
    vertices: Vec<DualVertex>,
}

impl DualVertexTable {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn get(&self, corner_linear: u64) -> Option<&DualVertex> {
        self.keys.binary_search(&corner_linear).ok().map(|i| &self.vertices[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &DualVertex)> {
        self.keys.iter().copied().zip(&self.vertices)
    }
}

pub fn gather_duals(enc: &FctEncoding) -> DualVertexTable {
    gather_duals_with(enc, GatherMode::Mean)
}

pub fn gather_duals_with(enc: &FctEncoding, mode: GatherMode) -> DualVertexTable {
    let grid = &enc.grid;
    let mut contributions: Vec<(u64, u32, u8)> = enc
        .tokens
        .par_iter()
        .enumerate()
        .flat_map_iter(|(ti, t)| {
            (0..8)
                .filter(|&d| t.has_dual(d))
                .map(move |d| (grid.corner_linear(t.dual_corner(d)), ti as u32, d as u8))
        })
        .collect();
    contributions.par_sort_unstable();
    let mut starts: Vec<usize> = Vec::new();
    for (i, c) in contributions.iter().enumerate() {
        if i == 0 || contributions[i - 1].0 != c.0 {
            starts.push(i);
        }
    }
    starts.push(contributions.len());
    let vertices: Vec<DualVertex> = starts
        .par_windows(2)
        .map(|w| unify(enc, &contributions[w[0]..w[1]], mode))
        .collect();
    let keys = starts[..starts.len() - 1].iter().map(|&s| contributions[s].0).collect();
    DualVertexTable { keys, vertices }
}

fn unify(enc: &FctEncoding, group: &[(u64, u32, u8)], mode: GatherMode) -> DualVertex {
    let grid = &enc.grid;
    let records: Vec<_> = group
        .iter()
        .map(|&(_, ti, d)| &enc.tokens[ti as usize].duals[d as usize])
        .collect();
    let corner = grid.corner_from_linear(group[0].0);
    let sum: Vec3 = records.iter().map(|r| r.normal()).sum();
    let normal = if sum.norm() > 1e-12 {
        sum.normalize()
    } else {
        records[0].normal().normalize()
    };
    // Mean as first + mean offset, so identical contributions stay exact.
    let first = records[0].local();
    let weights: Vec<f64> = match mode {
        GatherMode::Mean => vec![1.0; records.len()],
        GatherMode::NormalWeighted => records
            .iter()
            .map(|r| r.normal().dot(&normal).max(0.0) + 1e-6)
            .collect(),
    };
    let wsum: f64 = weights.iter().sum();
    let offset: Vec3 = records
        .iter()
        .zip(&weights)
        .map(|(r, w)| (r.local() - first) * *w)
        .sum::<Vec3>()
        / wsum;
    let local = first + offset;
    let position = grid.from_local(&grid.dual_box(corner), &local);
    let n_channels = enc.channels.len();
    let mut attributes = vec![0.0; n_channels];
    if n_channels > 0 {
        for &(_, ti, _) in group {
            for (a, v) in attributes.iter_mut().zip(&enc.tokens[ti as usize].attributes) {
                *a += *v as f64;
            }
        }
        for a in &mut attributes {
            *a /= group.len() as f64;
        }
    }
    DualVertex {
        corner,
        position,
        normal,
        count: group.len() as u32,
        attributes,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeReport {
    pub tokens: usize,
    pub dual_vertices: usize,
    pub output_vertices: usize,
    pub triangles: usize,
    pub quads: usize,
    /// Faces with three valid duals, emitted as one triangle.
    pub partial_faces: usize,
    /// Crossed faces with two or fewer valid duals, skipped.
    pub skipped_faces: usize,
    /// Faces with no crossing but all four duals valid (not emitted).
    pub hairline_gaps: usize,
    /// Faces reported with opposite orientations by the two sides.
    pub sign_conflicts: usize,
}

impl std::ops::AddAssign for DecodeReport {
    fn add_assign(&mut self, o: Self) {
        self.triangles += o.triangles;
        self.quads += o.quads;
        self.partial_faces += o.partial_faces;
        self.skipped_faces += o.skipped_faces;
        self.hairline_gaps += o.hairline_gaps;
        self.sign_conflicts += o.sign_conflicts;
    }
}

/// Resolves the orientation of a face reported by the lower side (`s_l`,
/// alignment `a_l`) and the upper side (`s_u`, `a_u`), both relative to `+a`.
pub fn resolve_orientation(s_l: i8, a_l: f64, s_u: i8, a_u: f64) -> (i8, bool) {
    match (s_l, s_u) {
        (0, s) | (s, 0) => (s, false),
        (l, u) if l == u => (l, false),
        (l, u) => (if a_u > a_l { u } else { l }, true),
    }
}

/// Emits triangles (as corner linear-index triples) for every face handled by
/// token `ti`.
fn token_faces(enc: &FctEncoding, table: &DualVertexTable, ti: usize) -> (Vec<[u64; 3]>, DecodeReport) {
    let grid = &enc.grid;
    let t = &enc.tokens[ti];
    let mut tris = Vec::new();
    let mut rep = DecodeReport::default();
    for axis in 0..3 {
        let mut axis_dir = Vec3::zeros();
        axis_dir[axis] = 1.0;
        let align = |n: Vec3| n.dot(&axis_dir).abs();
        // Face on the +axis side: this token is the lower voxel.
        {
            let s_l = t.code.get(semi_axis_index(axis, false));
            let upper = grid
                .neighbor(t.voxel, axis, true)
                .and_then(|u| enc.find(u))
                .map(|ui| &enc.tokens[ui]);
            let (s_u, a_u) = upper.map_or((0, 0.0), |u| {
                (-u.code.get(semi_axis_index(axis, true)), align(u.primal.normal()))
            });
            let (s, conflict) = resolve_orientation(s_l, align(t.primal.normal()), s_u, a_u);
            rep.sign_conflicts += conflict as usize;
            let fallback = if s_l != 0 || upper.is_none() {
                t.primal.normal()
            } else {
                upper.map_or(t.primal.normal(), |u| u.primal.normal())
            };
            emit_face(enc, table, t.voxel, axis, s, fallback, &mut tris, &mut rep);
        }
        // Face on the -axis side, only when the lower voxel is not a token.
        let lower = grid.neighbor(t.voxel, axis, false);
        if lower.is_some_and(|l| enc.find(l).is_some()) {
            continue;
        }
        let s_u = -t.code.get(semi_axis_index(axis, true));
        let plane_voxel = t.voxel.with(axis, t.voxel.get(axis).wrapping_sub(1));
        emit_face(enc, table, plane_voxel, axis, s_u, t.primal.normal(), &mut tris, &mut rep);
    }
    (tris, rep)
}

/// Emits the quad on the `+axis` face of (possibly virtual) voxel `lower`.
/// `lower.get(axis)` may be `u32::MAX` to denote the face at plane 0.
#[allow(clippy::too_many_arguments)]
fn emit_face(
    enc: &FctEncoding,
    table: &DualVertexTable,
    lower: VoxelIndex,
    axis: usize,
    sign: i8,
    fallback: Vec3,
    tris: &mut Vec<[u64; 3]>,
    rep: &mut DecodeReport,
) {
    let grid = &enc.grid;
    let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
    let plane = lower.get(axis).wrapping_add(1);
    let corner = |ou: u32, ow: u32| {
        let mut c = [0u32; 3];
        c[axis] = plane;
        c[u] = lower.get(u) + ou;
        c[w] = lower.get(w) + ow;
        grid.corner_linear(VoxelIndex::from_array(c))
    };
    let mut quad = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
    let verts: Vec<Option<&DualVertex>> = quad.iter().map(|&c| table.get(c)).collect();
    let present = verts.iter().filter(|v| v.is_some()).count();
    if sign == 0 {
        if present == 4 {
            rep.hairline_gaps += 1;
        }
        return;
    }
    if sign < 0 {
        quad = [quad[0], quad[3], quad[2], quad[1]];
    }
    let verts: Vec<Option<&DualVertex>> = quad.iter().map(|&c| table.get(c)).collect();
    match present {
        4 => {
            let v: Vec<&DualVertex> = verts.into_iter().flatten().collect();
            let mean: Vec3 = v.iter().map(|d| d.normal).sum();
            let n_avg = if mean.norm() > 1e-12 { mean.normalize() } else { fallback };
            let p: Vec<Vec3> = v.iter().map(|d| d.position).collect();
            let cost = |a: usize, b: usize, c: usize| {
                let n = (p[b] - p[a]).cross(&(p[c] - p[a]));
                let len = n.norm();
                if len > 0.0 {
                    1.0 - (n / len).dot(&n_avg)
                } else {
                    1.0
                }
            };
            let c13 = cost(0, 1, 2) + cost(0, 2, 3);
            let c24 = cost(0, 1, 3) + cost(1, 2, 3);
            if c13 <= c24 {
                tris.push([quad[0], quad[1], quad[2]]);
                tris.push([quad[0], quad[2], quad[3]]);
            } else {
                tris.push([quad[0], quad[1], quad[3]]);
                tris.push([quad[1], quad[2], quad[3]]);
            }
            rep.quads += 1;
        }
        3 => {
            let tri: Vec<u64> = quad.iter().zip(&verts).filter(|(_, v)| v.is_some()).map(|(c, _)| *c).collect();
            tris.push([tri[0], tri[1], tri[2]]);
            rep.partial_faces += 1;
        }
        _ => {
            rep.skipped_faces += 1;
            log::debug!("decode: skipped face on axis {axis} near {lower:?} with {present} duals");
        }
    }
}

/// Builds the output mesh from the gathered duals.
pub fn emit_faces(enc: &FctEncoding, table: &DualVertexTable) -> (TriangleMesh, DecodeReport) {
    let parts: Vec<(Vec<[u64; 3]>, DecodeReport)> = (0..enc.tokens.len())
        .into_par_iter()
        .map(|ti| token_faces(enc, table, ti))
        .collect();
    let mut report = DecodeReport {
        tokens: enc.tokens.len(),
        dual_vertices: table.len(),
        ..Default::default()
    };
    let mut tris = Vec::new();
    for (t, r) in parts {
        tris.extend(t);
        report += r;
    }
    let mut used: Vec<u64> = tris.iter().flatten().copied().collect();
    used.par_sort_unstable();
    used.dedup();
    let id = |c: u64| used.binary_search(&c).expect("referenced corner") as u32;
    let faces: Vec<[u32; 3]> = tris.iter().map(|t| [id(t[0]), id(t[1]), id(t[2])]).collect();
    let duals: Vec<&DualVertex> = used.iter().map(|&c| table.get(c).expect("present dual")).collect();
    let mut mesh = TriangleMesh {
        vertices: duals.iter().map(|d| d.position).collect(),
        faces,
        normals: Some(duals.iter().map(|d| d.normal).collect()),
        ..Default::default()
    };
    let channel = |name: &str| enc.channels.iter().position(|c| c == name);
    if let (Some(r), Some(g), Some(b)) = (channel("r"), channel("g"), channel("b")) {
        mesh.colors = Some(duals.iter().map(|d| [d.attributes[r], d.attributes[g], d.attributes[b]]).collect());
    }
    if let (Some(u), Some(v)) = (channel("u"), channel("v")) {
        mesh.uvs = Some(duals.iter().map(|d| [d.attributes[u], d.attributes[v]]).collect());
    }
    report.triangles = mesh.faces.len();
    report.output_vertices = mesh.vertices.len();
    (mesh, report)
}

pub fn decode(enc: &FctEncoding) -> TriangleMesh {
    decode_with_report(enc, &DecodeOptions::default()).0
}

pub fn decode_with_report(enc: &FctEncoding, options: &DecodeOptions) -> (TriangleMesh, DecodeReport) {
    let table = gather_duals_with(enc, options.gather);
    let (mesh, report) = emit_faces(enc, &table);
    if report.skipped_faces > 0 {
        log::info!("decode: skipped {} faces with fewer than three duals", report.skipped_faces);
    }
    if report.hairline_gaps > 0 {
        log::debug!("decode: {} uncrossed faces with four valid duals", report.hairline_gaps);
    }
    (mesh, report)
}
