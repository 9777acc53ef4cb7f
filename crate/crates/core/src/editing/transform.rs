use serde::{Deserialize, Serialize};

use crate::crossings::{semi_axis_index, SemiAxisCode, SEMI_AXES};
use crate::error::{Error, Result};
use crate::fct::{attach_attributes, encode, AnchorRecord, AttributeSpec, EncoderConfig, FctEncoding, FctToken, FLAG_REENCODED};
use crate::geom::{Mat3, Vec3};
use crate::mesh_io::{normalize, DEFAULT_MARGIN};
use crate::remesher::decode;
use crate::voxelizer::{dual_slot_of_offset, dual_slot_offset, VoxelIndex};

/// `x -> matrix * x + translation`, in the grid's world coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub matrix: Mat3,
    pub translation: Vec3,
}

impl Affine {
    pub fn identity() -> Self {
        Affine {
            matrix: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Rotation about `axis` through the origin. Entries within 1e-15 of
    /// 0 or ±1 are snapped so that quarter turns are exact permutations.
    pub fn rotation(axis: Vec3, degrees: f64) -> Self {
        let r = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), degrees.to_radians());
        let snap = |v: f64| {
            if v.abs() < 1e-15 {
                0.0
            } else if (v.abs() - 1.0).abs() < 1e-15 {
                v.signum()
            } else {
                v
            }
        };
        Affine {
            matrix: r.matrix().map(snap),
            translation: Vec3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.matrix * p + self.translation
    }

    /// For each output axis, the source axis and sign when the matrix is a
    /// signed permutation.
    fn signed_permutation(&self) -> Option<[(usize, bool); 3]> {
        let mut out = [(0, false); 3];
        let mut used = [false; 3];
        for (row, slot) in out.iter_mut().enumerate() {
            let mut found = None;
            for col in 0..3 {
                let v = self.matrix[(row, col)];
                if v == 0.0 {
                    continue;
                }
                if (v != 1.0 && v != -1.0) || found.is_some() {
                    return None;
                }
                found = Some((col, v < 0.0));
            }
            let (col, neg) = found?;
            if used[col] {
                return None;
            }
            used[col] = true;
            *slot = (col, neg);
        }
        Some(out)
    }
}

/// Applies `affine` to every token.
///
/// Signed axis permutations with a translation by whole cells are applied
/// natively: voxel indices, dual slots, semi-axis codes and cell-local
/// anchors are remapped exactly. Anything else is decoded, transformed,
/// renormalized into the domain when needed, and re-encoded at the same
/// resolution; such results carry [`FLAG_REENCODED`].
pub fn transform(enc: &FctEncoding, affine: &Affine) -> Result<FctEncoding> {
    let det = affine.matrix.determinant();
    if !(det.abs() > 1e-12) || !det.is_finite() {
        return Err(Error::SingularTransform);
    }
    if let Some(perm) = affine.signed_permutation() {
        if let Some(out) = remap(enc, &perm, &affine.translation) {
            return Ok(out);
        }
    }
    reencode(enc, affine)
}

fn remap(enc: &FctEncoding, perm: &[(usize, bool); 3], translation: &Vec3) -> Option<FctEncoding> {
    let grid = &enc.grid;
    let r = grid.resolution() as i64;
    let h = grid.cell_size();
    let mut shift = [0i64; 3];
    for a in 0..3 {
        let s = translation[a] / h;
        if (s - s.round()).abs() > 1e-9 {
            return None;
        }
        shift[a] = s.round() as i64;
    }
    let flip = |x: f32, neg: bool| if neg { 1.0 - x } else { x };
    let mut tokens = Vec::with_capacity(enc.tokens.len());
    for t in &enc.tokens {
        let src = t.voxel.as_array();
        let mut dst = [0u32; 3];
        for (b, &(a, neg)) in perm.iter().enumerate() {
            let i = if neg { r - 1 - src[a] as i64 } else { src[a] as i64 } + shift[b];
            if i < 0 || i >= r {
                return None;
            }
            dst[b] = i as u32;
        }
        let map_record = |rec: &AnchorRecord| {
            let mut out = AnchorRecord::default();
            for (b, &(a, neg)) in perm.iter().enumerate() {
                out.position[b] = flip(rec.position[a], neg);
                out.normal[b] = if neg { -rec.normal[a] } else { rec.normal[a] };
            }
            out
        };
        let mut mapped = FctToken {
            voxel: VoxelIndex::from_array(dst),
            primal: map_record(&t.primal),
            attributes: t.attributes.clone(),
            ..Default::default()
        };
        for d in 0..8 {
            if !t.has_dual(d) {
                continue;
            }
            let o = dual_slot_offset(d);
            let mut o2 = [0u32; 3];
            for (b, &(a, neg)) in perm.iter().enumerate() {
                o2[b] = if neg { 1 - o[a] } else { o[a] };
            }
            let d2 = dual_slot_of_offset(o2);
            mapped.mask |= 1 << d2;
            mapped.duals[d2] = map_record(&t.duals[d]);
        }
        let mut code = [0i8; 6];
        for (e, &(axis, neg_e)) in SEMI_AXES.iter().enumerate() {
            let (b, neg) = perm
                .iter()
                .enumerate()
                .find(|(_, &(a, _))| a == axis)
                .map(|(b, &(_, neg))| (b, neg))
                .expect("permutation covers every axis");
            code[semi_axis_index(b, neg_e != neg)] = t.code.get(e);
        }
        mapped.code = SemiAxisCode(code);
        tokens.push(mapped);
    }
    let mut out = FctEncoding {
        tokens,
        ..enc.clone()
    };
    out.canonicalize();
    Some(out)
}

fn reencode(enc: &FctEncoding, affine: &Affine) -> Result<FctEncoding> {
    let mut mesh = decode(enc);
    let normal_map = affine
        .matrix
        .try_inverse()
        .ok_or(Error::SingularTransform)?
        .transpose();
    mesh.vertices = mesh.vertices.iter().map(|p| affine.apply(p)).collect();
    if let Some(normals) = &mut mesh.normals {
        for n in normals.iter_mut() {
            let m = normal_map * *n;
            *n = if m.norm() > 0.0 { m.normalize() } else { m };
        }
    }
    if affine.matrix.determinant() < 0.0 {
        mesh = mesh.flipped();
    }
    let mut normalization = enc.normalization;
    if mesh.vertices.iter().any(|v| v.amax() > 1.0) {
        log::warn!("transform: geometry left [-1, 1]^3, renormalizing");
        let (m, t) = normalize(&mesh, DEFAULT_MARGIN)?;
        mesh = m;
        normalization = normalization.then(&t);
    }
    let config = EncoderConfig {
        lambda: enc.params.lambda as f64,
        mu: enc.params.mu as f64,
        tau: enc.params.tau as f64,
        ..Default::default()
    };
    let mut out = encode(&mesh, &enc.grid, &config)?;
    let spec = match enc.channels.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        [] => None,
        ["r", "g", "b"] => Some(AttributeSpec::Rgb),
        ["u", "v"] => Some(AttributeSpec::Uv),
        other => {
            log::warn!("transform: dropping attribute channels {other:?} on re-encode");
            None
        }
    };
    if let Some(spec) = spec {
        out = attach_attributes(&out, &mesh, &spec)?;
    }
    out.params = enc.params;
    out.flags = enc.flags | FLAG_REENCODED;
    out.normalization = normalization;
    Ok(out)
}
