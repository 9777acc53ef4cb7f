use std::path::PathBuf;

use image::RgbImage;
use rayon::prelude::*;

use super::token::FctEncoding;
use crate::error::{Error, Result};
use crate::geom::{closest_point_on_triangle, Vec3};
use crate::mesh_io::TriangleMesh;
use crate::metrics::TriangleBvh;
use crate::voxelizer::face_voxels;

/// Which per-vertex attributes to transfer onto tokens.
#[derive(Clone, Debug, PartialEq)]
pub enum AttributeSpec {
    /// Vertex colors: channels `r, g, b`.
    Rgb,
    /// Texture coordinates: channels `u, v`.
    Uv,
    /// Texture coordinates plus bilinear texture lookups: `u, v, r, g, b`.
    Texture(PathBuf),
}

impl AttributeSpec {
    pub fn channels(&self) -> Vec<String> {
        let names: &[&str] = match self {
            AttributeSpec::Rgb => &["r", "g", "b"],
            AttributeSpec::Uv => &["u", "v"],
            AttributeSpec::Texture(_) => &["u", "v", "r", "g", "b"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }
}

/// Closest point on `mesh` to each token's primal anchor, with the attribute
/// interpolated barycentrically there.
///
/// The search starts with the faces overlapping the token's voxel. Any other
/// face lies outside the voxel, so the local answer is final whenever it is
/// no farther than the voxel boundary; otherwise a global search decides.
pub fn attach_attributes(enc: &FctEncoding, mesh: &TriangleMesh, spec: &AttributeSpec) -> Result<FctEncoding> {
    match spec {
        AttributeSpec::Rgb if mesh.colors.is_none() => return Err(Error::MissingAttribute("vertex color")),
        AttributeSpec::Uv | AttributeSpec::Texture(_) if mesh.uvs.is_none() => {
            return Err(Error::MissingAttribute("texture coordinate"))
        }
        _ => {}
    }
    let texture = match spec {
        AttributeSpec::Texture(path) => Some(
            image::open(path)
                .map_err(|e| Error::parse("texture", path.display().to_string(), e.to_string()))?
                .to_rgb8(),
        ),
        _ => None,
    };
    let grid = &enc.grid;
    let mut pairs: Vec<(u64, u32)> = (0..mesh.faces.len())
        .into_par_iter()
        .flat_map_iter(|f| face_voxels(&mesh.triangle(f), grid).into_iter().map(move |v| (v, f as u32)))
        .collect();
    pairs.par_sort_unstable();
    let bvh = TriangleBvh::new(mesh);

    let mut out = enc.clone();
    out.channels = spec.channels();
    out.tokens.par_iter_mut().try_for_each(|t| -> Result<()> {
        let linear = grid.linear(t.voxel);
        let lo = pairs.partition_point(|p| p.0 < linear);
        let hi = pairs.partition_point(|p| p.0 <= linear);
        let p = t.primal_position(grid);
        let cell = grid.voxel_box(t.voxel);
        let boundary = (0..3)
            .map(|a| (p[a] - cell.min[a]).min(cell.max[a] - p[a]))
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        let mut best: Option<(f64, u32, [f64; 3])> = None;
        for &(_, f) in &pairs[lo..hi] {
            let tri = mesh.triangle(f as usize);
            let (q, bary) = closest_point_on_triangle(&p, &tri[0], &tri[1], &tri[2]);
            let d = (q - p).norm_squared();
            if best.is_none_or(|b| (d, f) < (b.0, b.1)) {
                best = Some((d, f, bary));
            }
        }
        let hit = match best {
            Some(b) if b.0 < boundary * boundary => (b.1, b.2),
            _ => {
                let h = bvh.closest(&p).ok_or(Error::EmptyMesh)?;
                (h.face, h.barycentric)
            }
        };
        t.attributes = interpolate(mesh, spec, texture.as_ref(), hit.0, hit.1);
        Ok(())
    })?;
    Ok(out)
}

fn interpolate(mesh: &TriangleMesh, spec: &AttributeSpec, texture: Option<&RgbImage>, face: u32, bary: [f64; 3]) -> Vec<f32> {
    let f = mesh.faces[face as usize];
    match spec {
        AttributeSpec::Rgb => {
            let colors = mesh.colors.as_ref().expect("checked");
            let c = (0..3).fold(Vec3::zeros(), |acc, k| acc + Vec3::from(colors[f[k] as usize]) * bary[k]);
            vec![c.x as f32, c.y as f32, c.z as f32]
        }
        AttributeSpec::Uv | AttributeSpec::Texture(_) => {
            let uvs = mesh.uvs.as_ref().expect("checked");
            let (u, v) = (0..3).fold((0.0, 0.0), |(u, v), k| {
                let t = uvs[f[k] as usize];
                (u + t[0] * bary[k], v + t[1] * bary[k])
            });
            let mut out = vec![u as f32, v as f32];
            if let Some(img) = texture {
                out.extend(bilinear(img, u, v).map(|c| c as f32));
            }
            out
        }
    }
}

/// Bilinear texture lookup with `v = 0` at the bottom row and wrapping UVs.
fn bilinear(img: &RgbImage, u: f64, v: f64) -> [f64; 3] {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let x = u.rem_euclid(1.0) * w as f64 - 0.5;
    let y = (1.0 - v.rem_euclid(1.0)) * h as f64 - 0.5;
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let px = |xi: i64, yi: i64| {
        let p = img.get_pixel(xi.rem_euclid(w) as u32, yi.clamp(0, h - 1) as u32);
        [p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0]
    };
    let (x0, y0) = (x0 as i64, y0 as i64);
    let (a, b, c, d) = (px(x0, y0), px(x0 + 1, y0), px(x0, y0 + 1), px(x0 + 1, y0 + 1));
    std::array::from_fn(|k| {
        (a[k] * (1.0 - fx) + b[k] * fx) * (1.0 - fy) + (c[k] * (1.0 - fx) + d[k] * fx) * fy
    })
}
