//! Triangle meshes: loading, saving, normalization into the canonical
//! `[-1, 1]^3` domain, and area-weighted surface sampling.

mod obj;
mod ply;
mod stl;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{triangle_area, triangle_normal, Aabb, Vec3};

pub use obj::{read_obj, write_obj};
pub use ply::{read_ply, write_ply};
pub use stl::read_stl;

/// Faces with area at or below this value (normalized units) are degenerate:
/// they are skipped for sampling and anchoring but kept in the mesh.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Default margin left between the normalized bounding box and the domain.
pub const DEFAULT_MARGIN: f64 = 0.025;

/// Indexed triangle soup. No manifoldness or orientability is assumed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    /// Optional per-vertex normals (carried through I/O, not used for fitting).
    pub normals: Option<Vec<Vec3>>,
    /// Optional per-vertex texture coordinates.
    pub uvs: Option<Vec<[f64; 2]>>,
    /// Optional per-vertex colors in `[0, 1]`.
    pub colors: Option<Vec<[f64; 3]>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
    Stl,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(MeshFormat::Obj),
            "ply" => Some(MeshFormat::Ply),
            "stl" => Some(MeshFormat::Stl),
            _ => None,
        }
    }

    /// Guess the format from the leading bytes of a file.
    pub fn sniff(bytes: &[u8]) -> Option<Self> {
        if bytes.starts_with(b"ply") {
            return Some(MeshFormat::Ply);
        }
        if stl::looks_like_binary_stl(bytes) || bytes.trim_ascii_start().starts_with(b"solid") {
            return Some(MeshFormat::Stl);
        }
        let text = std::str::from_utf8(&bytes[..bytes.len().min(4096)]).ok()?;
        if text
            .lines()
            .any(|l| l.starts_with("v ") || l.starts_with("f ") || l.starts_with('#'))
        {
            return Some(MeshFormat::Obj);
        }
        None
    }
}

impl TriangleMesh {
    /// Builds a mesh and validates face indices.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let mesh = TriangleMesh {
            vertices,
            faces,
            ..Default::default()
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let count = self.vertices.len();
        for (fi, f) in self.faces.iter().enumerate() {
            for &index in f {
                if index as usize >= count {
                    return Err(Error::IndexOutOfRange {
                        face: fi,
                        index,
                        count,
                    });
                }
            }
        }
        let check = |len: Option<usize>, what: &str| -> Result<()> {
            match len {
                Some(l) if l != count => Err(Error::InvalidParameter(format!(
                    "{what} has {l} entries for {count} vertices"
                ))),
                _ => Ok(()),
            }
        };
        check(self.normals.as_ref().map(Vec::len), "normal array")?;
        check(self.uvs.as_ref().map(Vec::len), "uv array")?;
        check(self.colors.as_ref().map(Vec::len), "color array")?;
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        triangle_area(&a, &b, &c)
    }

    /// Unit normal from the face winding, `None` for degenerate faces.
    pub fn face_normal(&self, face: usize) -> Option<Vec3> {
        let [a, b, c] = self.triangle(face);
        if triangle_area(&a, &b, &c) <= DEGENERATE_AREA {
            return None;
        }
        triangle_normal(&a, &b, &c)
    }

    pub fn face_normals(&self) -> Vec<Option<Vec3>> {
        (0..self.faces.len()).map(|f| self.face_normal(f)).collect()
    }

    pub fn is_degenerate(&self, face: usize) -> bool {
        self.face_normal(face).is_none()
    }

    pub fn degenerate_faces(&self) -> Vec<usize> {
        (0..self.faces.len())
            .filter(|&f| self.is_degenerate(f))
            .collect()
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Signed enclosed volume (positive for closed outward-oriented meshes).
    pub fn signed_volume(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Connected components over shared vertices; returns a component id per
    /// face and the number of components (isolated vertices are ignored).
    pub fn face_components(&self) -> (Vec<usize>, usize) {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for f in &self.faces {
            let a = find(&mut parent, f[0] as usize);
            for &v in &f[1..] {
                let b = find(&mut parent, v as usize);
                if a != b {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent[hi] = lo;
                }
            }
        }
        let mut ids = std::collections::HashMap::new();
        let labels = self
            .faces
            .iter()
            .map(|f| {
                let root = find(&mut parent, f[0] as usize);
                let next = ids.len();
                *ids.entry(root).or_insert(next)
            })
            .collect();
        (labels, ids.len())
    }

    pub fn connected_components(&self) -> usize {
        self.face_components().1
    }

    /// Sub-mesh made of the faces for which `keep` is true (vertices compacted).
    pub fn filter_faces(&self, keep: impl Fn(usize) -> bool) -> TriangleMesh {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut out = TriangleMesh {
            normals: self.normals.as_ref().map(|_| Vec::new()),
            uvs: self.uvs.as_ref().map(|_| Vec::new()),
            colors: self.colors.as_ref().map(|_| Vec::new()),
            ..Default::default()
        };
        for (fi, f) in self.faces.iter().enumerate() {
            if !keep(fi) {
                continue;
            }
            let mut nf = [0u32; 3];
            for (slot, &v) in nf.iter_mut().zip(f) {
                let v = v as usize;
                if remap[v] == u32::MAX {
                    remap[v] = out.vertices.len() as u32;
                    out.vertices.push(self.vertices[v]);
                    if let (Some(dst), Some(src)) = (out.normals.as_mut(), self.normals.as_ref()) {
                        dst.push(src[v]);
                    }
                    if let (Some(dst), Some(src)) = (out.uvs.as_mut(), self.uvs.as_ref()) {
                        dst.push(src[v]);
                    }
                    if let (Some(dst), Some(src)) = (out.colors.as_mut(), self.colors.as_ref()) {
                        dst.push(src[v]);
                    }
                }
                *slot = remap[v];
            }
            out.faces.push(nf);
        }
        out
    }

    /// Concatenates two meshes (attributes kept only when both carry them).
    pub fn merged(&self, other: &TriangleMesh) -> TriangleMesh {
        let offset = self.vertices.len() as u32;
        let mut out = self.clone();
        out.vertices.extend_from_slice(&other.vertices);
        out.faces
            .extend(other.faces.iter().map(|f| f.map(|v| v + offset)));
        out.normals = join(&self.normals, &other.normals);
        out.uvs = join(&self.uvs, &other.uvs);
        out.colors = join(&self.colors, &other.colors);
        out
    }

    /// Applies `f` to every vertex position.
    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> TriangleMesh {
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v = f(v);
        }
        out
    }

    /// Reverses the winding of every face.
    pub fn flipped(&self) -> TriangleMesh {
        let mut out = self.clone();
        for f in &mut out.faces {
            f.swap(1, 2);
        }
        if let Some(ns) = out.normals.as_mut() {
            for n in ns {
                *n = -*n;
            }
        }
        out
    }
}

fn join<T: Clone>(a: &Option<Vec<T>>, b: &Option<Vec<T>>) -> Option<Vec<T>> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
        _ => None,
    }
}

/// Loads a mesh, choosing the reader from `format`, the file extension, or
/// the file contents, in that order.
pub fn load_mesh(path: impl AsRef<Path>, format: Option<MeshFormat>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = format
        .or_else(|| MeshFormat::from_path(path))
        .or_else(|| MeshFormat::sniff(&bytes))
        .ok_or_else(|| Error::UnsupportedFormat(path.to_path_buf()))?;
    let mesh = match format {
        MeshFormat::Obj => read_obj(&bytes)?,
        MeshFormat::Ply => read_ply(&bytes)?,
        MeshFormat::Stl => read_stl(&bytes)?,
    };
    mesh.validate()?;
    log::debug!(
        "loaded {} ({:?}): {} vertices, {} faces",
        path.display(),
        format,
        mesh.vertices.len(),
        mesh.faces.len()
    );
    Ok(mesh)
}

/// Saves a mesh as OBJ (text) or binary little-endian PLY by extension.
pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match MeshFormat::from_path(path) {
        Some(MeshFormat::Obj) => write_obj(mesh).into_bytes(),
        Some(MeshFormat::Ply) => write_ply(mesh),
        _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Uniform scale plus translation mapping the input into the canonical domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTransform {
    pub scale: f64,
    pub translation: Vec3,
    pub margin: f64,
}

impl Default for NormalizationTransform {
    fn default() -> Self {
        NormalizationTransform::identity()
    }
}

impl NormalizationTransform {
    pub fn identity() -> Self {
        NormalizationTransform {
            scale: 1.0,
            translation: Vec3::zeros(),
            margin: 0.0,
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        p * self.scale + self.translation
    }

    pub fn invert(&self, p: &Vec3) -> Vec3 {
        (p - self.translation) / self.scale
    }

    /// Composition `outer ∘ self`.
    pub fn then(&self, outer: &NormalizationTransform) -> NormalizationTransform {
        NormalizationTransform {
            scale: self.scale * outer.scale,
            translation: self.translation * outer.scale + outer.translation,
            margin: outer.margin,
        }
    }
}

/// Uniformly scales and centers `mesh` so that its longest bounding-box axis
/// spans `2 (1 - margin)` around the origin.
pub fn normalize(mesh: &TriangleMesh, margin: f64) -> Result<(TriangleMesh, NormalizationTransform)> {
    if mesh.vertices.is_empty() || mesh.faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::InvalidParameter(format!(
            "margin {margin} outside [0, 1)"
        )));
    }
    let bounds = mesh.bounds();
    let extent = bounds.extent().max();
    if !(extent > 0.0) || !extent.is_finite() {
        return Err(Error::DegenerateBounds);
    }
    let scale = 2.0 * (1.0 - margin) / extent;
    let translation = -bounds.center() * scale;
    let transform = NormalizationTransform {
        scale,
        translation,
        margin,
    };
    Ok((mesh.map_vertices(|p| transform.apply(p)), transform))
}

/// Maps a normalized mesh back into its source coordinates.
pub fn denormalize(mesh: &TriangleMesh, transform: &NormalizationTransform) -> TriangleMesh {
    mesh.map_vertices(|p| transform.invert(p))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub point: Vec3,
    pub normal: Vec3,
    pub face: u32,
}

/// Draws `n` points area-proportionally over the non-degenerate faces of
/// `mesh`, uniformly within each face. Deterministic for a given seed.
pub fn sample_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<Vec<SurfacePoint>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let mut faces = Vec::new();
    let mut cdf = Vec::new();
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        if let Some(normal) = mesh.face_normal(f) {
            total += mesh.face_area(f);
            faces.push((f, normal));
            cdf.push(total);
        }
    }
    if faces.is_empty() {
        return Err(Error::AllFacesDegenerate);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * total;
        let slot = cdf.partition_point(|&c| c <= u).min(faces.len() - 1);
        let (f, normal) = faces[slot];
        let [a, b, c] = mesh.triangle(f);
        let r1: f64 = rng.random::<f64>().sqrt();
        let r2: f64 = rng.random();
        let point = a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
        out.push(SurfacePoint {
            point,
            normal,
            face: f as u32,
        });
    }
    Ok(out)
}
