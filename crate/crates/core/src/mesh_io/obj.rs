//! Wavefront OBJ (`v`, `vt`, `vn`, `f`; optional `v x y z r g b` colors).

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geom::Vec3;

use super::TriangleMesh;

fn parse_f64(tok: Option<&str>, line: usize, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::parse("OBJ", format!("line {line}"), format!("missing {what}")))?;
    tok.parse::<f64>()
        .map_err(|_| Error::parse("OBJ", format!("line {line}"), format!("bad {what} {tok:?}")))
}

fn resolve(index: &str, count: usize, line: usize) -> Result<usize> {
    let raw: i64 = index
        .parse()
        .map_err(|_| Error::parse("OBJ", format!("line {line}"), format!("bad index {index:?}")))?;
    let resolved = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        count as i64 + raw
    } else {
        -1
    };
    if resolved < 0 || resolved as usize >= count {
        return Err(Error::parse(
            "OBJ",
            format!("line {line}"),
            format!("index {raw} out of range (have {count})"),
        ));
    }
    Ok(resolved as usize)
}

pub fn read_obj(bytes: &[u8]) -> Result<TriangleMesh> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse("OBJ", format!("byte {}", e.valid_up_to()), "not UTF-8"))?;

    let mut positions = Vec::new();
    let mut colors: Vec<[f64; 3]> = Vec::new();
    let mut has_colors = true;
    let mut texcoords = Vec::new();
    let mut normals = Vec::new();
    let mut corners_per_face: Vec<Vec<(usize, Option<usize>, Option<usize>)>> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), line, "x")?;
                let y = parse_f64(toks.next(), line, "y")?;
                let z = parse_f64(toks.next(), line, "z")?;
                positions.push(Vec3::new(x, y, z));
                let rest: Vec<&str> = toks.collect();
                if rest.len() >= 3 {
                    let mut c = [0.0; 3];
                    for (slot, t) in c.iter_mut().zip(&rest) {
                        *slot = parse_f64(Some(t), line, "color")?;
                    }
                    colors.push(c);
                } else {
                    has_colors = false;
                }
            }
            Some("vt") => {
                let u = parse_f64(toks.next(), line, "u")?;
                let v = toks.next().map(|t| parse_f64(Some(t), line, "v")).transpose()?.unwrap_or(0.0);
                texcoords.push([u, v]);
            }
            Some("vn") => {
                let x = parse_f64(toks.next(), line, "nx")?;
                let y = parse_f64(toks.next(), line, "ny")?;
                let z = parse_f64(toks.next(), line, "nz")?;
                normals.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut corners = Vec::new();
                for t in toks {
                    let mut parts = t.split('/');
                    let v = resolve(parts.next().unwrap_or(""), positions.len(), line)?;
                    let vt = match parts.next() {
                        Some(s) if !s.is_empty() => Some(resolve(s, texcoords.len(), line)?),
                        _ => None,
                    };
                    let vn = match parts.next() {
                        Some(s) if !s.is_empty() => Some(resolve(s, normals.len(), line)?),
                        _ => None,
                    };
                    corners.push((v, vt, vn));
                }
                if corners.len() < 3 {
                    return Err(Error::parse(
                        "OBJ",
                        format!("line {line}"),
                        "face with fewer than 3 vertices",
                    ));
                }
                corners_per_face.push(corners);
            }
            _ => {}
        }
    }

    let all_uv = !corners_per_face.is_empty()
        && corners_per_face.iter().flatten().all(|c| c.1.is_some());
    let all_vn = !corners_per_face.is_empty()
        && corners_per_face.iter().flatten().all(|c| c.2.is_some());
    let has_colors = has_colors && !positions.is_empty();

    // A position keeps its index for the first attribute combination that
    // references it; later different combinations split off a new vertex.
    let mut mesh = TriangleMesh {
        vertices: positions.clone(),
        normals: all_vn.then(|| vec![Vec3::zeros(); positions.len()]),
        uvs: all_uv.then(|| vec![[0.0; 2]; positions.len()]),
        colors: has_colors.then(|| colors.clone()),
        ..Default::default()
    };
    let mut first: Vec<Option<(Option<usize>, Option<usize>)>> = vec![None; positions.len()];
    let mut split: HashMap<(usize, Option<usize>, Option<usize>), u32> = HashMap::new();
    let mut vertex_for = |mesh: &mut TriangleMesh, (v, vt, vn): (usize, Option<usize>, Option<usize>)| -> u32 {
        let key = (if all_uv { vt } else { None }, if all_vn { vn } else { None });
        match first[v] {
            None => {
                first[v] = Some(key);
                if let (Some(uvs), Some(t)) = (mesh.uvs.as_mut(), key.0) {
                    uvs[v] = texcoords[t];
                }
                if let (Some(ns), Some(n)) = (mesh.normals.as_mut(), key.1) {
                    ns[v] = normals[n];
                }
                v as u32
            }
            Some(k) if k == key => v as u32,
            Some(_) => *split.entry((v, key.0, key.1)).or_insert_with(|| {
                let id = mesh.vertices.len() as u32;
                mesh.vertices.push(positions[v]);
                if let Some(cs) = mesh.colors.as_mut() {
                    cs.push(colors[v]);
                }
                if let Some(uvs) = mesh.uvs.as_mut() {
                    uvs.push(texcoords[key.0.unwrap()]);
                }
                if let Some(ns) = mesh.normals.as_mut() {
                    ns.push(normals[key.1.unwrap()]);
                }
                id
            }),
        }
    };

    for corners in corners_per_face {
        let ids: Vec<u32> = corners.into_iter().map(|c| vertex_for(&mut mesh, c)).collect();
        for k in 1..ids.len() - 1 {
            mesh.faces.push([ids[0], ids[k], ids[k + 1]]);
        }
    }
    Ok(mesh)
}

/// Writes positions with shortest round-trip float formatting, so reading the
/// output back reproduces every coordinate bit for bit.
pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::with_capacity(mesh.vertices.len() * 40 + mesh.faces.len() * 24);
    for (i, v) in mesh.vertices.iter().enumerate() {
        match &mesh.colors {
            Some(c) => {
                let c = c[i];
                let _ = writeln!(out, "v {} {} {} {} {} {}", v.x, v.y, v.z, c[0], c[1], c[2]);
            }
            None => {
                let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
            }
        }
    }
    if let Some(uvs) = &mesh.uvs {
        for t in uvs {
            let _ = writeln!(out, "vt {} {}", t[0], t[1]);
        }
    }
    if let Some(ns) = &mesh.normals {
        for n in ns {
            let _ = writeln!(out, "vn {} {} {}", n.x, n.y, n.z);
        }
    }
    for f in &mesh.faces {
        let [a, b, c] = f.map(|i| i + 1);
        let _ = match (mesh.uvs.is_some(), mesh.normals.is_some()) {
            (false, false) => writeln!(out, "f {a} {b} {c}"),
            (true, false) => writeln!(out, "f {a}/{a} {b}/{b} {c}/{c}"),
            (false, true) => writeln!(out, "f {a}//{a} {b}//{b} {c}//{c}"),
            (true, true) => writeln!(out, "f {a}/{a}/{a} {b}/{b}/{b} {c}/{c}/{c}"),
        };
    }
    out
}
