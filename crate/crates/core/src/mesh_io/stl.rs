//! STL import (binary and ASCII). Facets are welded on exact position
//! equality to recover an indexed mesh.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::Vec3;

use super::TriangleMesh;

pub(super) fn looks_like_binary_stl(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    bytes.len() == 84 + 50 * n
}

#[derive(Default)]
struct Welder {
    mesh: TriangleMesh,
    ids: HashMap<[u64; 3], u32>,
}

impl Welder {
    fn vertex(&mut self, p: Vec3) -> u32 {
        let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
        *self.ids.entry(key).or_insert_with(|| {
            self.mesh.vertices.push(p);
            (self.mesh.vertices.len() - 1) as u32
        })
    }

    fn facet(&mut self, tri: [Vec3; 3]) {
        let f = tri.map(|p| self.vertex(p));
        self.mesh.faces.push(f);
    }
}

pub fn read_stl(bytes: &[u8]) -> Result<TriangleMesh> {
    let mut w = Welder::default();
    if looks_like_binary_stl(bytes) {
        let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
        for t in 0..n {
            let base = 84 + 50 * t + 12;
            let f = |o: usize| {
                let s = base + o * 4;
                f32::from_le_bytes([bytes[s], bytes[s + 1], bytes[s + 2], bytes[s + 3]]) as f64
            };
            let tri = [0, 1, 2].map(|v| Vec3::new(f(3 * v), f(3 * v + 1), f(3 * v + 2)));
            w.facet(tri);
        }
        return Ok(w.mesh);
    }
    let text = std::str::from_utf8(bytes).map_err(|_| Error::parse("STL", "byte 0", "neither binary nor ASCII STL"))?;
    let mut pending = Vec::with_capacity(3);
    for (ln, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.first() == Some(&"vertex") {
            if toks.len() != 4 {
                return Err(Error::parse("STL", format!("line {}", ln + 1), "vertex needs 3 coordinates"));
            }
            let mut c = [0.0; 3];
            for (slot, t) in c.iter_mut().zip(&toks[1..]) {
                *slot = t
                    .parse()
                    .map_err(|_| Error::parse("STL", format!("line {}", ln + 1), format!("bad number {t:?}")))?;
            }
            pending.push(Vec3::new(c[0], c[1], c[2]));
        } else if toks.first() == Some(&"endloop") {
            if pending.len() != 3 {
                return Err(Error::parse("STL", format!("line {}", ln + 1), "facet without 3 vertices"));
            }
            w.facet([pending[0], pending[1], pending[2]]);
            pending.clear();
        }
    }
    Ok(w.mesh)
}
