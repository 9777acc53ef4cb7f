//! Stanford PLY: ASCII and binary (little/big endian) import, binary
//! little-endian export.

use crate::error::{Error, Result};
use crate::geom::Vec3;

use super::TriangleMesh;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Scalar::F32 | Scalar::F64)
    }
}

#[derive(Clone, Debug)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Clone, Copy, PartialEq)]
enum Encoding {
    Ascii,
    BinaryLe,
    BinaryBe,
}

fn err(offset: usize, message: impl Into<String>) -> Error {
    Error::parse("PLY", format!("byte {offset}"), message)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    encoding: Encoding,
    tokens: std::vec::IntoIter<&'a str>,
}

impl<'a> Cursor<'a> {
    fn read(&mut self, ty: Scalar) -> Result<f64> {
        if self.encoding == Encoding::Ascii {
            let tok = self
                .tokens
                .next()
                .ok_or_else(|| err(self.pos, "unexpected end of ASCII body"))?;
            return tok
                .parse::<f64>()
                .map_err(|_| err(self.pos, format!("bad number {tok:?}")));
        }
        let n = ty.size();
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(err(self.pos, "unexpected end of binary body"));
        }
        let mut buf = [0u8; 8];
        buf[..n].copy_from_slice(&self.bytes[self.pos..end]);
        if self.encoding == Encoding::BinaryBe {
            buf[..n].reverse();
        }
        self.pos = end;
        Ok(match ty {
            Scalar::I8 => buf[0] as i8 as f64,
            Scalar::U8 => buf[0] as f64,
            Scalar::I16 => i16::from_le_bytes([buf[0], buf[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([buf[0], buf[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([buf[0], buf[1], buf[2], buf[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([buf[0], buf[1], buf[2], buf[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([buf[0], buf[1], buf[2], buf[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(buf),
        })
    }
}

pub fn read_ply(bytes: &[u8]) -> Result<TriangleMesh> {
    let header_end = bytes
        .windows(10)
        .position(|w| w == b"end_header")
        .ok_or_else(|| err(0, "missing end_header"))?;
    let mut body_start = header_end + 10;
    while body_start < bytes.len() && bytes[body_start] != b'\n' {
        body_start += 1;
    }
    body_start += 1;
    let header = std::str::from_utf8(&bytes[..header_end]).map_err(|_| err(0, "header not UTF-8"))?;

    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    for (i, line) in header.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["ply"] | [] => {}
            ["format", fmt, _version] => {
                encoding = Some(match *fmt {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLe,
                    "binary_big_endian" => Encoding::BinaryBe,
                    other => return Err(err(0, format!("unknown format {other:?}"))),
                })
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| err(0, format!("header line {}: bad count", i + 1)))?,
                properties: Vec::new(),
            }),
            ["property", "list", count_ty, item_ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| err(0, "property before element"))?;
                let c = Scalar::parse(count_ty).ok_or_else(|| err(0, "bad list count type"))?;
                let t = Scalar::parse(item_ty).ok_or_else(|| err(0, "bad list item type"))?;
                el.properties.push(Property::List(name.to_string(), c, t));
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| err(0, "property before element"))?;
                let t = Scalar::parse(ty).ok_or_else(|| err(0, format!("bad type {ty:?}")))?;
                el.properties.push(Property::Scalar(name.to_string(), t));
            }
            _ => return Err(err(0, format!("header line {}: {line:?}", i + 1))),
        }
    }
    let encoding = encoding.ok_or_else(|| err(0, "missing format line"))?;
    let body = &bytes[body_start.min(bytes.len())..];
    let ascii_tokens: Vec<&str> = if encoding == Encoding::Ascii {
        std::str::from_utf8(body)
            .map_err(|_| err(body_start, "ASCII body not UTF-8"))?
            .split_whitespace()
            .collect()
    } else {
        Vec::new()
    };
    let mut cur = Cursor {
        bytes,
        pos: body_start,
        encoding,
        tokens: ascii_tokens.into_iter(),
    };

    let mut mesh = TriangleMesh::default();
    for el in &elements {
        let names: Vec<&str> = el
            .properties
            .iter()
            .map(|p| match p {
                Property::Scalar(n, _) | Property::List(n, _, _) => n.as_str(),
            })
            .collect();
        let has = |n: &str| names.contains(&n);
        let is_vertex = el.name == "vertex";
        let with_normals = is_vertex && has("nx") && has("ny") && has("nz");
        let uv_names = [("u", "v"), ("s", "t"), ("texture_u", "texture_v")]
            .into_iter()
            .find(|(a, b)| has(a) && has(b));
        let with_uv = is_vertex && uv_names.is_some();
        let with_colors = is_vertex && has("red") && has("green") && has("blue");
        if with_normals {
            mesh.normals = Some(Vec::with_capacity(el.count));
        }
        if with_uv {
            mesh.uvs = Some(Vec::with_capacity(el.count));
        }
        if with_colors {
            mesh.colors = Some(Vec::with_capacity(el.count));
        }
        for _ in 0..el.count {
            let mut p = Vec3::zeros();
            let mut n = Vec3::zeros();
            let mut uv = [0.0; 2];
            let mut rgb = [0.0; 3];
            for prop in &el.properties {
                match prop {
                    Property::Scalar(name, ty) => {
                        let v = cur.read(*ty)?;
                        if !is_vertex {
                            continue;
                        }
                        let color = |v: f64| if ty.is_integer() { v / 255.0 } else { v };
                        match name.as_str() {
                            "x" => p.x = v,
                            "y" => p.y = v,
                            "z" => p.z = v,
                            "nx" => n.x = v,
                            "ny" => n.y = v,
                            "nz" => n.z = v,
                            "red" => rgb[0] = color(v),
                            "green" => rgb[1] = color(v),
                            "blue" => rgb[2] = color(v),
                            other => {
                                if let Some((un, vn)) = uv_names {
                                    if other == un {
                                        uv[0] = v;
                                    } else if other == vn {
                                        uv[1] = v;
                                    }
                                }
                            }
                        }
                    }
                    Property::List(name, count_ty, item_ty) => {
                        let at = cur.pos;
                        let count = cur.read(*count_ty)? as usize;
                        let mut items = Vec::with_capacity(count);
                        for _ in 0..count {
                            items.push(cur.read(*item_ty)?);
                        }
                        if el.name == "face" && (name == "vertex_indices" || name == "vertex_index") {
                            if count < 3 {
                                return Err(err(at, "face with fewer than 3 vertices"));
                            }
                            let ids: Vec<u32> = items.iter().map(|&v| v as u32).collect();
                            for k in 1..ids.len() - 1 {
                                mesh.faces.push([ids[0], ids[k], ids[k + 1]]);
                            }
                        }
                    }
                }
            }
            if is_vertex {
                mesh.vertices.push(p);
                if let Some(ns) = mesh.normals.as_mut() {
                    ns.push(n);
                }
                if let Some(us) = mesh.uvs.as_mut() {
                    us.push(uv);
                }
                if let Some(cs) = mesh.colors.as_mut() {
                    cs.push(rgb);
                }
            }
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

pub fn write_ply(mesh: &TriangleMesh) -> Vec<u8> {
    let mut header = String::from("ply\nformat binary_little_endian 1.0\ncomment fct-core\n");
    header += &format!("element vertex {}\n", mesh.vertices.len());
    header += "property double x\nproperty double y\nproperty double z\n";
    if mesh.normals.is_some() {
        header += "property double nx\nproperty double ny\nproperty double nz\n";
    }
    if mesh.uvs.is_some() {
        header += "property double u\nproperty double v\n";
    }
    if mesh.colors.is_some() {
        header += "property float red\nproperty float green\nproperty float blue\n";
    }
    header += &format!(
        "element face {}\nproperty list uchar uint vertex_indices\nend_header\n",
        mesh.faces.len()
    );
    let mut out = header.into_bytes();
    for (i, v) in mesh.vertices.iter().enumerate() {
        for c in v.iter() {
            out.extend_from_slice(&c.to_le_bytes());
        }
        if let Some(ns) = &mesh.normals {
            for c in ns[i].iter() {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        if let Some(us) = &mesh.uvs {
            for c in us[i] {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        if let Some(cs) = &mesh.colors {
            for c in cs[i] {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
    }
    for f in &mesh.faces {
        out.push(3);
        for i in f {
            out.extend_from_slice(&i.to_le_bytes());
        }
    }
    out
}
