//! The `.fct` binary format (little-endian) and a JSON debug dump.
//!
//! ```text
//! header   "FCT1" | version u16 | resolution u32 x3 | lambda, mu, tau f32
//!          | flags u8 | scale f64 | translation f64 x3 | margin f64
//!          | token count u64 | channel count u8 | channel names [u8; 8] each
//! token    i, j, k u32 | primal 6 x f32 | mask u8 | 6 x f32 per set mask bit
//!          | code u16 (2 bits per semi-axis) | one f32 per channel
//! trailer  CRC32 of every preceding byte
//! ```

use std::path::Path;

use super::token::{AnchorRecord, EncodingParams, FctEncoding, FctToken, FORMAT_VERSION};
use crate::crossings::SemiAxisCode;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh_io::NormalizationTransform;
use crate::voxelizer::{VoxelGrid, VoxelIndex};

pub const MAGIC: [u8; 4] = *b"FCT1";
pub const CHANNEL_NAME_LEN: usize = 8;
/// Size of a file with no tokens and no channels.
pub const EMPTY_FILE_LEN: usize = 4 + 2 + 12 + 12 + 1 + 40 + 8 + 1 + 4;

pub fn to_bytes(enc: &FctEncoding) -> Result<Vec<u8>> {
    if enc.channels.len() > u8::MAX as usize {
        return Err(Error::InvalidParameter(format!("{} attribute channels exceed 255", enc.channels.len())));
    }
    let mut out = Vec::with_capacity(EMPTY_FILE_LEN + enc.tokens.len() * 64);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&enc.version.to_le_bytes());
    for _ in 0..3 {
        out.extend_from_slice(&enc.grid.resolution().to_le_bytes());
    }
    for x in [enc.params.lambda, enc.params.mu, enc.params.tau] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.push(enc.flags);
    let n = &enc.normalization;
    for x in [n.scale, n.translation.x, n.translation.y, n.translation.z, n.margin] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&(enc.tokens.len() as u64).to_le_bytes());
    out.push(enc.channels.len() as u8);
    for name in &enc.channels {
        let bytes = name.as_bytes();
        if bytes.len() > CHANNEL_NAME_LEN || bytes.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "channel name {name:?} must be at most {CHANNEL_NAME_LEN} bytes without NUL"
            )));
        }
        let mut field = [0u8; CHANNEL_NAME_LEN];
        field[..bytes.len()].copy_from_slice(bytes);
        out.extend_from_slice(&field);
    }
    for t in &enc.tokens {
        if t.attributes.len() != enc.channels.len() {
            return Err(Error::InvalidParameter(format!(
                "token {:?} has {} attributes for {} channels",
                t.voxel,
                t.attributes.len(),
                enc.channels.len()
            )));
        }
        for x in t.voxel.as_array() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        write_record(&mut out, &t.primal);
        out.push(t.mask);
        for d in 0..8 {
            if t.has_dual(d) {
                write_record(&mut out, &t.duals[d]);
            }
        }
        out.extend_from_slice(&t.code.pack().to_le_bytes());
        for a in &t.attributes {
            out.extend_from_slice(&a.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

fn write_record(out: &mut Vec<u8>, r: &AnchorRecord) {
    for x in r.position.iter().chain(&r.normal) {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

/// Parses a `.fct` byte buffer.
///
/// Checks run in order: length, magic, version, checksum. A payload whose
/// checksum fails is reported as truncated when its header is plausible but
/// a token runs past the end, and as a checksum mismatch otherwise.
pub fn from_bytes(bytes: &[u8]) -> Result<FctEncoding> {
    if bytes.len() < 6 {
        return Err(Error::Truncated {
            needed: EMPTY_FILE_LEN,
            available: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("length checked");
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if bytes.len() < EMPTY_FILE_LEN {
        return Err(Error::Truncated {
            needed: EMPTY_FILE_LEN,
            available: bytes.len(),
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored == computed {
        return parse(body);
    }
    match parse(body) {
        Err(e @ Error::Truncated { .. }) => Err(e),
        _ => Err(Error::ChecksumMismatch { stored, computed }),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        if end > self.bytes.len() {
            return Err(Error::Truncated {
                needed: end + 4,
                available: self.bytes.len() + 4,
            });
        }
        let out = self.bytes[self.pos..end].try_into().expect("slice of N bytes");
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn record(&mut self) -> Result<AnchorRecord> {
        let mut v = [0f32; 6];
        for x in &mut v {
            *x = self.f32()?;
        }
        Ok(AnchorRecord {
            position: [v[0], v[1], v[2]],
            normal: [v[3], v[4], v[5]],
        })
    }
}

fn parse(body: &[u8]) -> Result<FctEncoding> {
    let mut r = Reader { bytes: body, pos: 6 };
    let res = [r.u32()?, r.u32()?, r.u32()?];
    if res[0] != res[1] || res[1] != res[2] {
        return Err(Error::MalformedPayload(format!("non-cubic resolution {res:?}")));
    }
    let grid = VoxelGrid::new(res[0]).map_err(|_| Error::MalformedPayload(format!("resolution {}", res[0])))?;
    let params = EncodingParams {
        lambda: r.f32()?,
        mu: r.f32()?,
        tau: r.f32()?,
    };
    let flags = r.u8()?;
    let scale = r.f64()?;
    let translation = Vec3::new(r.f64()?, r.f64()?, r.f64()?);
    let margin = r.f64()?;
    let count = r.u64()?;
    let n_channels = r.u8()? as usize;
    let mut channels = Vec::with_capacity(n_channels);
    for _ in 0..n_channels {
        let field = r.take::<CHANNEL_NAME_LEN>()?;
        let end = field.iter().position(|&b| b == 0).unwrap_or(CHANNEL_NAME_LEN);
        let name = std::str::from_utf8(&field[..end])
            .map_err(|_| Error::MalformedPayload("channel name is not UTF-8".into()))?;
        channels.push(name.to_string());
    }
    // Each token needs at least 12 + 24 + 1 + 2 bytes.
    let min_token = 39 + 4 * n_channels;
    let remaining = body.len() - r.pos;
    if count > (remaining / min_token) as u64 {
        return Err(Error::MalformedPayload(format!(
            "token count {count} cannot fit in {remaining} payload bytes"
        )));
    }
    let mut tokens = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let voxel = VoxelIndex::new(r.u32()?, r.u32()?, r.u32()?);
        let primal = r.record()?;
        let mask = r.u8()?;
        let mut duals = [AnchorRecord::default(); 8];
        for (d, slot) in duals.iter_mut().enumerate() {
            if mask & (1 << d) != 0 {
                *slot = r.record()?;
            }
        }
        let code = SemiAxisCode::unpack(r.u16()?)?;
        let mut attributes = Vec::with_capacity(n_channels);
        for _ in 0..n_channels {
            attributes.push(r.f32()?);
        }
        tokens.push(FctToken {
            voxel,
            primal,
            mask,
            duals,
            code,
            attributes,
        });
    }
    if r.pos != body.len() {
        return Err(Error::MalformedPayload(format!(
            "{} trailing bytes after the last token",
            body.len() - r.pos
        )));
    }
    let enc = FctEncoding {
        grid,
        version: FORMAT_VERSION,
        params,
        flags,
        normalization: NormalizationTransform {
            scale,
            translation,
            margin,
        },
        channels,
        tokens,
    };
    enc.check().map_err(Error::MalformedPayload)?;
    Ok(enc)
}

pub fn write_fct(enc: &FctEncoding, path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    let bytes = to_bytes(enc)?;
    std::fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(bytes.len())
}

pub fn read_fct(path: impl AsRef<Path>) -> Result<FctEncoding> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

/// Lossless JSON dump (floats print with round-trip precision).
pub fn to_json(enc: &FctEncoding) -> Result<String> {
    serde_json::to_string_pretty(enc).map_err(|e| Error::MalformedPayload(e.to_string()))
}

pub fn from_json(text: &str) -> Result<FctEncoding> {
    serde_json::from_str(text).map_err(|e| Error::parse("json", format!("line {}", e.line()), e.to_string()))
}
