use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::crossings::{semi_axis_vector, SemiAxisCode};
use crate::error::{Error, Result};
use crate::fct::{AnchorRecord, FctEncoding, FctToken};
use crate::geom::Vec3;

/// Token linear index to label.
pub type LabelMap = HashMap<u64, u32>;

/// Splits `enc` into one encoding per label, in ascending label order.
/// Tokens are copied whole, dual slots included, so each part decodes alone.
pub fn partition(enc: &FctEncoding, labels: &LabelMap) -> Result<Vec<(u32, FctEncoding)>> {
    let mut groups: BTreeMap<u32, Vec<FctToken>> = BTreeMap::new();
    for t in &enc.tokens {
        let linear = enc.grid.linear(t.voxel);
        let label = labels.get(&linear).ok_or(Error::UnlabeledToken(linear))?;
        groups.entry(*label).or_default().push(t.clone());
    }
    Ok(groups
        .into_iter()
        .map(|(label, tokens)| {
            (
                label,
                FctEncoding {
                    tokens,
                    ..enc.clone()
                },
            )
        })
        .collect())
}

/// Labels tokens 0 where `<primal anchor, normal> < offset`, 1 otherwise.
pub fn label_by_halfspace(enc: &FctEncoding, normal: &Vec3, offset: f64) -> LabelMap {
    enc.tokens
        .iter()
        .map(|t| {
            let side = t.primal_position(&enc.grid).dot(normal) >= offset;
            (enc.grid.linear(t.voxel), side as u32)
        })
        .collect()
}

/// Reads a label sidecar: one `linear_index label` pair per line, `#`
/// starting a comment.
pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelMap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = LabelMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let parsed = (|| {
            let index = it.next()?.parse::<u64>().ok()?;
            let label = it.next()?.parse::<u32>().ok()?;
            it.next().is_none().then_some((index, label))
        })();
        let (index, label) =
            parsed.ok_or_else(|| Error::parse("labels", format!("line {}", n + 1), "expected `index label`"))?;
        out.insert(index, label);
    }
    Ok(out)
}

pub fn write_labels(labels: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let sorted: BTreeMap<_, _> = labels.iter().collect();
    let mut text = String::from("# linear_index label\n");
    for (i, l) in sorted {
        text.push_str(&format!("{i} {l}\n"));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Union of the parts' tokens. Tokens sharing a voxel are merged: anchor
/// positions by mean, normals by normalized mean, dual slots where set in
/// any part (masks OR-ed), and per semi-axis the nonzero code entry, the
/// one whose anchor normal is more aligned with the axis on conflict.
pub fn assemble(parts: &[FctEncoding]) -> Result<FctEncoding> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidParameter("assemble needs at least one part".into()))?;
    for p in &parts[1..] {
        if p.grid != first.grid {
            return Err(Error::ResolutionMismatch(first.grid.resolution(), p.grid.resolution()));
        }
        if p.channels != first.channels {
            return Err(Error::InvalidParameter(format!(
                "attribute channels differ: {:?} vs {:?}",
                first.channels, p.channels
            )));
        }
    }
    let mut all: Vec<(&FctToken, usize)> = parts
        .iter()
        .enumerate()
        .flat_map(|(pi, p)| p.tokens.iter().map(move |t| (t, pi)))
        .collect();
    all.sort_by(|a, b| a.0.voxel.cmp(&b.0.voxel).then(a.1.cmp(&b.1)));
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j].0.voxel == all[i].0.voxel {
            j += 1;
        }
        let group: Vec<&FctToken> = all[i..j].iter().map(|(t, _)| *t).collect();
        tokens.push(merge(&group));
        i = j;
    }
    Ok(FctEncoding {
        tokens,
        flags: parts.iter().fold(0, |f, p| f | p.flags),
        ..first.clone()
    })
}

fn merge(group: &[&FctToken]) -> FctToken {
    if group[1..].iter().all(|t| t.bit_eq(group[0])) {
        return group[0].clone();
    }
    let primal = merge_records(&group.iter().map(|t| &t.primal).collect::<Vec<_>>());
    let mut out = FctToken {
        voxel: group[0].voxel,
        primal,
        ..Default::default()
    };
    for d in 0..8 {
        let set: Vec<&AnchorRecord> = group.iter().filter_map(|t| t.dual(d)).collect();
        if !set.is_empty() {
            out.mask |= 1 << d;
            out.duals[d] = merge_records(&set);
        }
    }
    let mut code = [0i8; 6];
    for (e, slot) in code.iter_mut().enumerate() {
        let axis = semi_axis_vector(e);
        let mut best: Option<(i8, f64)> = None;
        for t in group {
            let c = t.code.get(e);
            if c == 0 {
                continue;
            }
            let align = t.primal.normal().dot(&axis).abs();
            best = match best {
                Some((b, ba)) if b == c || ba >= align => Some((b, ba.max(if b == c { align } else { ba }))),
                _ => Some((c, align)),
            };
        }
        *slot = best.map_or(0, |b| b.0);
    }
    out.code = SemiAxisCode(code);
    let n = group[0].attributes.len();
    out.attributes = (0..n)
        .map(|k| (group.iter().map(|t| t.attributes[k] as f64).sum::<f64>() / group.len() as f64) as f32)
        .collect();
    out
}

fn merge_records(records: &[&AnchorRecord]) -> AnchorRecord {
    let first = records[0].local();
    let offset = records.iter().map(|r| r.local() - first).sum::<Vec3>() / records.len() as f64;
    let sum: Vec3 = records.iter().map(|r| r.normal()).sum();
    let normal = if sum.norm() > 1e-12 { sum.normalize() } else { records[0].normal() };
    AnchorRecord::new(first + offset, normal)
}
