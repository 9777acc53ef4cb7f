use std::collections::HashSet;

use fct_core::editing::{assemble, filter_hidden, label_by_halfspace, partition, transform, Affine, LabelMap};
use fct_core::fct::{from_bytes, read_fct, to_bytes, write_fct};
use fct_core::fixtures::{self, make_fixture};
use fct_core::metrics::DistanceMode;
use fct_core::{decode, encode, evaluate, EncoderConfig, FctEncoding, FctToken, MetricsConfig, TriangleMesh, Vec3, VoxelGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Outcome;

/// Random triangle soup, random grid and encoder parameters, optional
/// random attribute channels, flags and normalization.
fn random_encoding(rng: &mut ChaCha8Rng) -> FctEncoding {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for _ in 0..rng.random_range(1..40) {
        let c = Vec3::new(rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8));
        let s = rng.random_range(0.01..0.15);
        let base = vertices.len() as u32;
        for _ in 0..3 {
            vertices.push(c + Vec3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s)));
        }
        faces.push([base, base + 1, base + 2]);
    }
    let mesh = TriangleMesh::new(vertices, faces).unwrap();
    let grid = VoxelGrid::new(rng.random_range(2..=48)).unwrap();
    let config = EncoderConfig {
        lambda: if rng.random_bool(0.2) { 0.0 } else { rng.random_range(1e-4..1.0) },
        mu: rng.random_range(1e-4..1.0),
        tau: rng.random_range(0.0..0.01),
        weighted: rng.random_bool(0.5),
    };
    let mut enc = encode(&mesh, &grid, &config).unwrap();
    let channels = match rng.random_range(0..3) {
        0 => vec![],
        1 => vec!["r", "g", "b"],
        _ => vec!["u", "v"],
    };
    enc.channels = channels.iter().map(|c| c.to_string()).collect();
    for t in &mut enc.tokens {
        t.attributes = (0..channels.len()).map(|_| rng.random::<f32>()).collect();
    }
    enc.flags = rng.random_range(0..2);
    enc.normalization.scale = rng.random_range(0.1..10.0);
    enc.normalization.translation = Vec3::new(rng.random(), rng.random(), rng.random());
    enc
}

pub fn c8_serialization() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dir = tempfile::tempdir().unwrap();
    let (mut mismatches, mut undetected, mut injected, mut tokens) = (0, 0, 0, 0);
    for i in 0..100 {
        let enc = random_encoding(&mut rng);
        tokens += enc.len();
        let bytes = to_bytes(&enc).unwrap();
        let back = from_bytes(&bytes).unwrap();
        let path = dir.path().join(format!("{i}.fct"));
        write_fct(&enc, &path).unwrap();
        let from_file = read_fct(&path).unwrap();
        if !(back.bit_eq(&enc) && from_file.bit_eq(&enc) && to_bytes(&back).unwrap() == bytes) {
            mismatches += 1;
        }
        for k in 0..20 {
            let mut bad = bytes.clone();
            match k % 4 {
                0 => {
                    let bit = rng.random_range(0..bad.len() * 8);
                    bad[bit / 8] ^= 1 << (bit % 8);
                }
                1 => {
                    let at = rng.random_range(0..bad.len());
                    bad[at] = bad[at].wrapping_add(rng.random_range(1..=255));
                }
                2 => bad.truncate(rng.random_range(0..bad.len())),
                _ => bad.push(rng.random()),
            }
            injected += 1;
            undetected += from_bytes(&bad).is_ok() as usize;
        }
    }
    o.check(mismatches == 0, format!("100 random encodings ({tokens} tokens): {mismatches} not bit-exact after round trip"));
    o.check(undetected == 0, format!("{undetected} of {injected} injected corruptions went undetected"));
    o
}

/// Token multiset equality with anchor floats compared within 1e-6.
fn same_tokens(a: &FctEncoding, b: &FctEncoding) -> Result<(), String> {
    if a.len() != b.len() {
        return Err(format!("{} vs {} tokens", a.len(), b.len()));
    }
    let mut ta: Vec<&FctToken> = a.tokens.iter().collect();
    let mut tb: Vec<&FctToken> = b.tokens.iter().collect();
    ta.sort_by_key(|t| t.voxel);
    tb.sort_by_key(|t| t.voxel);
    let close = |x: &[f32; 3], y: &[f32; 3]| x.iter().zip(y).all(|(p, q)| (p - q).abs() <= 1e-6);
    for (x, y) in ta.iter().zip(&tb) {
        let records_match = close(&x.primal.position, &y.primal.position)
            && close(&x.primal.normal, &y.primal.normal)
            && (0..8).all(|d| close(&x.duals[d].position, &y.duals[d].position) && close(&x.duals[d].normal, &y.duals[d].normal));
        if x.voxel != y.voxel || x.mask != y.mask || x.code != y.code || !records_match {
            return Err(format!("token {:?} differs: {:?} vs {:?}", x.voxel, x, y));
        }
    }
    Ok(())
}

pub fn c9_editing() -> Outcome {
    let mut o = Outcome::new();
    let config = EncoderConfig::default();
    let grid = VoxelGrid::new(32).unwrap();

    let identity_ok = ["cube", "torus", "non_manifold_fan"].iter().all(|name| {
        let e = encode(&make_fixture(name).unwrap(), &grid, &config).unwrap();
        transform(&e, &Affine::identity()).unwrap().bit_eq(&e)
    });
    o.check(identity_ok, "transform(identity) is bit-identical");

    let mut rotation_failures = Vec::new();
    let mut rotations = 0;
    for name in ["torus", "two_spheres", "non_manifold_fan"] {
        let mesh = make_fixture(name).unwrap();
        let e = encode(&mesh, &grid, &config).unwrap();
        for axis in [Vec3::x(), Vec3::y(), Vec3::z()] {
            for deg in [90.0, 180.0, 270.0] {
                let rot = Affine::rotation(axis, deg);
                let native = transform(&e, &rot).unwrap();
                let oracle = encode(&mesh.map_vertices(|p| rot.apply(p)), &grid, &config).unwrap();
                rotations += 1;
                if native.is_reencoded() {
                    rotation_failures.push(format!("{name} {deg} about {axis:?}: not applied natively"));
                } else if let Err(e) = same_tokens(&native, &oracle) {
                    rotation_failures.push(format!("{name} {deg}: {e}"));
                }
            }
        }
    }
    o.check(
        rotation_failures.is_empty(),
        format!("{} of {rotations} grid rotations differ from encode-after-rotate {:?}", rotation_failures.len(), rotation_failures.first()),
    );

    let plane = fixtures::plane(fixtures::PLANE_HEIGHT);
    let e = encode(&plane, &grid, &config).unwrap();
    let reference = decode(&e);
    let quadrants: LabelMap = e
        .tokens
        .iter()
        .map(|t| (grid.linear(t.voxel), t.voxel.i / 16 + 2 * (t.voxel.j / 16)))
        .collect();
    for (what, labels) in [("halfspace", label_by_halfspace(&e, &Vec3::x(), 0.013)), ("quadrants", quadrants)] {
        let parts: Vec<FctEncoding> = partition(&e, &labels).unwrap().into_iter().map(|(_, p)| p).collect();
        let joined = decode(&assemble(&parts).unwrap());
        let m = evaluate(
            &joined,
            &reference,
            &MetricsConfig {
                mode: DistanceMode::PointToSurface,
                ..Default::default()
            },
        )
        .unwrap();
        let cd = m.cd_pred_to_gt.max(m.cd_gt_to_pred);
        o.check(cd <= 1e-8, format!("plane, {what} split into {} parts: CD {cd:.1e} <= 1e-8", parts.len()));
    }

    let hollow = encode(&fixtures::hollow_cube(), &grid, &config).unwrap();
    let shell: HashSet<u64> = encode(&fixtures::cube(), &grid, &config).unwrap().linear_indices().collect();
    let enclosed: HashSet<u64> = hollow.linear_indices().filter(|i| !shell.contains(i)).collect();
    let (kept, _) = filter_hidden(&hollow, 0.01, 64, 0).unwrap();
    let removed: HashSet<u64> = hollow.linear_indices().filter(|i| kept.find(grid.from_linear(*i)).is_none()).collect();
    o.check(
        !enclosed.is_empty() && removed == enclosed,
        format!("hollow cube, threshold 0.01: removed {} tokens, enclosed {}", removed.len(), enclosed.len()),
    );
    let (kept0, _) = filter_hidden(&hollow, 0.0, 64, 0).unwrap();
    o.check(kept0.bit_eq(&hollow), "threshold 0 removes nothing");
    o
}
