use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fct_bench::{run, BenchManifest};
use fct_core::fixtures::{self, make_fixture};
use fct_core::mesh_io::SurfacePoint;
use fct_core::metrics::{evaluate_point_sets, nearest_neighbor, DistanceMode};
use fct_core::{decode, encode, evaluate, EncoderConfig, MetricsConfig, TriangleMesh, Vec3, VoxelGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Outcome;

fn manifest(name: &str) -> BenchManifest {
    BenchManifest::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("manifests").join(name)).unwrap()
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

pub fn c10_metrics() -> Outcome {
    let mut o = Outcome::new();
    let sphere = make_fixture("sphere").unwrap();
    for mode in [DistanceMode::PointToSurface, DistanceMode::PointToPoint] {
        let r = evaluate(
            &sphere,
            &sphere,
            &MetricsConfig {
                mode,
                ..Default::default()
            },
        )
        .unwrap();
        let got = (r.cd_pred_to_gt, r.cd_gt_to_pred, r.hd, r.f1, r.ncd, r.anc);
        o.check(
            got == (0.0, 0.0, 0.0, 100.0, Some(0.0), 1.0),
            format!("identical meshes, {mode:?}, 1e5 samples: (CD, CD, HD, F1, NCD, ANC) = {got:?}"),
        );
    }

    let at = |x: f64| SurfacePoint {
        point: Vec3::new(x, 0.1, 0.2),
        normal: Vec3::z(),
        face: 0,
    };
    let r = evaluate_point_sets(&[at(0.3)], &[at(0.32)], &MetricsConfig::default()).unwrap();
    let d = 0.32f64 - 0.3;
    o.check(
        r.cd_pred_to_gt == d * d && r.cd_gt_to_pred == d * d && r.hd == d && r.f1 == 0.0,
        format!("two points d = 0.02: CD {:e}, {:e}, HD {}, F1 {}", r.cd_pred_to_gt, r.cd_gt_to_pred, r.hd, r.f1),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut random = |n: usize| -> Vec<Vec3> {
        (0..n)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    };
    let mut target = random(2000);
    // Exact duplicates exercise the lowest-index tie rule.
    for k in 0..50 {
        target[1000 + k] = target[k];
    }
    let query = random(2000);
    let brute: Vec<(f64, usize)> = query
        .iter()
        .map(|q| {
            let (mut best, mut idx) = (f64::INFINITY, 0);
            for (i, t) in target.iter().enumerate() {
                let d2 = (q - t).norm_squared();
                if d2 < best {
                    (best, idx) = (d2, i);
                }
            }
            (best.sqrt(), idx)
        })
        .collect();
    let fast = nearest_neighbor(&query, &target).unwrap();
    let mismatches = fast.iter().zip(&brute).filter(|(a, b)| a != b).count();
    o.check(mismatches == 0, format!("kd-tree vs brute force on 2000 x 2000 points: {mismatches} mismatches"));
    let selfs = nearest_neighbor(&target[..1000], &target[..1000]).unwrap();
    o.check(
        selfs.iter().enumerate().all(|(i, &(d, j))| d == 0.0 && i == j),
        "identical sets map every point to itself at distance 0",
    );

    let gt = fixtures::sphere(Vec3::zeros(), 0.8, 3);
    let pred = decode(&encode(&gt, &VoxelGrid::new(32).unwrap(), &EncoderConfig::default()).unwrap());
    for mode in [DistanceMode::PointToSurface, DistanceMode::PointToPoint] {
        let config = MetricsConfig {
            n_samples: 20_000,
            mode,
            ..Default::default()
        };
        let base = evaluate(&pred, &gt, &config).unwrap();
        for s in [2.0, 0.5, 0.25] {
            let scale = |m: &TriangleMesh| m.map_vertices(|p| p * s);
            let r = evaluate(&scale(&pred), &scale(&gt), &config).unwrap();
            o.check(
                r.hd == base.hd * s && r.cd_pred_to_gt == base.cd_pred_to_gt * s * s && r.cd_gt_to_pred == base.cd_gt_to_pred * s * s,
                format!("scale law, {mode:?}, s = {s}: HD x s and CD x s^2 exactly"),
            );
        }
    }
    o
}

/// Every file under `dir` except the timing report, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if path.file_name().is_some_and(|n| n != "timings.json") {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn c11_determinism() -> Outcome {
    let mut o = Outcome::new();
    let tmp = tempfile::tempdir().unwrap();
    let mut m = manifest("full.toml");
    m.output = tmp.path().join("full");
    let mut snapshots = Vec::new();
    for threads in [1, 8] {
        let start = Instant::now();
        let outcome = pool(threads).install(|| run(&m)).unwrap();
        o.info(format!(
            "{threads} thread(s): {} rows, {} failures, {:.1}s",
            outcome.summary.rows.len(),
            outcome.summary.failures,
            start.elapsed().as_secs_f64()
        ));
        o.check(outcome.summary.failures == 0, format!("{threads} thread(s): every case succeeds"));
        snapshots.push(snapshot(&m.output));
        std::fs::remove_dir_all(&m.output).unwrap();
    }
    let differing: Vec<_> = snapshots[0]
        .iter()
        .filter(|(k, v)| snapshots[1].get(*k) != Some(v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    o.check(
        snapshots[0].len() == snapshots[1].len() && differing.is_empty(),
        format!("{} output files byte-identical across 1 and 8 threads (differing: {differing:?})", snapshots[0].len()),
    );

    let torus = fixtures::torus(Vec3::new(0.011, -0.007, 0.013), 0.55, 0.2, 250, 200);
    let grid = VoxelGrid::new(256).unwrap();
    let time = |threads| {
        pool(threads).install(|| {
            let start = Instant::now();
            let e = encode(&torus, &grid, &EncoderConfig::default()).unwrap();
            (start.elapsed().as_secs_f64(), e)
        })
    };
    let (t1, e1) = time(1);
    let (t8, e8) = time(8);
    o.check(e1.bit_eq(&e8), "100k-triangle torus at R=256: identical tokens at 1 and 8 threads");
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    o.info(format!(
        "soft: encode speedup 8 vs 1 threads = {:.2}x ({t1:.2}s vs {t8:.2}s, {} faces, {cores} core(s) available; target 3x needs >= 8 cores)",
        t1 / t8,
        torus.faces.len()
    ));
    o
}

pub fn c12_fidelity() -> Outcome {
    let mut o = Outcome::new();
    let tmp = tempfile::tempdir().unwrap();
    let mut m = manifest("r512.toml");
    m.output = tmp.path().join("r512");
    let start = Instant::now();
    let outcome = run(&m).unwrap();
    let secs = start.elapsed().as_secs_f64();
    o.check(outcome.summary.failures == 0, format!("{} cases, {} failures", outcome.results.len(), outcome.summary.failures));
    for row in &outcome.summary.rows {
        o.check(
            row.f1 >= 99.0 && row.cd_gt_to_pred <= 1e-5,
            format!("{}: F1 {:.3} >= 99, CD_GtoP {:.2e} <= 1e-5", row.case, row.f1, row.cd_gt_to_pred),
        );
    }
    o.check(secs < 600.0, format!("runtime {secs:.0}s < 600s"));
    o
}
