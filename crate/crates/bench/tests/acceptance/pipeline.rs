use std::collections::HashMap;
use std::time::Instant;

use fct_core::fixtures::{self, make_fixture, NESTED_INNER_RADIUS, SPHERE_RADIUS};
use fct_core::mesh_io::sample_surface;
use fct_core::metrics::TriangleBvh;
use fct_core::{decode, encode, evaluate, EncoderConfig, MetricsConfig, TriangleMesh, Vec3, VoxelGrid};

use crate::Outcome;

fn roundtrip(mesh: &TriangleMesh, r: u32, config: &EncoderConfig) -> TriangleMesh {
    let grid = VoxelGrid::new(r).unwrap();
    decode(&encode(mesh, &grid, config).unwrap())
}

pub fn c1_plane_exactness() -> Outcome {
    let mut o = Outcome::new();
    let c = fixtures::PLANE_HEIGHT;
    for r in [8, 32, 128] {
        let grid = VoxelGrid::new(r).unwrap();
        let slab = ((c + 1.0) / grid.cell_size()).floor();
        let inside = (c - (-1.0 + slab * grid.cell_size())).min(-1.0 + (slab + 1.0) * grid.cell_size() - c);
        assert!(inside > 1e-3 * grid.cell_size(), "offset must be strictly inside a slab");
        let start = Instant::now();
        let mesh = roundtrip(&fixtures::plane(c), r, &EncoderConfig::default());
        let secs = start.elapsed().as_secs_f64();
        let dev = mesh.vertices.iter().map(|v| (v.z - c).abs()).fold(0.0, f64::max);
        o.check(!mesh.faces.is_empty() && dev <= 1e-6, format!("R={r}: max |z-c| = {dev:.2e} <= 1e-6"));
        o.check(secs < 1.0, format!("R={r}: {secs:.3}s < 1s"));
    }
    o
}

pub fn c2_cube_corners() -> Outcome {
    let mut o = Outcome::new();
    let config = EncoderConfig {
        lambda: 1e-4,
        ..Default::default()
    };
    for (r, tol) in [(16, 1e-3), (8, 5e-3)] {
        let start = Instant::now();
        let mesh = roundtrip(&fixtures::cube(), r, &config);
        let secs = start.elapsed().as_secs_f64();
        let worst = fixtures::cube_corners()
            .iter()
            .map(|c| mesh.vertices.iter().map(|v| (v - c).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        o.check(worst <= tol, format!("R={r}: worst corner distance {worst:.2e} <= {tol:e}"));
        o.check(secs < 1.0, format!("R={r}: {secs:.3}s < 1s"));
    }
    o
}

pub fn c3_sphere_convergence() -> Outcome {
    let mut o = Outcome::new();
    let gt = make_fixture("sphere").unwrap();
    let start = Instant::now();
    let mut cds = Vec::new();
    for r in [64, 128, 256] {
        let pred = roundtrip(&gt, r, &EncoderConfig::default());
        let m = evaluate(&pred, &gt, &MetricsConfig::default()).unwrap();
        let h = 2.0 / r as f64;
        o.check(m.hd <= 2.0 * h, format!("R={r}: HD {:.3e} <= 2h = {:.3e}", m.hd, 2.0 * h));
        o.info(format!("R={r}: CD_GtoP {:.3e}, CD_PtoG {:.3e}, F1 {:.3}", m.cd_gt_to_pred, m.cd_pred_to_gt, m.f1));
        cds.push(m.cd_gt_to_pred);
    }
    o.check(cds[1] <= 1e-7, format!("R=128: CD_GtoP {:.3e} <= 1e-7", cds[1]));
    o.check(cds[0] > cds[1] && cds[1] > cds[2], "CD_GtoP strictly decreasing in R");
    let secs = start.elapsed().as_secs_f64();
    o.check(secs < 60.0, format!("total {secs:.1}s < 60s"));
    o
}

/// Faces that coincide with another face of opposite winding.
fn opposite_coincident_pairs(mesh: &TriangleMesh) -> usize {
    let key = |p: &Vec3| [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
    let mut seen: HashMap<[[u64; 3]; 3], Vec<bool>> = HashMap::new();
    for f in &mesh.faces {
        let mut ks = f.map(|i| key(&mesh.vertices[i as usize]));
        // Parity of the sorting permutation gives the winding.
        let mut parity = false;
        for i in 0..3 {
            for j in 0..2 - i {
                if ks[j] > ks[j + 1] {
                    ks.swap(j, j + 1);
                    parity = !parity;
                }
            }
        }
        seen.entry(ks).or_default().push(parity);
    }
    seen.values()
        .map(|w| w.iter().filter(|&&p| p).count().min(w.iter().filter(|&&p| !p).count()))
        .sum()
}

pub fn c4_open_surface() -> Outcome {
    let mut o = Outcome::new();
    let disk = make_fixture("disk").unwrap();
    for r in [16, 32, 64, 128] {
        let mesh = roundtrip(&disk, r, &EncoderConfig::default());
        let pairs = opposite_coincident_pairs(&mesh);
        let comps = mesh.connected_components();
        o.check(pairs == 0, format!("R={r}: {pairs} coincident opposite-orientation face pairs"));
        o.check(comps == 1, format!("R={r}: {comps} connected component(s)"));
    }
    o
}

/// Two-sided Hausdorff distance between a mesh and the sphere
/// `|p| = radius`: mesh vertices and surface samples against the analytic
/// sphere, and dense sphere points against the mesh surface.
fn sphere_hausdorff(mesh: &TriangleMesh, radius: f64) -> f64 {
    let to_sphere = sample_surface(mesh, 50_000, 1)
        .unwrap()
        .iter()
        .map(|s| s.point)
        .chain(mesh.vertices.iter().copied())
        .map(|p| (p.norm() - radius).abs())
        .fold(0.0, f64::max);
    let bvh = TriangleBvh::new(mesh);
    let to_mesh = crate::oracles::fibonacci_sphere(50_000)
        .iter()
        .map(|d| bvh.closest(&(d * radius)).unwrap().distance_squared.sqrt())
        .fold(0.0, f64::max);
    to_sphere.max(to_mesh)
}

pub fn c5_nested_spheres() -> Outcome {
    let mut o = Outcome::new();
    let r = 128;
    let h = 2.0 / r as f64;
    let mesh = roundtrip(&fixtures::nested_spheres(), r, &EncoderConfig::default());
    let (labels, count) = mesh.face_components();
    o.check(count == 2, format!("{count} connected components"));
    if count != 2 {
        return o;
    }
    let mut parts: Vec<TriangleMesh> = (0..2).map(|c| mesh.filter_faces(|f| labels[f] == c)).collect();
    let mean_radius = |m: &TriangleMesh| m.vertices.iter().map(|v| v.norm()).sum::<f64>() / m.vertices.len() as f64;
    parts.sort_by(|a, b| mean_radius(a).total_cmp(&mean_radius(b)));
    for (part, radius) in parts.iter().zip([NESTED_INNER_RADIUS, SPHERE_RADIUS]) {
        let hd = sphere_hausdorff(part, radius);
        o.check(hd <= 2.0 * h, format!("sphere r={radius}: HD {hd:.3e} <= 2h = {:.3e}", 2.0 * h));
    }
    o
}
