use fct_core::anchorfit::{fit_normal, fit_position, solve_position, AnchorFitProblem};
use fct_core::crossings::segment_triangle_intersect;
use fct_core::geom::Mat3;
use fct_core::voxelizer::{clip_triangle_to_box, polygon_centroid, triangle_box_overlap, SurfaceSample};
use fct_core::{Aabb, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracles::*;
use crate::Outcome;

const INSTANCES: usize = 100_000;
const PROBLEMS: usize = 10_000;

fn rand_vec(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec3 {
    Vec3::new(rng.random_range(lo..hi), rng.random_range(lo..hi), rng.random_range(lo..hi))
}

fn rand_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = rand_vec(rng, -1.0, 1.0);
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn unit_cell() -> Aabb {
    Aabb::new(Vec3::zeros(), Vec3::repeat(1.0))
}

fn sample(centroid: Vec3, normal: Vec3, weight: f64) -> SurfaceSample {
    SurfaceSample {
        centroid,
        normal,
        weight,
        face: 0,
    }
}

/// Random problem over the unit cell: 1 to 12 samples with arbitrary
/// centroids and normals, random weights and regularization.
fn random_problem(rng: &mut ChaCha8Rng) -> AnchorFitProblem {
    let n = rng.random_range(1..=12);
    let samples = (0..n)
        .map(|_| sample(rand_vec(rng, 0.0, 1.0), rand_unit(rng), rng.random_range(0.01..1.0)))
        .collect();
    let mut p = AnchorFitProblem::new(samples, unit_cell(), log_uniform(rng, 1e-4, 1.0), log_uniform(rng, 1e-4, 1.0));
    p.weighted = rng.random_bool(0.5);
    p
}

/// Problem drawn from a tilted plane through the cell with slightly
/// perturbed normals, as produced by a smooth surface.
fn surface_problem(rng: &mut ChaCha8Rng) -> AnchorFitProblem {
    let n = rand_unit(rng);
    let origin = rand_vec(rng, 0.3, 0.7);
    let t = n.cross(&if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() }).normalize();
    let b = n.cross(&t);
    let samples = (0..rng.random_range(2..=10))
        .map(|_| {
            let c = origin + t * rng.random_range(-0.3..0.3) + b * rng.random_range(-0.3..0.3);
            sample(c, (n + rand_vec(rng, -0.05, 0.05)).normalize(), rng.random_range(0.01..1.0))
        })
        .collect();
    AnchorFitProblem::new(samples, unit_cell(), 1e-2, 1e-2)
}

/// `w_i`: polygon area relative to the mean area, or 1 when unweighted.
fn oracle_weight(p: &AnchorFitProblem) -> impl Fn(&SurfaceSample) -> f64 {
    let mean = p.samples.iter().map(|s| s.weight).sum::<f64>() / p.samples.len() as f64;
    let weighted = p.weighted;
    move |s: &SurfaceSample| if weighted { s.weight / mean } else { 1.0 }
}

/// Normal equations assembled from scratch.
fn oracle_system(p: &AnchorFitProblem) -> (Mat3, Vec3) {
    let w = oracle_weight(p);
    let cbar = p.samples.iter().map(|s| s.centroid).sum::<Vec3>() / p.samples.len() as f64;
    let mut a = Mat3::zeros();
    let mut b = Vec3::zeros();
    for s in &p.samples {
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] += w(s) * s.normal[i] * s.normal[j];
            }
            b[i] += w(s) * s.normal[i] * s.normal.dot(&s.centroid);
        }
    }
    for i in 0..3 {
        a[(i, i)] += p.lambda;
        b[i] += p.lambda * cbar[i];
    }
    (a, b)
}

/// Minimizer of `n^T C n + mu |n - nbar|^2` over the given unit vectors.
fn dense_normal_search(p: &AnchorFitProblem, x: &Vec3, dirs: &[Vec3]) -> Vec3 {
    let w = oracle_weight(p);
    let wsum: f64 = p.samples.iter().map(&w).sum();
    let nbar = p.samples.iter().map(|s| s.normal * w(s)).sum::<Vec3>() / wsum;
    let mut c = Mat3::zeros();
    for s in &p.samples {
        let v = x - s.centroid;
        c += v * v.transpose() * w(s);
    }
    let objective = |n: &Vec3| (n.transpose() * c * n)[0] + p.mu * (n - nbar).norm_squared();
    *dirs.iter().min_by(|a, b| objective(a).total_cmp(&objective(b))).unwrap()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

pub fn c6_anchor_solver() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let dirs = fibonacci_sphere(10_000);

    let mut worst_residual: f64 = 0.0;
    let mut angles = Vec::with_capacity(PROBLEMS);
    for _ in 0..PROBLEMS {
        let p = random_problem(&mut rng);
        let x = solve_position(&p).expect("lambda > 0");
        let (a, b) = oracle_system(&p);
        worst_residual = worst_residual.max((a * x - b).norm());
        let xc = fit_position(&p).unwrap();
        let n = fit_normal(&p, &xc).unwrap().normal;
        angles.push(angle_deg(&n, &dense_normal_search(&p, &xc, &dirs)));
    }
    o.check(worst_residual <= 1e-9, format!("normal-equation residual max {worst_residual:.2e} <= 1e-9 over {PROBLEMS} problems"));
    let within = angles.iter().filter(|&&a| a <= 2.0).count();
    let med = median(&mut angles);
    o.check(
        within == PROBLEMS,
        format!(
            "fit_normal within 2 deg of dense search: {within}/{PROBLEMS} ({:.1}%), median {med:.2} deg, max {:.1} deg",
            100.0 * within as f64 / PROBLEMS as f64,
            angles.last().unwrap()
        ),
    );

    let mut surface_angles: Vec<f64> = (0..1000)
        .map(|_| {
            let p = surface_problem(&mut rng);
            let x = fit_position(&p).unwrap();
            angle_deg(&fit_normal(&p, &x).unwrap().normal, &dense_normal_search(&p, &x, &dirs))
        })
        .collect();
    let s_med = median(&mut surface_angles);
    o.info(format!(
        "surface-like problems: {}/1000 within 2 deg, median {s_med:.2} deg, max {:.2} deg",
        surface_angles.iter().filter(|&&a| a <= 2.0).count(),
        surface_angles.last().unwrap()
    ));

    // Coplanar samples with a common normal: x* = cbar, n* = n.
    let mut plane_err: f64 = 0.0;
    for _ in 0..100 {
        let p = surface_problem(&mut rng);
        let n = p.samples[0].normal;
        let samples: Vec<_> = p.samples.iter().map(|s| sample(s.centroid, n, s.weight)).collect();
        let cbar = samples.iter().map(|s| s.centroid).sum::<Vec3>() / samples.len() as f64;
        // Project the centroids exactly onto one plane.
        let d = n.dot(&cbar);
        let samples: Vec<_> = samples.iter().map(|s| sample(s.centroid - n * (n.dot(&s.centroid) - d), n, s.weight)).collect();
        let q = AnchorFitProblem::new(samples, unit_cell(), 1e-2, 1e-2);
        let x = solve_position(&q).unwrap();
        let nstar = fit_normal(&q, &x).unwrap().normal;
        plane_err = plane_err.max((x - q.centroid_mean()).norm()).max((nstar - n).norm());
    }
    o.check(plane_err <= 1e-12, format!("coplanar case: |x* - cbar|, |n* - n| max {plane_err:.1e} <= 1e-12"));

    let mut corner_err: f64 = 0.0;
    for _ in 0..100 {
        let c = rand_vec(&mut rng, 0.1, 0.9);
        let samples: Vec<_> = (0..3)
            .map(|a| {
                let mut off = rand_vec(&mut rng, -0.1, 0.1);
                off[a] = 0.0;
                let mut e = Vec3::zeros();
                e[a] = 1.0;
                sample(c + off, e, 1.0)
            })
            .collect();
        let mut q = AnchorFitProblem::new(samples, unit_cell(), 0.0, 1e-2);
        q.weighted = false;
        corner_err = corner_err.max((solve_position(&q).unwrap() - c).norm());
    }
    o.check(corner_err <= 1e-12, format!("three-plane corner, lambda = 0: |x* - p| max {corner_err:.1e} <= 1e-12"));

    let s = sample(Vec3::new(0.3, 0.6, 0.2), Vec3::new(1.0, 2.0, 2.0) / 3.0, 0.5);
    let q = AnchorFitProblem::new(vec![s], unit_cell(), 1e-2, 1e-2);
    let x = solve_position(&q).unwrap();
    let n = fit_normal(&q, &x).unwrap().normal;
    let single = (x - s.centroid).norm().max((n - s.normal).norm());
    o.check(single <= 1e-12, format!("single sample: error {single:.1e} <= 1e-12"));
    o
}

fn random_box(rng: &mut ChaCha8Rng) -> Aabb {
    let c = rand_vec(rng, -1.0, 1.0);
    let half = rand_vec(rng, 0.05, 0.5);
    Aabb::new(c - half, c + half)
}

fn random_triangle_near(rng: &mut ChaCha8Rng, bx: &Aabb) -> [Vec3; 3] {
    let c = bx.center();
    let spread = bx.half_extent().max() * rng.random_range(0.3..4.0);
    let mut tri = [0; 3].map(|_| c + rand_vec(rng, -1.0, 1.0) * spread);
    if rng.random_bool(0.2) {
        // Hug a box face from outside or inside.
        let a = rng.random_range(0..3);
        let side = if rng.random_bool(0.5) { bx.max[a] } else { bx.min[a] };
        for p in &mut tri {
            p[a] = side + rng.random_range(-1e-4..1e-4);
        }
    }
    if rng.random_bool(0.05) {
        // Degenerate: collinear or repeated vertex.
        tri[2] = tri[0] + (tri[1] - tri[0]) * rng.random_range(-0.5..1.5);
    }
    tri
}

/// Oracle verdict, or `None` inside the 1e-6 separation margin.
fn sat_oracle(tri: &[Vec3; 3], bx: &Aabb) -> Option<bool> {
    let outer = triangle_box_oracle(tri, &grown(bx, 1e-6));
    let inner = triangle_box_oracle(tri, &grown(bx, -1e-6));
    (outer == inner).then_some(outer)
}

pub fn c7_predicates() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let (mut disagree, mut skipped, mut overlaps) = (0, 0, 0);
    for _ in 0..INSTANCES {
        let bx = random_box(&mut rng);
        let tri = random_triangle_near(&mut rng, &bx);
        match sat_oracle(&tri, &bx) {
            None => skipped += 1,
            Some(expect) => {
                overlaps += expect as usize;
                disagree += (triangle_box_overlap(&tri, &bx) != expect) as usize;
            }
        }
    }
    o.check(
        disagree == 0,
        format!("SAT: {disagree} disagreements in {INSTANCES} ({overlaps} overlapping, {skipped} inside margin)"),
    );

    let (mut disagree, mut skipped, mut compared) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    let mut mc_cases = 0;
    let mut mc_worst: f64 = 0.0;
    for _ in 0..INSTANCES {
        let bx = random_box(&mut rng);
        let tri = random_triangle_near(&mut rng, &bx);
        let Some(normal) = fct_core::geom::triangle_normal(&tri[0], &tri[1], &tri[2]) else {
            continue;
        };
        let Some(overlap) = sat_oracle(&tri, &bx) else {
            skipped += 1;
            continue;
        };
        let face_area = bx.extent().max().powi(2);
        let oracle = overlap
            .then(|| planar_hull_area_centroid(&intersection_vertices(&tri, &bx), &normal))
            .flatten();
        let got = clip_triangle_to_box(&tri, &bx, 0, 0).and_then(|p| polygon_centroid(&p, normal));
        match (oracle, got) {
            (Some((area, _)), _) if area < 1e-8 * face_area => skipped += 1,
            (None, None) => compared += 1,
            (Some((area, c)), Some(s)) => {
                compared += 1;
                let err = (s.centroid - c).norm().max((s.weight - area).abs() / area);
                worst = worst.max(err);
                if err > 1e-9 {
                    disagree += 1;
                }
                let tri_area = fct_core::geom::triangle_area(&tri[0], &tri[1], &tri[2]);
                if mc_cases < 20 && area > 0.1 * tri_area {
                    mc_cases += 1;
                    let mc = monte_carlo_centroid(&tri, &bx, 100_000).unwrap();
                    mc_worst = mc_worst.max((mc - s.centroid).norm() / bx.extent().max());
                }
            }
            _ => {
                compared += 1;
                disagree += 1;
            }
        }
    }
    o.check(
        disagree == 0,
        format!("clip centroid: {disagree} disagreements in {compared} compared ({skipped} inside margin), worst error {worst:.1e}"),
    );
    o.check(
        mc_cases == 20 && mc_worst <= 1e-3,
        format!("clip centroid vs Monte Carlo (1e5 samples, {mc_cases} cases): worst {mc_worst:.1e} <= 1e-3"),
    );

    let (mut disagree, mut skipped, mut hits) = (0, 0, 0);
    for _ in 0..INSTANCES {
        let tri = [0; 3].map(|_| rand_vec(&mut rng, -1.0, 1.0));
        let p0 = rand_vec(&mut rng, -1.0, 1.0);
        let (u, v) = (rng.random_range(-0.3..1.3), rng.random_range(-0.3..1.3));
        let target = tri[0] + (tri[1] - tri[0]) * u + (tri[2] - tri[0]) * v * 0.5;
        let p1 = p0 + (target - p0) * rng.random_range(0.5..2.0);
        let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
        let d = p1 - p0;
        let near_parallel = n.dot(&d).abs() < 1e-7 * n.norm() * d.norm();
        // Margin: the plane hit itself, unclamped.
        let t = n.dot(&(tri[0] - p0)) / n.dot(&d);
        let bary = barycentric(&(p0 + d * t), &tri, &n);
        let marginal = near_parallel
            || t.abs() < 1e-7
            || (t - 1.0).abs() < 1e-7
            || bary.is_none_or(|b| b.iter().any(|x| x.abs() < 1e-7));
        if marginal {
            skipped += 1;
            continue;
        }
        let expect = segment_triangle(&p0, &p1, &tri).map(|(t, _)| t);
        let got = segment_triangle_intersect(&p0, &p1, &tri);
        hits += expect.is_some() as usize;
        let agree = match (expect, got) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).abs() <= 1e-9,
            _ => false,
        };
        disagree += !agree as usize;
    }
    o.check(
        disagree == 0,
        format!("segment-triangle: {disagree} disagreements in {INSTANCES} ({hits} hits, {skipped} inside margin)"),
    );
    o
}
