//! Fidelity metrics between a predicted and a ground-truth mesh.
//!
//! Both meshes are sampled area-uniformly with the same seed. Each sample is
//! matched to the other mesh, either to the closest point on its surface
//! (default) or to the nearest of its samples. From the matches:
//!
//! * `cd_pred_to_gt`, `cd_gt_to_pred`: mean squared match distance
//!   (unsquared on request),
//! * `hd`: largest match distance over both directions,
//! * `f1`: `100 * 2pr / (p + r)` with precision and recall the fractions of
//!   matches within `tau`,
//! * `anc`: mean over both directions of `|<n_q, n_match>|`,
//! * `ncd`: mean of `1 - <n_q, n_match>` over all matches within `tau`.

pub mod bvh;
pub mod kdtree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh_io::{sample_surface, SurfacePoint, TriangleMesh};
pub use bvh::{SurfaceHit, TriangleBvh};
pub use kdtree::KdTree;

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_TAU: f64 = 0.01;
pub const DEFAULT_SEED: u64 = 0;
/// Point-to-surface distances below this are floating-point noise and
/// reported as zero.
pub const SURFACE_DISTANCE_FLOOR: f64 = 1e-12;
/// Normal dot products within this of +-1 are reported as exactly +-1.
pub const DOT_SNAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    #[default]
    PointToSurface,
    PointToPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub n_samples: usize,
    pub tau: f64,
    pub seed: u64,
    /// Chamfer terms use squared distances.
    pub squared: bool,
    pub mode: DistanceMode,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            n_samples: DEFAULT_SAMPLES,
            tau: DEFAULT_TAU,
            seed: DEFAULT_SEED,
            squared: true,
            mode: DistanceMode::PointToSurface,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub hd: f64,
    pub cd_pred_to_gt: f64,
    pub cd_gt_to_pred: f64,
    pub f1: f64,
    pub ncd: Option<f64>,
    pub anc: f64,
    pub precision: f64,
    pub recall: f64,
    pub tau: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub squared: bool,
    pub mode: DistanceMode,
    pub definitions: Definitions,
}

/// Human-readable statement of every formula, carried in each report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Definitions {
    pub cd: String,
    pub hd: String,
    pub f1: String,
    pub anc: String,
    pub ncd: String,
    pub matching: String,
    pub display_scaling: String,
}

impl Definitions {
    fn new(config: &MetricsConfig) -> Self {
        let sq = if config.squared { "squared" } else { "unsquared" };
        Definitions {
            cd: format!("mean {sq} distance from each sample of one mesh to its match on the other"),
            hd: "maximum unsquared match distance over both directions".into(),
            f1: format!("100 * 2pr / (p + r), p and r the fractions of matches within tau = {}", config.tau),
            anc: "mean over both directions of |<n_query, n_match>|".into(),
            ncd: "mean of 1 - <n_query, n_match> over matches within tau (null if none)".into(),
            matching: match config.mode {
                DistanceMode::PointToSurface => {
                    "closest point on the other mesh's triangles; normal of that triangle".into()
                }
                DistanceMode::PointToPoint => "nearest surface sample of the other mesh; its normal".into(),
            },
            display_scaling: "tables show HD x 1e2 and CD x 1e4".into(),
        }
    }
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned two-column table with the display scaling applied.
    pub fn to_table(&self) -> String {
        let ncd = self.ncd.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        let rows = [
            ("HD (x1e-2)".to_string(), format!("{:.6}", self.hd * 1e2)),
            ("CD P->G (x1e-4)".to_string(), format!("{:.6}", self.cd_pred_to_gt * 1e4)),
            ("CD G->P (x1e-4)".to_string(), format!("{:.6}", self.cd_gt_to_pred * 1e4)),
            (format!("F1@{}", self.tau), format!("{:.4}", self.f1)),
            ("NCD".to_string(), ncd),
            ("ANC".to_string(), format!("{:.6}", self.anc)),
        ];
        let mut out = format!(
            "# {} samples, seed {}, {} chamfer, {:?}\n",
            self.n_samples,
            self.seed,
            if self.squared { "squared" } else { "unsquared" },
            self.mode
        );
        for (k, v) in rows {
            out.push_str(&format!("{k:<18}{v:>14}\n"));
        }
        out
    }
}

/// Exact nearest neighbors of `query` in `target`: `(distance, index)` with
/// ties going to the lowest target index.
pub fn nearest_neighbor(query: &[Vec3], target: &[Vec3]) -> Result<Vec<(f64, usize)>> {
    if target.is_empty() {
        return Err(Error::InvalidParameter("nearest-neighbor target set is empty".into()));
    }
    let tree = KdTree::new(target);
    Ok(query
        .par_iter()
        .map(|q| {
            let (d, i) = tree.nearest(q).expect("target is non-empty");
            (d.sqrt(), i)
        })
        .collect())
}

/// One directional match: squared distance and the matched normal.
struct Match {
    d2: f64,
    normal: Vec3,
}

enum Target {
    Surface(TriangleBvh, Vec<Option<Vec3>>),
    Points(KdTree, Vec<Vec3>),
}

impl Target {
    fn new(mesh: &TriangleMesh, samples: &[SurfacePoint], mode: DistanceMode) -> Self {
        match mode {
            DistanceMode::PointToSurface => {
                let normals = mesh.face_normals();
                let faces = (0..mesh.faces.len() as u32).filter(|&f| normals[f as usize].is_some()).collect();
                Target::Surface(TriangleBvh::with_faces(mesh, faces), normals)
            }
            DistanceMode::PointToPoint => {
                let pts: Vec<Vec3> = samples.iter().map(|s| s.point).collect();
                Target::Points(KdTree::new(&pts), samples.iter().map(|s| s.normal).collect())
            }
        }
    }

    fn matches(&self, query: &[SurfacePoint]) -> Vec<Match> {
        query
            .par_iter()
            .map(|q| match self {
                Target::Surface(bvh, normals) => {
                    let hit = bvh.closest(&q.point).expect("mesh has non-degenerate faces");
                    let floor = SURFACE_DISTANCE_FLOOR * SURFACE_DISTANCE_FLOOR;
                    Match {
                        d2: if hit.distance_squared < floor { 0.0 } else { hit.distance_squared },
                        normal: normals[hit.face as usize].expect("bvh holds non-degenerate faces"),
                    }
                }
                Target::Points(tree, normals) => {
                    let (d2, i) = tree.nearest(&q.point).expect("samples are non-empty");
                    Match { d2, normal: normals[i] }
                }
            })
            .collect()
    }
}

fn dot_snapped(a: &Vec3, b: &Vec3) -> f64 {
    let d = a.dot(b).clamp(-1.0, 1.0);
    if d > 1.0 - DOT_SNAP {
        1.0
    } else if d < -1.0 + DOT_SNAP {
        -1.0
    } else {
        d
    }
}

struct Directional {
    cd: f64,
    max: f64,
    within: usize,
    abs_dot_sum: f64,
    ncd_sum: f64,
}

fn directional(query: &[SurfacePoint], matches: &[Match], config: &MetricsConfig) -> Directional {
    let n = query.len() as f64;
    let mut out = Directional {
        cd: 0.0,
        max: 0.0,
        within: 0,
        abs_dot_sum: 0.0,
        ncd_sum: 0.0,
    };
    for (q, m) in query.iter().zip(matches) {
        let d = m.d2.sqrt();
        out.cd += if config.squared { m.d2 } else { d };
        out.max = out.max.max(d);
        let dot = dot_snapped(&q.normal, &m.normal);
        out.abs_dot_sum += dot.abs();
        if d <= config.tau {
            out.within += 1;
            out.ncd_sum += 1.0 - dot;
        }
    }
    out.cd /= n;
    out
}

pub fn evaluate(pred: &TriangleMesh, gt: &TriangleMesh, config: &MetricsConfig) -> Result<MetricsReport> {
    if config.n_samples == 0 {
        return Err(Error::InvalidParameter("metrics need at least one sample".into()));
    }
    if !(config.tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be > 0, got {}", config.tau)));
    }
    let sample = |m: &TriangleMesh, which: &str| {
        sample_surface(m, config.n_samples, config.seed).map_err(|e| match e {
            Error::AllFacesDegenerate | Error::EmptyMesh => {
                Error::DegenerateMetricsInput(format!("{which} mesh has no non-degenerate faces"))
            }
            other => other,
        })
    };
    let ps = sample(pred, "predicted")?;
    let gs = sample(gt, "ground-truth")?;
    let (to_gt, to_pred) = rayon::join(
        || Target::new(gt, &gs, config.mode).matches(&ps),
        || Target::new(pred, &ps, config.mode).matches(&gs),
    );
    Ok(report(&ps, &gs, &to_gt, &to_pred, config))
}

/// Point-to-point metrics between two given sample sets. `config.seed` is
/// only recorded.
pub fn evaluate_point_sets(
    pred: &[SurfacePoint],
    gt: &[SurfacePoint],
    config: &MetricsConfig,
) -> Result<MetricsReport> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::DegenerateMetricsInput("empty sample set".into()));
    }
    if !(config.tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be > 0, got {}", config.tau)));
    }
    let empty = TriangleMesh::default();
    let to_gt = Target::new(&empty, gt, DistanceMode::PointToPoint).matches(pred);
    let to_pred = Target::new(&empty, pred, DistanceMode::PointToPoint).matches(gt);
    let config = MetricsConfig {
        mode: DistanceMode::PointToPoint,
        n_samples: pred.len(),
        ..*config
    };
    Ok(report(pred, gt, &to_gt, &to_pred, &config))
}

fn report(
    ps: &[SurfacePoint],
    gs: &[SurfacePoint],
    to_gt: &[Match],
    to_pred: &[Match],
    config: &MetricsConfig,
) -> MetricsReport {
    let p = directional(ps, to_gt, config);
    let g = directional(gs, to_pred, config);
    let precision = p.within as f64 / ps.len() as f64;
    let recall = g.within as f64 / gs.len() as f64;
    let f1 = if precision + recall > 0.0 {
        100.0 * 2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let pairs = p.within + g.within;
    MetricsReport {
        hd: p.max.max(g.max),
        cd_pred_to_gt: p.cd,
        cd_gt_to_pred: g.cd,
        f1,
        ncd: (pairs > 0).then(|| (p.ncd_sum + g.ncd_sum) / pairs as f64),
        anc: 0.5 * (p.abs_dot_sum / ps.len() as f64 + g.abs_dot_sum / gs.len() as f64),
        precision,
        recall,
        tau: config.tau,
        n_samples: config.n_samples,
        seed: config.seed,
        squared: config.squared,
        mode: config.mode,
        definitions: Definitions::new(config),
    }
}
