//! Reproducible desk-scale experiments: build or load a mesh per case,
//! encode it at each listed resolution, decode, and score the result
//! against the input.
//!
//! A run writes, under the manifest's output directory:
//!
//! * `cases/<name>/r<R>/{decoded.obj, tokens.fct, report.json}`
//! * `summary.json` and `summary.txt`: one row per case and resolution plus
//!   mean ± std per resolution
//! * `timings.json`: wall-clock seconds per stage (kept apart so that every
//!   other file is identical across runs and thread counts)
//! * `provenance.json`: manifest, versions and seed

mod manifest;
mod summary;

use std::path::{Path, PathBuf};
use std::time::Instant;

use fct_core::fixtures::make_fixture;
use fct_core::mesh_io::{load_mesh, normalize, save_mesh};
use fct_core::remesher::{decode_with_report, DecodeOptions, DecodeReport};
use fct_core::{encode_with_report, evaluate, write_fct, EncodeReport, MetricsReport, TriangleMesh, VoxelGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use manifest::{BenchManifest, CaseSpec, EncoderSection, MetricsSection};
pub use summary::{format_table, summarize, Summary, SummaryRow};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("I/O error on {0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error(transparent)]
    Core(#[from] fct_core::Error),
}

/// Outcome of one case at one resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case: String,
    pub resolution: u32,
    /// `None` when the case failed; see `error`.
    pub metrics: Option<MetricsReport>,
    pub encode: Option<EncodeReport>,
    pub decode: Option<DecodeReport>,
    pub error: Option<String>,
}

impl CaseResult {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Per-stage wall-clock seconds for one case and resolution.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseTimings {
    pub case: String,
    pub resolution: u32,
    pub voxelize: f64,
    pub fit: f64,
    pub crossings: f64,
    pub decode: f64,
    pub metrics: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchOutcome {
    pub results: Vec<CaseResult>,
    pub summary: Summary,
    pub timings: Vec<CaseTimings>,
}

#[derive(Serialize)]
struct Provenance<'a> {
    manifest: &'a BenchManifest,
    seed: u64,
    fct_core_version: &'a str,
    fct_bench_version: &'a str,
}

/// Runs every case of `manifest` on the current rayon pool and writes the
/// artifacts. A failing case is recorded and the run continues; only
/// failures to write the run-level files are returned as errors.
pub fn run(manifest: &BenchManifest) -> Result<BenchOutcome, BenchError> {
    manifest.validate()?;
    let out = &manifest.output;
    create_dir(out)?;
    let jobs: Vec<(&CaseSpec, u32)> = manifest
        .cases
        .iter()
        .flat_map(|c| c.resolutions.iter().map(move |&r| (c, r)))
        .collect();
    let (results, timings): (Vec<_>, Vec<_>) = jobs
        .par_iter()
        .map(|&(case, r)| run_case(case, r, manifest.seed, out))
        .unzip();
    let summary = summarize(&results);
    write_json(&out.join("summary.json"), &summary)?;
    write_text(&out.join("summary.txt"), &format_table(&summary))?;
    write_json(&out.join("timings.json"), &timings)?;
    write_json(
        &out.join("provenance.json"),
        &Provenance {
            manifest,
            seed: manifest.seed,
            fct_core_version: fct_core::VERSION,
            fct_bench_version: env!("CARGO_PKG_VERSION"),
        },
    )?;
    for r in results.iter().filter(|r| !r.is_ok()) {
        log::warn!("case {} at R={} failed: {}", r.case, r.resolution, r.error.as_deref().unwrap_or(""));
    }
    Ok(BenchOutcome {
        results,
        summary,
        timings,
    })
}

/// Loads the case's input mesh in the canonical domain.
pub fn case_mesh(case: &CaseSpec) -> Result<TriangleMesh, BenchError> {
    match (&case.fixture, &case.mesh) {
        (Some(name), _) => Ok(make_fixture(name)?),
        (None, Some(path)) => {
            let mesh = load_mesh(path, None)?;
            Ok(normalize(&mesh, case.encoder.margin)?.0)
        }
        (None, None) => Err(BenchError::Manifest(format!("case {:?} has no input", case.name))),
    }
}

fn run_case(case: &CaseSpec, resolution: u32, seed: u64, out: &Path) -> (CaseResult, CaseTimings) {
    let mut timings = CaseTimings {
        case: case.name.clone(),
        resolution,
        ..Default::default()
    };
    let start = Instant::now();
    let mut result = CaseResult {
        case: case.name.clone(),
        resolution,
        metrics: None,
        encode: None,
        decode: None,
        error: None,
    };
    if let Err(e) = pipeline(case, resolution, seed, out, &mut result, &mut timings) {
        result.error = Some(e.to_string());
    }
    timings.total = start.elapsed().as_secs_f64();
    log::info!("{} R={} done in {:.2}s", case.name, resolution, timings.total);
    (result, timings)
}

fn pipeline(
    case: &CaseSpec,
    resolution: u32,
    seed: u64,
    out: &Path,
    result: &mut CaseResult,
    timings: &mut CaseTimings,
) -> Result<(), BenchError> {
    let dir = out.join("cases").join(&case.name).join(format!("r{resolution}"));
    create_dir(&dir)?;
    let mesh = case_mesh(case)?;
    let grid = VoxelGrid::new(resolution)?;
    let (enc, mut enc_report) = encode_with_report(&mesh, &grid, &case.encoder.config())?;
    timings.voxelize = enc_report.timings.voxelize;
    timings.fit = enc_report.timings.fit;
    timings.crossings = enc_report.timings.crossings;
    enc_report.timings = Default::default();
    write_fct(&enc, dir.join("tokens.fct"))?;

    let t = Instant::now();
    let (decoded, dec_report) = decode_with_report(&enc, &DecodeOptions::default());
    timings.decode = t.elapsed().as_secs_f64();
    result.encode = Some(enc_report);
    result.decode = Some(dec_report);
    save_mesh(&decoded, dir.join("decoded.obj"))?;

    let t = Instant::now();
    let metrics = evaluate(&decoded, &mesh, &case.metrics.config(seed))?;
    timings.metrics = t.elapsed().as_secs_f64();
    result.metrics = Some(metrics);
    write_json(&dir.join("report.json"), result)
}

fn create_dir(path: &Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(path).map_err(|e| BenchError::Io(path.to_path_buf(), e))
}

fn write_text(path: &Path, text: &str) -> Result<(), BenchError> {
    std::fs::write(path, text).map_err(|e| BenchError::Io(path.to_path_buf(), e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), BenchError> {
    let mut text = serde_json::to_string_pretty(value).expect("bench records serialize");
    text.push('\n');
    write_text(path, &text)
}
