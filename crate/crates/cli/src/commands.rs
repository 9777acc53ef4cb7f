use std::fs;
use std::path::Path;

use fct_bench::{BenchError, BenchManifest};
use fct_core::editing::{self, Affine};
use fct_core::fct::{attach_attributes, to_bytes, to_json, AttributeSpec};
use fct_core::fixtures::make_fixture;
use fct_core::geom::Mat3;
use fct_core::mesh_io::{denormalize, load_mesh, normalize, save_mesh};
use fct_core::metrics::DistanceMode;
use fct_core::remesher::{decode_with_report, DecodeOptions, GatherMode};
use fct_core::{
    encode_with_report, evaluate, read_fct, write_fct, EncoderConfig, FctEncoding, MetricsConfig,
    NormalizationTransform, TriangleMesh, Vec3, VoxelGrid,
};
use serde::Serialize;

use crate::args::*;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Roundtrip(a) => roundtrip(a),
        Command::Metrics(a) => metrics(a),
        Command::Edit(e) => edit(e),
        Command::Bench(a) => bench(a),
        Command::Inspect(a) => inspect(a),
    }
}

/// Loads a mesh file and scales it into the domain, or builds a fixture
/// (already in the domain, identity normalization).
fn domain_mesh(input: &str, margin: f64) -> Result<(TriangleMesh, NormalizationTransform)> {
    match input.strip_prefix("fixture:") {
        Some(name) => Ok((make_fixture(name).map_err(CliError::usage)?, NormalizationTransform::identity())),
        None => Ok(normalize(&load_mesh(input, None)?, margin)?),
    }
}

/// A mesh compared as given: fixtures are built, files are loaded unchanged.
fn raw_mesh(input: &str) -> Result<TriangleMesh> {
    match input.strip_prefix("fixture:") {
        Some(name) => make_fixture(name).map_err(CliError::usage),
        None => Ok(load_mesh(input, None)?),
    }
}

fn encoder_config(a: &EncoderArgs) -> EncoderConfig {
    EncoderConfig {
        lambda: a.lambda,
        mu: a.mu,
        tau: a.tau,
        weighted: !a.unweighted,
    }
}

fn metrics_config(a: &MetricArgs, tau: f64) -> MetricsConfig {
    MetricsConfig {
        n_samples: a.samples,
        tau,
        seed: a.seed,
        squared: a.squared,
        mode: match a.mode {
            Mode::PointToSurface => DistanceMode::PointToSurface,
            Mode::PointToPoint => DistanceMode::PointToPoint,
        },
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Compute(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

fn encode(a: EncodeArgs) -> Result<()> {
    let (mesh, norm) = domain_mesh(&a.input, a.encoder.margin)?;
    let grid = VoxelGrid::new(a.res)?;
    let (mut enc, report) = encode_with_report(&mesh, &grid, &encoder_config(&a.encoder))?;
    enc.normalization = norm;
    let spec = match a.attrs {
        None => None,
        Some(AttrKind::Rgb) => Some(AttributeSpec::Rgb),
        Some(AttrKind::Uv) => Some(AttributeSpec::Uv),
        Some(AttrKind::Texture) => Some(AttributeSpec::Texture(a.texture.clone().expect("required by clap"))),
    };
    if let Some(spec) = spec {
        enc = attach_attributes(&enc, &mesh, &spec)?;
    }
    let bytes = write_fct(&enc, &a.out)?;
    log::info!("{} tokens, {} bytes -> {}", enc.len(), bytes, a.out.display());
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    Ok(())
}

fn decode(a: DecodeArgs) -> Result<()> {
    let enc = read_fct(&a.input)?;
    let options = DecodeOptions {
        gather: match a.gather {
            Gather::Mean => GatherMode::Mean,
            Gather::NormalWeighted => GatherMode::NormalWeighted,
        },
    };
    let (mut mesh, report) = decode_with_report(&enc, &options);
    if !a.grid_space {
        mesh = denormalize(&mesh, &enc.normalization);
    }
    save_mesh(&mesh, &a.out)?;
    log::info!("{} vertices, {} faces -> {}", mesh.vertices.len(), mesh.faces.len(), a.out.display());
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RoundtripReport {
    input: String,
    resolution: u32,
    encoder: EncoderConfig,
    tokens: usize,
    file_bytes: usize,
    encode: fct_core::EncodeReport,
    decode: fct_core::remesher::DecodeReport,
    metrics: fct_core::MetricsReport,
}

fn roundtrip(a: RoundtripArgs) -> Result<()> {
    let (mesh, norm) = domain_mesh(&a.input, a.encoder.margin)?;
    let config = encoder_config(&a.encoder);
    let (mut enc, mut encode) = encode_with_report(&mesh, &VoxelGrid::new(a.res)?, &config)?;
    // Wall-clock figures would make the report depend on the machine.
    encode.timings = Default::default();
    enc.normalization = norm;
    let file_bytes = to_bytes(&enc)?.len();
    let (decoded, decode) = decode_with_report(&enc, &DecodeOptions::default());
    let metrics = evaluate(&decoded, &mesh, &metrics_config(&a.metrics, a.f_tau))?;
    if let Some(path) = &a.mesh {
        save_mesh(&decoded, path)?;
    }
    write_json(
        &a.report,
        &RoundtripReport {
            input: a.input,
            resolution: a.res,
            encoder: config,
            tokens: enc.len(),
            file_bytes,
            encode,
            decode,
            metrics,
        },
    )
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let report = evaluate(&raw_mesh(&a.pred)?, &raw_mesh(&a.gt)?, &metrics_config(&a.metrics, a.tau))?;
    write_json(&a.out, &report)
}

fn edit(command: EditCommand) -> Result<()> {
    match command {
        EditCommand::FilterHidden(a) => {
            let enc = read_fct(&a.input)?;
            let (kept, report) = editing::filter_hidden(&enc, a.threshold, a.directions, a.seed)?;
            log::info!("kept {} of {} tokens", kept.len(), enc.len());
            write_fct(&kept, &a.out)?;
            if let Some(path) = &a.report {
                write_json(path, &report)?;
            }
            Ok(())
        }
        EditCommand::Transform(a) => {
            let enc = read_fct(&a.input)?;
            let rotation = if a.degrees == 0.0 {
                Affine::identity()
            } else {
                let axis = Vec3::from(a.axis);
                if axis.norm() == 0.0 {
                    return Err(CliError::Usage("rotation axis must be nonzero".into()));
                }
                Affine::rotation(axis, a.degrees)
            };
            let affine = Affine {
                matrix: rotation.matrix * Mat3::identity().scale(a.scale),
                translation: Vec3::from(a.translate),
            };
            write_fct(&editing::transform(&enc, &affine)?, &a.out)?;
            Ok(())
        }
        EditCommand::Partition(a) => {
            let enc = read_fct(&a.input)?;
            let labels = match (&a.labels, a.plane) {
                (Some(path), _) => editing::read_labels(path)?,
                (None, Some([x, y, z, offset])) => editing::label_by_halfspace(&enc, &Vec3::new(x, y, z), offset),
                (None, None) => unreachable!("clap requires one labeling"),
            };
            fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
            for (label, part) in editing::partition(&enc, &labels)? {
                let path = a.out_dir.join(format!("part-{label}.fct"));
                write_fct(&part, &path)?;
                log::info!("label {label}: {} tokens -> {}", part.len(), path.display());
            }
            Ok(())
        }
        EditCommand::Assemble(a) => {
            let parts = a.inputs.iter().map(read_fct).collect::<fct_core::Result<Vec<_>>>()?;
            write_fct(&editing::assemble(&parts)?, &a.out)?;
            Ok(())
        }
    }
}

fn bench(a: BenchArgs) -> Result<()> {
    let mut manifest = BenchManifest::load(&a.manifest).map_err(bench_error)?;
    if let Some(out) = a.out {
        manifest.output = out;
    }
    let outcome = fct_bench::run(&manifest).map_err(bench_error)?;
    print!("{}", fct_bench::format_table(&outcome.summary));
    let failed = outcome.results.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        return Err(CliError::Compute(format!("{failed} case(s) failed; see summary.json")));
    }
    Ok(())
}

fn bench_error(e: BenchError) -> CliError {
    match e {
        BenchError::Io(path, err) => CliError::io(&path, err),
        BenchError::Manifest(m) => CliError::Io(format!("manifest: {m}")),
        BenchError::Core(e) => e.into(),
    }
}

fn inspect(a: InspectArgs) -> Result<()> {
    let enc = read_fct(&a.input)?;
    if a.json {
        println!("{}", to_json(&enc)?);
        return Ok(());
    }
    print!("{}", summary(&enc, to_bytes(&enc)?.len()));
    Ok(())
}

fn summary(enc: &FctEncoding, bytes: usize) -> String {
    let duals: u32 = enc.tokens.iter().map(|t| t.mask.count_ones()).sum();
    let crossings: usize = enc.tokens.iter().map(|t| (0..6).filter(|&e| t.code.get(e) != 0).count()).sum();
    let n = enc.normalization;
    let mut s = String::new();
    let mut line = |k: &str, v: String| s.push_str(&format!("{k:<14}{v}\n"));
    line("version", enc.version.to_string());
    line("resolution", enc.grid.resolution().to_string());
    line("tokens", enc.len().to_string());
    line("bytes", bytes.to_string());
    line("lambda", enc.params.lambda.to_string());
    line("mu", enc.params.mu.to_string());
    line("tau", enc.params.tau.to_string());
    line("flags", format!("{:#04x}", enc.flags));
    line(
        "normalization",
        format!("scale {} translation [{}, {}, {}] margin {}", n.scale, n.translation.x, n.translation.y, n.translation.z, n.margin),
    );
    line("channels", if enc.channels.is_empty() { "-".into() } else { enc.channels.join(",") });
    line("valid duals", duals.to_string());
    line("crossings", crossings.to_string());
    let occupancy = enc.len() as f64 / (enc.grid.resolution() as f64).powi(3);
    line("occupancy", format!("{:.3e}", occupancy));
    s
}
