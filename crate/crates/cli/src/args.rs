use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fct_core::editing::DEFAULT_DIRECTIONS;
use fct_core::anchorfit::{DEFAULT_LAMBDA, DEFAULT_MU};
use fct_core::crossings::DEFAULT_TAU;
use fct_core::mesh_io::DEFAULT_MARGIN;
use fct_core::metrics::{DEFAULT_SAMPLES, DEFAULT_SEED};
use fct_core::voxelizer::{MAX_RESOLUTION, MIN_RESOLUTION};

/// Mesh to contour-token conversion, remeshing, editing and evaluation.
///
/// Mesh inputs are OBJ, PLY or STL files, or `fixture:<name>` for a built-in
/// test shape already inside the unit domain.
#[derive(Debug, Parser)]
#[command(name = "fct", version)]
pub struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, env = "FCT_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode a mesh into a .fct token file.
    Encode(EncodeArgs),
    /// Decode a .fct file into a triangle mesh.
    Decode(DecodeArgs),
    /// Encode, decode and score against the input.
    Roundtrip(RoundtripArgs),
    /// Compare two meshes.
    Metrics(MetricsArgs),
    /// Token-space editing.
    #[command(subcommand)]
    Edit(EditCommand),
    /// Run a benchmark manifest.
    Bench(BenchArgs),
    /// Print a .fct header and statistics.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct EncoderArgs {
    /// Position regularization, in cell-local units.
    #[arg(long, default_value_t = DEFAULT_LAMBDA, value_parser = non_negative)]
    pub lambda: f64,
    /// Normal regularization.
    #[arg(long, default_value_t = DEFAULT_MU, value_parser = positive)]
    pub mu: f64,
    /// Near-parallel cutoff for crossing orientation.
    #[arg(long, default_value_t = DEFAULT_TAU, value_parser = non_negative)]
    pub tau: f64,
    /// Give every clipped sample equal weight instead of its area.
    #[arg(long)]
    pub unweighted: bool,
    /// Border left when scaling a mesh file into the domain.
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long = "in")]
    pub input: String,
    #[arg(long, value_parser = resolution)]
    pub res: u32,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub encoder: EncoderArgs,
    /// Attribute channels to attach.
    #[arg(long, value_enum)]
    pub attrs: Option<AttrKind>,
    /// Texture image for `--attrs texture`.
    #[arg(long, required_if_eq("attrs", "texture"))]
    pub texture: Option<PathBuf>,
    /// Also write the encoder report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AttrKind {
    Rgb,
    Uv,
    Texture,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Gather {
    #[default]
    Mean,
    NormalWeighted,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep the mesh in grid coordinates instead of undoing the normalization.
    #[arg(long)]
    pub grid_space: bool,
    #[arg(long, value_enum, default_value_t)]
    pub gather: Gather,
    /// Also write the decoder report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricArgs {
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Chamfer terms use squared distances.
    #[arg(long)]
    pub squared: bool,
    #[arg(long, value_enum, default_value_t)]
    pub mode: Mode,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    #[default]
    PointToSurface,
    PointToPoint,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    #[arg(long = "in")]
    pub input: String,
    #[arg(long, value_parser = resolution)]
    pub res: u32,
    #[arg(long)]
    pub report: PathBuf,
    /// Also write the decoded mesh (grid coordinates).
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[command(flatten)]
    pub encoder: EncoderArgs,
    #[command(flatten)]
    pub metrics: MetricArgs,
    /// F-score distance threshold (`--tau` sets the encoder's cutoff here).
    #[arg(long, default_value_t = fct_core::metrics::DEFAULT_TAU, value_parser = positive)]
    pub f_tau: f64,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub pred: String,
    #[arg(long)]
    pub gt: String,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub metrics: MetricArgs,
    /// F-score distance threshold.
    #[arg(long, default_value_t = fct_core::metrics::DEFAULT_TAU, value_parser = positive)]
    pub tau: f64,
}

#[derive(Debug, Subcommand)]
pub enum EditCommand {
    /// Drop tokens that are rarely visible from outside.
    FilterHidden(FilterArgs),
    /// Apply scale, rotation and translation in grid coordinates.
    Transform(TransformArgs),
    /// Split tokens by label into one file per label.
    Partition(PartitionArgs),
    /// Merge token files over the same grid.
    Assemble(AssembleArgs),
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Minimum unoccluded fraction of directions to keep a token.
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    #[arg(long, default_value_t = DEFAULT_DIRECTIONS)]
    pub directions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write per-token visibility as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Rotation axis `x,y,z`.
    #[arg(long, value_parser = vec3, default_value = "0,0,1", allow_hyphen_values = true)]
    pub axis: [f64; 3],
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub degrees: f64,
    /// Translation `x,y,z`, applied after rotation and scale.
    #[arg(long, value_parser = vec3, default_value = "0,0,0", allow_hyphen_values = true)]
    pub translate: [f64; 3],
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub scale: f64,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("labeling").required(true).args(["labels", "plane"])))]
pub struct PartitionArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Directory receiving `part-<label>.fct`.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Label file: one `voxel-index label` pair per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Label 1 where `n . x >= offset`, else 0; given as `nx,ny,nz,offset`.
    #[arg(long, value_parser = plane, allow_hyphen_values = true)]
    pub plane: Option<[f64; 4]>,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    #[arg(long = "in", num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Override the manifest's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Print the full lossless JSON dump instead of the summary.
    #[arg(long)]
    pub json: bool,
}

fn resolution(s: &str) -> Result<u32, String> {
    let r: u32 = s.parse().map_err(|e| format!("{e}"))?;
    if (MIN_RESOLUTION..=MAX_RESOLUTION).contains(&r) {
        Ok(r)
    } else {
        Err(format!("must be in [{MIN_RESOLUTION}, {MAX_RESOLUTION}]"))
    }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("must be finite".into())
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    number(s).and_then(|v| if v >= 0.0 { Ok(v) } else { Err("must be >= 0".into()) })
}

fn positive(s: &str) -> Result<f64, String> {
    number(s).and_then(|v| if v > 0.0 { Ok(v) } else { Err("must be > 0".into()) })
}

fn floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<f64> = s.split(',').map(|p| number(p.trim())).collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| format!("expected {N} comma-separated numbers"))
}

fn vec3(s: &str) -> Result<[f64; 3], String> {
    floats(s)
}

fn plane(s: &str) -> Result<[f64; 4], String> {
    floats(s)
}
