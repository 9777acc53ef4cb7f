use std::path::{Path, PathBuf};

use fct_core::mesh_io::DEFAULT_MARGIN;
use fct_core::metrics::DistanceMode;
use fct_core::{EncoderConfig, MetricsConfig};
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// A bench run description, read from TOML.
///
/// ```toml
/// output = "bench-out"
/// seed = 7
///
/// [[case]]
/// name = "sphere"
/// fixture = "sphere"
/// resolutions = [64, 128, 256]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchManifest {
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(rename = "case", default)]
    pub cases: Vec<CaseSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub name: String,
    /// One of the built-in fixtures; exclusive with `mesh`.
    #[serde(default)]
    pub fixture: Option<String>,
    /// Mesh file, normalized into the domain before encoding.
    #[serde(default)]
    pub mesh: Option<PathBuf>,
    pub resolutions: Vec<u32>,
    #[serde(default)]
    pub encoder: EncoderSection,
    #[serde(default)]
    pub metrics: MetricsSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub lambda: f64,
    pub mu: f64,
    pub tau: f64,
    pub weighted: bool,
    /// Margin used when normalizing `mesh` inputs.
    pub margin: f64,
}

impl Default for EncoderSection {
    fn default() -> Self {
        let d = EncoderConfig::default();
        EncoderSection {
            lambda: d.lambda,
            mu: d.mu,
            tau: d.tau,
            weighted: d.weighted,
            margin: DEFAULT_MARGIN,
        }
    }
}

impl EncoderSection {
    pub fn config(&self) -> EncoderConfig {
        EncoderConfig {
            lambda: self.lambda,
            mu: self.mu,
            tau: self.tau,
            weighted: self.weighted,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub samples: usize,
    pub tau: f64,
    pub squared: bool,
    pub mode: DistanceMode,
}

impl Default for MetricsSection {
    fn default() -> Self {
        let d = MetricsConfig::default();
        MetricsSection {
            samples: d.n_samples,
            tau: d.tau,
            squared: d.squared,
            mode: d.mode,
        }
    }
}

impl MetricsSection {
    pub fn config(&self, seed: u64) -> MetricsConfig {
        MetricsConfig {
            n_samples: self.samples,
            tau: self.tau,
            seed,
            squared: self.squared,
            mode: self.mode,
        }
    }
}

impl BenchManifest {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let m: BenchManifest = toml::from_str(text).map_err(|e| BenchError::Manifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    /// Reads a manifest; relative `output` and `mesh` paths are resolved
    /// against the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(path.to_path_buf(), e))?;
        let mut m = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        m.output = base.join(&m.output);
        for c in &mut m.cases {
            if let Some(p) = &c.mesh {
                c.mesh = Some(base.join(p));
            }
        }
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::Manifest(msg));
        if self.cases.is_empty() {
            return bad("manifest has no [[case]] entries".into());
        }
        let mut names = std::collections::HashSet::new();
        for c in &self.cases {
            if !names.insert(&c.name) {
                return bad(format!("duplicate case name {:?}", c.name));
            }
            if c.name.is_empty() || c.name.contains(['/', '\\']) || c.name.starts_with('.') {
                return bad(format!("case name {:?} is not a plain file name", c.name));
            }
            if c.fixture.is_some() == c.mesh.is_some() {
                return bad(format!("case {:?} needs exactly one of `fixture` or `mesh`", c.name));
            }
            if c.resolutions.is_empty() {
                return bad(format!("case {:?} lists no resolutions", c.name));
            }
            if let Some(r) = c.resolutions.iter().find(|r| !(2..=4096).contains(*r)) {
                return bad(format!("case {:?}: resolution {r} outside 2..=4096", c.name));
            }
            c.encoder.config().validate().map_err(|e| BenchError::Manifest(format!("case {:?}: {e}", c.name)))?;
            if c.metrics.samples == 0 || !(c.metrics.tau > 0.0) {
                return bad(format!("case {:?}: metrics need samples > 0 and tau > 0", c.name));
            }
        }
        Ok(())
    }
}
