//! Sparse voxel contour tokens.
//!
//! Triangle meshes are converted directly into per-voxel tokens (a fitted
//! primal anchor, eight dual anchors with validity masks and a signed
//! semi-axis crossing code) without building a distance field, and decoded
//! back into triangle meshes by gathering the dual anchors and emitting one
//! oriented quad per crossed primal face.
//!
//! The pipeline is split into small modules:
//!
//! * [`mesh_io`]: mesh loading/saving, normalization and surface sampling.
//! * [`voxelizer`]: active voxel detection (SAT), clipping and centroids.
//! * [`anchorfit`]: regularized quadric anchor position and normal fitting.
//! * [`crossings`]: semi-axis crossing detection and orientation codes.
//! * [`fct`]: token records, the encoder, the binary format and attributes.
//! * [`remesher`]: dual gather and face emission.
//! * [`editing`]: visibility filtering, affine transforms, partition, assembly.
//! * [`metrics`]: Hausdorff, chamfer, F1, normal metrics.
//! * [`fixtures`]: analytic test meshes.

pub mod anchorfit;
pub mod crossings;
pub mod editing;
mod error;
pub mod fct;
pub mod fixtures;
pub mod geom;
pub mod mesh_io;
pub mod metrics;
pub mod remesher;
pub mod voxelizer;

pub use error::{Error, Result};
pub use fct::{
    encode, encode_with_report, read_fct, write_fct, EncodeReport, EncoderConfig, FctEncoding, FctToken,
};
pub use geom::{Aabb, Vec3};
pub use mesh_io::{NormalizationTransform, TriangleMesh};
pub use metrics::{evaluate, MetricsConfig, MetricsReport};
pub use remesher::decode;
pub use voxelizer::{VoxelGrid, VoxelIndex};

/// Crate version, recorded in bench provenance blocks.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
