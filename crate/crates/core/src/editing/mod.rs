//! Token-level editing: visibility filtering, affine manipulation,
//! partition into labeled groups and assembly of parts.

mod assemble;
mod transform;
mod visibility;

pub use assemble::{assemble, label_by_halfspace, partition, read_labels, write_labels, LabelMap};
pub use transform::{transform, Affine};
pub use visibility::{fibonacci_directions, filter_hidden, visibility, VisibilityReport, DEFAULT_DIRECTIONS};
