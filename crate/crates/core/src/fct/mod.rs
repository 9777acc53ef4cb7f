//! Faithful contour tokens: records, the encoder, the `.fct` file format and
//! attribute channels.

mod attributes;
mod encode;
mod serialize;
mod token;

pub use attributes::{attach_attributes, AttributeSpec};
pub use encode::{encode, encode_with_report, EncodeReport, EncoderConfig, StageTimings};
pub use serialize::{from_bytes, from_json, read_fct, to_bytes, to_json, write_fct, CHANNEL_NAME_LEN, EMPTY_FILE_LEN, MAGIC};
pub use token::{AnchorRecord, EncodingParams, FctEncoding, FctToken, FLAG_REENCODED, FORMAT_VERSION};
