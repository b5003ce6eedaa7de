//! Pure computational kernels used by the complete applications, plus the
//! seeded datasets they run on. Nothing here knows about the executive.

pub mod adpcm;
pub mod checksum;
pub mod crc;
pub mod data;
pub mod dijkstra;
pub mod matrix;
pub mod sobel;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorkloadError {
    #[error("edge {from}->{to} has negative weight {weight}")]
    NegativeWeight { from: usize, to: usize, weight: i64 },
    #[error("edge {from}->{to} references a node outside 0..{nodes}")]
    NodeOutOfRange { from: usize, to: usize, nodes: usize },
    #[error("image is {width}x{height}, at least 3x3 is required")]
    ImageTooSmall { width: usize, height: usize },
    #[error("matrix dimensions {0} and {1} differ")]
    DimensionMismatch(usize, usize),
    #[error("cannot parse dataset: {0}")]
    Parse(String),
}

pub use adpcm::{adpcm_decode, adpcm_encode, AdpcmOutput};
pub use checksum::additive_checksum;
pub use crc::crc32;
pub use data::WorkloadData;
pub use dijkstra::{Graph, UNREACHABLE};
pub use matrix::Matrix;
pub use sobel::GrayImage;
