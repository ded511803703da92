//! Contour descriptors: the radial profile, stacked track images, Shape
//! Context histograms and the χ² distance between them.

mod cache;
mod chi2;
mod radii;
mod shape_context;

use thiserror::Error;

pub use cache::{read_matrix, write_matrix, DescriptorMatrix};
pub use chi2::{chi2_distance, chi2_unchecked};
pub use radii::{radii_descriptor, track_image, RadiiDescriptor, TrackImage};
pub use shape_context::{
    shape_context, shape_context_auto, shape_contexts, BinLayout, ShapeContextDescriptor,
    ANGULAR_BINS, RADIAL_BINS, SC_LEN,
};

#[derive(Debug, Error, PartialEq)]
pub enum DescriptorError {
    #[error("contour has {got} points, expected {expected}")]
    WrongPointCount { expected: usize, got: usize },
    #[error("negative histogram entry at index {0}")]
    NegativeEntry(usize),
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}
