//! Mask → contour geometry: boundary tracing, validity checks, arc-length
//! resampling, polar conversion, per-video normalisation and track assembly.

mod polar;
mod resample;
mod trace;
mod tracks;

use thiserror::Error;

pub use polar::{boundary_to_contour, normalize_video, to_polar, Contour};
pub use resample::{resample_closed, resample_uniform};
pub use trace::{trace_contour, validate_boundary, RawBoundary, Rejection};
pub use tracks::{assemble_tracks, extract_video, ExtractStats, TrackRecord, MIN_TRACK_LEN};

/// Contour sizes used by the two descriptors.
pub const RADII_POINTS: usize = 256;
pub const SHAPE_CONTEXT_POINTS: usize = 100;

/// Largest tolerated gap between the first and last traced pixel.
pub const MAX_ENDPOINT_GAP: f64 = 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("mask has no set pixels")]
    EmptyMask,
    #[error("boundary has zero perimeter")]
    DegeneratePerimeter,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("unsupported contour size {0}; expected 100 or 256")]
    UnsupportedPointCount(usize),
}
