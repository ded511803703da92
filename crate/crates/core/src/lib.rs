//! Contour-based video anomaly detection.
//!
//! The pipeline turns per-frame object masks into closed contours, describes
//! them either by their radial profile or by Shape Context histograms, learns
//! normal motion with five shallow models, and evaluates per-frame anomaly
//! scores with frame-level AUC and the region/track based detection criteria.
//!
//! Modules follow the data flow:
//!
//! - [`ingest`]: mask manifests, RLE, ground truth, synthetic datasets
//! - [`geometry`]: boundary tracing, resampling, polar contours, tracks
//! - [`descriptors`]: radii descriptor, track images, Shape Context, χ²
//! - [`nn`]: a small neural toolkit with analytic gradients
//! - [`models`]: VAE, LAE, TAE, R-RNN and C-RNN
//! - [`shapecluster`]: hierarchical clustering, SVM self-labelling, novelty
//! - [`scoring`]: object and frame score timelines, smoothing
//! - [`metrics`]: frame AUC, RBDC, TBDC
//! - [`pipeline`]: configuration, stage orchestration and caching

pub mod descriptors;
pub mod geometry;
pub mod ingest;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod par;
pub mod pipeline;
pub mod scoring;
pub mod shapecluster;

mod binio;

pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, PipelineReport};
