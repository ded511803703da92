use std::f64::consts::PI;

use super::DescriptorError;
use crate::geometry::{Contour, SHAPE_CONTEXT_POINTS};
use crate::par;

pub const RADIAL_BINS: usize = 5;
pub const ANGULAR_BINS: usize = 12;
const BINS: usize = RADIAL_BINS * ANGULAR_BINS;
/// Length of a flattened descriptor (100 × 60).
pub const SC_LEN: usize = SHAPE_CONTEXT_POINTS * BINS;

/// Upper radial edges as multiples of the mean pairwise distance.
const RADIAL_EDGE_FACTORS: [f64; RADIAL_BINS] = [0.125, 0.25, 0.5, 1.0, 2.0];

/// Log-polar bin layout.
///
/// Radial bin `k` holds distances below `radial_edges[k]` (and at or above
/// the previous edge). Distances beyond the last edge are clamped into the
/// outermost bin. Angular bins split `[0, 2π)` evenly, measured
/// counter-clockwise from the positive x axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BinLayout {
    pub radial_edges: [f64; RADIAL_BINS],
}

impl BinLayout {
    pub fn from_mean_distance(mean: f64) -> Self {
        BinLayout {
            radial_edges: RADIAL_EDGE_FACTORS.map(|f| f * mean),
        }
    }

    /// Layout scaled to the mean pairwise distance of `points`.
    pub fn for_points(points: &[(f64, f64)]) -> Self {
        let n = points.len();
        let mut sum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                sum += (points[i].0 - points[j].0).hypot(points[i].1 - points[j].1);
            }
        }
        let pairs = (n * n.saturating_sub(1) / 2).max(1) as f64;
        Self::from_mean_distance(sum / pairs)
    }

    pub fn radial_bin(&self, d: f64) -> usize {
        self.radial_edges
            .iter()
            .position(|&e| d < e)
            .unwrap_or(RADIAL_BINS - 1)
    }

    pub fn angular_bin(&self, angle: f64) -> usize {
        let a = angle.rem_euclid(2.0 * PI);
        ((a / (2.0 * PI / ANGULAR_BINS as f64)) as usize).min(ANGULAR_BINS - 1)
    }

    /// Flat bin index (`radial * 12 + angular`) of `to` seen from `from`.
    pub fn bin(&self, from: (f64, f64), to: (f64, f64)) -> usize {
        let (dx, dy) = (to.0 - from.0, to.1 - from.1);
        self.radial_bin(dx.hypot(dy)) * ANGULAR_BINS + self.angular_bin(dy.atan2(dx))
    }
}

/// 100 × 60 matrix of integer counts; row `i` is the log-polar histogram of
/// the other 99 points seen from point `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeContextDescriptor {
    counts: Vec<u16>,
}

impl ShapeContextDescriptor {
    pub fn from_counts(counts: Vec<u16>) -> Self {
        assert_eq!(counts.len(), SC_LEN);
        ShapeContextDescriptor { counts }
    }

    pub fn counts(&self) -> &[u16] {
        &self.counts
    }

    pub fn row(&self, i: usize) -> &[u16] {
        &self.counts[i * BINS..(i + 1) * BINS]
    }

    /// Raw counts as reals.
    pub fn flat_counts(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// Counts divided by 100·99, summing to 1.
    pub fn flat_normalized(&self) -> Vec<f64> {
        let total = (SHAPE_CONTEXT_POINTS * (SHAPE_CONTEXT_POINTS - 1)) as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }
}

pub fn shape_context(
    c: &Contour,
    layout: &BinLayout,
) -> Result<ShapeContextDescriptor, DescriptorError> {
    if c.n_points() != SHAPE_CONTEXT_POINTS {
        return Err(DescriptorError::WrongPointCount {
            expected: SHAPE_CONTEXT_POINTS,
            got: c.n_points(),
        });
    }
    let pts = c.cartesian();
    let mut counts = vec![0u16; SC_LEN];
    for (i, &origin) in pts.iter().enumerate() {
        let row = &mut counts[i * BINS..(i + 1) * BINS];
        for (j, &p) in pts.iter().enumerate() {
            if i != j {
                row[layout.bin(origin, p)] += 1;
            }
        }
    }
    Ok(ShapeContextDescriptor { counts })
}

/// Shape Context with the layout derived from the contour's own points.
pub fn shape_context_auto(c: &Contour) -> Result<ShapeContextDescriptor, DescriptorError> {
    let layout = BinLayout::for_points(&c.cartesian());
    shape_context(c, &layout)
}

/// Batch form of [`shape_context_auto`], parallel over contours.
pub fn shape_contexts(cs: &[Contour]) -> Result<Vec<ShapeContextDescriptor>, DescriptorError> {
    par::try_map(cs, shape_context_auto)
}
