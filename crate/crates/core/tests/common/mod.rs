//! Shared generators for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use contour_vad::descriptors::shape_context_auto;
use contour_vad::geometry::{to_polar, Contour, SHAPE_CONTEXT_POINTS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GROUPS: usize = 3;

/// Radius profile of each family at polar angle `phi`.
fn family_radius(group: usize, phi: f64) -> f64 {
    match group {
        // near-circle
        0 => 1.0,
        // three-lobed star
        1 => 1.0 + 0.4 * (3.0 * phi).cos(),
        // flat ellipse, 3:1
        _ => {
            let (a, b) = (1.5, 0.5);
            a * b / ((b * phi.cos()).powi(2) + (a * phi.sin()).powi(2)).sqrt()
        }
    }
}

/// Closed outline of `n` points from `group` with random scale, position and
/// small harmonic wobble.
pub fn outline(group: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let scale = rng.random_range(20.0..60.0);
    let (cx, cy) = (rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0));
    let wobble: Vec<(f64, f64)> = (2..6)
        .map(|k| (rng.random_range(0.0..0.03) / k as f64, rng.random_range(0.0..2.0 * PI)))
        .collect();
    let start = rng.random_range(-0.02..0.02);
    (0..n)
        .map(|i| {
            let phi = start + 2.0 * PI * i as f64 / n as f64;
            let w: f64 = wobble
                .iter()
                .enumerate()
                .map(|(k, (a, p))| a * ((k + 2) as f64 * phi + p).cos())
                .sum();
            let r = scale * (family_radius(group, phi) + w);
            // image coordinates: y grows downwards, traversal clockwise on screen
            (cx + r * phi.cos(), cy - r * phi.sin())
        })
        .collect()
}

pub fn random_contour(group: usize, n: usize, rng: &mut ChaCha8Rng) -> Contour {
    to_polar(&outline(group, n, rng)).expect("non-degenerate outline")
}

/// `per_group` Shape Context count rows for each of the three families,
/// interleaved, with their generator labels.
pub fn shape_groups(per_group: usize, seed: u64) -> (Vec<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..per_group * GROUPS {
        let g = i % GROUPS;
        let c = random_contour(g, SHAPE_CONTEXT_POINTS, &mut rng);
        let d = shape_context_auto(&c).expect("100-point contour");
        rows.extend(d.flat_counts());
        labels.push(g);
    }
    (rows, labels)
}
