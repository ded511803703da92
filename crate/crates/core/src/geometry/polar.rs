use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{resample_closed, GeometryError, RawBoundary};
use crate::ingest::BBox;

/// A closed contour in polar form about its boundary centroid.
///
/// `theta` uses mathematical orientation (image y flipped to point up) and
/// lies in `[-π, π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub track_id: u32,
    pub class_id: u32,
    pub frame_index: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox>,
    /// Centroid in absolute pixel coordinates.
    pub centroid: [f64; 2],
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
}

impl Contour {
    pub fn n_points(&self) -> usize {
        self.r.len()
    }

    pub fn max_radius(&self) -> f64 {
        self.r.iter().copied().fold(0.0, f64::max)
    }

    /// Points relative to the centroid, y up.
    pub fn cartesian(&self) -> Vec<(f64, f64)> {
        self.r
            .iter()
            .zip(&self.theta)
            .map(|(&r, &t)| (r * t.cos(), r * t.sin()))
            .collect()
    }
}

fn wrap_angle(a: f64) -> f64 {
    if a >= PI {
        a - 2.0 * PI
    } else {
        a
    }
}

/// Polar form about the arithmetic mean of the points.
///
/// Coordinates are taken relative to the first point before averaging, so a
/// translation that is exact in floating point leaves the output bit-identical.
pub fn to_polar(points: &[(f64, f64)]) -> Result<Contour, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let origin = points[0];
    let rel: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.0 - origin.0, p.1 - origin.1))
        .collect();
    Ok(polar_from_relative(&rel, origin))
}

fn polar_from_relative(rel: &[(f64, f64)], origin: (f64, f64)) -> Contour {
    let n = rel.len() as f64;
    let cx = rel.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = rel.iter().map(|p| p.1).sum::<f64>() / n;
    let (r, theta) = rel
        .iter()
        .map(|p| {
            let dx = p.0 - cx;
            let dy = cy - p.1;
            (dx.hypot(dy), wrap_angle(dy.atan2(dx)))
        })
        .unzip();
    Contour {
        track_id: 0,
        class_id: 0,
        frame_index: 0,
        bbox: None,
        centroid: [origin.0 + cx, origin.1 + cy],
        r,
        theta,
    }
}

/// Traced boundary → resampled, un-normalised polar contour.
///
/// All arithmetic happens relative to the (integer) first boundary pixel, so
/// integer translations of the mask give identical `r` and `theta`.
pub fn boundary_to_contour(b: &RawBoundary, n: usize) -> Result<Contour, GeometryError> {
    if n != super::RADII_POINTS && n != super::SHAPE_CONTEXT_POINTS {
        return Err(GeometryError::UnsupportedPointCount(n));
    }
    let Some(&(x0, y0)) = b.points.first() else {
        return Err(GeometryError::DegeneratePerimeter);
    };
    let rel: Vec<(f64, f64)> = b
        .points
        .iter()
        .map(|&(x, y)| ((x - x0) as f64, (y - y0) as f64))
        .collect();
    let pts = resample_closed(&rel, n)?;
    Ok(polar_from_relative(&pts, (x0 as f64, y0 as f64)))
}

/// Divides every radius by the largest radius seen for the same class in the
/// video. Afterwards each class present has a maximum radius of exactly 1.
pub fn normalize_video(contours: &mut [Contour]) {
    let mut max_by_class: BTreeMap<u32, f64> = BTreeMap::new();
    for c in contours.iter() {
        let m = max_by_class.entry(c.class_id).or_insert(0.0);
        *m = m.max(c.max_radius());
    }
    for c in contours.iter_mut() {
        let scale = max_by_class[&c.class_id];
        if scale > 0.0 {
            for r in &mut c.r {
                *r /= scale;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn circle(n: usize, r: f64, cx: f64, cy: f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                (cx + r * a.cos(), cy + r * a.sin())
            })
            .collect()
    }

    #[test]
    fn unit_circle_has_unit_radii() {
        let c = to_polar(&circle(64, 1.0, 0.0, 0.0)).unwrap();
        for r in &c.r {
            assert!((r - 1.0).abs() < 1e-12);
        }
        assert!(c.theta.iter().all(|t| (-PI..PI).contains(t)));
    }

    #[test]
    fn y_axis_points_up() {
        // image point above the centroid has theta = +pi/2
        let pts = vec![(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)];
        let c = to_polar(&pts).unwrap();
        assert!((c.theta[0] - PI / 2.0).abs() < 1e-12);
        // the negative x axis maps to -pi, never +pi
        assert_eq!(c.theta[3], -PI);
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            to_polar(&[(0.0, 0.0), (1.0, 1.0)]),
            Err(GeometryError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn normalize_single_and_pair() {
        let mut one = vec![to_polar(&circle(16, 3.0, 5.0, 5.0)).unwrap()];
        normalize_video(&mut one);
        assert_eq!(one[0].max_radius(), 1.0);

        let mut a = to_polar(&circle(16, 2.0, 0.0, 0.0)).unwrap();
        let mut b = to_polar(&circle(16, 4.0, 0.0, 0.0)).unwrap();
        a.r = vec![2.0, 1.0, 0.5];
        b.r = vec![4.0, 3.0, 1.0];
        let (ra, rb) = (a.r.clone(), b.r.clone());
        let mut both = vec![a, b];
        normalize_video(&mut both);
        for (x, y) in both[0].r.iter().zip(&ra) {
            assert_eq!(*x, y / 4.0);
        }
        for (x, y) in both[1].r.iter().zip(&rb) {
            assert_eq!(*x, y / 4.0);
        }
    }

    #[test]
    fn normalize_per_class_matches_brute_force() {
        let mut cs = Vec::new();
        for (i, r) in [3.0, 7.0, 5.0, 2.0, 9.0].iter().enumerate() {
            let mut c = to_polar(&circle(20, *r, i as f64, 0.0)).unwrap();
            c.class_id = (i % 2) as u32;
            cs.push(c);
        }
        let originals = cs.clone();
        normalize_video(&mut cs);
        for class in 0..2u32 {
            let brute = originals
                .iter()
                .filter(|c| c.class_id == class)
                .flat_map(|c| c.r.iter().copied())
                .fold(0.0, f64::max);
            for (n, o) in cs.iter().zip(&originals).filter(|(c, _)| c.class_id == class) {
                for (a, b) in n.r.iter().zip(&o.r) {
                    assert_eq!(*a, b / brute);
                }
            }
            let max = cs
                .iter()
                .filter(|c| c.class_id == class)
                .map(|c| c.max_radius())
                .fold(0.0, f64::max);
            assert_eq!(max, 1.0);
        }
        assert!(cs.iter().flat_map(|c| c.r.iter()).all(|r| (0.0..=1.0).contains(r)));
    }

    fn dyadic_points() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-512i32..512, -512i32..512), 3..40).prop_map(|v| {
            v.into_iter()
                .map(|(x, y)| (x as f64 / 8.0, y as f64 / 8.0))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn translation_invariance_is_exact(pts in dyadic_points(), tx in -1000i32..1000, ty in -1000i32..1000) {
            let moved: Vec<_> = pts.iter().map(|p| (p.0 + tx as f64, p.1 + ty as f64)).collect();
            let a = to_polar(&pts).unwrap();
            let b = to_polar(&moved).unwrap();
            prop_assert_eq!(a.r, b.r);
            prop_assert_eq!(a.theta, b.theta);
        }

        #[test]
        fn rotation_shifts_theta_and_keeps_radii(
            pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..40),
            phi in -3.0f64..3.0,
        ) {
            let base = to_polar(&pts).unwrap();
            let (cx, cy) = (base.centroid[0], base.centroid[1]);
            // rotate counter-clockwise in y-up coordinates about the centroid
            let (s, c) = phi.sin_cos();
            let rotated: Vec<_> = pts
                .iter()
                .map(|&(x, y)| {
                    let (dx, dy) = (x - cx, cy - y);
                    let (rx, ry) = (c * dx - s * dy, s * dx + c * dy);
                    (cx + rx, cy - ry)
                })
                .collect();
            let rot = to_polar(&rotated).unwrap();
            let mut r0 = base.r.clone();
            let mut r1 = rot.r.clone();
            r0.sort_by(f64::total_cmp);
            r1.sort_by(f64::total_cmp);
            for (a, b) in r0.iter().zip(&r1) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            for (i, (t0, t1)) in base.theta.iter().zip(&rot.theta).enumerate() {
                if base.r[i] < 1e-4 { continue; }
                let d = (t1 - t0 - phi).rem_euclid(2.0 * PI);
                prop_assert!(d.min(2.0 * PI - d) < 1e-9);
            }
        }

        #[test]
        fn uniform_scaling_leaves_normalized_contours_unchanged(
            polys in proptest::collection::vec(
                proptest::collection::vec((-40.0f64..40.0, -40.0f64..40.0), 6..30), 1..4),
            s in 0.1f64..10.0,
        ) {
            let build = |k: f64| -> Vec<Contour> {
                let mut cs: Vec<Contour> = polys
                    .iter()
                    .map(|p| {
                        let scaled: Vec<_> = p.iter().map(|&(x, y)| (k * x, k * y)).collect();
                        to_polar(&resample_closed(&scaled, 100).unwrap()).unwrap()
                    })
                    .collect();
                normalize_video(&mut cs);
                cs
            };
            let (a, b) = (build(1.0), build(s));
            for (ca, cb) in a.iter().zip(&b) {
                for (x, y) in ca.r.iter().zip(&cb.r) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
                for (i, (x, y)) in ca.theta.iter().zip(&cb.theta).enumerate() {
                    if ca.r[i] < 1e-4 { continue; }
                    let d = (x - y).rem_euclid(2.0 * PI);
                    prop_assert!(d.min(2.0 * PI - d) < 1e-9);
                }
            }
        }
    }
}
