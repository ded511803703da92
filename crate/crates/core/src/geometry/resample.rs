use super::{GeometryError, RawBoundary};

/// Resamples a closed polyline to `n` points at equal arc-length spacing,
/// starting at its first vertex.
pub fn resample_closed(points: &[(f64, f64)], n: usize) -> Result<Vec<(f64, f64)>, GeometryError> {
    if points.is_empty() || n == 0 {
        return Err(GeometryError::DegeneratePerimeter);
    }
    let len = points.len();
    let mut cum = Vec::with_capacity(len + 1);
    cum.push(0.0);
    for i in 0..len {
        let (a, b) = (points[i], points[(i + 1) % len]);
        let seg = (b.0 - a.0).hypot(b.1 - a.1);
        cum.push(cum[i] + seg);
    }
    let perimeter = cum[len];
    if perimeter <= 0.0 {
        return Err(GeometryError::DegeneratePerimeter);
    }

    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let t = k as f64 * perimeter / n as f64;
        while seg + 1 < len && cum[seg + 1] <= t {
            seg += 1;
        }
        let (a, b) = (points[seg], points[(seg + 1) % len]);
        let seg_len = cum[seg + 1] - cum[seg];
        let frac = if seg_len > 0.0 { (t - cum[seg]) / seg_len } else { 0.0 };
        out.push((a.0 + frac * (b.0 - a.0), a.1 + frac * (b.1 - a.1)));
    }
    Ok(out)
}

/// Uniform resampling of a traced boundary, in absolute pixel coordinates.
pub fn resample_uniform(b: &RawBoundary, n: usize) -> Result<Vec<(f64, f64)>, GeometryError> {
    if n != super::RADII_POINTS && n != super::SHAPE_CONTEXT_POINTS {
        return Err(GeometryError::UnsupportedPointCount(n));
    }
    let pts: Vec<(f64, f64)> = b.points.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
    resample_closed(&pts, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Arc-length position of a point lying on the polyline (oracle: brute
    /// force projection onto every segment).
    fn arc_position(poly: &[(f64, f64)], p: (f64, f64)) -> f64 {
        let mut acc = 0.0;
        let mut best = (f64::MAX, 0.0);
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            let (vx, vy) = (b.0 - a.0, b.1 - a.1);
            let l = vx.hypot(vy);
            let t = (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / (l * l)).clamp(0.0, 1.0);
            let d = (a.0 + t * vx - p.0).hypot(a.1 + t * vy - p.1);
            if d < best.0 - 1e-12 {
                best = (d, acc + t * l);
            }
            acc += l;
        }
        best.1
    }

    #[test]
    fn circle_keeps_radius_and_even_angles() {
        let r = 40.0;
        let poly: Vec<_> = (0..2000)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 2000.0;
                (r * a.cos(), r * a.sin())
            })
            .collect();
        let out = resample_closed(&poly, 256).unwrap();
        assert_eq!(out.len(), 256);
        let angles: Vec<f64> = out.iter().map(|p| p.1.atan2(p.0)).collect();
        for (i, p) in out.iter().enumerate() {
            assert!((p.0.hypot(p.1) - r).abs() < 0.01 * r);
            let expect = 2.0 * PI / 256.0;
            let gap = (angles[(i + 1) % 256] - angles[i]).rem_euclid(2.0 * PI);
            assert!((gap - expect).abs() < 1e-3);
        }
    }

    #[test]
    fn uniform_input_is_reproduced() {
        let b = RawBoundary {
            points: (0..25)
                .map(|i| (i, 0))
                .chain((0..25).map(|i| (25, i)))
                .chain((0..25).map(|i| (25 - i, 25)))
                .chain((0..25).map(|i| (0, 25 - i)))
                .collect(),
        };
        let pts: Vec<_> = b.points.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
        let out = resample_closed(&pts, 100).unwrap();
        assert_eq!(out, pts);
    }

    #[test]
    fn square_arc_gaps_are_equal() {
        let poly = vec![(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)];
        let out = resample_closed(&poly, 100).unwrap();
        let pos: Vec<f64> = out.iter().map(|&p| arc_position(&poly, p)).collect();
        for k in 0..100 {
            let next = if k == 99 { 40.0 } else { pos[k + 1] };
            assert!((next - pos[k] - 0.4).abs() < 1e-9, "gap {k}");
        }
    }

    #[test]
    fn polygon_gaps_have_tiny_variation() {
        let poly = vec![(0.0, 0.0), (7.3, 1.1), (9.0, 8.5), (2.2, 11.0), (-3.0, 4.4)];
        let out = resample_closed(&poly, 256).unwrap();
        let pos: Vec<f64> = out.iter().map(|&p| arc_position(&poly, p)).collect();
        let perim: f64 = (0..poly.len())
            .map(|i| {
                let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
                (b.0 - a.0).hypot(b.1 - a.1)
            })
            .sum();
        let gaps: Vec<f64> = (0..256)
            .map(|k| if k == 255 { perim - pos[k] } else { pos[k + 1] - pos[k] })
            .collect();
        let mean = gaps.iter().sum::<f64>() / 256.0;
        let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / 256.0;
        assert!(var.sqrt() / mean < 1e-6);
    }

    #[test]
    fn zero_perimeter_rejected() {
        assert_eq!(
            resample_closed(&[(1.0, 1.0), (1.0, 1.0)], 100),
            Err(GeometryError::DegeneratePerimeter)
        );
        let b = RawBoundary { points: vec![(3, 3)] };
        assert_eq!(resample_uniform(&b, 100), Err(GeometryError::DegeneratePerimeter));
        assert_eq!(resample_uniform(&b, 50), Err(GeometryError::UnsupportedPointCount(50)));
    }
}
