use super::DescriptorError;
use crate::geometry::{Contour, TrackRecord, RADII_POINTS};

/// Normalised radii of a 256-point contour in traversal order.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiiDescriptor(pub Vec<f64>);

pub fn radii_descriptor(c: &Contour) -> Result<RadiiDescriptor, DescriptorError> {
    if c.n_points() != RADII_POINTS {
        return Err(DescriptorError::WrongPointCount {
            expected: RADII_POINTS,
            got: c.n_points(),
        });
    }
    Ok(RadiiDescriptor(c.r.clone()))
}

/// Radii descriptors of a track stacked row-wise; row `t` is frame `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackImage {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl TrackImage {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        TrackImage {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }
}

pub fn track_image(t: &TrackRecord) -> Result<TrackImage, DescriptorError> {
    let rows = t
        .contours
        .iter()
        .map(|c| radii_descriptor(c).map(|d| d.0))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrackImage::from_rows(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{normalize_video, to_polar};
    use std::f64::consts::PI;

    fn circle_contour() -> Contour {
        let pts: Vec<_> = (0..256)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 256.0;
                (10.0 * a.cos(), 10.0 * a.sin())
            })
            .collect();
        let mut cs = vec![to_polar(&pts).unwrap()];
        normalize_video(&mut cs);
        cs.pop().unwrap()
    }

    #[test]
    fn circle_gives_flat_profile() {
        let d = radii_descriptor(&circle_contour()).unwrap();
        assert_eq!(d.0.len(), 256);
        for v in &d.0 {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_point_count() {
        let c = to_polar(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]).unwrap();
        assert_eq!(
            radii_descriptor(&c),
            Err(DescriptorError::WrongPointCount {
                expected: 256,
                got: 3
            })
        );
    }

    #[test]
    fn track_image_stacks_rows() {
        let c = circle_contour();
        let track = TrackRecord {
            video_id: "v".into(),
            track_id: 0,
            class_id: 0,
            contours: vec![c.clone(); 6],
            gaps: 0,
        };
        let img = track_image(&track).unwrap();
        assert_eq!((img.rows, img.cols), (6, 256));
        for t in 0..6 {
            assert_eq!(img.row(t), radii_descriptor(&c).unwrap().0.as_slice());
        }
    }
}
