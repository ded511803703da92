//! Binary rasters and their run-length encoding.
//!
//! Encoding is row-major, alternating zero/one run counts, always starting
//! with a (possibly empty) run of zeros, written as space-separated decimals.

use thiserror::Error;

use super::BBox;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RleError {
    #[error("run lengths sum to {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("malformed run length {0:?}")]
    Malformed(String),
}

/// Row-major binary raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Mask {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Out-of-range coordinates read as background.
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    /// Tight bounding box of the set pixels.
    pub fn bbox(&self) -> Option<BBox> {
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for y in 0..self.height {
            let row = &self.data[y * self.width..(y + 1) * self.width];
            if let Some(first) = row.iter().position(|&b| b) {
                let last = row.iter().rposition(|&b| b).unwrap_or(first);
                x0 = x0.min(first);
                x1 = x1.max(last);
                y0 = y0.min(y);
                y1 = y;
            }
        }
        (x0 != usize::MAX).then(|| {
            BBox::new(
                x0 as u32,
                y0 as u32,
                (x1 - x0 + 1) as u32,
                (y1 - y0 + 1) as u32,
            )
        })
    }

    /// Copies the pixels inside `b` (clipped to the raster) into a new mask.
    pub fn crop(&self, b: &BBox) -> Mask {
        let x0 = (b.x as usize).min(self.width);
        let y0 = (b.y as usize).min(self.height);
        let x1 = ((b.x + b.w) as usize).min(self.width);
        let y1 = ((b.y + b.h) as usize).min(self.height);
        Mask::from_fn(x1 - x0, y1 - y0, |x, y| self.get(x0 + x, y0 + y))
    }
}

pub fn encode_rle(mask: &Mask) -> String {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0usize;
    for &b in &mask.data {
        if b == current {
            len += 1;
        } else {
            runs.push(len);
            current = b;
            len = 1;
        }
    }
    runs.push(len);
    let mut out = String::with_capacity(runs.len() * 4);
    for (i, r) in runs.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&r.to_string());
    }
    out
}

pub fn decode_rle(rle: &str, width: usize, height: usize) -> Result<Mask, RleError> {
    let expected = width * height;
    let mut data = Vec::with_capacity(expected);
    let mut value = false;
    for tok in rle.split_ascii_whitespace() {
        let n: usize = tok
            .parse()
            .map_err(|_| RleError::Malformed(tok.to_string()))?;
        if data.len() + n > expected {
            let got = data.len() + n;
            return Err(RleError::LengthMismatch { expected, got });
        }
        data.resize(data.len() + n, value);
        value = !value;
    }
    if data.len() != expected {
        return Err(RleError::LengthMismatch {
            expected,
            got: data.len(),
        });
    }
    Ok(Mask {
        width,
        height,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_zeros_is_empty() {
        let m = decode_rle("12", 4, 3).unwrap();
        assert!(m.is_empty());
        assert_eq!(encode_rle(&m), "12");
    }

    #[test]
    fn single_run_covers_everything() {
        let m = decode_rle("0 12", 4, 3).unwrap();
        assert_eq!(m.count(), 12);
        assert_eq!(encode_rle(&m), "0 12");
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            decode_rle("3 4", 4, 3),
            Err(RleError::LengthMismatch {
                expected: 12,
                got: 7
            })
        );
        assert!(matches!(
            decode_rle("3 40", 4, 3),
            Err(RleError::LengthMismatch { .. })
        ));
        assert!(matches!(decode_rle("3 x", 4, 3), Err(RleError::Malformed(_))));
    }

    #[test]
    fn bbox_and_crop() {
        let m = Mask::from_fn(8, 6, |x, y| (2..5).contains(&x) && (1..4).contains(&y));
        let b = m.bbox().unwrap();
        assert_eq!(b, BBox::new(2, 1, 3, 3));
        let c = m.crop(&b);
        assert_eq!(c.count(), 9);
        assert!(Mask::new(3, 3).bbox().is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn encode_decode_identity(
            (w, h, bits) in (1usize..=64, 1usize..=64)
                .prop_flat_map(|(w, h)| (Just(w), Just(h), proptest::collection::vec(any::<bool>(), w * h)))
        ) {
            let m = Mask::from_fn(w, h, |x, y| bits[y * w + x]);
            let back = decode_rle(&encode_rle(&m), w, h).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
