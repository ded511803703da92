use std::collections::VecDeque;

use super::{GeometryError, MAX_ENDPOINT_GAP};
use crate::ingest::Mask;

/// Outer boundary pixels in traversal order, traced with a single stroke.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawBoundary {
    pub points: Vec<(i64, i64)>,
}

impl RawBoundary {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn translated(&self, dx: i64, dy: i64) -> RawBoundary {
        RawBoundary {
            points: self.points.iter().map(|&(x, y)| (x + dx, y + dy)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rejection {
    OpenContour,
    TooFewPoints,
}

// Moore neighbourhood, clockwise on screen (y down), starting west.
const DIRS: [(i64, i64); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn dir_index(d: (i64, i64)) -> usize {
    DIRS.iter()
        .position(|&v| v == d)
        .expect("offset is a Moore neighbour")
}

/// Keeps only the largest 4-connected component. Ties go to the component
/// found first in row-major order.
fn largest_component(mask: &Mask) -> Mask {
    let (w, h) = (mask.width(), mask.height());
    let mut label = vec![0u32; w * h];
    let mut best = (0usize, 0u32);
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.as_slice()[start] || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        queue.push_back(start);
        let mut size = 0usize;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if mask.as_slice()[j] && label[j] == 0 {
                    label[j] = next;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        if size > best.0 {
            best = (size, next);
        }
    }
    Mask::from_fn(w, h, |x, y| label[y * w + x] == best.1 && best.1 != 0)
}

/// Moore-neighbour tracing of the outer boundary of the largest component.
///
/// Starts at the topmost-then-leftmost pixel and walks clockwise in image
/// coordinates. Tracing stops when the first transition out of the start
/// pixel is about to repeat (Jacob's criterion), so holes are never visited
/// and one-pixel-wide parts are walked on both sides.
pub fn trace_contour(mask: &Mask) -> Result<RawBoundary, GeometryError> {
    let comp = largest_component(mask);
    let w = comp.width();
    let first = comp
        .as_slice()
        .iter()
        .position(|&b| b)
        .ok_or(GeometryError::EmptyMask)?;
    let start = ((first % w) as i64, (first / w) as i64);
    let inside = |p: (i64, i64)| comp.get_signed(p.0, p.1);

    let mut points = vec![start];
    let mut cur = start;
    let mut back = 0usize; // west of the start pixel is background
    let mut first_move: Option<((i64, i64), usize)> = None;
    let limit = 4 * comp.count() + 8;

    for _ in 0..limit {
        let mut found = None;
        for k in 1..=8 {
            let idx = (back + k) % 8;
            let cand = (cur.0 + DIRS[idx].0, cur.1 + DIRS[idx].1);
            if inside(cand) {
                let prev = DIRS[(back + k - 1) % 8];
                let prev_abs = (cur.0 + prev.0, cur.1 + prev.1);
                found = Some((cand, dir_index((prev_abs.0 - cand.0, prev_abs.1 - cand.1))));
                break;
            }
        }
        let Some(state) = found else {
            // isolated pixel
            break;
        };
        match first_move {
            None => first_move = Some(state),
            Some(fm) if fm == state && cur == start => break,
            Some(_) => {}
        }
        points.push(state.0);
        cur = state.0;
        back = state.1;
    }
    if points.len() > 1 && points.last() == Some(&start) {
        points.pop();
    }
    Ok(RawBoundary { points })
}

pub fn validate_boundary(b: &RawBoundary, min_points: usize) -> Result<(), Rejection> {
    let (Some(&(x0, y0)), Some(&(x1, y1))) = (b.points.first(), b.points.last()) else {
        return Err(Rejection::TooFewPoints);
    };
    let gap = (((x1 - x0).pow(2) + (y1 - y0).pow(2)) as f64).sqrt();
    if gap > MAX_ENDPOINT_GAP {
        return Err(Rejection::OpenContour);
    }
    if b.points.len() < min_points {
        return Err(Rejection::TooFewPoints);
    }
    Ok(())
}
