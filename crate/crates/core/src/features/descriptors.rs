//! Hand-crafted color, texture and motion descriptors.

use super::{FeatureError, FeatureKind, FeatureVector};
use crate::frame::Frame;

pub const COLOR_DIMS: usize = 128;
pub const TEXTURE_DIMS: usize = 80;
pub const MOTION_DIMS: usize = 16;

const GRID: u32 = 4;
const EDGE_CATEGORIES: usize = 5;
/// Minimum operator response (on luma scaled to [0, 1]) for a cell to count as an edge.
pub const EDGE_ACTIVITY_THRESHOLD: f64 = 11.0 / 255.0;

/// Converts 8-bit RGB to (hue in degrees [0, 360), saturation [0, 1], value [0, 1]).
pub fn rgb_to_hsv([r, g, b]: [u8; 3]) -> (f64, f64, f64) {
    let (r, g, b) = (
        f64::from(r) / 255.0,
        f64::from(g) / 255.0,
        f64::from(b) / 255.0,
    );
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let sat = if max == 0.0 { 0.0 } else { delta / max };
    (hue, sat, max)
}

/// Histogram bin of one pixel: 8 hue x 4 saturation x 4 value levels.
pub fn hsv_bin(rgb: [u8; 3]) -> usize {
    let (h, s, v) = rgb_to_hsv(rgb);
    let h_idx = ((h / 360.0 * 8.0).floor() as usize).min(7);
    let s_idx = ((s * 4.0).floor() as usize).min(3);
    let v_idx = ((v * 4.0).floor() as usize).min(3);
    h_idx * 16 + s_idx * 4 + v_idx
}

/// L1-normalized 128-bin HSV histogram over all pixels.
pub fn color_histogram(frame: &Frame) -> FeatureVector {
    let mut counts = [0u64; COLOR_DIMS];
    for px in frame.pixels().chunks_exact(3) {
        counts[hsv_bin([px[0], px[1], px[2]])] += 1;
    }
    let total = (frame.width() as f64) * (frame.height() as f64);
    let values = counts.iter().map(|&c| (c as f64 / total) as f32).collect();
    FeatureVector::new_unchecked(FeatureKind::Color, values)
}

/// Pixel range `[start, end)` of block `i` when `len` pixels are split into the 4x4 grid.
fn block_span(i: u32, len: u32) -> (u32, u32) {
    (i * len / GRID, (i + 1) * len / GRID)
}

/// Index of the dominant edge category of a 2x2 luma cell, or `None` for a
/// cell whose strongest response is below the activity threshold.
///
/// Categories, in vector order: horizontal gradient (intensity changes when
/// moving along x), vertical gradient, 45 degree diagonal, 135 degree
/// diagonal, non-directional.
fn edge_category(a: [f64; 4]) -> Option<usize> {
    let [tl, tr, bl, br] = a;
    let s2 = std::f64::consts::SQRT_2;
    let responses = [
        (tl - tr + bl - br).abs(),
        (tl + tr - bl - br).abs(),
        (s2 * tl - s2 * br).abs(),
        (s2 * tr - s2 * bl).abs(),
        (2.0 * tl - 2.0 * tr - 2.0 * bl + 2.0 * br).abs(),
    ];
    let mut best = 0;
    for (i, &r) in responses.iter().enumerate().skip(1) {
        if r > responses[best] {
            best = i;
        }
    }
    (responses[best] >= EDGE_ACTIVITY_THRESHOLD).then_some(best)
}

/// Five-category edge histogram on a 4x4 block grid (80 values).
///
/// Each block is tiled with non-overlapping 2x2 pixel cells; every active
/// cell votes for its dominant category and the block histogram is
/// L1-normalized, so a block without active cells stays all-zero.
pub fn texture_descriptor(frame: &Frame) -> Result<FeatureVector, FeatureError> {
    let (w, h) = (frame.width(), frame.height());
    if w < 8 || h < 8 {
        return Err(FeatureError::FrameTooSmall {
            width: w,
            height: h,
        });
    }
    let luma: Vec<f64> = frame.luma().into_iter().map(|l| l / 255.0).collect();
    let at = |x: u32, y: u32| luma[(y * w + x) as usize];
    let mut values = Vec::with_capacity(TEXTURE_DIMS);
    for by in 0..GRID {
        let (y0, y1) = block_span(by, h);
        for bx in 0..GRID {
            let (x0, x1) = block_span(bx, w);
            let mut counts = [0u32; EDGE_CATEGORIES];
            let mut y = y0;
            while y + 1 < y1 {
                let mut x = x0;
                while x + 1 < x1 {
                    let cell = [at(x, y), at(x + 1, y), at(x, y + 1), at(x + 1, y + 1)];
                    if let Some(c) = edge_category(cell) {
                        counts[c] += 1;
                    }
                    x += 2;
                }
                y += 2;
            }
            let total: u32 = counts.iter().sum();
            values.extend(counts.iter().map(|&c| {
                if total == 0 {
                    0.0
                } else {
                    (f64::from(c) / f64::from(total)) as f32
                }
            }));
        }
    }
    Ok(FeatureVector::new_unchecked(FeatureKind::Texture, values))
}

/// Mean absolute temporal luma difference per 4x4 block, averaged over all
/// consecutive frame pairs and scaled to [0, 1]. A single frame gives zeros.
pub fn motion_descriptor(frames: &[Frame]) -> Result<FeatureVector, FeatureError> {
    let first = frames.first().ok_or(FeatureError::EmptyShot)?;
    let (w, h) = (first.width(), first.height());
    if let Some(bad) = frames.iter().find(|f| f.width() != w || f.height() != h) {
        return Err(FeatureError::MismatchedDimensions {
            expected: (w, h),
            found: (bad.width(), bad.height()),
        });
    }
    let mut sums = [0.0f64; MOTION_DIMS];
    if frames.len() > 1 {
        let lumas: Vec<Vec<f64>> = frames.iter().map(Frame::luma).collect();
        for pair in lumas.windows(2) {
            for by in 0..GRID {
                let (y0, y1) = block_span(by, h);
                for bx in 0..GRID {
                    let (x0, x1) = block_span(bx, w);
                    let mut acc = 0.0;
                    let mut n = 0u64;
                    for y in y0..y1 {
                        for x in x0..x1 {
                            let i = (y * w + x) as usize;
                            acc += (pair[1][i] - pair[0][i]).abs();
                            n += 1;
                        }
                    }
                    if n > 0 {
                        sums[(by * GRID + bx) as usize] += acc / n as f64;
                    }
                }
            }
        }
    }
    let pairs = (frames.len().max(2) - 1) as f64;
    let values = sums
        .iter()
        .map(|s| (s / pairs / 255.0).clamp(0.0, 1.0) as f32)
        .collect();
    Ok(FeatureVector::new_unchecked(FeatureKind::Motion, values))
}
