//! Lens (hexagonal iris) and Gaussian blur, clamp-to-edge.

use super::{level_index, tables, ChallengeError};
use crate::imaging::Frame;

/// A sparse normalized kernel: `(dx, dy, weight)` taps.
pub type Taps = Vec<(isize, isize, f64)>;

/// Flat regular hexagon of circumradius `r`, flat-top orientation (vertices at
/// 0° and 180°), rasterized by testing integer offsets against the polygon.
pub fn hexagon_kernel(radius: usize) -> Taps {
    let r = radius as f64;
    let s3 = 3f64.sqrt();
    let mut offsets = Vec::new();
    let ri = radius as isize;
    for dy in -ri..=ri {
        for dx in -ri..=ri {
            let (ax, ay) = ((dx as f64).abs(), (dy as f64).abs());
            // Inside iff below the flat edge and within the slanted edges.
            let inside = ay <= s3 / 2.0 * r + 1e-9 && s3 * ax + ay <= s3 * r + 1e-9;
            if inside {
                offsets.push((dx, dy));
            }
        }
    }
    let w = 1.0 / offsets.len() as f64;
    offsets.into_iter().map(|(dx, dy)| (dx, dy, w)).collect()
}

/// 1-D Gaussian taps for `sigma`, truncated at `ceil(3 sigma)` and renormalized.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

#[inline]
fn clamp_coord(v: isize, n: usize) -> usize {
    v.clamp(0, n as isize - 1) as usize
}

fn convolve_taps(frame: &Frame, taps: &Taps) -> Frame {
    let (w, h) = frame.dims();
    Frame::from_fn(w, h, |x, y| {
        let mut acc = [0.0; 3];
        for &(dx, dy, k) in taps {
            let p = frame.get(clamp_coord(x as isize + dx, w), clamp_coord(y as isize + dy, h));
            for c in 0..3 {
                acc[c] += k * p[c];
            }
        }
        acc
    })
}

fn convolve_separable(frame: &Frame, kernel: &[f64]) -> Frame {
    let (w, h) = frame.dims();
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![[0.0f64; 3]; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0; 3];
            for (i, &k) in kernel.iter().enumerate() {
                let p = frame.get(clamp_coord(x as isize + i as isize - r, w), y);
                for c in 0..3 {
                    acc[c] += k * p[c];
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    Frame::from_fn(w, h, |x, y| {
        let mut acc = [0.0; 3];
        for (i, &k) in kernel.iter().enumerate() {
            let p = tmp[clamp_coord(y as isize + i as isize - r, h) * w + x];
            for c in 0..3 {
                acc[c] += k * p[c];
            }
        }
        acc
    })
}

pub fn apply_lens_blur(frame: &Frame, level: u8) -> Result<Frame, ChallengeError> {
    let radius = tables::LENS_RADIUS[level_index(level)?];
    Ok(convolve_taps(frame, &hexagon_kernel(radius)))
}

pub fn apply_gaussian_blur(frame: &Frame, level: u8) -> Result<Frame, ChallengeError> {
    let sigma = tables::BLURINESS[level_index(level)?] / 2.0;
    Ok(convolve_separable(frame, &gaussian_kernel(sigma)))
}
