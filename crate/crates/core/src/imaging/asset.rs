//! Deterministic procedural test imagery.
//!
//! [`natural_texture`] is the fixed test asset used for severity checks;
//! [`synthetic_scene`] renders a short panning clip with one traffic-sign-like
//! disc and its ground-truth boxes, standing in for reference videos.

use super::{Frame, FrameSequence, DEFAULT_FRAME_RATE};
use crate::annotations::{Annotation, BoundingBox, SignType};
use crate::rng::{derive, unit_f64, SplitMix64};

const TEXTURE_SEED: u64 = 0x5EED_7E57_A55E_7001;
const OCTAVES: [(f64, f64); 5] = [(32.0, 1.0), (16.0, 0.5), (8.0, 0.25), (4.0, 0.125), (2.0, 0.0625)];

fn lattice(seed: u64, ix: i64, iy: i64) -> f64 {
    unit_f64(derive(seed, &[ix as u64, iy as u64]))
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn value_noise(seed: u64, x: f64, y: f64, period: f64) -> f64 {
    let (u, v) = (x / period, y / period);
    let (ix, iy) = (u.floor() as i64, v.floor() as i64);
    let (fx, fy) = (smooth(u - ix as f64), smooth(v - iy as f64));
    let top = lattice(seed, ix, iy) * (1.0 - fx) + lattice(seed, ix + 1, iy) * fx;
    let bottom = lattice(seed, ix, iy + 1) * (1.0 - fx) + lattice(seed, ix + 1, iy + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Fractal noise in [0, 1], contrast-stretched so both ends saturate somewhere.
fn fractal(seed: u64, x: f64, y: f64) -> f64 {
    let total: f64 = OCTAVES.iter().map(|o| o.1).sum();
    let n: f64 = OCTAVES
        .iter()
        .enumerate()
        .map(|(k, &(period, amp))| amp * value_noise(derive(seed, &[k as u64]), x, y, period))
        .sum::<f64>()
        / total;
    ((n - 0.25) / 0.5).clamp(0.0, 1.0)
}

fn texture_pixel(seed: u64, x: f64, y: f64) -> [f64; 3] {
    let base = fractal(seed, x, y);
    let tint_g = fractal(derive(seed, &[101]), x, y);
    let tint_b = fractal(derive(seed, &[202]), x, y);
    [base, 0.85 * base + 0.15 * tint_g, 0.75 * base + 0.25 * tint_b]
}

/// Circular red sign with a white core, anti-aliasing free.
fn paint_sign(p: [f64; 3], x: f64, y: f64, cx: f64, cy: f64, r: f64) -> [f64; 3] {
    let d2 = (x - cx).powi(2) + (y - cy).powi(2);
    if d2 <= (0.6 * r).powi(2) {
        [0.95, 0.95, 0.95]
    } else if d2 <= r * r {
        [0.80, 0.08, 0.10]
    } else {
        p
    }
}

/// The fixed natural-texture test asset.
pub fn natural_texture(width: usize, height: usize) -> Frame {
    let (cx, cy) = (0.65 * width as f64, 0.35 * height as f64);
    let r = 0.12 * width.min(height) as f64;
    Frame::from_fn(width, height, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        paint_sign(texture_pixel(TEXTURE_SEED, px, py), px, py, cx, cy, r)
    })
}

/// A panning textured clip with one sign crossing the frame.
///
/// Returns the sequence (30 fps) and one annotation per frame in which the
/// sign disc is at least half inside the frame.
pub fn synthetic_scene(width: usize, height: usize, frames: usize, seed: u64) -> (FrameSequence, Vec<Annotation>) {
    assert!(frames > 0, "scene needs at least one frame");
    let mut rng = SplitMix64::new(derive(seed, &[0x5CE7E]));
    let tex_seed = rng.next_u64();
    let (pan_x, pan_y) = (rng.range(-1.5, 1.5), rng.range(-0.5, 0.5));
    let sign = SignType::from_code(1 + rng.below(14) as u8).expect("code in range");
    let r = rng.range(0.14, 0.22) * width.min(height) as f64;
    let cy = rng.range(0.3, 0.6) * height as f64;
    let x_start = rng.range(0.15, 0.35) * width as f64;
    let x_end = rng.range(0.65, 0.85) * width as f64;

    let mut out = Vec::with_capacity(frames);
    let mut anns = Vec::new();
    for t in 0..frames {
        let s = if frames > 1 { t as f64 / (frames - 1) as f64 } else { 0.0 };
        let cx = x_start + (x_end - x_start) * s;
        let (ox, oy) = (pan_x * t as f64, pan_y * t as f64);
        out.push(Frame::from_fn(width, height, |x, y| {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            paint_sign(texture_pixel(tex_seed, px + ox, py + oy), px, py, cx, cy, r)
        }));
        let x0 = (cx - r).max(0.0).floor();
        let y0 = (cy - r).max(0.0).floor();
        let x1 = (cx + r).min(width as f64).ceil();
        let y1 = (cy + r).min(height as f64).ceil();
        if let Ok(bbox) = BoundingBox::new(x0, y0, x1 - x0, y1 - y0) {
            anns.push(Annotation { frame_index: t, sign, bbox });
        }
    }
    let seq = FrameSequence::new(out, DEFAULT_FRAME_RATE).expect("non-empty, equal dims");
    (seq, anns)
}
