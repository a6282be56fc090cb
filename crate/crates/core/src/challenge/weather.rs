//! Rain and snow: a tint/veil pass plus stateless particles.
//!
//! Drop counts are given at the reference resolution 1628×1236 and scaled by
//! frame area so particle density, not absolute count, is preserved. Every
//! particle's attributes derive from `(seed, pass, particle index)` and its
//! position is a closed-form function of the frame index, so any frame can be
//! rendered alone.

use rayon::prelude::*;

use super::{hex_rgb, level_index, tables, ChallengeError};
use crate::imaging::{Frame, FrameSequence};
use crate::rng::{derive, SplitMix64};

/// Frame area the drop tables refer to.
pub const REFERENCE_AREA: usize = 1628 * 1236;

const RAIN_STREAM: u64 = 0x7A1E;
const SNOW_STREAM: u64 = 0x5_0F1A;
const RAIN_INTENSITY: f64 = 0.25;
const SNOW_INTENSITY: f64 = 0.5;

/// Particle count for a `width`×`height` frame.
pub fn scaled_count(drops: usize, width: usize, height: usize) -> usize {
    if drops == 0 {
        return 0;
    }
    (drops as u128 * (width * height) as u128).div_ceil(REFERENCE_AREA as u128) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RainParams {
    pub tint_opacity: f64,
    /// Drops at the reference resolution.
    pub drops: usize,
    /// Streak length multiplier (2 at level 5).
    pub length_scale: f64,
}

impl RainParams {
    pub fn for_level(level: u8) -> Result<Self, ChallengeError> {
        let i = level_index(level)?;
        Ok(Self {
            tint_opacity: tables::RAIN_TINT_OPACITY,
            drops: tables::RAIN_DROPS[i],
            length_scale: if level == 5 { 2.0 } else { 1.0 },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnowParams {
    pub veil_opacity: f64,
    /// Flakes per pass at the reference resolution.
    pub drops: usize,
    pub passes: usize,
}

impl SnowParams {
    pub fn for_level(level: u8) -> Result<Self, ChallengeError> {
        let i = level_index(level)?;
        Ok(Self {
            veil_opacity: tables::SNOW_VEIL_PER_LEVEL * level as f64,
            drops: tables::SNOW_DROPS[i],
            passes: if level == 5 { 2 } else { 1 },
        })
    }
}

struct Streak {
    x0: f64,
    y0: f64,
    speed: f64,
    slope: f64,
    len: usize,
}

impl Streak {
    fn new(seed: u64, index: usize, length_scale: f64, height: usize) -> Self {
        let mut rng = SplitMix64::new(derive(seed, &[RAIN_STREAM, index as u64]));
        let x0 = rng.next_f64();
        let len = (rng.range(8.0, 15.0).floor() * length_scale) as usize;
        let span = (height + len) as f64;
        Streak {
            x0,
            y0: rng.range(0.0, span),
            speed: rng.range(0.25, 0.5) * span,
            slope: rng.range(-10f64, 10.0).to_radians().tan(),
            len,
        }
    }

    fn draw(&self, t: usize, width: usize, height: usize, overlay: &mut [f64]) {
        let span = (height + self.len) as f64;
        let travel = self.y0 + self.speed * t as f64;
        let head = travel.rem_euclid(span) - self.len as f64;
        let x = (self.x0 * width as f64 + travel * self.slope).rem_euclid(width as f64);
        for k in 0..self.len {
            let py = (head + k as f64).floor();
            let px = (x + k as f64 * self.slope).floor();
            if py >= 0.0 && py < height as f64 && px >= 0.0 && px < width as f64 {
                overlay[py as usize * width + px as usize] += RAIN_INTENSITY;
            }
        }
    }
}

/// Renders rain over frame `t` of a sequence.
pub fn render_rain_frame(frame: &Frame, t: usize, params: &RainParams, seed: u64) -> Frame {
    let (w, h) = frame.dims();
    let (top, bottom) = (hex_rgb(tables::RAIN_TINT_TOP), hex_rgb(tables::RAIN_TINT_BOTTOM));
    let mut overlay = vec![0.0; w * h];
    for i in 0..scaled_count(params.drops, w, h) {
        Streak::new(seed, i, params.length_scale, h).draw(t, w, h, &mut overlay);
    }
    let op = params.tint_opacity;
    frame.map_indexed(|x, y, p| {
        let s = if h > 1 { y as f64 / (h - 1) as f64 } else { 0.0 };
        std::array::from_fn(|c| {
            let tint = top[c] + (bottom[c] - top[c]) * s;
            let tinted = ((1.0 - op) * p[c] + op * tint).clamp(0.0, 1.0);
            tinted + overlay[y * w + x]
        })
    })
}

pub fn render_rain(seq: &FrameSequence, params: &RainParams, seed: u64) -> FrameSequence {
    let frames = seq
        .frames()
        .par_iter()
        .enumerate()
        .map(|(t, f)| render_rain_frame(f, t, params, seed))
        .collect();
    seq.with_frames(frames)
}

pub fn apply_rain(seq: &FrameSequence, level: u8, seed: u64) -> Result<FrameSequence, ChallengeError> {
    Ok(render_rain(seq, &RainParams::for_level(level)?, seed))
}

struct Flake {
    x0: f64,
    y0: f64,
    speed: f64,
    wind: f64,
    sway: f64,
    freq: f64,
    phase: f64,
    diameter: f64,
}

impl Flake {
    fn new(seed: u64, pass: usize, index: usize, width: usize, height: usize) -> Self {
        let mut rng = SplitMix64::new(derive(seed, &[SNOW_STREAM, pass as u64, index as u64]));
        let diameter = rng.range(1.0, 3.0);
        Flake {
            x0: rng.range(0.0, width as f64),
            y0: rng.range(0.0, height as f64 + diameter),
            speed: rng.range(0.3, 1.2),
            wind: rng.range(-0.3, 0.3),
            sway: rng.range(0.5, 2.0),
            freq: rng.range(0.1, 0.3),
            phase: rng.range(0.0, std::f64::consts::TAU),
            diameter,
        }
    }

    fn draw(&self, t: usize, width: usize, height: usize, overlay: &mut [f64]) {
        let t = t as f64;
        let span = height as f64 + self.diameter;
        let cy = (self.y0 + self.speed * t).rem_euclid(span) - self.diameter / 2.0;
        let cx = (self.x0 + self.wind * t + self.sway * (self.freq * t + self.phase).sin()).rem_euclid(width as f64);
        let r = self.diameter / 2.0;
        let (x0, x1) = ((cx - r).floor().max(0.0) as usize, ((cx + r).ceil().max(0.0) as usize).min(width));
        let (y0, y1) = ((cy - r).floor().max(0.0) as usize, ((cy + r).ceil().max(0.0) as usize).min(height));
        let mut hit = false;
        for y in y0..y1 {
            for x in x0..x1 {
                if (x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2) <= r * r {
                    overlay[y * width + x] += SNOW_INTENSITY;
                    hit = true;
                }
            }
        }
        // Small flakes between pixel centers still light their host pixel.
        if !hit && cx >= 0.0 && cy >= 0.0 && cx < width as f64 && cy < height as f64 {
            overlay[cy as usize * width + cx as usize] += SNOW_INTENSITY;
        }
    }
}

pub fn render_snow_frame(frame: &Frame, t: usize, params: &SnowParams, seed: u64) -> Frame {
    let (w, h) = frame.dims();
    let mut overlay = vec![0.0; w * h];
    let count = scaled_count(params.drops, w, h);
    for pass in 0..params.passes {
        for i in 0..count {
            Flake::new(seed, pass, i, w, h).draw(t, w, h, &mut overlay);
        }
    }
    let v = params.veil_opacity;
    frame.map_indexed(|x, y, p| p.map(|c| ((1.0 - v) * c + v).clamp(0.0, 1.0) + overlay[y * w + x]))
}

pub fn render_snow(seq: &FrameSequence, params: &SnowParams, seed: u64) -> FrameSequence {
    let frames = seq
        .frames()
        .par_iter()
        .enumerate()
        .map(|(t, f)| render_snow_frame(f, t, params, seed))
        .collect();
    seq.with_frames(frames)
}

pub fn apply_snow(seq: &FrameSequence, level: u8, seed: u64) -> Result<FrameSequence, ChallengeError> {
    Ok(render_snow(seq, &SnowParams::for_level(level)?, seed))
}
