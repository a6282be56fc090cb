//! Acquisition noise and procedural dirty-lens overlays.

use super::{level_index, tables, ChallengeError};
use crate::imaging::{Frame, ImageError};
use crate::rng::{derive, mix64, unit_f64, SplitMix64};

const NOISE_STREAM: u64 = 0x004E_015E;
const DIRT_STREAM: u64 = 0xD1_27;

/// Uniform draw for channel `c` of pixel `i` in frame `t`.
#[inline]
pub(crate) fn noise_sample(frame_key: u64, i: usize, c: usize) -> f64 {
    unit_f64(mix64(frame_key ^ mix64((i * 3 + c) as u64)))
}

/// `(1 - a) * in + a * U` with `a = amount / 100` and per-pixel, per-channel
/// uniform `U`. The noise field depends on `(seed, frame_index)` only, so the
/// same pixel sees the same draw at every level.
pub fn apply_noise(frame: &Frame, level: u8, seed: u64, frame_index: usize) -> Result<Frame, ChallengeError> {
    let a = tables::NOISE_AMOUNT[level_index(level)?] / 100.0;
    let key = derive(seed, &[NOISE_STREAM, frame_index as u64]);
    let w = frame.width();
    Ok(frame.map_indexed(|x, y, p| {
        let i = y * w + x;
        std::array::from_fn(|c| noise_mix(p[c], a, noise_sample(key, i, c)))
    }))
}

#[inline]
fn noise_mix(input: f64, amount: f64, u: f64) -> f64 {
    (1.0 - amount) * input + amount * u
}

/// A grayscale overlay in premultiplied form: `coverage` is the alpha,
/// `premult` the alpha-weighted gray.
#[derive(Debug, Clone, PartialEq)]
pub struct DirtMask {
    pub width: usize,
    pub height: usize,
    pub opacity: f64,
    pub coverage: Vec<f64>,
    pub premult: Vec<f64>,
}

impl DirtMask {
    /// `out = in * (1 - opacity * A) + opacity * P`.
    pub fn apply(&self, frame: &Frame) -> Result<Frame, ImageError> {
        if frame.dims() != (self.width, self.height) {
            return Err(ImageError::DimensionMismatch {
                expected_w: self.width,
                expected_h: self.height,
                found_w: frame.width(),
                found_h: frame.height(),
            });
        }
        let op = self.opacity;
        let w = self.width;
        Ok(frame.map_indexed(|x, y, p| {
            let i = y * w + x;
            let (a, g) = (self.coverage[i], self.premult[i]);
            p.map(|c| c * (1.0 - op * a) + op * g)
        }))
    }
}

/// Builds the dirt overlay for `(seed, level, width, height)`: `8 * level`
/// soft elliptical blobs, semi-axes 2–10% of the frame width, gray 0.1–0.4.
pub fn dirt_mask(seed: u64, level: u8, width: usize, height: usize) -> Result<DirtMask, ChallengeError> {
    level_index(level)?;
    let blobs = tables::DIRT_BLOBS_PER_LEVEL * level as usize;
    let mut coverage = vec![0.0; width * height];
    let mut premult = vec![0.0; width * height];
    let (wf, hf) = (width as f64, height as f64);
    for b in 0..blobs {
        let mut rng = SplitMix64::new(derive(seed, &[DIRT_STREAM, level as u64, b as u64]));
        let cx = rng.range(0.0, wf);
        let cy = rng.range(0.0, hf);
        let ax = rng.range(0.02, 0.10) * wf;
        let ay = rng.range(0.02, 0.10) * wf;
        let theta = rng.range(0.0, std::f64::consts::PI);
        let gray = rng.range(0.1, 0.4);
        let (s, c) = theta.sin_cos();
        // The Gaussian edge is negligible beyond two semi-axes.
        let reach = 2.0 * ax.max(ay);
        let x0 = (cx - reach).floor().max(0.0) as usize;
        let x1 = ((cx + reach).ceil() as usize).min(width.saturating_sub(1));
        let y0 = (cy - reach).floor().max(0.0) as usize;
        let y1 = ((cy + reach).ceil() as usize).min(height.saturating_sub(1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                let (u, v) = (c * dx + s * dy, -s * dx + c * dy);
                let q2 = (u / ax).powi(2) + (v / ay).powi(2);
                if q2 > 4.0 {
                    continue;
                }
                let k = (-2.0 * q2).exp();
                let i = y * width + x;
                premult[i] = premult[i] * (1.0 - k) + gray * k;
                coverage[i] = coverage[i] * (1.0 - k) + k;
            }
        }
    }
    Ok(DirtMask {
        width,
        height,
        opacity: tables::DIRT_OPACITY_PER_LEVEL * level as f64,
        coverage,
        premult,
    })
}

pub fn apply_dirty_lens(frame: &Frame, level: u8, seed: u64) -> Result<Frame, ChallengeError> {
    let mask = dirt_mask(seed, level, frame.width(), frame.height())?;
    Ok(mask.apply(frame)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::asset::natural_texture;

    #[test]
    fn noise_mean_matches_expectation() {
        // Monte-Carlo oracle: E[out] = (1 - a) * in + a / 2.
        let input = 0.3;
        let f = Frame::filled(400, 250, [input; 3]);
        for level in 1..=5u8 {
            let a = tables::NOISE_AMOUNT[level as usize - 1] / 100.0;
            let out = apply_noise(&f, level, 42, 0).unwrap();
            let mean = out.pixels().iter().map(|p| p[1]).sum::<f64>() / out.pixels().len() as f64;
            let expected = (1.0 - a) * input + a * 0.5;
            assert!((mean - expected).abs() < 0.01, "level {level}: {mean} vs {expected}");
        }
    }

    #[test]
    fn full_amount_ignores_input() {
        let key = derive(9, &[NOISE_STREAM, 0]);
        // a = 1 reduces to the raw field for any input.
        for i in 0..10 {
            let u = noise_sample(key, i, 0);
            assert!((0.0..1.0).contains(&u));
            assert_eq!(noise_mix(0.8, 1.0, u), u);
            assert_eq!(noise_mix(0.1, 1.0, u), u);
        }
    }

    #[test]
    fn noise_frames_differ() {
        let f = Frame::filled(8, 8, [0.5; 3]);
        assert_ne!(apply_noise(&f, 2, 1, 0).unwrap(), apply_noise(&f, 2, 1, 1).unwrap());
        assert_eq!(apply_noise(&f, 2, 1, 3).unwrap(), apply_noise(&f, 2, 1, 3).unwrap());
    }

    #[test]
    fn dirt_mask_is_content_independent() {
        let a = natural_texture(48, 32);
        let b = Frame::filled(48, 32, [0.9, 0.2, 0.4]);
        let oa = apply_dirty_lens(&a, 3, 5).unwrap();
        let ob = apply_dirty_lens(&b, 3, 5).unwrap();
        let mask = dirt_mask(5, 3, 48, 32).unwrap();
        // Recover op*A and op*P per pixel from the two outputs and compare.
        let mut checked = 0;
        for i in 0..48 * 32 {
            let (pa, pb) = (a.pixels()[i][0], b.pixels()[i][0]);
            if (pa - pb).abs() < 0.05 {
                continue;
            }
            let (qa, qb) = (oa.pixels()[i][0], ob.pixels()[i][0]);
            let keep = (qa - qb) / (pa - pb);
            let add = qa - pa * keep;
            assert!((keep - (1.0 - mask.opacity * mask.coverage[i])).abs() < 1e-9);
            assert!((add - mask.opacity * mask.premult[i]).abs() < 1e-9);
            checked += 1;
        }
        assert!(checked > 500);
        assert_eq!(dirt_mask(5, 3, 48, 32).unwrap(), mask);
        assert_ne!(dirt_mask(6, 3, 48, 32).unwrap(), mask);
    }

    #[test]
    fn dirt_severity_grows() {
        let f = Frame::filled(64, 64, [0.5; 3]);
        let change = |level| {
            let out = apply_dirty_lens(&f, level, 17).unwrap();
            out.pixels().iter().map(|p| (p[0] - 0.5).abs()).sum::<f64>() / 4096.0
        };
        assert!(change(5) > change(1));
    }
}
