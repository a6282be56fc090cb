//! Per-pixel tonal challenges: decolorization, exposure, shadow, haze.

use super::{hex_rgb, level_index, tables, ChallengeError};
use crate::imaging::{luma, Frame, Rgb};

/// Hue-sector weight of a pixel; achromatic pixels take the neutral 50.
fn sector_weight(p: Rgb) -> f64 {
    let max = p[0].max(p[1]).max(p[2]);
    let min = p[0].min(p[1]).min(p[2]);
    let chroma = max - min;
    if chroma <= 0.0 {
        return 50.0;
    }
    let hue = if max == p[0] {
        60.0 * ((p[1] - p[2]) / chroma).rem_euclid(6.0)
    } else if max == p[1] {
        60.0 * ((p[2] - p[0]) / chroma + 2.0)
    } else {
        60.0 * ((p[0] - p[1]) / chroma + 4.0)
    };
    // Sectors are 60° wide and centered on the primaries/secondaries.
    let sector = (((hue + 30.0).rem_euclid(360.0)) / 60.0).floor() as usize % 6;
    tables::DECOLOR_WEIGHTS[sector]
}

/// Black-and-white value of a pixel under the hue-sector weights.
pub(crate) fn black_and_white(p: Rgb) -> f64 {
    let w = sector_weight(p);
    if w == 50.0 && p[0] == p[1] && p[1] == p[2] {
        return p[0];
    }
    (luma(p) * w / 50.0).clamp(0.0, 1.0)
}

pub fn apply_decolorization(frame: &Frame, level: u8) -> Result<Frame, ChallengeError> {
    let alpha = tables::DECOLOR_ALPHA[level_index(level)?];
    Ok(frame.map(|p| {
        let bw = black_and_white(p);
        p.map(|c| if alpha == 1.0 { bw } else { (1.0 - alpha) * c + alpha * bw })
    }))
}

/// Multiplies every channel by `2^stops`, clamped.
pub fn apply_exposure(frame: &Frame, stops: f64) -> Frame {
    if stops == 0.0 {
        return frame.clone();
    }
    let gain = stops.exp2();
    frame.map(|p| p.map(|c| c * gain))
}

pub fn apply_darkening(frame: &Frame, level: u8) -> Result<Frame, ChallengeError> {
    Ok(apply_exposure(frame, tables::DARKENING_STOPS[level_index(level)?]))
}

pub fn apply_overexposure(frame: &Frame, level: u8) -> Result<Frame, ChallengeError> {
    Ok(apply_exposure(frame, tables::EXPOSURE_STOPS[level_index(level)?]))
}

/// Whether column `x` falls inside a dark blind.
pub(crate) fn in_shadow_band(x: usize) -> bool {
    ((x as f64 + 0.5) % tables::SHADOW_PERIOD) < tables::SHADOW_DUTY * tables::SHADOW_PERIOD
}

/// Vertical venetian-blind stripes with hard edges.
pub fn apply_shadow(frame: &Frame, level: u8) -> Result<Frame, ChallengeError> {
    let keep = 1.0 - tables::SHADOW_OPACITY[level_index(level)?];
    Ok(frame.map_indexed(|x, _, p| if in_shadow_band(x) { p.map(|c| c * keep) } else { p }))
}

/// Brightness/contrast adjustment applied before the haze veil.
pub(crate) fn haze_tone(c: f64) -> f64 {
    let brightness = tables::HAZE_BRIGHTNESS / 255.0;
    let contrast = 1.0 + tables::HAZE_CONTRAST / 100.0;
    (c + brightness - 0.5) * contrast + 0.5
}

/// Haze veil weight profile: 1 at the focal point, 0 at the farthest pixel.
pub(crate) fn haze_profile(width: usize, height: usize, focal: (f64, f64)) -> Vec<f64> {
    let dist = |x: usize, y: usize| {
        let u = (x as f64 + 0.5) / width as f64 - focal.0;
        let v = (y as f64 + 0.5) / height as f64 - focal.1;
        (u * u + v * v).sqrt()
    };
    let far = [(0, 0), (width - 1, 0), (0, height - 1), (width - 1, height - 1)]
        .into_iter()
        .map(|(x, y)| dist(x, y))
        .fold(0.0, f64::max);
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            out.push(if far > 0.0 { 1.0 - (dist(x, y) / far).min(1.0) } else { 1.0 });
        }
    }
    out
}

/// Tone adjustment followed by an elliptical gray veil centered on `focal`
/// (normalized coordinates). Distances are measured in normalized units, so
/// the veil is elliptical on non-square frames.
pub fn apply_haze(frame: &Frame, level: u8, focal: (f64, f64)) -> Result<Frame, ChallengeError> {
    let base = tables::HAZE_BASE[level_index(level)?];
    if !((0.0..=1.0).contains(&focal.0) && (0.0..=1.0).contains(&focal.1)) {
        return Err(ChallengeError::InvalidFocal(focal.0, focal.1));
    }
    let (w, h) = frame.dims();
    let profile = haze_profile(w, h, focal);
    let veil_color = hex_rgb(tables::HAZE_COLOR);
    Ok(frame.map_indexed(|x, y, p| {
        let v = base * profile[y * w + x];
        std::array::from_fn(|c| (1.0 - v) * haze_tone(p[c]) + v * veil_color[c])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn px(f: &Frame) -> Rgb {
        f.pixels()[0]
    }

    #[test]
    fn decolorization_fixed_point_and_blue() {
        for level in 1..=5 {
            let g = Frame::filled(2, 2, [0.37; 3]);
            let out = apply_decolorization(&g, level).unwrap();
            for c in px(&out) {
                assert!((c - 0.37).abs() < 1e-12);
            }
        }
        let blue = apply_decolorization(&Frame::filled(1, 1, [0.0, 0.0, 1.0]), 5).unwrap();
        for c in px(&blue) {
            assert!((c - 0.0456).abs() < 1e-12, "{c}");
        }
        // Level 1 blends 20% of the black-and-white value.
        let blue1 = apply_decolorization(&Frame::filled(1, 1, [0.0, 0.0, 1.0]), 1).unwrap();
        assert!((px(&blue1)[2] - (0.8 + 0.2 * 0.0456)).abs() < 1e-12);
    }

    #[test]
    fn hue_sectors() {
        assert_eq!(sector_weight([1.0, 0.0, 0.0]), 40.0);
        assert_eq!(sector_weight([1.0, 1.0, 0.0]), 60.0);
        assert_eq!(sector_weight([0.0, 1.0, 0.0]), 40.0);
        assert_eq!(sector_weight([0.0, 1.0, 1.0]), 60.0);
        assert_eq!(sector_weight([0.0, 0.0, 1.0]), 20.0);
        assert_eq!(sector_weight([1.0, 0.0, 1.0]), 80.0);
        // 340° is still red.
        assert_eq!(sector_weight([1.0, 0.0, 0.33]), 40.0);
    }

    #[test]
    fn exposure_cases() {
        let f = Frame::filled(1, 1, [0.25; 3]);
        assert_eq!(px(&apply_exposure(&f, 1.0)), [0.5; 3]);
        assert_eq!(apply_exposure(&f, 0.0), f);
        assert_eq!(px(&apply_exposure(&f, 9.0)), [1.0; 3]);
        assert_eq!(px(&apply_darkening(&f, 3).unwrap()), [0.25 / 32.0; 3]);
    }

    #[test]
    fn shadow_bands() {
        let f = Frame::filled(160, 1, [1.0; 3]);
        let out = apply_shadow(&f, 5).unwrap();
        assert_eq!(out.get(0, 0), [0.25; 3]);
        assert_eq!(out.get(66, 0), [0.25; 3]);
        assert_eq!(out.get(67, 0), [1.0; 3]);
        assert_eq!(out.get(141, 0), [1.0; 3]);
        assert_eq!(out.get(142, 0), [0.25; 3]);
        let out2 = apply_shadow(&f, 2).unwrap();
        assert!((out2.get(0, 0)[0] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn haze_focal_and_corner() {
        // 3x3 so the center pixel sits exactly on the focal point.
        let f = Frame::filled(3, 3, [0.5; 3]);
        let out = apply_haze(&f, 5, (0.5, 0.5)).unwrap();
        let adjusted: f64 = (0.5 - 34.0 / 255.0 - 0.5) * 0.87 + 0.5;
        assert!((adjusted - 0.384).abs() < 1e-12);
        let expected = 0.5 * adjusted + 0.5 * (0xCE as f64 / 255.0);
        assert!((out.get(1, 1)[0] - expected).abs() < 1e-12);
        // Corners are the farthest pixels: tone adjustment only.
        assert!((out.get(0, 0)[0] - adjusted).abs() < 1e-12);
        assert!((out.get(2, 2)[0] - adjusted).abs() < 1e-12);
        assert!(matches!(apply_haze(&f, 1, (1.2, 0.5)), Err(ChallengeError::InvalidFocal(..))));
    }
}
