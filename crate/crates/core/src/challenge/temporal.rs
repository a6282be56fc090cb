//! Codec error as time displacement driven by the frame's own luminance.

use rayon::prelude::*;

use super::{level_index, tables, ChallengeError};
use crate::imaging::{luma, Frame, FrameSequence};
use crate::rng::{derive, mix64, unit_f64};

const CODEC_STREAM: u64 = 0xC0DE;

/// Frame offset for a pixel of luminance `l`, rounded stochastically with the
/// uniform draw `u` in [0, 1): `floor(x + u)` has expectation `x`, never
/// exceeds `ceil(|x|)` in magnitude and is exact when `x` is an integer.
pub(crate) fn displacement(l: f64, max_seconds: f64, frame_rate: f64, u: f64) -> isize {
    // Snap away representation error so integral offsets (e.g. 0.1 s at 30 fps) stay integral.
    let x = ((l - 0.5) * 2.0 * max_seconds * frame_rate * 1e9).round() / 1e9;
    (x + u).floor() as isize
}

/// Each output pixel is fetched from frame `t + D`, clamped to the sequence,
/// where `D` scales with the signed distance of the pixel's own luminance
/// from mid-gray (up to `max displacement × frame rate` frames). The seed
/// drives the per-pixel rounding dither.
pub fn apply_codec_error(seq: &FrameSequence, level: u8, seed: u64) -> Result<FrameSequence, ChallengeError> {
    let max_seconds = tables::CODEC_MAX_DISPLACEMENT[level_index(level)?];
    let frames = seq.frames();
    let last = frames.len() as isize - 1;
    let fps = seq.frame_rate();
    let out: Vec<Frame> = frames
        .par_iter()
        .enumerate()
        .map(|(t, frame)| {
            let (w, _) = frame.dims();
            let key = derive(seed, &[CODEC_STREAM, t as u64]);
            frame.map_indexed(|x, y, p| {
                let u = unit_f64(mix64(key ^ mix64((y * w + x) as u64)));
                let d = displacement(luma(p), max_seconds, fps, u);
                let src = (t as isize + d).clamp(0, last) as usize;
                frames[src].pixels()[y * w + x]
            })
        })
        .collect();
    Ok(seq.with_frames(out))
}
