//! Frames, luminance planes and the pixel-level primitives shared by every
//! other stage.
//!
//! Channels are stored as `f64` in [0, 1]; quantization to 8 bits happens only
//! at file boundaries (see [`io`]).

pub mod asset;
pub mod io;

use thiserror::Error;

pub use io::{load_frame, load_sequence, save_frame, save_sequence, FrameFormat};

/// One RGB pixel, channels in [0, 1].
pub type Rgb = [f64; 3];

/// Rec. 601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Default frame rate of reference sequences.
pub const DEFAULT_FRAME_RATE: f64 = 30.0;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("{path}: file not found")]
    NotFound { path: String },
    #[error("{path}: unsupported image format ({reason})")]
    Unsupported { path: String, reason: String },
    #[error("{path}: corrupt header ({reason})")]
    CorruptHeader { path: String, reason: String },
    #[error("{path}: corrupt or truncated pixel payload")]
    CorruptPayload { path: String },
    #[error("{path}: cannot write ({source})")]
    Unwritable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: no frame files found")]
    EmptyDirectory { path: String },
    #[error("dimension mismatch: {expected_w}x{expected_h} vs {found_w}x{found_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        found_w: usize,
        found_h: usize,
    },
    #[error("frame dimensions must be positive, got {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("expected {expected} pixels, got {found}")]
    PixelCount { expected: usize, found: usize },
    #[error("blend alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error("frame sequence must not be empty")]
    EmptySequence,
    #[error("frame rate must be positive and finite, got {0}")]
    InvalidFrameRate(f64),
}

#[inline]
pub(crate) fn clamp01(v: f64) -> f64 {
    // NaN maps to 0 so the [0,1] invariant survives degenerate arithmetic.
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[inline]
pub fn luma(p: Rgb) -> f64 {
    // The weights sum to 1 - 2^-53 in binary; keep grays exact.
    if p[0] == p[1] && p[1] == p[2] {
        return p[0];
    }
    LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2]
}

/// A 2-D grid of RGB pixels in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Frame {
    /// Builds a frame, clamping every channel into [0, 1].
    pub fn new(width: usize, height: usize, mut pixels: Vec<Rgb>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidDimensions { width, height });
        }
        if pixels.len() != width * height {
            return Err(ImageError::PixelCount {
                expected: width * height,
                found: pixels.len(),
            });
        }
        for p in &mut pixels {
            for c in p.iter_mut() {
                *c = clamp01(*c);
            }
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: Rgb) -> Self {
        let value = value.map(clamp01);
        assert!(width > 0 && height > 0, "frame dimensions must be positive");
        Self { width, height, pixels: vec![value; width * height] }
    }

    /// Builds a frame from a per-pixel generator `f(x, y)`; output is clamped.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        assert!(width > 0 && height > 0, "frame dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y).map(clamp01));
            }
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Applies `f` to every pixel and clamps the result.
    pub fn map(&self, mut f: impl FnMut(Rgb) -> Rgb) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p).map(clamp01)).collect(),
        }
    }

    /// Like [`Frame::map`] but also passes the pixel coordinates.
    pub fn map_indexed(&self, mut f: impl FnMut(usize, usize, Rgb) -> Rgb) -> Frame {
        let w = self.width;
        Frame {
            width: self.width,
            height: self.height,
            pixels: self
                .pixels
                .iter()
                .enumerate()
                .map(|(i, &p)| f(i % w, i / w, p).map(clamp01))
                .collect(),
        }
    }

    pub(crate) fn check_same_dims(&self, other: &Frame) -> Result<(), ImageError> {
        if self.dims() != other.dims() {
            return Err(ImageError::DimensionMismatch {
                expected_w: self.width,
                expected_h: self.height,
                found_w: other.width,
                found_h: other.height,
            });
        }
        Ok(())
    }
}

/// An ordered, non-empty list of equally sized frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    frame_rate: f64,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>, frame_rate: f64) -> Result<Self, ImageError> {
        let first = frames.first().ok_or(ImageError::EmptySequence)?;
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(ImageError::InvalidFrameRate(frame_rate));
        }
        for f in &frames[1..] {
            first.check_same_dims(f)?;
        }
        Ok(Self { frames, frame_rate })
    }

    /// Sequence at the default 30 fps.
    pub fn from_frames(frames: Vec<Frame>) -> Result<Self, ImageError> {
        Self::new(frames, DEFAULT_FRAME_RATE)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    /// Replaces the frames, keeping the frame rate. Used by transforms that
    /// preserve shape; panics if the invariants would break.
    pub(crate) fn with_frames(&self, frames: Vec<Frame>) -> FrameSequence {
        assert_eq!(frames.len(), self.frames.len());
        debug_assert!(frames.iter().all(|f| f.dims() == self.dims()));
        FrameSequence { frames, frame_rate: self.frame_rate }
    }
}

/// A row-major plane of non-negative luminance values.
#[derive(Debug, Clone, PartialEq)]
pub struct LumaFrame {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl LumaFrame {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidDimensions { width, height });
        }
        if values.len() != width * height {
            return Err(ImageError::PixelCount { expected: width * height, found: values.len() });
        }
        Ok(Self { width, height, values: values.into_iter().map(|v| v.max(0.0)).collect() })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        crate::spectral::sum::neumaier_sum(self.values.iter().copied()) / self.values.len() as f64
    }
}

pub fn to_luma(frame: &Frame) -> LumaFrame {
    LumaFrame {
        width: frame.width,
        height: frame.height,
        values: frame.pixels.iter().map(|&p| clamp01(luma(p))).collect(),
    }
}

/// Absolute luminance difference of two frames.
pub fn frame_diff(a: &Frame, b: &Frame) -> Result<LumaFrame, ImageError> {
    a.check_same_dims(b)?;
    let values = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&p, &q)| clamp01((clamp01(luma(p)) - clamp01(luma(q))).abs()))
        .collect();
    Ok(LumaFrame { width: a.width, height: a.height, values })
}

/// `(1 - alpha) * a + alpha * b`, clamped.
pub fn blend(a: &Frame, b: &Frame, alpha: f64) -> Result<Frame, ImageError> {
    a.check_same_dims(b)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ImageError::InvalidAlpha(alpha));
    }
    let pixels = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(p, q)| std::array::from_fn(|c| clamp01(blend_exact(p[c], q[c], alpha))))
        .collect();
    Ok(Frame { width: a.width, height: a.height, pixels })
}

#[inline]
fn blend_exact(a: f64, b: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        a
    } else if alpha == 1.0 {
        b
    } else {
        (1.0 - alpha) * a + alpha * b
    }
}
