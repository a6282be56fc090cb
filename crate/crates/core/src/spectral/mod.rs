//! Residual spectra: `ln(|DFT(|R|)| + eps)` per frame, averaged maps and
//! their mean.
//!
//! Frames whose sides are not powers of two are zero-padded at the bottom and
//! right to the next power of two before the transform; the original size is
//! kept on the map. Maps are centered so DC sits at `(H/2, W/2)`.

pub mod colormap;
mod pipeline;
pub mod sum;

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::challenge::ChallengeError;
use crate::imaging::{frame_diff, FrameSequence, ImageError, LumaFrame};
use sum::Neumaier;

pub use colormap::{colormap_indices, render_spectrum_map, COLORMAP};
pub use pipeline::{
    parse_stats, parse_stats_str, spectrum_pipeline, stats_to_csv, write_spectrum_outputs, SpectrumOutput, SpectrumStats,
};

/// Added to magnitudes before the logarithm.
pub const EPSILON: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("missing sequence {0}")]
    MissingSequence(String),
    #[error("{path}:{line}: {reason}")]
    Table { path: String, line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Challenge(#[from] ChallengeError),
}

/// A grid of log-magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    centered: bool,
    source_dims: (usize, usize),
}

impl SpectrumMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, centered: bool) -> Result<Self, SpectralError> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(SpectralError::ShapeMismatch(format!("{} values for a {width}x{height} map", values.len())));
        }
        Ok(Self { width, height, values, centered, source_dims: (width, height) })
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

    pub fn centered(&self) -> bool {
        self.centered
    }

    /// Residual size before zero-padding.
    pub fn source_dims(&self) -> (usize, usize) {
        self.source_dims
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn transpose(src: &[Complex64], w: usize, h: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); w * h];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = src[y * w + x];
        }
    }
    out
}

/// Unnormalized forward 2-D DFT of a row-major real grid, any size.
pub fn dft2(values: &[f64], width: usize, height: usize) -> Result<Vec<Complex64>, SpectralError> {
    if width == 0 || height == 0 || values.len() != width * height {
        return Err(SpectralError::ShapeMismatch(format!("{} values for a {width}x{height} grid", values.len())));
    }
    let (rows, cols) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(width), p.plan_fft_forward(height))
    });
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    rows.process(&mut data);
    let mut t = transpose(&data, width, height);
    cols.process(&mut t);
    Ok(transpose(&t, height, width))
}

/// Per-frame `|reference - challenged|` luminance residuals.
pub fn residual_sequence(reference: &FrameSequence, challenged: &FrameSequence) -> Result<Vec<LumaFrame>, SpectralError> {
    if reference.len() != challenged.len() {
        return Err(SpectralError::ShapeMismatch(format!(
            "{} reference frames vs {} challenged frames",
            reference.len(),
            challenged.len()
        )));
    }
    reference
        .frames()
        .iter()
        .zip(challenged.frames())
        .map(|(a, b)| {
            frame_diff(a, b).map_err(|e| match e {
                ImageError::DimensionMismatch { .. } => SpectralError::ShapeMismatch(e.to_string()),
                e => SpectralError::from(e),
            })
        })
        .collect()
}

/// [`log_magnitude_spectrum_with`] at [`EPSILON`].
pub fn log_magnitude_spectrum(residual: &LumaFrame) -> SpectrumMap {
    log_magnitude_spectrum_with(residual, EPSILON)
}

pub fn log_magnitude_spectrum_with(residual: &LumaFrame, epsilon: f64) -> SpectrumMap {
    let (sw, sh) = (residual.width(), residual.height());
    let (w, h) = (sw.next_power_of_two(), sh.next_power_of_two());
    let mut grid = vec![0.0; w * h];
    for y in 0..sh {
        grid[y * w..y * w + sw].copy_from_slice(&residual.values()[y * sw..(y + 1) * sw]);
    }
    let spec = dft2(&grid, w, h).expect("padded grid is well formed");
    let mut values = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (cx, cy) = ((x + w / 2) % w, (y + h / 2) % h);
            values[cy * w + cx] = (spec[y * w + x].norm() + epsilon).ln();
        }
    }
    SpectrumMap { width: w, height: h, values, centered: true, source_dims: (sw, sh) }
}

/// Running bin-wise compensated sum of maps, mergeable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumAccumulator {
    width: usize,
    height: usize,
    source_dims: (usize, usize),
    bins: Vec<Neumaier>,
    count: usize,
}

impl SpectrumAccumulator {
    pub fn new(template: &SpectrumMap) -> Self {
        Self {
            width: template.width,
            height: template.height,
            source_dims: template.source_dims,
            bins: vec![Neumaier::default(); template.values.len()],
            count: 0,
        }
    }

    fn check(&self, w: usize, h: usize, src: (usize, usize)) -> Result<(), SpectralError> {
        if (w, h, src) != (self.width, self.height, self.source_dims) {
            return Err(SpectralError::ShapeMismatch(format!(
                "{}x{} map (from {}x{}) vs {}x{} (from {}x{})",
                w, h, src.0, src.1, self.width, self.height, self.source_dims.0, self.source_dims.1
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, map: &SpectrumMap) -> Result<(), SpectralError> {
        self.check(map.width, map.height, map.source_dims)?;
        for (b, &v) in self.bins.iter_mut().zip(&map.values) {
            b.add(v);
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &SpectrumAccumulator) -> Result<(), SpectralError> {
        self.check(other.width, other.height, other.source_dims)?;
        for (b, o) in self.bins.iter_mut().zip(&other.bins) {
            b.merge(o);
        }
        self.count += other.count;
        Ok(())
    }

    /// Number of maps accumulated.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Result<SpectrumMap, SpectralError> {
        if self.count == 0 {
            return Err(SpectralError::Empty("spectrum accumulator"));
        }
        let n = self.count as f64;
        Ok(SpectrumMap {
            width: self.width,
            height: self.height,
            values: self.bins.iter().map(|b| b.value() / n).collect(),
            centered: true,
            source_dims: self.source_dims,
        })
    }
}

/// Bin-wise mean of equally sized maps.
pub fn average_spectrum(maps: &[SpectrumMap]) -> Result<SpectrumMap, SpectralError> {
    let first = maps.first().ok_or(SpectralError::Empty("map list"))?;
    if let Some(m) = maps.iter().find(|m| m.centered != first.centered) {
        return Err(SpectralError::ShapeMismatch(format!("centered={} vs centered={}", m.centered, first.centered)));
    }
    let mut acc = SpectrumAccumulator::new(first);
    for m in maps {
        acc.add(m)?;
    }
    let mut out = acc.mean()?;
    out.centered = first.centered;
    Ok(out)
}

/// Arithmetic mean over all bins.
pub fn mean_magnitude(map: &SpectrumMap) -> f64 {
    sum::neumaier_sum(map.values.iter().copied()) / map.values.len() as f64
}

/// Sum of per-frame spectra of a (reference, challenged) pair.
pub fn sequence_spectrum(reference: &FrameSequence, challenged: &FrameSequence, epsilon: f64) -> Result<SpectrumAccumulator, SpectralError> {
    use rayon::prelude::*;
    let residuals = residual_sequence(reference, challenged)?;
    let maps: Vec<SpectrumMap> = residuals.par_iter().map(|r| log_magnitude_spectrum_with(r, epsilon)).collect();
    let mut acc = SpectrumAccumulator::new(maps.first().ok_or(SpectralError::Empty("sequence"))?);
    for m in &maps {
        acc.add(m)?;
    }
    Ok(acc)
}
