//! The twelve challenge conditions at levels 0–5.
//!
//! Level 0 is always the identity. Levels 1–5 map onto the parameter tables
//! below; each kind has one severity scalar that is non-decreasing in level
//! (see [`severity`]). Stochastic kinds draw from counter-based streams keyed
//! by `(seed, frame index, element index)`, so frames can be rendered in any
//! order or in parallel with identical results.

mod blur;
mod grid;
mod noise;
mod temporal;
mod tone;
mod weather;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::imaging::{Frame, FrameSequence, ImageError};

pub use blur::{apply_gaussian_blur, apply_lens_blur, gaussian_kernel, hexagon_kernel};
pub use grid::{
    cell_seed, manifest_to_csv, parse_manifest, parse_manifest_str, plan_grid, synth_composed, synth_grid,
    write_manifest, GridJob, Manifest, ManifestKind, ManifestRow, MANIFEST_HEADER,
};
pub use noise::{apply_dirty_lens, apply_noise, dirt_mask, DirtMask};
pub use temporal::apply_codec_error;
pub use tone::{apply_darkening, apply_decolorization, apply_exposure, apply_haze, apply_overexposure, apply_shadow};
pub use weather::{
    apply_rain, apply_snow, render_rain, render_rain_frame, render_snow, render_snow_frame, scaled_count, RainParams,
    SnowParams, REFERENCE_AREA,
};

/// Per-level parameter tables, indexed by `level - 1`.
pub mod tables {
    pub const DECOLOR_ALPHA: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
    /// Hue-sector weights: red, yellow, green, cyan, blue, magenta.
    pub const DECOLOR_WEIGHTS: [f64; 6] = [40.0, 60.0, 40.0, 60.0, 20.0, 80.0];
    pub const LENS_RADIUS: [usize; 5] = [2, 4, 6, 8, 10];
    pub const BLURINESS: [f64; 5] = [5.0, 10.0, 15.0, 20.0, 25.0];
    /// Seconds.
    pub const CODEC_MAX_DISPLACEMENT: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];
    pub const DARKENING_STOPS: [f64; 5] = [-1.0, -3.0, -5.0, -7.0, -9.0];
    pub const EXPOSURE_STOPS: [f64; 5] = [1.0, 3.0, 5.0, 7.0, 9.0];
    pub const DIRT_BLOBS_PER_LEVEL: usize = 8;
    pub const DIRT_OPACITY_PER_LEVEL: f64 = 0.15;
    pub const NOISE_AMOUNT: [f64; 5] = [20.0, 40.0, 60.0, 70.0, 71.0];
    pub const RAIN_DROPS: [usize; 5] = [10_000, 20_000, 50_000, 100_000, 100_000];
    pub const RAIN_TINT_OPACITY: f64 = 0.25;
    pub const RAIN_TINT_TOP: u32 = 0x0F1E2D;
    pub const RAIN_TINT_BOTTOM: u32 = 0x5A7492;
    pub const SHADOW_PERIOD: f64 = 142.0;
    pub const SHADOW_DUTY: f64 = 0.47;
    pub const SHADOW_OPACITY: [f64; 5] = [0.15, 0.30, 0.45, 0.60, 0.75];
    pub const SNOW_DROPS: [usize; 5] = [10_000, 50_000, 100_000, 140_000, 140_000];
    pub const SNOW_VEIL_PER_LEVEL: f64 = 0.05;
    pub const HAZE_BASE: [f64; 5] = [0.10, 0.20, 0.30, 0.40, 0.50];
    pub const HAZE_BRIGHTNESS: f64 = -34.0;
    pub const HAZE_CONTRAST: f64 = -13.0;
    pub const HAZE_COLOR: u32 = 0xCECECE;
}

pub(crate) fn hex_rgb(code: u32) -> [f64; 3] {
    [(code >> 16) & 0xFF, (code >> 8) & 0xFF, code & 0xFF].map(|b| b as f64 / 255.0)
}

#[derive(Debug, Error)]
pub enum ChallengeError {
    #[error("challenge level {0} outside 1..=5")]
    InvalidLevel(u8),
    #[error("spec level {0} outside 0..=5")]
    InvalidSpecLevel(u8),
    #[error("haze focal point ({0}, {1}) outside the unit square")]
    InvalidFocal(f64, f64),
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),
    #[error("output already exists: {0}")]
    Collision(String),
    #[error("unknown challenge type `{0}`")]
    UnknownType(String),
    #[error("manifest {path}:{line}: {reason}")]
    Manifest { path: String, line: usize, reason: String },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The challenge conditions, codes 1–12 in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChallengeType {
    Decolorization = 1,
    LensBlur,
    CodecError,
    Darkening,
    DirtyLens,
    Exposure,
    GaussianBlur,
    Noise,
    Rain,
    Shadow,
    Snow,
    Haze,
}

impl ChallengeType {
    pub const ALL: [ChallengeType; 12] = [
        ChallengeType::Decolorization,
        ChallengeType::LensBlur,
        ChallengeType::CodecError,
        ChallengeType::Darkening,
        ChallengeType::DirtyLens,
        ChallengeType::Exposure,
        ChallengeType::GaussianBlur,
        ChallengeType::Noise,
        ChallengeType::Rain,
        ChallengeType::Shadow,
        ChallengeType::Snow,
        ChallengeType::Haze,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<ChallengeType> {
        (1..=12).contains(&code).then(|| Self::ALL[code as usize - 1])
    }

    /// Snake-case name used in file names and CSVs.
    pub fn name(self) -> &'static str {
        match self {
            ChallengeType::Decolorization => "decolorization",
            ChallengeType::LensBlur => "lens_blur",
            ChallengeType::CodecError => "codec_error",
            ChallengeType::Darkening => "darkening",
            ChallengeType::DirtyLens => "dirty_lens",
            ChallengeType::Exposure => "exposure",
            ChallengeType::GaussianBlur => "gaussian_blur",
            ChallengeType::Noise => "noise",
            ChallengeType::Rain => "rain",
            ChallengeType::Shadow => "shadow",
            ChallengeType::Snow => "snow",
            ChallengeType::Haze => "haze",
        }
    }

    /// Whether the transform consumes the seed.
    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            ChallengeType::CodecError
                | ChallengeType::DirtyLens
                | ChallengeType::Noise
                | ChallengeType::Rain
                | ChallengeType::Snow
        )
    }
}

impl fmt::Display for ChallengeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChallengeType {
    type Err = ChallengeError;

    /// Accepts the snake-case name (hyphens allowed) or the numeric code.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        if let Ok(code) = norm.parse::<u8>() {
            return ChallengeType::from_code(code).ok_or_else(|| ChallengeError::UnknownType(s.to_string()));
        }
        ChallengeType::ALL
            .into_iter()
            .find(|t| t.name() == norm || t.name().replace('_', "") == norm)
            .ok_or_else(|| ChallengeError::UnknownType(s.to_string()))
    }
}

/// Fully determines one synthesis transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChallengeSpec {
    pub kind: ChallengeType,
    level: u8,
    pub seed: u64,
}

impl ChallengeSpec {
    pub fn new(kind: ChallengeType, level: u8, seed: u64) -> Result<Self, ChallengeError> {
        if level > 5 {
            return Err(ChallengeError::InvalidSpecLevel(level));
        }
        Ok(Self { kind, level, seed })
    }

    pub fn level(&self) -> u8 {
        self.level
    }
}

/// Knobs that are not part of the challenge identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    /// Haze focal point in normalized frame coordinates.
    pub haze_focal: (f64, f64),
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self { haze_focal: (0.5, 0.5) }
    }
}

pub(crate) fn level_index(level: u8) -> Result<usize, ChallengeError> {
    if (1..=5).contains(&level) {
        Ok(level as usize - 1)
    } else {
        Err(ChallengeError::InvalidLevel(level))
    }
}

/// The per-kind severity scalar at `level` (1–5); 0 at level 0.
pub fn severity(kind: ChallengeType, level: u8) -> Result<f64, ChallengeError> {
    use tables::*;
    if level == 0 {
        return Ok(0.0);
    }
    let i = level_index(level)?;
    let lv = level as f64;
    Ok(match kind {
        ChallengeType::Decolorization => DECOLOR_ALPHA[i],
        ChallengeType::LensBlur => LENS_RADIUS[i] as f64,
        ChallengeType::GaussianBlur => BLURINESS[i] / 2.0,
        ChallengeType::CodecError => CODEC_MAX_DISPLACEMENT[i],
        ChallengeType::Darkening => DARKENING_STOPS[i].abs(),
        ChallengeType::Exposure => EXPOSURE_STOPS[i].abs(),
        ChallengeType::DirtyLens => DIRT_OPACITY_PER_LEVEL * lv * (DIRT_BLOBS_PER_LEVEL as f64 * lv),
        ChallengeType::Noise => NOISE_AMOUNT[i],
        ChallengeType::Rain => RAIN_DROPS[i] as f64,
        ChallengeType::Snow => SNOW_DROPS[i] as f64,
        ChallengeType::Shadow => SHADOW_OPACITY[i],
        ChallengeType::Haze => HAZE_BASE[i],
    })
}

fn per_frame(
    seq: &FrameSequence,
    f: impl Fn(usize, &Frame) -> Result<Frame, ChallengeError> + Sync,
) -> Result<FrameSequence, ChallengeError> {
    let frames = seq
        .frames()
        .par_iter()
        .enumerate()
        .map(|(t, frame)| f(t, frame))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(seq.with_frames(frames))
}

pub fn apply_challenge(seq: &FrameSequence, spec: &ChallengeSpec) -> Result<FrameSequence, ChallengeError> {
    apply_challenge_with(seq, spec, &SynthOptions::default())
}

/// Dispatches to the per-kind transform. Level 0 returns an exact copy.
pub fn apply_challenge_with(
    seq: &FrameSequence,
    spec: &ChallengeSpec,
    opts: &SynthOptions,
) -> Result<FrameSequence, ChallengeError> {
    let level = spec.level;
    if level == 0 {
        return Ok(seq.clone());
    }
    let seed = spec.seed;
    match spec.kind {
        ChallengeType::Decolorization => per_frame(seq, |_, f| apply_decolorization(f, level)),
        ChallengeType::LensBlur => per_frame(seq, |_, f| apply_lens_blur(f, level)),
        ChallengeType::GaussianBlur => per_frame(seq, |_, f| apply_gaussian_blur(f, level)),
        ChallengeType::CodecError => apply_codec_error(seq, level, seed),
        ChallengeType::Darkening => per_frame(seq, |_, f| apply_darkening(f, level)),
        ChallengeType::Exposure => per_frame(seq, |_, f| apply_overexposure(f, level)),
        ChallengeType::DirtyLens => {
            let (w, h) = seq.dims();
            let mask = dirt_mask(seed, level, w, h)?;
            per_frame(seq, |_, f| Ok(mask.apply(f)?))
        }
        ChallengeType::Noise => per_frame(seq, |t, f| apply_noise(f, level, seed, t)),
        ChallengeType::Rain => apply_rain(seq, level, seed),
        ChallengeType::Shadow => per_frame(seq, |_, f| apply_shadow(f, level)),
        ChallengeType::Snow => apply_snow(seq, level, seed),
        ChallengeType::Haze => per_frame(seq, |_, f| apply_haze(f, level, opts.haze_focal)),
    }
}

/// Applies `specs` left to right.
pub fn compose_challenges(seq: &FrameSequence, specs: &[ChallengeSpec]) -> Result<FrameSequence, ChallengeError> {
    compose_challenges_with(seq, specs, &SynthOptions::default())
}

pub fn compose_challenges_with(
    seq: &FrameSequence,
    specs: &[ChallengeSpec],
    opts: &SynthOptions,
) -> Result<FrameSequence, ChallengeError> {
    let (first, rest) = specs.split_first().ok_or(ChallengeError::EmptyInput("challenge list"))?;
    rest.iter()
        .try_fold(apply_challenge_with(seq, first, opts)?, |acc, spec| apply_challenge_with(&acc, spec, opts))
}
