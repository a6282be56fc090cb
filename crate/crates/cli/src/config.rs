//! Plain-text `key=value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default; unknown keys are rejected. Command-line flags are applied on top
//! of the file through [`RunConfig::set`], so both paths share one parser.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use robustbench_core::annotations::SplitMode;
use robustbench_core::imaging::{FrameFormat, DEFAULT_FRAME_RATE};
use robustbench_core::spectral::EPSILON;
use robustbench_core::ChallengeType;

use crate::CliError;

/// Every recognized key, in echo order.
pub const KEYS: [&str; 21] = [
    "input",
    "refs",
    "manifest",
    "gt",
    "pred",
    "spectra",
    "metrics",
    "out",
    "seed",
    "frame_rate",
    "format",
    "types",
    "levels",
    "haze_focal",
    "iou_threshold",
    "betas",
    "class_agnostic",
    "split_ratio",
    "split_mode",
    "epsilon",
    "include_level0",
];

pub const CONFIG_ECHO: &str = "config.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Directory of reference sequences, one subdirectory per id.
    pub input: Option<PathBuf>,
    /// Reference directory used by `spectrum`; defaults to `input`.
    pub refs: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub pred: Option<PathBuf>,
    pub spectra: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub frame_rate: f64,
    pub format: FrameFormat,
    pub types: Vec<ChallengeType>,
    pub levels: Vec<u8>,
    pub haze_focal: (f64, f64),
    pub iou_threshold: f64,
    pub betas: Vec<f64>,
    pub class_agnostic: bool,
    pub split_ratio: f64,
    pub split_mode: SplitMode,
    pub epsilon: f64,
    pub include_level0: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            refs: None,
            manifest: None,
            gt: None,
            pred: None,
            spectra: None,
            metrics: None,
            out: None,
            seed: 0,
            frame_rate: DEFAULT_FRAME_RATE,
            format: FrameFormat::Png,
            types: ChallengeType::ALL.to_vec(),
            levels: vec![1, 2, 3, 4, 5],
            haze_focal: (0.5, 0.5),
            iou_threshold: 0.5,
            betas: vec![0.5, 2.0],
            class_agnostic: false,
            split_ratio: 0.7,
            split_mode: SplitMode::Shuffle,
            epsilon: EPSILON,
            include_level0: false,
        }
    }
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> String {
    format!("invalid value `{value}` for `{key}`: {why}")
}

fn parse_f64(key: &str, value: &str) -> Result<f64, String> {
    value.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(key, value, "expected a finite number"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

/// Parses `all` or a comma list of type names or codes.
pub fn parse_types(value: &str) -> Result<Vec<ChallengeType>, String> {
    if value.trim().eq_ignore_ascii_case("all") {
        return Ok(ChallengeType::ALL.to_vec());
    }
    let mut types = Vec::new();
    for part in value.split(',') {
        let t: ChallengeType = part.parse().map_err(|e| bad("types", value, e))?;
        if !types.contains(&t) {
            types.push(t);
        }
    }
    types.sort();
    Ok(types)
}

/// Parses `all`, a range `a-b` or a comma list. Level 0 is rejected.
pub fn parse_levels(value: &str) -> Result<Vec<u8>, String> {
    let v = value.trim();
    let mut levels: Vec<u8> = if v.eq_ignore_ascii_case("all") {
        (1..=5).collect()
    } else if let Some((a, b)) = v.split_once('-') {
        let a: u8 = a.trim().parse().map_err(|_| bad("levels", value, "bad range start"))?;
        let b: u8 = b.trim().parse().map_err(|_| bad("levels", value, "bad range end"))?;
        if a > b {
            return Err(bad("levels", value, "empty range"));
        }
        (a..=b).collect()
    } else {
        v.split(',')
            .map(|p| p.trim().parse::<u8>().map_err(|_| bad("levels", value, "expected integers")))
            .collect::<Result<_, _>>()?
    };
    if levels.contains(&0) {
        return Err(bad("levels", value, "level 0 is the reference, not a synthesis target"));
    }
    if let Some(l) = levels.iter().find(|l| **l > 5) {
        return Err(bad("levels", value, format!("level {l} outside 1..=5")));
    }
    levels.sort_unstable();
    levels.dedup();
    Ok(levels)
}

pub fn parse_betas(value: &str) -> Result<Vec<f64>, String> {
    let mut betas = Vec::new();
    for part in value.split(',') {
        let b = parse_f64("betas", part)?;
        if b <= 0.0 {
            return Err(bad("betas", value, "beta must be positive"));
        }
        if !betas.contains(&b) {
            betas.push(b);
        }
    }
    Ok(betas)
}

/// Parses `type:level,type:level,...` for composed challenges.
pub fn parse_compose(value: &str) -> Result<Vec<(ChallengeType, u8)>, String> {
    value
        .split(',')
        .map(|part| {
            let (t, l) = part.split_once(':').ok_or_else(|| bad("compose", value, "expected type:level"))?;
            let t: ChallengeType = t.parse().map_err(|e| bad("compose", value, e))?;
            let l: u8 = l.trim().parse().ok().filter(|l| (1..=5).contains(l)).ok_or_else(|| bad("compose", value, "level must be 1..=5"))?;
            Ok((t, l))
        })
        .collect()
}

fn parse_focal(value: &str) -> Result<(f64, f64), String> {
    let (x, y) = value.split_once(',').ok_or_else(|| bad("haze_focal", value, "expected x,y"))?;
    let (x, y) = (parse_f64("haze_focal", x)?, parse_f64("haze_focal", y)?);
    if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
        return Err(bad("haze_focal", value, "coordinates must lie in [0, 1]"));
    }
    Ok((x, y))
}

fn path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "input" => self.input = path(value),
            "refs" => self.refs = path(value),
            "manifest" => self.manifest = path(value),
            "gt" => self.gt = path(value),
            "pred" => self.pred = path(value),
            "spectra" => self.spectra = path(value),
            "metrics" => self.metrics = path(value),
            "out" => self.out = path(value),
            "seed" => self.seed = value.trim().parse().map_err(|_| bad(key, value, "expected an unsigned integer"))?,
            "frame_rate" => {
                let r = parse_f64(key, value)?;
                if r <= 0.0 {
                    return Err(bad(key, value, "must be positive"));
                }
                self.frame_rate = r;
            }
            "format" => self.format = value.trim().parse().map_err(|e| bad(key, value, e))?,
            "types" => self.types = parse_types(value)?,
            "levels" => self.levels = parse_levels(value)?,
            "haze_focal" => self.haze_focal = parse_focal(value)?,
            "iou_threshold" => {
                let t = parse_f64(key, value)?;
                if !(t > 0.0 && t <= 1.0) {
                    return Err(bad(key, value, "must lie in (0, 1]"));
                }
                self.iou_threshold = t;
            }
            "betas" => self.betas = parse_betas(value)?,
            "class_agnostic" => self.class_agnostic = parse_bool(key, value)?,
            "split_ratio" => {
                let r = parse_f64(key, value)?;
                if !(r > 0.0 && r < 1.0) {
                    return Err(bad(key, value, "must lie strictly between 0 and 1"));
                }
                self.split_ratio = r;
            }
            "split_mode" => self.split_mode = value.trim().parse().map_err(|e| bad(key, value, e))?,
            "epsilon" => {
                let e = parse_f64(key, value)?;
                if e <= 0.0 {
                    return Err(bad(key, value, "must be positive"));
                }
                self.epsilon = e;
            }
            "include_level0" => self.include_level0 = parse_bool(key, value)?,
            other => return Err(format!("unknown config key `{other}`")),
        }
        Ok(())
    }

    pub fn parse_str(text: &str, origin: &str) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("{origin}:{}: expected key=value", i + 1))?;
            cfg.set(k.trim(), v).map_err(|e| format!("{origin}:{}: {e}", i + 1))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::args(format!("--config {}: {e}", path.display())))?;
        Self::parse_str(&text, &path.display().to_string()).map_err(CliError::args)
    }

    /// Canonical `key=value` rendering of every key.
    pub fn to_text(&self) -> String {
        let types = if self.types == ChallengeType::ALL {
            "all".to_string()
        } else {
            self.types.iter().map(|t| t.name()).collect::<Vec<_>>().join(",")
        };
        let mode = match self.split_mode {
            SplitMode::Shuffle => "shuffle",
            SplitMode::Ordered => "ordered",
        };
        let values = [
            show_path(&self.input),
            show_path(&self.refs),
            show_path(&self.manifest),
            show_path(&self.gt),
            show_path(&self.pred),
            show_path(&self.spectra),
            show_path(&self.metrics),
            show_path(&self.out),
            self.seed.to_string(),
            self.frame_rate.to_string(),
            self.format.extension().to_string(),
            types,
            join(&self.levels),
            format!("{},{}", self.haze_focal.0, self.haze_focal.1),
            self.iou_threshold.to_string(),
            join(&self.betas),
            self.class_agnostic.to_string(),
            self.split_ratio.to_string(),
            mode.to_string(),
            self.epsilon.to_string(),
            self.include_level0.to_string(),
        ];
        let mut s = String::new();
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// Writes the effective configuration to `<dir>/config.txt`.
    pub fn echo(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(CONFIG_ECHO);
        std::fs::write(&path, self.to_text()).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
    }
}
