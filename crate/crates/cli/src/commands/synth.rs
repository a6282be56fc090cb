use std::path::Path;

use log::info;
use robustbench_core::challenge::{parse_manifest, synth_composed, synth_grid, write_manifest, ChallengeError, Manifest, SynthOptions};
use robustbench_core::imaging::load_sequence;
use robustbench_core::FrameSequence;

use super::{create_dir, subdirs};
use crate::config::parse_compose;
use crate::{exit, required, resolve, CliError, CliResult, SynthArgs};

pub const MANIFEST_FILE: &str = "manifest.csv";

fn challenge_error(e: ChallengeError) -> CliError {
    match e {
        ChallengeError::InvalidLevel(_)
        | ChallengeError::InvalidSpecLevel(_)
        | ChallengeError::InvalidFocal(..)
        | ChallengeError::EmptyInput(_)
        | ChallengeError::UnknownType(_) => CliError::args(e.to_string()),
        _ => CliError::io(e.to_string()),
    }
}

/// Loads every subdirectory of `dir` as a reference sequence.
pub fn load_references(dir: &Path, frame_rate: f64) -> CliResult<Vec<(String, FrameSequence)>> {
    let dirs = subdirs(dir, exit::IO)?;
    if dirs.is_empty() {
        return Err(CliError::io(format!("{}: no reference sequence directories", dir.display())));
    }
    dirs.into_iter()
        .map(|(id, path)| {
            let seq = load_sequence(&path, frame_rate).map_err(|e| CliError::io(e.to_string()))?;
            Ok((id, seq))
        })
        .collect()
}

pub fn run(a: &SynthArgs) -> CliResult<()> {
    let cfg = resolve(
        &a.config,
        &[
            ("input", "input", &a.input),
            ("out", "out", &a.out),
            ("types", "types", &a.types),
            ("levels", "levels", &a.levels),
            ("seed", "seed", &a.seed),
            ("frame_rate", "frame-rate", &a.frame_rate),
            ("format", "format", &a.format),
            ("haze_focal", "haze-focal", &a.haze_focal),
        ],
    )?;
    let chain = a.compose.as_deref().map(parse_compose).transpose().map_err(|e| CliError::args(format!("--compose: {e}")))?;
    let input = required(&cfg.input, "input")?;
    let out = required(&cfg.out, "out")?;

    let refs = load_references(input, cfg.frame_rate)?;
    create_dir(out, exit::IO)?;
    let opts = SynthOptions { haze_focal: cfg.haze_focal };
    let produced = match &chain {
        Some(chain) => synth_composed(&refs, chain, cfg.seed, out, cfg.format, &opts),
        None => synth_grid(&refs, &cfg.types, &cfg.levels, cfg.seed, out, cfg.format, &opts),
    }
    .map_err(challenge_error)?;

    // A second run into the same directory (e.g. a composition after the
    // grid) extends the manifest.
    let manifest_path = out.join(MANIFEST_FILE);
    let mut manifest = if manifest_path.exists() {
        parse_manifest(&manifest_path).map_err(challenge_error)?
    } else {
        Manifest::default()
    };
    let n = produced.rows.len();
    manifest.rows.extend(produced.rows);
    write_manifest(&manifest, &manifest_path).map_err(challenge_error)?;
    cfg.echo(out)?;
    info!("manifest has {} rows", manifest.rows.len());
    println!("synth: {n} sequences from {} references -> {}", refs.len(), manifest_path.display());
    Ok(())
}
