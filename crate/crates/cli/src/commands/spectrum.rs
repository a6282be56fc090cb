use std::path::Path;

use robustbench_core::challenge::parse_manifest;
use robustbench_core::spectral::{spectrum_pipeline, write_spectrum_outputs};

use super::create_dir;
use crate::{exit, required, resolve, CliError, CliResult, SpectrumArgs};

pub const STATS_FILE: &str = "stats.csv";

fn fail(message: impl Into<String>) -> CliError {
    CliError::new(exit::SPECTRUM, message)
}

pub fn run(a: &SpectrumArgs) -> CliResult<()> {
    let cfg = resolve(
        &a.config,
        &[
            ("manifest", "manifest", &a.manifest),
            ("refs", "refs", &a.refs),
            ("out", "out", &a.out),
            ("format", "format", &a.format),
            ("epsilon", "epsilon", &a.epsilon),
            ("frame_rate", "frame-rate", &a.frame_rate),
        ],
    )?;
    let manifest_path = required(&cfg.manifest, "manifest")?;
    let refs = match &cfg.refs {
        Some(r) => r.as_path(),
        None => required(&cfg.input, "refs")?,
    };
    let out = required(&cfg.out, "out")?;

    let manifest = parse_manifest(manifest_path).map_err(|e| fail(e.to_string()))?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let result = spectrum_pipeline(&manifest, root, refs, cfg.frame_rate, cfg.epsilon).map_err(|e| fail(e.to_string()))?;
    create_dir(out, exit::SPECTRUM)?;
    write_spectrum_outputs(&result, out, cfg.format).map_err(|e| fail(e.to_string()))?;
    cfg.echo(out)?;
    println!(
        "spectrum: {} cells, {} type maps -> {}",
        result.stats.len(),
        result.type_maps.len(),
        out.join(STATS_FILE).display()
    );
    Ok(())
}
