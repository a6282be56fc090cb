use robustbench_core::metrics::table::read_metrics;
use robustbench_core::spectral::parse_stats;
use robustbench_core::stats::{correlate_performance, correlation_to_csv, summary_to_csv, CorrelationOptions};

use super::{create_dir, write_file};
use crate::{exit, required, resolve, CliError, CliResult, CorrelateArgs};

pub const CORRELATION_FILE: &str = "correlation.csv";
pub const SUMMARY_FILE: &str = "correlation_summary.csv";

fn fail(message: impl Into<String>) -> CliError {
    CliError::new(exit::CORRELATE, message)
}

pub fn run(a: &CorrelateArgs) -> CliResult<()> {
    let mut cfg = resolve(
        &a.config,
        &[("spectra", "spectra", &a.spectra), ("metrics", "metrics", &a.metrics), ("out", "out", &a.out)],
    )?;
    cfg.include_level0 |= a.include_level0;
    let spectra = required(&cfg.spectra, "spectra")?;
    let metrics = required(&cfg.metrics, "metrics")?;
    let out = required(&cfg.out, "out")?;

    let stats = parse_stats(spectra).map_err(|e| fail(e.to_string()))?;
    let records = read_metrics(metrics).map_err(|e| fail(e.to_string()))?;
    let opts = CorrelationOptions { include_level0: cfg.include_level0 };
    let results = correlate_performance(&stats, &records, &opts).map_err(|e| fail(e.to_string()))?;

    create_dir(out, exit::CORRELATE)?;
    write_file(&out.join(CORRELATION_FILE), &correlation_to_csv(&results), exit::CORRELATE)?;
    write_file(&out.join(SUMMARY_FILE), &summary_to_csv(&results), exit::CORRELATE)?;
    cfg.echo(out)?;

    let summary: Vec<String> = results
        .iter()
        .map(|r| match r.average_strength {
            Some(s) => format!("{} {s:.3}", r.metric.name()),
            None => format!("{} undefined", r.metric.name()),
        })
        .collect();
    println!("correlate: average strength {} -> {}", summary.join(", "), out.display());
    Ok(())
}
