use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use robustbench_core::metrics::table::read_metrics;
use robustbench_core::metrics::{aggregate_by_level, aggregate_by_type, percent_change, Metric};
use robustbench_core::spectral::parse_stats;
use robustbench_core::stats::parse_correlation;
use robustbench_core::{ChallengeType, CorrelationResult, MetricsRecord, SpectrumStats};

use super::correlate::CORRELATION_FILE;
use super::evaluate::METRICS_FILE;
use super::spectrum::STATS_FILE;
use super::{create_dir, write_file};
use crate::{exit, required, resolve, CliError, CliResult, ReportArgs};

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TYPES_CSV: &str = "report_types.csv";
pub const REPORT_TXT: &str = "report.txt";

pub const REPORT_HEADER: &str = "challenge,level,precision,recall,f05,f2,degradation,mean_log_magnitude";
pub const TYPES_HEADER: &str = "challenge,degradation,defined_cells,undefined_cells,strength_precision,strength_recall,strength_f05,strength_f2";

fn fail(message: impl Into<String>) -> CliError {
    CliError::new(exit::REPORT, message)
}

fn upstream(dir: &Path, file: &str) -> CliResult<PathBuf> {
    let path = dir.join(file);
    if !path.is_file() {
        return Err(fail(format!("{}: missing upstream output", path.display())));
    }
    Ok(path)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt3(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".to_string())
}

/// Mean over the four metrics of the defined percent changes of one cell.
pub fn cell_degradation(reference: &MetricsRecord, cell: &MetricsRecord) -> Option<f64> {
    let defined: Vec<f64> = Metric::ALL.iter().filter_map(|m| percent_change(m.of(reference), m.of(cell))).collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

struct Inputs {
    reference: MetricsRecord,
    cells: Vec<MetricsRecord>,
    spectra: BTreeMap<(ChallengeType, u8), SpectrumStats>,
    correlations: Vec<CorrelationResult>,
}

fn render_csv(inp: &Inputs) -> String {
    let mut s = format!("{REPORT_HEADER}\n");
    let r = &inp.reference;
    let _ = writeln!(s, "none,0,{},{},{},{},,", r.precision, r.recall, r.f05, r.f2);
    for c in &inp.cells {
        let t = c.challenge.expect("challenged cell");
        let mlm = inp.spectra.get(&(t, c.level)).map(|st| st.mean_log_magnitude);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            t.name(),
            c.level,
            c.precision,
            c.recall,
            c.f05,
            c.f2,
            opt(cell_degradation(r, c)),
            opt(mlm)
        );
    }
    s
}

fn strength(inp: &Inputs, m: Metric, t: ChallengeType) -> Option<f64> {
    inp.correlations.iter().find(|r| r.metric == m).and_then(|r| r.strength(t))
}

pub fn run(a: &ReportArgs) -> CliResult<()> {
    let cfg = resolve(&a.config, &[("out", "out", &a.out)])?;
    let out = required(&cfg.out, "out")?;

    let metrics_path = upstream(&a.evaluate, METRICS_FILE)?;
    let stats_path = upstream(&a.spectrum, STATS_FILE)?;
    let records = read_metrics(&metrics_path).map_err(|e| fail(e.to_string()))?;
    let reference = *records
        .iter()
        .find(|r| r.challenge.is_none())
        .ok_or_else(|| fail(format!("{}: no challenge-free row", metrics_path.display())))?;
    let mut cells: Vec<MetricsRecord> = records.iter().filter(|r| r.challenge.is_some() && r.level > 0).copied().collect();
    if cells.is_empty() {
        return Err(fail(format!("{}: no challenge cells", metrics_path.display())));
    }
    cells.sort_by_key(|r| (r.challenge, r.level));
    let stats = parse_stats(&stats_path).map_err(|e| fail(e.to_string()))?;
    if stats.is_empty() {
        return Err(fail(format!("{}: no spectrum rows", stats_path.display())));
    }
    let spectra = stats
        .iter()
        .filter_map(|s| Some(((s.challenge()?, s.level()?), s.clone())))
        .collect();
    let correlations = match &a.correlate {
        Some(dir) => parse_correlation(&upstream(dir, CORRELATION_FILE)?).map_err(|e| fail(e.to_string()))?,
        None => Vec::new(),
    };
    let levels = aggregate_by_level(&records).map_err(|e| fail(e.to_string()))?;
    let types = aggregate_by_type(std::slice::from_ref(&records)).map_err(|e| fail(e.to_string()))?;
    let inp = Inputs { reference, cells, spectra, correlations };

    let mut types_csv = format!("{TYPES_HEADER}\n");
    for d in &types {
        let strengths = Metric::ALL.map(|m| opt(strength(&inp, m, d.challenge)));
        let _ = writeln!(
            types_csv,
            "{},{},{},{},{}",
            d.challenge.name(),
            opt(d.mean_percent),
            d.defined_cells,
            d.undefined_cells,
            strengths.join(",")
        );
    }

    let mut txt = String::from("Robustness report\n\n");
    let r = &inp.reference;
    let _ = writeln!(txt, "Challenge-free: precision {:.3}  recall {:.3}  f05 {:.3}  f2 {:.3}\n", r.precision, r.recall, r.f05, r.f2);
    txt.push_str("Performance by level (mean over types)\nlevel  precision  recall  f05    f2     cells\n");
    for l in &levels.levels {
        let _ = writeln!(txt, "{:<5}  {:<9.3}  {:<6.3}  {:<5.3}  {:<5.3}  {}", l.level, l.precision, l.recall, l.f05, l.f2, l.cells);
    }
    let drops = levels.drop_5_vs_0.map(opt3);
    let _ = writeln!(txt, "drop 5 vs 0 (%): precision {}  recall {}  f05 {}  f2 {}\n", drops[0], drops[1], drops[2], drops[3]);

    txt.push_str("Average degradation by type (% over metrics and levels)\n");
    for d in &types {
        let _ = writeln!(txt, "{:<15} {:>8}  ({} undefined)", d.challenge.name(), opt3(d.mean_percent), d.undefined_cells);
    }

    txt.push_str("\nMean log-magnitude of residual spectra by level\n");
    let by_type: BTreeMap<ChallengeType, Vec<&MetricsRecord>> = inp.cells.iter().fold(BTreeMap::new(), |mut m, c| {
        m.entry(c.challenge.expect("challenged cell")).or_insert_with(Vec::new).push(c);
        m
    });
    for (t, cs) in &by_type {
        let vals: Vec<String> = cs.iter().map(|c| opt3(inp.spectra.get(&(*t, c.level)).map(|s| s.mean_log_magnitude))).collect();
        let _ = writeln!(txt, "{:<15} {}", t.name(), vals.join("  "));
    }

    if !inp.correlations.is_empty() {
        txt.push_str("\nSpearman strength |rho| of spectral change vs performance\ntype             precision  recall  f05    f2\n");
        for t in by_type.keys() {
            let s = Metric::ALL.map(|m| opt3(strength(&inp, m, *t)));
            let _ = writeln!(txt, "{:<15}  {:<9}  {:<6}  {:<5}  {}", t.name(), s[0], s[1], s[2], s[3]);
        }
        let avg = Metric::ALL.map(|m| opt3(inp.correlations.iter().find(|r| r.metric == m).and_then(|r| r.average_strength)));
        let _ = writeln!(txt, "{:<15}  {:<9}  {:<6}  {:<5}  {}", "average", avg[0], avg[1], avg[2], avg[3]);
    }

    create_dir(out, exit::REPORT)?;
    write_file(&out.join(REPORT_CSV), &render_csv(&inp), exit::REPORT)?;
    write_file(&out.join(REPORT_TYPES_CSV), &types_csv, exit::REPORT)?;
    write_file(&out.join(REPORT_TXT), &txt, exit::REPORT)?;
    cfg.echo(out)?;
    println!("report: {} cells, {} types -> {}", inp.cells.len(), types.len(), out.join(REPORT_TXT).display());
    Ok(())
}
