//! CSV layouts for metrics, degradation and per-level tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{aggregate_by_type, ConfusionCounts, LevelAggregate, Metric, MetricsError, MetricsRecord};
use crate::challenge::ChallengeType;

pub const METRICS_HEADER: [&str; 9] = ["challenge", "level", "tp", "fp", "fn", "precision", "recall", "f05", "f2"];

/// Label used for the challenge-free row.
pub const NONE_LABEL: &str = "none";

pub fn challenge_label(c: Option<ChallengeType>) -> &'static str {
    c.map_or(NONE_LABEL, ChallengeType::name)
}

fn parse_challenge(s: &str) -> Result<Option<ChallengeType>, String> {
    if s == NONE_LABEL {
        return Ok(None);
    }
    s.parse::<ChallengeType>().map(Some).map_err(|e| e.to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| x.to_string())
}

fn to_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

fn write_text(path: &Path, text: &str) -> Result<(), MetricsError> {
    fs::write(path, text).map_err(|source| MetricsError::Io { path: path.display().to_string(), source })
}

/// Records sorted by type code then level, the reference first. Extra
/// F-scores, when given, are appended as `f<beta>` columns.
pub fn metrics_to_csv(records: &[MetricsRecord], extra_betas: &[f64]) -> String {
    let mut sorted: Vec<&MetricsRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.challenge.map(ChallengeType::code), r.level));
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = METRICS_HEADER.iter().map(|s| s.to_string()).collect();
    header.extend(extra_betas.iter().map(|b| format!("f{b}")));
    w.write_record(&header).expect("in-memory write");
    for r in sorted {
        let mut row = vec![
            challenge_label(r.challenge).to_string(),
            r.level.to_string(),
            r.counts.tp.to_string(),
            r.counts.fp.to_string(),
            r.counts.fn_.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.f05.to_string(),
            r.f2.to_string(),
        ];
        row.extend(extra_betas.iter().map(|&b| super::f_beta(r.precision, r.recall, b).to_string()));
        w.write_record(&row).expect("in-memory write");
    }
    to_string(w)
}

pub fn write_metrics(records: &[MetricsRecord], extra_betas: &[f64], path: &Path) -> Result<(), MetricsError> {
    write_text(path, &metrics_to_csv(records, extra_betas))
}

/// Parses a metrics CSV by column name; extra columns are ignored.
pub fn parse_metrics_str(text: &str, origin: &str) -> Result<Vec<MetricsRecord>, MetricsError> {
    let err = |line: usize, reason: String| MetricsError::Table { path: origin.to_string(), line, reason };
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rd.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let col: Vec<usize> = METRICS_HEADER
        .iter()
        .map(|name| headers.iter().position(|h| h == *name).ok_or_else(|| err(1, format!("missing column `{name}`"))))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| err(line, e.to_string()))?;
        let field = |k: usize| row.get(col[k]).unwrap_or("");
        let int = |k: usize| field(k).parse::<usize>().map_err(|_| err(line, format!("bad {} `{}`", METRICS_HEADER[k], field(k))));
        let real = |k: usize| {
            field(k)
                .parse::<f64>()
                .ok()
                .filter(|v| (0.0..=1.0).contains(v))
                .ok_or_else(|| err(line, format!("bad {} `{}`", METRICS_HEADER[k], field(k))))
        };
        let challenge = parse_challenge(field(0)).map_err(|e| err(line, e))?;
        let level = field(1).parse::<u8>().ok().filter(|l| *l <= 5).ok_or_else(|| err(line, format!("bad level `{}`", field(1))))?;
        out.push(MetricsRecord {
            challenge,
            level,
            counts: ConfusionCounts::new(int(2)?, int(3)?, int(4)?),
            precision: real(5)?,
            recall: real(6)?,
            f05: real(7)?,
            f2: real(8)?,
        });
    }
    Ok(out)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>, MetricsError> {
    let text = fs::read_to_string(path).map_err(|source| MetricsError::Io { path: path.display().to_string(), source })?;
    parse_metrics_str(&text, &path.display().to_string())
}

/// Degradation table: the challenge-free row, then one row per type holding
/// each metric's mean over levels and the type's mean degradation percent
/// over metrics × levels.
pub fn degradation_to_csv(records: &[MetricsRecord]) -> Result<String, MetricsError> {
    let per_type = aggregate_by_type(&[records.to_vec()])?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["challenge", "precision", "recall", "f05", "f2", "degradation"]).expect("in-memory write");
    if let Some(r) = records.iter().find(|r| r.challenge.is_none()) {
        let mut row = vec![NONE_LABEL.to_string()];
        row.extend(Metric::ALL.map(|m| m.of(r).to_string()));
        row.push(String::new());
        w.write_record(&row).expect("in-memory write");
    }
    let mut by_type: BTreeMap<ChallengeType, Vec<&MetricsRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.level > 0) {
        by_type.entry(r.challenge.expect("levelled records carry a type")).or_default().push(r);
    }
    for d in per_type {
        let rs = &by_type[&d.challenge];
        let mut row = vec![d.challenge.name().to_string()];
        row.extend(Metric::ALL.map(|m| (rs.iter().map(|r| m.of(r)).sum::<f64>() / rs.len() as f64).to_string()));
        row.push(opt(d.mean_percent));
        w.write_record(&row).expect("in-memory write");
    }
    Ok(to_string(w))
}

/// Per-level means followed by a `drop_5_vs_0` row of percent drops.
pub fn levels_to_csv(agg: &LevelAggregate) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["level", "precision", "recall", "f05", "f2", "cells"]).expect("in-memory write");
    for m in &agg.levels {
        let mut row = vec![m.level.to_string()];
        row.extend(Metric::ALL.map(|k| m.value(k).to_string()));
        row.push(m.cells.to_string());
        w.write_record(&row).expect("in-memory write");
    }
    let mut row = vec!["drop_5_vs_0".to_string()];
    row.extend(agg.drop_5_vs_0.map(opt));
    row.push(String::new());
    w.write_record(&row).expect("in-memory write");
    to_string(w)
}
