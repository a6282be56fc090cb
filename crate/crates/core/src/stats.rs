//! Spearman rank correlation between spectral magnitude and detection
//! performance.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::challenge::{ChallengeType, ManifestKind};
use crate::metrics::{Metric, MetricsRecord};
use crate::spectral::sum::neumaier_sum;
use crate::spectral::{SpectrumStats, EPSILON};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooShort(usize),
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("correlation undefined: {0} series is constant")]
    Constant(&'static str),
    #[error("incomplete grid, missing {0}")]
    IncompleteGrid(String),
    #[error("duplicate entry for {0}")]
    Duplicate(String),
    #[error("{path}:{line}: {reason}")]
    Table { path: String, line: usize, reason: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PairedSeries {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, StatsError> {
        if xs.len() != ys.len() {
            return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
        }
        if xs.len() < 2 {
            return Err(StatsError::TooShort(xs.len()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(Self { xs, ys })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn swapped(&self) -> PairedSeries {
        PairedSeries { xs: self.ys.clone(), ys: self.xs.clone() }
    }
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i..j hold ranks i+1..=j.
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let n = a.len() as f64;
    let (ma, mb) = (neumaier_sum(a.iter().copied()) / n, neumaier_sum(b.iter().copied()) / n);
    let cov = neumaier_sum(a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)));
    let va = neumaier_sum(a.iter().map(|x| (x - ma).powi(2)));
    let vb = neumaier_sum(b.iter().map(|y| (y - mb).powi(2)));
    if va == 0.0 {
        return Err(StatsError::Constant("x"));
    }
    if vb == 0.0 {
        return Err(StatsError::Constant("y"));
    }
    Ok((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks.
pub fn spearman(series: &PairedSeries) -> Result<f64, StatsError> {
    pearson(&average_ranks(&series.xs), &average_ranks(&series.ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CorrelationOptions {
    /// Adds the challenge-free point (x at the `ln(eps)` floor, y from the
    /// level-0 metrics).
    pub include_level0: bool,
}

/// Per-metric correlation over challenge types.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub metric: Metric,
    /// Signed rho per type; types with a constant series are absent.
    pub per_type: BTreeMap<ChallengeType, f64>,
    /// Types whose correlation was undefined.
    pub excluded: Vec<ChallengeType>,
    pub average_rho: Option<f64>,
    /// Mean of `|rho|`.
    pub average_strength: Option<f64>,
}

impl CorrelationResult {
    pub fn strength(&self, t: ChallengeType) -> Option<f64> {
        self.per_type.get(&t).map(|r| r.abs())
    }
}

fn mean(vals: impl Iterator<Item = f64> + Clone) -> Option<f64> {
    let n = vals.clone().count();
    (n > 0).then(|| neumaier_sum(vals) / n as f64)
}

/// For every challenge type, correlates mean log-magnitude with each metric
/// across levels. Results come in `Metric::ALL` order.
pub fn correlate_performance(
    stats: &[SpectrumStats],
    metrics: &[MetricsRecord],
    opts: &CorrelationOptions,
) -> Result<Vec<CorrelationResult>, StatsError> {
    let mut xs: BTreeMap<(ChallengeType, u8), f64> = BTreeMap::new();
    for s in stats {
        if let ManifestKind::Single { kind, level } = s.key {
            if xs.insert((kind, level), s.mean_log_magnitude).is_some() {
                return Err(StatsError::Duplicate(format!("spectrum {kind}_{level}")));
            }
        }
    }
    let mut ys: BTreeMap<(ChallengeType, u8), &MetricsRecord> = BTreeMap::new();
    let mut reference = None;
    let mut type_zero = BTreeMap::new();
    for r in metrics {
        let dup = match (r.challenge, r.level) {
            (None, _) => reference.replace(r).is_some(),
            (Some(t), 0) => type_zero.insert(t, r).is_some(),
            (Some(t), l) => ys.insert((t, l), r).is_some(),
        };
        if dup {
            return Err(StatsError::Duplicate(format!("metrics {}_{}", r.challenge.map_or("none", ChallengeType::name), r.level)));
        }
    }

    let types: BTreeSet<ChallengeType> = xs.keys().chain(ys.keys()).map(|k| k.0).collect();
    let levels: BTreeSet<u8> = xs.keys().chain(ys.keys()).map(|k| k.1).filter(|&l| l > 0).collect();
    let mut missing = Vec::new();
    for &t in &types {
        for &l in &levels {
            if !xs.contains_key(&(t, l)) {
                missing.push(format!("spectrum {t}_{l}"));
            }
            if !ys.contains_key(&(t, l)) {
                missing.push(format!("metrics {t}_{l}"));
            }
        }
        if opts.include_level0 && !type_zero.contains_key(&t) && reference.is_none() {
            missing.push(format!("metrics {t}_0"));
        }
    }
    if types.is_empty() {
        missing.push("every cell".to_string());
    }
    if !missing.is_empty() {
        return Err(StatsError::IncompleteGrid(missing.join(", ")));
    }

    let mut out = Vec::new();
    for metric in Metric::ALL {
        let mut per_type = BTreeMap::new();
        let mut excluded = Vec::new();
        for &t in &types {
            let mut x: Vec<f64> = Vec::new();
            let mut y: Vec<f64> = Vec::new();
            if opts.include_level0 {
                x.push(EPSILON.ln());
                y.push(metric.of(type_zero.get(&t).copied().or(reference).expect("checked above")));
            }
            for &l in &levels {
                x.push(xs[&(t, l)]);
                y.push(metric.of(ys[&(t, l)]));
            }
            match PairedSeries::new(x, y).and_then(|s| spearman(&s)) {
                Ok(rho) => {
                    per_type.insert(t, rho);
                }
                Err(e) => {
                    log::debug!("{}: {t}: {e}", metric.name());
                    excluded.push(t);
                }
            }
        }
        if !excluded.is_empty() {
            let names: Vec<&str> = excluded.iter().map(|t| t.name()).collect();
            log::warn!("{}: correlation undefined (constant series), excluded from the average: {}", metric.name(), names.join(", "));
        }
        out.push(CorrelationResult {
            metric,
            average_rho: mean(per_type.values().copied()),
            average_strength: mean(per_type.values().map(|r| r.abs())),
            per_type,
            excluded,
        });
    }
    Ok(out)
}

pub const CORRELATION_HEADER: [&str; 4] = ["metric", "challenge", "rho", "strength"];

/// Label of the per-metric summary row in the correlation CSV.
pub const AVERAGE_LABEL: &str = "average";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| x.to_string())
}

/// Per-type rows, then an `average` row per metric.
pub fn correlation_to_csv(results: &[CorrelationResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CORRELATION_HEADER).expect("in-memory write");
    for r in results {
        let mut types: Vec<ChallengeType> = r.per_type.keys().chain(&r.excluded).copied().collect();
        types.sort();
        for t in types {
            let rho = r.per_type.get(&t).copied();
            w.write_record([r.metric.name(), t.name(), &opt(rho), &opt(rho.map(f64::abs))]).expect("in-memory write");
        }
    }
    for r in results {
        w.write_record([r.metric.name(), AVERAGE_LABEL, &opt(r.average_rho), &opt(r.average_strength)]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

/// One row of average strengths under the columns precision, recall, f05, f2.
pub fn summary_to_csv(results: &[CorrelationResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(Metric::ALL.map(Metric::name)).expect("in-memory write");
    let row = Metric::ALL.map(|m| opt(results.iter().find(|r| r.metric == m).and_then(|r| r.average_strength)));
    w.write_record(&row).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

pub fn parse_correlation_str(text: &str, origin: &str) -> Result<Vec<CorrelationResult>, StatsError> {
    let err = |line: usize, reason: String| StatsError::Table { path: origin.to_string(), line, reason };
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rd.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != CORRELATION_HEADER {
        return Err(err(1, format!("expected header `{}`", CORRELATION_HEADER.join(","))));
    }
    let mut out: Vec<CorrelationResult> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| err(line, e.to_string()))?;
        let metric: Metric = rec[0].parse().map_err(|e| err(line, e))?;
        let num = |s: &str| -> Result<Option<f64>, StatsError> {
            if s == "undefined" {
                return Ok(None);
            }
            s.parse::<f64>().ok().filter(|v| v.abs() <= 1.0).map(Some).ok_or_else(|| err(line, format!("bad value `{s}`")))
        };
        let (rho, strength) = (num(&rec[2])?, num(&rec[3])?);
        let idx = match out.iter().position(|r| r.metric == metric) {
            Some(i) => i,
            None => {
                out.push(CorrelationResult { metric, per_type: BTreeMap::new(), excluded: Vec::new(), average_rho: None, average_strength: None });
                out.len() - 1
            }
        };
        let r = &mut out[idx];
        if &rec[1] == AVERAGE_LABEL {
            r.average_rho = rho;
            r.average_strength = strength;
            continue;
        }
        let t: ChallengeType = rec[1].parse().map_err(|e: crate::challenge::ChallengeError| err(line, e.to_string()))?;
        match rho {
            Some(v) => {
                r.per_type.insert(t, v);
            }
            None => r.excluded.push(t),
        }
    }
    Ok(out)
}

pub fn parse_correlation(path: &Path) -> Result<Vec<CorrelationResult>, StatsError> {
    let text = fs::read_to_string(path).map_err(|e| StatsError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_correlation_str(&text, &path.display().to_string())
}
