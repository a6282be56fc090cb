//! IoU matching, precision/recall/F-beta, and degradation tables.

mod aggregate;
pub mod table;

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use thiserror::Error;

use crate::annotations::{Annotation, BoundingBox, Detection};
use crate::challenge::ChallengeType;

pub use aggregate::{aggregate_by_level, aggregate_by_type, average_algorithms, LevelAggregate, LevelMeans, TypeDegradation};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("IoU threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("F-beta requires beta > 0, got {0}")]
    InvalidBeta(f64),
    #[error("ragged grid: {0}")]
    RaggedGrid(String),
    #[error("algorithms cover different grids: {0}")]
    MismatchedGrids(String),
    #[error("no challenge-free (level 0) record for {0}")]
    MissingReference(String),
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("{path}:{line}: {reason}")]
    Table { path: String, line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        Self { tp, fp, fn_ }
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_ }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Intersection over union; 0 for disjoint boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    // Areas from the same edge arithmetic as the overlap, so iou(a, a) == 1.
    let area = |r: &BoundingBox| (r.right() - r.x) * (r.bottom() - r.y);
    let union = area(a) + area(b) - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    pub iou_threshold: f64,
    /// When false, a prediction only matches ground truth of the same sign type.
    pub class_agnostic: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self { iou_threshold: 0.5, class_agnostic: false }
    }
}

/// Greedy one-to-one matching per frame.
///
/// Predictions are visited by descending confidence (ties keep input order);
/// each claims the unmatched ground-truth box with the highest IoU at or
/// above the threshold.
pub fn match_detections(gt: &[Annotation], pred: &[Detection], opts: &MatchOptions) -> Result<ConfusionCounts, MetricsError> {
    let t = opts.iou_threshold;
    if !(t > 0.0 && t <= 1.0) {
        return Err(MetricsError::InvalidThreshold(t));
    }
    let mut gt_by_frame: BTreeMap<usize, Vec<&Annotation>> = BTreeMap::new();
    for g in gt {
        gt_by_frame.entry(g.frame_index).or_default().push(g);
    }
    let mut pred_by_frame: BTreeMap<usize, Vec<&Detection>> = BTreeMap::new();
    for p in pred {
        pred_by_frame.entry(p.frame_index).or_default().push(p);
    }

    let mut counts = ConfusionCounts::default();
    for (frame, mut preds) in pred_by_frame {
        let gts = gt_by_frame.remove(&frame).unwrap_or_default();
        preds.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
        let mut taken = vec![false; gts.len()];
        for p in preds {
            let mut best: Option<(usize, f64)> = None;
            for (i, g) in gts.iter().enumerate() {
                if taken[i] || (!opts.class_agnostic && g.sign != p.sign) {
                    continue;
                }
                let v = iou(&g.bbox, &p.bbox);
                if v >= t && best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
            match best {
                Some((i, _)) => {
                    taken[i] = true;
                    counts.tp += 1;
                }
                None => counts.fp += 1,
            }
        }
        counts.fn_ += taken.iter().filter(|m| !**m).count();
    }
    counts.fn_ += gt_by_frame.values().map(Vec::len).sum::<usize>();
    Ok(counts)
}

/// Precision with the empty-denominator conventions: 1 when there is
/// nothing to find and nothing was predicted, 0 when predictions are absent
/// but ground truth exists.
pub fn precision(c: &ConfusionCounts) -> f64 {
    match c.tp + c.fp {
        0 if c.fn_ == 0 => 1.0,
        0 => 0.0,
        d => c.tp as f64 / d as f64,
    }
}

/// Recall; 1 with no ground truth and no predictions, 0 with no ground truth
/// but false positives.
pub fn recall(c: &ConfusionCounts) -> f64 {
    match c.tp + c.fn_ {
        0 if c.fp == 0 => 1.0,
        0 => 0.0,
        d => c.tp as f64 / d as f64,
    }
}

/// `(1 + b²) p r / (b² p + r)`, 0 when the denominator vanishes.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom <= 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

/// Precision, recall and one F-score per requested beta.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f_scores: Vec<(f64, f64)>,
}

pub fn compute_metrics(counts: &ConfusionCounts, betas: &[f64]) -> Result<Scores, MetricsError> {
    if let Some(&b) = betas.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
        return Err(MetricsError::InvalidBeta(b));
    }
    let (p, r) = (precision(counts), recall(counts));
    Ok(Scores { precision: p, recall: r, f_scores: betas.iter().map(|&b| (b, f_beta(p, r, b))).collect() })
}

/// The four reported metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Precision,
    Recall,
    F05,
    F2,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Precision, Metric::Recall, Metric::F05, Metric::F2];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F05 => "f05",
            Metric::F2 => "f2",
        }
    }

    pub fn of(self, r: &MetricsRecord) -> f64 {
        match self {
            Metric::Precision => r.precision,
            Metric::Recall => r.recall,
            Metric::F05 => r.f05,
            Metric::F2 => r.f2,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

/// Metrics of one (challenge, level) cell; `challenge` is `None` for the
/// challenge-free reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    pub challenge: Option<ChallengeType>,
    pub level: u8,
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f05: f64,
    pub f2: f64,
}

impl MetricsRecord {
    pub fn from_counts(challenge: Option<ChallengeType>, level: u8, counts: ConfusionCounts) -> Self {
        let (p, r) = (precision(&counts), recall(&counts));
        Self { challenge, level, counts, precision: p, recall: r, f05: f_beta(p, r, 0.5), f2: f_beta(p, r, 2.0) }
    }

    /// A record carrying metric values only (e.g. transcribed from a table).
    pub fn from_values(challenge: Option<ChallengeType>, level: u8, precision: f64, recall: f64) -> Self {
        Self {
            challenge,
            level,
            counts: ConfusionCounts::default(),
            precision,
            recall,
            f05: f_beta(precision, recall, 0.5),
            f2: f_beta(precision, recall, 2.0),
        }
    }
}

/// One metric's change from the challenge-free reference. `percent` is
/// `None` when the reference is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationCell {
    pub metric: Metric,
    pub reference: f64,
    pub challenged: f64,
    pub percent: Option<f64>,
}

/// `100 * (ref - chal) / ref`; positive values are degradation.
pub fn percent_change(reference: f64, challenged: f64) -> Option<f64> {
    (reference > 0.0).then(|| 100.0 * (reference - challenged) / reference)
}

pub fn degradation(reference: &MetricsRecord, challenged: &MetricsRecord) -> Vec<DegradationCell> {
    Metric::ALL
        .into_iter()
        .map(|m| {
            let (r, c) = (m.of(reference), m.of(challenged));
            DegradationCell { metric: m, reference: r, challenged: c, percent: percent_change(r, c) }
        })
        .collect()
}
