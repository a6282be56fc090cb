//! Sign vocabulary, the ground-truth/prediction text format, and dataset
//! split arithmetic.
//!
//! # File format
//!
//! ```text
//! # cure-eval v1
//! # frame sign x y w h [confidence]
//! 12 6 100 80 24 24
//! 13 6 101 80 24 24 0.93
//! ```
//!
//! The first non-blank line must be the header `# cure-eval v1`. Later lines
//! starting with `#` are comments. Fields are separated by ASCII whitespace.
//! Ground-truth files carry six fields; prediction files may add a seventh,
//! the confidence in [0, 1] (default 1).

use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::rng::{derive, SplitMix64};

pub const HEADER: &str = "# cure-eval v1";

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: missing `{HEADER}` header")]
    MissingHeader { path: String },
    #[error("{path}:{line}: malformed record: {reason}")]
    Malformed { path: String, line: usize, reason: String },
    #[error("{path}:{line}: unknown sign code {code}")]
    UnknownSign { path: String, line: usize, code: String },
    #[error("{path}:{line}: box extent must be positive (w={w}, h={h})")]
    NonPositiveExtent { path: String, line: usize, w: f64, h: f64 },
    #[error("{path}:{line}: confidence {value} outside [0, 1]")]
    BadConfidence { path: String, line: usize, value: f64 },
    #[error("invalid split ratio {0}; must lie strictly between 0 and 1")]
    DegenerateRatio(f64),
    #[error("cannot split an empty id list")]
    EmptyIds,
    #[error("bounding box must have positive extent (w={w}, h={h})")]
    InvalidBox { w: f64, h: f64 },
    #[error("annotation {index} out of bounds: {reason}")]
    OutOfBounds { index: usize, reason: String },
}

/// The fourteen sign types, codes 1–14.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SignType {
    SpeedLimit = 1,
    GoodsVehicles,
    NoOvertaking,
    NoStopping,
    NoParking,
    Stop,
    Bicycle,
    Hump,
    NoLeft,
    NoRight,
    PriorityTo,
    NoEntry,
    Yield,
    Parking,
}

impl SignType {
    pub const ALL: [SignType; 14] = [
        SignType::SpeedLimit,
        SignType::GoodsVehicles,
        SignType::NoOvertaking,
        SignType::NoStopping,
        SignType::NoParking,
        SignType::Stop,
        SignType::Bicycle,
        SignType::Hump,
        SignType::NoLeft,
        SignType::NoRight,
        SignType::PriorityTo,
        SignType::NoEntry,
        SignType::Yield,
        SignType::Parking,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<SignType> {
        (1..=14).contains(&code).then(|| Self::ALL[code as usize - 1])
    }

    pub fn name(self) -> &'static str {
        match self {
            SignType::SpeedLimit => "speed limit",
            SignType::GoodsVehicles => "goods vehicles",
            SignType::NoOvertaking => "no overtaking",
            SignType::NoStopping => "no stopping",
            SignType::NoParking => "no parking",
            SignType::Stop => "stop",
            SignType::Bicycle => "bicycle",
            SignType::Hump => "hump",
            SignType::NoLeft => "no left",
            SignType::NoRight => "no right",
            SignType::PriorityTo => "priority to",
            SignType::NoEntry => "no entry",
            SignType::Yield => "yield",
            SignType::Parking => "parking",
        }
    }
}

/// Axis-aligned box: top-left corner plus extent, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, AnnotationError> {
        if !(w > 0.0 && h > 0.0) || !x.is_finite() || !y.is_finite() || !w.is_finite() || !h.is_finite() {
            return Err(AnnotationError::InvalidBox { w, h });
        }
        Ok(Self { x, y, w, h })
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annotation {
    pub frame_index: usize,
    pub sign: SignType,
    pub bbox: BoundingBox,
}

/// A detector output record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub frame_index: usize,
    pub sign: SignType,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

impl From<Annotation> for Detection {
    fn from(a: Annotation) -> Self {
        Detection { frame_index: a.frame_index, sign: a.sign, bbox: a.bbox, confidence: 1.0 }
    }
}

/// Checks annotations against a sequence of `frames` frames of `width`×`height`.
pub fn check_bounds(anns: &[Annotation], width: usize, height: usize, frames: usize) -> Result<(), AnnotationError> {
    for (index, a) in anns.iter().enumerate() {
        let b = &a.bbox;
        let reason = if a.frame_index >= frames {
            format!("frame {} >= sequence length {frames}", a.frame_index)
        } else if b.x < 0.0 || b.y < 0.0 || b.right() > width as f64 || b.bottom() > height as f64 {
            format!("box ({}, {}, {}, {}) exceeds {width}x{height}", b.x, b.y, b.w, b.h)
        } else {
            continue;
        };
        return Err(AnnotationError::OutOfBounds { index, reason });
    }
    Ok(())
}

struct RawRecord {
    frame_index: usize,
    sign: SignType,
    bbox: BoundingBox,
    confidence: Option<f64>,
}

fn parse_records(text: &str, path: &str, allow_confidence: bool) -> Result<Vec<RawRecord>, AnnotationError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == HEADER => {}
        _ => return Err(AnnotationError::MissingHeader { path: path.to_string() }),
    }
    let mut out = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| AnnotationError::Malformed { path: path.to_string(), line, reason };
        let fields: Vec<&str> = trimmed.split_ascii_whitespace().collect();
        let max_fields = if allow_confidence { 7 } else { 6 };
        if fields.len() < 6 || fields.len() > max_fields {
            return Err(malformed(format!("expected {} fields, found {}", if allow_confidence { "6 or 7" } else { "6" }, fields.len())));
        }
        let frame_index: usize = fields[0]
            .parse()
            .map_err(|_| malformed(format!("bad frame index `{}`", fields[0])))?;
        let sign = fields[1]
            .parse::<u8>()
            .ok()
            .and_then(SignType::from_code)
            .ok_or_else(|| AnnotationError::UnknownSign { path: path.to_string(), line, code: fields[1].to_string() })?;
        let mut nums = [0.0f64; 4];
        for (slot, tok) in nums.iter_mut().zip(&fields[2..6]) {
            *slot = tok
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| malformed(format!("bad number `{tok}`")))?;
        }
        let [x, y, w, h] = nums;
        if !(w > 0.0 && h > 0.0) {
            return Err(AnnotationError::NonPositiveExtent { path: path.to_string(), line, w, h });
        }
        let confidence = match fields.get(6) {
            Some(tok) => {
                let v: f64 = tok.parse().map_err(|_| malformed(format!("bad confidence `{tok}`")))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(AnnotationError::BadConfidence { path: path.to_string(), line, value: v });
                }
                Some(v)
            }
            None => None,
        };
        out.push(RawRecord { frame_index, sign, bbox: BoundingBox { x, y, w, h }, confidence });
    }
    // Stable: equal frames keep file order.
    out.sort_by_key(|r| r.frame_index);
    Ok(out)
}

pub fn parse_annotations_str(text: &str, origin: &str) -> Result<Vec<Annotation>, AnnotationError> {
    Ok(parse_records(text, origin, false)?
        .into_iter()
        .map(|r| Annotation { frame_index: r.frame_index, sign: r.sign, bbox: r.bbox })
        .collect())
}

pub fn parse_detections_str(text: &str, origin: &str) -> Result<Vec<Detection>, AnnotationError> {
    Ok(parse_records(text, origin, true)?
        .into_iter()
        .map(|r| Detection {
            frame_index: r.frame_index,
            sign: r.sign,
            bbox: r.bbox,
            confidence: r.confidence.unwrap_or(1.0),
        })
        .collect())
}

fn read(path: &Path) -> Result<String, AnnotationError> {
    fs::read_to_string(path).map_err(|e| AnnotationError::Io { path: path.display().to_string(), source: e })
}

/// Reads a ground-truth file.
pub fn parse_annotations(path: impl AsRef<Path>) -> Result<Vec<Annotation>, AnnotationError> {
    let path = path.as_ref();
    parse_annotations_str(&read(path)?, &path.display().to_string())
}

/// Reads a prediction file.
pub fn parse_detections(path: impl AsRef<Path>) -> Result<Vec<Detection>, AnnotationError> {
    let path = path.as_ref();
    parse_detections_str(&read(path)?, &path.display().to_string())
}

struct Line<'a>(usize, SignType, &'a BoundingBox);

impl fmt::Display for Line<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.2;
        write!(f, "{} {} {} {} {} {}", self.0, self.1.code(), b.x, b.y, b.w, b.h)
    }
}

pub fn format_annotations(anns: &[Annotation]) -> String {
    let mut s = format!("{HEADER}\n");
    for a in anns {
        s.push_str(&format!("{}\n", Line(a.frame_index, a.sign, &a.bbox)));
    }
    s
}

pub fn format_detections(dets: &[Detection]) -> String {
    let mut s = format!("{HEADER}\n");
    for d in dets {
        s.push_str(&format!("{} {}\n", Line(d.frame_index, d.sign, &d.bbox), d.confidence));
    }
    s
}

pub fn write_annotations(anns: &[Annotation], path: impl AsRef<Path>) -> Result<(), AnnotationError> {
    let path = path.as_ref();
    fs::write(path, format_annotations(anns)).map_err(|e| AnnotationError::Io { path: path.display().to_string(), source: e })
}

pub fn write_detections(dets: &[Detection], path: impl AsRef<Path>) -> Result<(), AnnotationError> {
    let path = path.as_ref();
    fs::write(path, format_detections(dets)).map_err(|e| AnnotationError::Io { path: path.display().to_string(), source: e })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitMode {
    /// Seeded Fisher–Yates shuffle before cutting.
    #[default]
    Shuffle,
    /// First ids go to training, in input order.
    Ordered,
}

impl std::str::FromStr for SplitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shuffle" => Ok(SplitMode::Shuffle),
            "ordered" => Ok(SplitMode::Ordered),
            other => Err(format!("unknown split mode `{other}` (expected shuffle or ordered)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

/// Splits ids into train/test with `|train| = round(ratio * N)`.
pub fn split_dataset(ids: &[String], ratio_train: f64, seed: u64, mode: SplitMode) -> Result<SplitPlan, AnnotationError> {
    if !(ratio_train > 0.0 && ratio_train < 1.0) {
        return Err(AnnotationError::DegenerateRatio(ratio_train));
    }
    if ids.is_empty() {
        return Err(AnnotationError::EmptyIds);
    }
    let mut order: Vec<String> = ids.to_vec();
    if mode == SplitMode::Shuffle {
        let mut rng = SplitMix64::new(derive(seed, &[0x5B117]));
        for i in (1..order.len()).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            order.swap(i, j);
        }
    }
    let n_train = (ratio_train * ids.len() as f64).round() as usize;
    let test_ids = order.split_off(n_train);
    Ok(SplitPlan { train_ids: order, test_ids })
}

/// Renders a split plan as CSV `id,split`, training ids first.
pub fn format_split_csv(plan: &SplitPlan) -> String {
    let mut s = String::from("id,split\n");
    for id in &plan.train_ids {
        s.push_str(&format!("{id},train\n"));
    }
    for id in &plan.test_ids {
        s.push_str(&format!("{id},test\n"));
    }
    s
}

/// Sequence and frame counts of an evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalCells {
    pub train_sequences_per_type: usize,
    pub test_sequences_per_type: usize,
    pub train_frames_per_type: usize,
    pub test_frames_per_type: usize,
    /// Challenge sequences plus the reference sequences, training side.
    pub train_sequences_total: usize,
    pub test_sequences_total: usize,
    pub train_frames_total: usize,
    pub test_frames_total: usize,
    pub challenge_sequences: usize,
    pub challenge_sequences_per_type: usize,
}

pub fn enumerate_eval_cells(plan: &SplitPlan, types: usize, levels: usize, frames_per_sequence: usize) -> EvalCells {
    let (tr, te) = (plan.train_ids.len(), plan.test_ids.len());
    let n = tr + te;
    let train_total = tr * types * levels + tr;
    let test_total = te * types * levels + te;
    EvalCells {
        train_sequences_per_type: tr * levels,
        test_sequences_per_type: te * levels,
        train_frames_per_type: tr * levels * frames_per_sequence,
        test_frames_per_type: te * levels * frames_per_sequence,
        train_sequences_total: train_total,
        test_sequences_total: test_total,
        train_frames_total: train_total * frames_per_sequence,
        test_frames_total: test_total * frames_per_sequence,
        challenge_sequences: n * types * levels,
        challenge_sequences_per_type: n * levels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("seq{i:02}")).collect()
    }

    #[test]
    fn sign_codes() {
        assert_eq!(SignType::ALL.len(), 14);
        assert_eq!(SignType::from_code(6), Some(SignType::Stop));
        assert_eq!(SignType::from_code(0), None);
        assert_eq!(SignType::from_code(15), None);
        for (i, s) in SignType::ALL.iter().enumerate() {
            assert_eq!(s.code() as usize, i + 1);
        }
    }

    #[test]
    fn parse_direct_mapping() {
        let a = parse_annotations_str("# cure-eval v1\n12 6 100 80 24 24\n", "t").unwrap();
        assert_eq!(
            a,
            vec![Annotation { frame_index: 12, sign: SignType::Stop, bbox: BoundingBox { x: 100.0, y: 80.0, w: 24.0, h: 24.0 } }]
        );
    }

    #[test]
    fn parse_errors_report_lines() {
        let err = parse_annotations_str("# cure-eval v1\n1 1 0 0 5 5\n2 6 1 1 0 4\n", "t").unwrap_err();
        assert!(matches!(err, AnnotationError::NonPositiveExtent { line: 3, .. }), "{err}");
        let err = parse_annotations_str("# cure-eval v1\n1 15 0 0 5 5\n", "t").unwrap_err();
        assert!(matches!(err, AnnotationError::UnknownSign { line: 2, .. }));
        let err = parse_annotations_str("# cure-eval v1\n# note\n1 1 0 0 5\n", "t").unwrap_err();
        assert!(matches!(err, AnnotationError::Malformed { line: 3, .. }));
        let err = parse_annotations_str("1 1 0 0 5 5\n", "t").unwrap_err();
        assert!(matches!(err, AnnotationError::MissingHeader { .. }));
        // Ground truth does not take a confidence column.
        assert!(parse_annotations_str("# cure-eval v1\n1 1 0 0 5 5 0.3\n", "t").is_err());
        let err = parse_detections_str("# cure-eval v1\n1 1 0 0 5 5 1.3\n", "t").unwrap_err();
        assert!(matches!(err, AnnotationError::BadConfidence { line: 2, .. }));
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse_annotations_str("# cure-eval v1\n", "t").unwrap().is_empty());
        assert!(parse_detections_str("\n# cure-eval v1\n# nothing\n\n", "t").unwrap().is_empty());
    }

    #[test]
    fn records_sorted_by_frame_then_file_order() {
        let d = parse_detections_str("# cure-eval v1\n5 1 0 0 1 1 0.2\n1 2 0 0 1 1\n5 3 0 0 1 1 0.9\n", "t").unwrap();
        let order: Vec<_> = d.iter().map(|d| (d.frame_index, d.sign.code())).collect();
        assert_eq!(order, vec![(1, 2), (5, 1), (5, 3)]);
        assert_eq!(d[0].confidence, 1.0);
    }

    #[test]
    fn bounds_check() {
        let a = Annotation { frame_index: 3, sign: SignType::Yield, bbox: BoundingBox::new(30.0, 0.0, 4.0, 4.0).unwrap() };
        assert!(check_bounds(&[a], 32, 32, 4).is_err());
        assert!(check_bounds(&[a], 34, 32, 4).is_ok());
        assert!(check_bounds(&[a], 34, 32, 3).is_err());
    }

    #[test]
    fn split_paper_shape() {
        let plan = split_dataset(&ids(49), 0.7, 1, SplitMode::Shuffle).unwrap();
        assert_eq!((plan.train_ids.len(), plan.test_ids.len()), (34, 15));
        let plan = split_dataset(&ids(10), 0.7, 1, SplitMode::Ordered).unwrap();
        assert_eq!((plan.train_ids.len(), plan.test_ids.len()), (7, 3));
        assert_eq!(plan.train_ids, ids(10)[..7].to_vec());
        assert_eq!(
            split_dataset(&ids(20), 0.7, 9, SplitMode::Shuffle).unwrap(),
            split_dataset(&ids(20), 0.7, 9, SplitMode::Shuffle).unwrap()
        );
        assert!(matches!(split_dataset(&ids(5), 1.0, 0, SplitMode::Shuffle), Err(AnnotationError::DegenerateRatio(_))));
        assert!(matches!(split_dataset(&ids(5), 0.0, 0, SplitMode::Shuffle), Err(AnnotationError::DegenerateRatio(_))));
        assert!(matches!(split_dataset(&[], 0.5, 0, SplitMode::Shuffle), Err(AnnotationError::EmptyIds)));
    }

    #[test]
    fn split_csv_layout() {
        let plan = SplitPlan { train_ids: vec!["a".into()], test_ids: vec!["b".into()] };
        assert_eq!(format_split_csv(&plan), "id,split\na,train\nb,test\n");
    }

    #[test]
    fn eval_cells_paper_and_unit() {
        let plan = split_dataset(&ids(49), 0.7, 0, SplitMode::Ordered).unwrap();
        let c = enumerate_eval_cells(&plan, 12, 5, 300);
        assert_eq!((c.train_sequences_per_type, c.test_sequences_per_type), (170, 75));
        assert_eq!((c.train_frames_per_type, c.test_frames_per_type), (51_000, 22_500));
        assert_eq!((c.train_sequences_total, c.test_sequences_total), (2_074, 915));
        assert_eq!((c.train_frames_total, c.test_frames_total), (622_200, 274_500));
        assert_eq!((c.challenge_sequences, c.challenge_sequences_per_type), (2_940, 245));

        let one = SplitPlan { train_ids: vec!["a".into()], test_ids: vec![] };
        let c = enumerate_eval_cells(&one, 1, 1, 1);
        assert_eq!((c.challenge_sequences, c.train_sequences_total), (1, 2));
    }

    fn box_strategy() -> impl Strategy<Value = BoundingBox> {
        (-50.0f64..500.0, -50.0f64..500.0, 0.01f64..200.0, 0.01f64..200.0)
            .prop_map(|(x, y, w, h)| BoundingBox { x, y, w, h })
    }

    proptest! {
        #[test]
        fn annotation_round_trip(
            mut anns in prop::collection::vec(
                (0usize..1000, 1u8..=14, box_strategy()).prop_map(|(f, s, b)| Annotation {
                    frame_index: f, sign: SignType::from_code(s).unwrap(), bbox: b,
                }),
                0..20,
            )
        ) {
            anns.sort_by_key(|a| a.frame_index);
            let text = format_annotations(&anns);
            prop_assert_eq!(parse_annotations_str(&text, "p").unwrap(), anns);
        }

        #[test]
        fn split_is_disjoint_cover(n in 1usize..60, ratio in 0.01f64..0.99, seed in any::<u64>(), ordered in any::<bool>()) {
            let all = ids(n);
            let mode = if ordered { SplitMode::Ordered } else { SplitMode::Shuffle };
            let plan = split_dataset(&all, ratio, seed, mode).unwrap();
            prop_assert_eq!(plan.train_ids.len(), (ratio * n as f64).round() as usize);
            let mut joined: Vec<String> = plan.train_ids.iter().chain(&plan.test_ids).cloned().collect();
            joined.sort();
            prop_assert_eq!(joined, all);
        }

        #[test]
        fn eval_cells_match_enumeration(tr in 0usize..6, te in 0usize..6, types in 1usize..13, levels in 1usize..6, frames in 1usize..5) {
            let plan = SplitPlan { train_ids: ids(tr), test_ids: ids(te) };
            let c = enumerate_eval_cells(&plan, types, levels, frames);
            // Brute-force: list every (id, type, level) challenge sequence and every reference.
            let mut train_seqs = 0;
            let mut test_seqs = 0;
            let mut per_type_train = vec![0; types];
            for (split, n) in [(0, tr), (1, te)] {
                for _id in 0..n {
                    for t in 0..types {
                        for _l in 0..levels {
                            if split == 0 { train_seqs += 1; per_type_train[t] += 1; } else { test_seqs += 1; }
                        }
                    }
                    if split == 0 { train_seqs += 1; } else { test_seqs += 1; }
                }
            }
            prop_assert_eq!(c.train_sequences_total, train_seqs);
            prop_assert_eq!(c.test_sequences_total, test_seqs);
            prop_assert!(per_type_train.iter().all(|&n| n == c.train_sequences_per_type));
            prop_assert_eq!(c.train_frames_total, train_seqs * frames);
            prop_assert_eq!(c.challenge_sequences, (tr + te) * types * levels);
        }
    }
}
