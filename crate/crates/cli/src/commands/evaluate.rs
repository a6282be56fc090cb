use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use log::warn;
use robustbench_core::annotations::{parse_annotations, parse_detections, Annotation, Detection};
use robustbench_core::challenge::{parse_manifest, ManifestKind};
use robustbench_core::metrics::table::{degradation_to_csv, levels_to_csv, metrics_to_csv};
use robustbench_core::metrics::{aggregate_by_level, match_detections, MatchOptions};
use robustbench_core::{ChallengeType, ConfusionCounts, MetricsRecord};

use super::{create_dir, write_file};
use crate::{exit, required, resolve, CliError, CliResult, EvaluateArgs};

pub const METRICS_FILE: &str = "metrics.csv";
pub const DEGRADATION_FILE: &str = "degradation.csv";
pub const LEVELS_FILE: &str = "levels.csv";

/// Suffix of the prediction file for the unmodified reference sequence.
pub const REFERENCE_SUFFIX: &str = "_00_0";

fn fail(message: impl Into<String>) -> CliError {
    CliError::new(exit::EVALUATE, message)
}

pub fn prediction_path(pred_dir: &Path, sequence: &str) -> PathBuf {
    pred_dir.join(format!("{sequence}.txt"))
}

fn load_predictions(path: &Path) -> CliResult<Option<Vec<Detection>>> {
    if !path.is_file() {
        return Ok(None);
    }
    parse_detections(path).map(Some).map_err(|e| fail(e.to_string()))
}

pub fn run(a: &EvaluateArgs) -> CliResult<()> {
    let mut cfg = resolve(
        &a.config,
        &[
            ("manifest", "manifest", &a.manifest),
            ("gt", "gt", &a.gt),
            ("pred", "pred", &a.pred),
            ("out", "out", &a.out),
            ("iou_threshold", "iou", &a.iou),
            ("betas", "betas", &a.betas),
        ],
    )?;
    cfg.class_agnostic |= a.class_agnostic;
    let manifest_path = required(&cfg.manifest, "manifest")?;
    let gt_dir = required(&cfg.gt, "gt")?;
    let pred_dir = required(&cfg.pred, "pred")?;
    let out = required(&cfg.out, "out")?;
    let opts = MatchOptions { iou_threshold: cfg.iou_threshold, class_agnostic: cfg.class_agnostic };

    let manifest = parse_manifest(manifest_path).map_err(|e| fail(e.to_string()))?;
    if manifest.rows.is_empty() {
        return Err(fail(format!("{}: manifest has no rows", manifest_path.display())));
    }
    let ids: BTreeSet<&str> = manifest.rows.iter().map(|r| r.ref_id.as_str()).collect();
    let mut gt: BTreeMap<&str, Vec<Annotation>> = BTreeMap::new();
    for id in &ids {
        let path = gt_dir.join(format!("{id}.txt"));
        gt.insert(id, parse_annotations(&path).map_err(|e| fail(e.to_string()))?);
    }

    let mut missing: Vec<PathBuf> = Vec::new();
    let mut reference = ConfusionCounts::default();
    let mut reference_complete = true;
    for id in &ids {
        let path = prediction_path(pred_dir, &format!("{id}{REFERENCE_SUFFIX}"));
        match load_predictions(&path)? {
            Some(p) => reference += match_detections(&gt[id], &p, &opts).map_err(|e| fail(e.to_string()))?,
            None => {
                reference_complete = false;
                missing.push(path);
            }
        }
    }

    let mut cells: BTreeMap<(ChallengeType, u8), ConfusionCounts> = BTreeMap::new();
    let mut absent: BTreeSet<(ChallengeType, u8)> = BTreeSet::new();
    let mut skipped = 0usize;
    for row in &manifest.rows {
        let ManifestKind::Single { kind, level } = row.kind else {
            skipped += 1;
            continue;
        };
        let path = prediction_path(pred_dir, &row.path);
        match load_predictions(&path)? {
            Some(p) => {
                let c = match_detections(&gt[row.ref_id.as_str()], &p, &opts).map_err(|e| fail(e.to_string()))?;
                *cells.entry((kind, level)).or_default() += c;
            }
            None => {
                absent.insert((kind, level));
                missing.push(path);
            }
        }
    }
    if skipped > 0 {
        warn!("skipped {skipped} composed manifest rows; they have no (type, level) cell");
    }

    let mut records = Vec::new();
    if reference_complete {
        records.push(MetricsRecord::from_counts(None, 0, reference));
    }
    for (&(kind, level), &c) in &cells {
        if !absent.contains(&(kind, level)) {
            records.push(MetricsRecord::from_counts(Some(kind), level, c));
        }
    }
    let extra: Vec<f64> = cfg.betas.iter().copied().filter(|b| *b != 0.5 && *b != 2.0).collect();

    create_dir(out, exit::EVALUATE)?;
    write_file(&out.join(METRICS_FILE), &metrics_to_csv(&records, &extra), exit::EVALUATE)?;
    cfg.echo(out)?;

    if !missing.is_empty() {
        for p in &missing {
            eprintln!("missing prediction: {}", p.display());
        }
        let labels: Vec<String> = absent.iter().map(|(k, l)| format!("{k}_{l}")).collect();
        let mut msg = format!("{} prediction files missing", missing.len());
        if !reference_complete {
            msg.push_str("; reference row absent");
        }
        if !labels.is_empty() {
            msg.push_str(&format!("; absent cells: {}", labels.join(", ")));
        }
        return Err(fail(msg));
    }

    let degradation = degradation_to_csv(&records).map_err(|e| fail(e.to_string()))?;
    write_file(&out.join(DEGRADATION_FILE), &degradation, exit::EVALUATE)?;
    let levels = aggregate_by_level(&records).map_err(|e| fail(e.to_string()))?;
    write_file(&out.join(LEVELS_FILE), &levels_to_csv(&levels), exit::EVALUATE)?;

    println!(
        "evaluate: {} cells; reference precision {:.3} recall {:.3} -> {}",
        records.len() - 1,
        records[0].precision,
        records[0].recall,
        out.display()
    );
    Ok(())
}
