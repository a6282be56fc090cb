#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use robustbench_core::annotations::{format_detections, parse_annotations, Annotation, Detection, SignType};
use robustbench_core::challenge::{parse_manifest, ManifestKind};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_robustbench")
}

/// Runs the binary inside `dir` so relative paths (and the echoed config)
/// are identical across working directories.
pub fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin()).current_dir(dir).args(args).env_remove("ROBUSTBENCH_THREADS").output().expect("spawn robustbench")
}

pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run_in(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn other_sign(s: SignType) -> SignType {
    SignType::from_code(s.code() % 14 + 1).expect("valid code")
}

/// Planted detector output for one sequence: the reference run returns the
/// ground truth; at level `L` only the first `round(n * (1 - 0.15 L))` boxes
/// are found and `L` wrong-class boxes are added, so recall and precision
/// both fall strictly with level.
pub fn planted_detections(gt: &[Annotation], level: u8) -> Vec<Detection> {
    let n = gt.len();
    let keep = (n as f64 * (1.0 - 0.15 * level as f64)).round() as usize;
    let mut dets: Vec<Detection> = gt[..keep].iter().map(|a| Detection { confidence: 0.9, ..Detection::from(*a) }).collect();
    for i in 0..level as usize {
        let a = gt[i % n];
        dets.push(Detection { frame_index: a.frame_index, sign: other_sign(a.sign), bbox: a.bbox, confidence: 0.3 });
    }
    dets
}

/// Writes planted predictions for every manifest row and every reference.
pub fn write_planted(manifest: &Path, gt_dir: &Path, pred_dir: &Path) {
    fs::create_dir_all(pred_dir).unwrap();
    let m = parse_manifest(manifest).unwrap();
    let mut gts: BTreeMap<String, Vec<Annotation>> = BTreeMap::new();
    for row in &m.rows {
        let gt = gts
            .entry(row.ref_id.clone())
            .or_insert_with(|| parse_annotations(gt_dir.join(format!("{}.txt", row.ref_id))).unwrap());
        let level = match row.kind {
            ManifestKind::Single { level, .. } => level,
            ManifestKind::Composed(ref chain) => chain.iter().map(|c| c.1).max().unwrap_or(0),
        };
        fs::write(pred_dir.join(format!("{}.txt", row.path)), format_detections(&planted_detections(gt, level))).unwrap();
    }
    for (id, gt) in &gts {
        fs::write(pred_dir.join(format!("{id}_00_0.txt")), format_detections(&planted_detections(gt, 0))).unwrap();
    }
}

pub struct PipelineSpec {
    pub refs: usize,
    pub size: usize,
    pub frames: usize,
    pub seed: u64,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        Self { refs: 2, size: 32, frames: 10, seed: 7 }
    }
}

/// gen-refs, synth, planted detector, evaluate, spectrum, correlate, report.
pub fn full_pipeline(root: &Path, spec: &PipelineSpec) {
    fs::create_dir_all(root).unwrap();
    let (refs, size, frames, seed) =
        (spec.refs.to_string(), spec.size.to_string(), spec.frames.to_string(), spec.seed.to_string());
    ok(root, &["gen-refs", "--out", "data", "--count", &refs, "--width", &size, "--height", &size, "--frames", &frames, "--seed", "1"]);
    ok(root, &["synth", "--input", "data/refs", "--out", "syn", "--types", "all", "--levels", "1-5", "--seed", &seed]);
    write_planted(&root.join("syn/manifest.csv"), &root.join("data/gt"), &root.join("pred"));
    ok(root, &["evaluate", "--manifest", "syn/manifest.csv", "--gt", "data/gt", "--pred", "pred", "--out", "ev"]);
    ok(root, &["spectrum", "--manifest", "syn/manifest.csv", "--refs", "data/refs", "--out", "sp"]);
    ok(root, &["correlate", "--spectra", "sp/stats.csv", "--metrics", "ev/metrics.csv", "--out", "co"]);
    ok(root, &["report", "--evaluate", "ev", "--spectrum", "sp", "--correlate", "co", "--out", "rep"]);
}

/// Every file under `root`, relative path to contents, in sorted order.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                out.insert(path.strip_prefix(base).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Parses a simple CSV (no quoting) into header and rows.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("").split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

pub fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"))
}
