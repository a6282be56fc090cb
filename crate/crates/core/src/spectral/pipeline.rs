use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::{mean_magnitude, render_spectrum_map, sequence_spectrum, SpectralError, SpectrumAccumulator, SpectrumMap};
use crate::challenge::{ChallengeType, Manifest, ManifestKind};
use crate::imaging::{load_sequence, FrameFormat, FrameSequence};

pub const STATS_HEADER: [&str; 5] = ["challenge", "level", "mean_log_magnitude", "frames", "sequences"];

/// Spectral summary of one manifest cell (a single challenge at a level, or
/// a composition).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumStats {
    pub key: ManifestKind,
    pub mean_log_magnitude: f64,
    pub frame_count: usize,
    pub sequence_count: usize,
}

impl SpectrumStats {
    pub fn challenge(&self) -> Option<ChallengeType> {
        match self.key {
            ManifestKind::Single { kind, .. } => Some(kind),
            ManifestKind::Composed(_) => None,
        }
    }

    pub fn level(&self) -> Option<u8> {
        match self.key {
            ManifestKind::Single { level, .. } => Some(level),
            ManifestKind::Composed(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumOutput {
    /// Sorted by key: single cells by type code then level, then compositions.
    pub stats: Vec<SpectrumStats>,
    pub cell_maps: BTreeMap<ManifestKind, SpectrumMap>,
    /// Per type, pooled over every frame of every level.
    pub type_maps: BTreeMap<ChallengeType, SpectrumMap>,
    pub type_frames: BTreeMap<ChallengeType, usize>,
    pub epsilon: f64,
}

fn load(dir: &Path, frame_rate: f64) -> Result<FrameSequence, SpectralError> {
    if !dir.is_dir() {
        return Err(SpectralError::MissingSequence(dir.display().to_string()));
    }
    Ok(load_sequence(dir, frame_rate)?)
}

/// Averages the residual spectra of every manifest row per cell and per type.
///
/// References are read from `<refs_root>/<ref_id>/`, challenged sequences
/// from `<sequences_root>/<row path>/`. Rows are reduced in manifest order,
/// so results do not depend on scheduling.
pub fn spectrum_pipeline(
    manifest: &Manifest,
    sequences_root: &Path,
    refs_root: &Path,
    frame_rate: f64,
    epsilon: f64,
) -> Result<SpectrumOutput, SpectralError> {
    if manifest.rows.is_empty() {
        return Err(SpectralError::Empty("manifest"));
    }
    let ids: BTreeSet<&str> = manifest.rows.iter().map(|r| r.ref_id.as_str()).collect();
    let refs: BTreeMap<&str, FrameSequence> = ids
        .into_par_iter()
        .map(|id| Ok((id, load(&refs_root.join(id), frame_rate)?)))
        .collect::<Result<_, SpectralError>>()?;

    let per_row: Vec<SpectrumAccumulator> = manifest
        .rows
        .par_iter()
        .map(|row| {
            let chal = load(&sequences_root.join(&row.path), frame_rate)?;
            sequence_spectrum(&refs[row.ref_id.as_str()], &chal, epsilon).map_err(|e| match e {
                SpectralError::ShapeMismatch(m) => SpectralError::ShapeMismatch(format!("{} vs {}: {m}", row.path, row.ref_id)),
                e => e,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut cells: BTreeMap<ManifestKind, (SpectrumAccumulator, usize)> = BTreeMap::new();
    for (row, acc) in manifest.rows.iter().zip(per_row) {
        match cells.get_mut(&row.kind) {
            Some((a, n)) => {
                a.merge(&acc)?;
                *n += 1;
            }
            None => {
                cells.insert(row.kind.clone(), (acc, 1));
            }
        }
    }

    let mut out = SpectrumOutput { stats: Vec::new(), cell_maps: BTreeMap::new(), type_maps: BTreeMap::new(), type_frames: BTreeMap::new(), epsilon };
    let mut by_type: BTreeMap<ChallengeType, SpectrumAccumulator> = BTreeMap::new();
    for (key, (acc, sequences)) in cells {
        let map = acc.mean()?;
        out.stats.push(SpectrumStats {
            key: key.clone(),
            mean_log_magnitude: mean_magnitude(&map),
            frame_count: acc.count(),
            sequence_count: sequences,
        });
        if let ManifestKind::Single { kind, .. } = key {
            match by_type.get_mut(&kind) {
                Some(t) => t.merge(&acc)?,
                None => {
                    by_type.insert(kind, acc);
                }
            }
        }
        out.cell_maps.insert(key, map);
    }
    for (kind, acc) in by_type {
        out.type_frames.insert(kind, acc.count());
        out.type_maps.insert(kind, acc.mean()?);
    }
    Ok(out)
}

fn key_fields(key: &ManifestKind) -> (String, String) {
    match key {
        ManifestKind::Single { kind, level } => (kind.name().to_string(), level.to_string()),
        ManifestKind::Composed(chain) => {
            let parts: Vec<String> = chain.iter().map(|(k, l)| format!("{}:{l}", k.name())).collect();
            (parts.join("+"), String::new())
        }
    }
}

fn parse_key(challenge: &str, level: &str) -> Result<ManifestKind, String> {
    let lvl = |s: &str| s.parse::<u8>().ok().filter(|l| *l <= 5).ok_or_else(|| format!("bad level `{s}`"));
    let kind = |s: &str| s.parse::<ChallengeType>().map_err(|e| e.to_string());
    if challenge.contains(':') {
        let chain = challenge
            .split('+')
            .map(|p| {
                let (t, l) = p.split_once(':').ok_or_else(|| format!("bad composition `{p}`"))?;
                Ok((kind(t)?, lvl(l)?))
            })
            .collect::<Result<_, String>>()?;
        Ok(ManifestKind::Composed(chain))
    } else {
        Ok(ManifestKind::Single { kind: kind(challenge)?, level: lvl(level)? })
    }
}

pub fn stats_to_csv(stats: &[SpectrumStats]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(STATS_HEADER).expect("in-memory write");
    for s in stats {
        let (c, l) = key_fields(&s.key);
        w.write_record([c, l, s.mean_log_magnitude.to_string(), s.frame_count.to_string(), s.sequence_count.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

pub fn parse_stats_str(text: &str, origin: &str) -> Result<Vec<SpectrumStats>, SpectralError> {
    let err = |line: usize, reason: String| SpectralError::Table { path: origin.to_string(), line, reason };
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rd.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != STATS_HEADER {
        return Err(err(1, format!("expected header `{}`", STATS_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| err(line, e.to_string()))?;
        let key = parse_key(&rec[0], &rec[1]).map_err(|r| err(line, r))?;
        let mean = rec[2].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(line, format!("bad mean `{}`", &rec[2])))?;
        let count = |k: usize| rec[k].parse::<usize>().map_err(|_| err(line, format!("bad {} `{}`", STATS_HEADER[k], &rec[k])));
        out.push(SpectrumStats { key, mean_log_magnitude: mean, frame_count: count(3)?, sequence_count: count(4)? });
    }
    Ok(out)
}

pub fn parse_stats(path: &Path) -> Result<Vec<SpectrumStats>, SpectralError> {
    let text = fs::read_to_string(path).map_err(|source| SpectralError::Io { path: path.display().to_string(), source })?;
    parse_stats_str(&text, &path.display().to_string())
}

/// Writes `stats.csv`, `<type>_<level>` and `<type>_avg` maps, composed maps
/// named by their label (e.g. `rain5+exposure1`), and `spectrum_meta.txt`
/// recording the transform size.
pub fn write_spectrum_outputs(out: &SpectrumOutput, dir: &Path, format: FrameFormat) -> Result<(), SpectralError> {
    let io = |path: &Path| {
        let p = path.display().to_string();
        move |source| SpectralError::Io { path: p, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let stats_path = dir.join("stats.csv");
    fs::write(&stats_path, stats_to_csv(&out.stats)).map_err(io(&stats_path))?;
    let ext = format.extension();
    for (key, map) in &out.cell_maps {
        render_spectrum_map(map, dir.join(format!("{}.{ext}", key.label())))?;
    }
    for (kind, map) in &out.type_maps {
        render_spectrum_map(map, dir.join(format!("{}_avg.{ext}", kind.name())))?;
    }
    if let Some(map) = out.cell_maps.values().next() {
        let (sw, sh) = map.source_dims();
        let meta = format!(
            "epsilon={}\nlog=natural\nsource_width={sw}\nsource_height={sh}\ntransform_width={}\ntransform_height={}\nzero_padded={}\n",
            out.epsilon,
            map.width(),
            map.height(),
            (sw, sh) != (map.width(), map.height())
        );
        let meta_path = dir.join("spectrum_meta.txt");
        fs::write(&meta_path, meta).map_err(io(&meta_path))?;
    }
    Ok(())
}
