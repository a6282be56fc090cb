//! Grid synthesis (references × types × levels) and the sequence manifest.
//!
//! Layout: `<out>/<ref_id>_<TT>_<L>/frame_00001.png ...` with `TT` the
//! two-digit type code. Composed challenges go to
//! `<out>/<ref_id>_c_<TT>-<L>_<TT>-<L>...`. The manifest is a CSV with header
//! `ref_id,type,level,seed,path`; composed rows carry the ordered chain
//! (`09:5+06:1`) in `type` and an empty `level`.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;

use super::{compose_challenges_with, ChallengeError, ChallengeSpec, ChallengeType, SynthOptions};
use crate::imaging::{save_sequence, FrameFormat, FrameSequence};
use crate::rng::{derive, mix64};

pub const MANIFEST_HEADER: [&str; 5] = ["ref_id", "type", "level", "seed", "path"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ManifestKind {
    Single { kind: ChallengeType, level: u8 },
    Composed(Vec<(ChallengeType, u8)>),
}

impl ManifestKind {
    fn type_field(&self) -> String {
        match self {
            ManifestKind::Single { kind, .. } => format!("{:02}", kind.code()),
            ManifestKind::Composed(chain) => chain
                .iter()
                .map(|(k, l)| format!("{:02}:{l}", k.code()))
                .collect::<Vec<_>>()
                .join("+"),
        }
    }

    fn level_field(&self) -> String {
        match self {
            ManifestKind::Single { level, .. } => level.to_string(),
            ManifestKind::Composed(_) => String::new(),
        }
    }

    fn dir_suffix(&self) -> String {
        match self {
            ManifestKind::Single { kind, level } => format!("{:02}_{level}", kind.code()),
            ManifestKind::Composed(chain) => {
                let parts: Vec<String> = chain.iter().map(|(k, l)| format!("{:02}-{l}", k.code())).collect();
                format!("c_{}", parts.join("_"))
            }
        }
    }

    /// Human-readable key, e.g. `rain_3` or `rain5+exposure1`.
    pub fn label(&self) -> String {
        match self {
            ManifestKind::Single { kind, level } => format!("{kind}_{level}"),
            ManifestKind::Composed(chain) => {
                chain.iter().map(|(k, l)| format!("{k}{l}")).collect::<Vec<_>>().join("+")
            }
        }
    }
}

impl fmt::Display for ManifestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub ref_id: String,
    pub kind: ManifestKind,
    pub seed: u64,
    /// Sequence directory, relative to the manifest's directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
}

/// One planned synthesis output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridJob {
    pub ref_index: usize,
    pub row: ManifestRow,
}

impl GridJob {
    pub fn specs(&self) -> Vec<ChallengeSpec> {
        let chain = match &self.row.kind {
            ManifestKind::Single { kind, level } => vec![(*kind, *level)],
            ManifestKind::Composed(chain) => chain.clone(),
        };
        chain
            .into_iter()
            .enumerate()
            .map(|(i, (kind, level))| ChallengeSpec {
                kind,
                level,
                seed: if i == 0 { self.row.seed } else { derive(self.row.seed, &[i as u64]) },
            })
            .collect()
    }
}

fn id_key(id: &str) -> u64 {
    id.bytes().fold(0xC0FF_EE00_u64, |h, b| mix64(h ^ b as u64))
}

/// Seed of one grid cell, a pure function of the master seed and the cell.
pub fn cell_seed(master: u64, ref_id: &str, kind: &ManifestKind) -> u64 {
    let mut keys = vec![id_key(ref_id)];
    match kind {
        ManifestKind::Single { kind, level } => keys.extend([kind.code() as u64, *level as u64]),
        ManifestKind::Composed(chain) => {
            keys.push(0xC0);
            for (k, l) in chain {
                keys.extend([k.code() as u64, *l as u64]);
            }
        }
    }
    derive(master, &keys)
}

fn job(ref_index: usize, ref_id: &str, kind: ManifestKind, seed: u64) -> GridJob {
    let path = format!("{ref_id}_{}", kind.dir_suffix());
    let seed = cell_seed(seed, ref_id, &kind);
    GridJob { ref_index, row: ManifestRow { ref_id: ref_id.to_string(), kind, seed, path } }
}

/// Enumerates `|refs| * |types| * |levels|` jobs in (ref, type, level) order.
pub fn plan_grid(ref_ids: &[String], types: &[ChallengeType], levels: &[u8], seed: u64) -> Result<Vec<GridJob>, ChallengeError> {
    if ref_ids.is_empty() {
        return Err(ChallengeError::EmptyInput("reference list"));
    }
    if types.is_empty() {
        return Err(ChallengeError::EmptyInput("challenge type list"));
    }
    if levels.is_empty() {
        return Err(ChallengeError::EmptyInput("level list"));
    }
    if let Some(&bad) = levels.iter().find(|l| !(1..=5).contains(*l)) {
        return Err(ChallengeError::InvalidLevel(bad));
    }
    let mut jobs = Vec::with_capacity(ref_ids.len() * types.len() * levels.len());
    for (ri, id) in ref_ids.iter().enumerate() {
        for &kind in types {
            for &level in levels {
                jobs.push(job(ri, id, ManifestKind::Single { kind, level }, seed));
            }
        }
    }
    Ok(jobs)
}

fn check_collisions(jobs: &[GridJob], out: &Path) -> Result<(), ChallengeError> {
    for j in jobs {
        let dir = out.join(&j.row.path);
        if dir.exists() {
            return Err(ChallengeError::Collision(dir.display().to_string()));
        }
    }
    Ok(())
}

fn run_jobs(
    refs: &[(String, FrameSequence)],
    jobs: Vec<GridJob>,
    out: &Path,
    format: FrameFormat,
    opts: &SynthOptions,
) -> Result<Manifest, ChallengeError> {
    check_collisions(&jobs, out)?;
    jobs.par_iter().try_for_each(|j| -> Result<(), ChallengeError> {
        let seq = compose_challenges_with(&refs[j.ref_index].1, &j.specs(), opts)?;
        save_sequence(&seq, out.join(&j.row.path), format)?;
        Ok(())
    })?;
    Ok(Manifest { rows: jobs.into_iter().map(|j| j.row).collect() })
}

/// Synthesizes every (reference, type, level) cell into `out` and returns the
/// manifest rows (not yet written; see [`write_manifest`]).
pub fn synth_grid(
    refs: &[(String, FrameSequence)],
    types: &[ChallengeType],
    levels: &[u8],
    seed: u64,
    out: &Path,
    format: FrameFormat,
    opts: &SynthOptions,
) -> Result<Manifest, ChallengeError> {
    let ids: Vec<String> = refs.iter().map(|r| r.0.clone()).collect();
    let jobs = plan_grid(&ids, types, levels, seed)?;
    run_jobs(refs, jobs, out, format, opts)
}

/// Synthesizes one composed sequence per reference, applying `chain` left to right.
pub fn synth_composed(
    refs: &[(String, FrameSequence)],
    chain: &[(ChallengeType, u8)],
    seed: u64,
    out: &Path,
    format: FrameFormat,
    opts: &SynthOptions,
) -> Result<Manifest, ChallengeError> {
    if refs.is_empty() {
        return Err(ChallengeError::EmptyInput("reference list"));
    }
    if chain.is_empty() {
        return Err(ChallengeError::EmptyInput("composition"));
    }
    if let Some(&(_, bad)) = chain.iter().find(|(_, l)| *l > 5) {
        return Err(ChallengeError::InvalidSpecLevel(bad));
    }
    let jobs = refs
        .iter()
        .enumerate()
        .map(|(i, (id, _))| job(i, id, ManifestKind::Composed(chain.to_vec()), seed))
        .collect();
    run_jobs(refs, jobs, out, format, opts)
}

pub fn manifest_to_csv(manifest: &Manifest) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(MANIFEST_HEADER).expect("in-memory write");
    for r in &manifest.rows {
        w.write_record([
            r.ref_id.clone(),
            r.kind.type_field(),
            r.kind.level_field(),
            r.seed.to_string(),
            r.path.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 fields")
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<(), ChallengeError> {
    std::fs::write(path, manifest_to_csv(manifest))
        .map_err(|e| ChallengeError::Io { path: path.display().to_string(), source: e })
}

fn parse_kind(type_field: &str, level_field: &str) -> Result<ManifestKind, String> {
    let parse_type = |s: &str| {
        s.parse::<u8>()
            .ok()
            .and_then(ChallengeType::from_code)
            .ok_or_else(|| format!("bad type code `{s}`"))
    };
    let parse_level = |s: &str| {
        s.parse::<u8>().ok().filter(|l| *l <= 5).ok_or_else(|| format!("bad level `{s}`"))
    };
    if type_field.contains(':') {
        let chain = type_field
            .split('+')
            .map(|part| {
                let (t, l) = part.split_once(':').ok_or_else(|| format!("bad composition `{part}`"))?;
                Ok((parse_type(t)?, parse_level(l)?))
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(ManifestKind::Composed(chain))
    } else {
        Ok(ManifestKind::Single { kind: parse_type(type_field)?, level: parse_level(level_field)? })
    }
}

pub fn parse_manifest_str(text: &str, origin: &str) -> Result<Manifest, ChallengeError> {
    let err = |line: usize, reason: String| ChallengeError::Manifest { path: origin.to_string(), line, reason };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(err(1, format!("expected header `{}`", MANIFEST_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| err(line, e.to_string()))?;
        let kind = parse_kind(&rec[1], &rec[2]).map_err(|r| err(line, r))?;
        let seed = rec[3].parse().map_err(|_| err(line, format!("bad seed `{}`", &rec[3])))?;
        rows.push(ManifestRow { ref_id: rec[0].to_string(), kind, seed, path: rec[4].to_string() });
    }
    Ok(Manifest { rows })
}

pub fn parse_manifest(path: &Path) -> Result<Manifest, ChallengeError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ChallengeError::Io { path: path.display().to_string(), source: e })?;
    parse_manifest_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{asset::synthetic_scene, load_sequence};

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("ref{i:02}")).collect()
    }

    #[test]
    fn grid_counts() {
        let jobs = plan_grid(&ids(3), &ChallengeType::ALL, &[1, 2, 3, 4, 5], 7).unwrap();
        assert_eq!(jobs.len(), 180);
        for t in ChallengeType::ALL {
            assert_eq!(jobs.iter().filter(|j| matches!(j.row.kind, ManifestKind::Single { kind, .. } if kind == t)).count(), 15);
        }
        let jobs = plan_grid(&ids(49), &ChallengeType::ALL, &[1, 2, 3, 4, 5], 7).unwrap();
        assert_eq!(jobs.len(), 2_940);
        let rain = jobs.iter().filter(|j| matches!(j.row.kind, ManifestKind::Single { kind: ChallengeType::Rain, .. })).count();
        assert_eq!(rain, 245);
        assert!(matches!(plan_grid(&ids(1), &ChallengeType::ALL, &[], 0), Err(ChallengeError::EmptyInput(_))));
        assert!(matches!(plan_grid(&ids(1), &ChallengeType::ALL, &[0], 0), Err(ChallengeError::InvalidLevel(0))));
    }

    #[test]
    fn seeds_are_cell_local() {
        let a = plan_grid(&ids(3), &[ChallengeType::Noise], &[2], 5).unwrap();
        let b = plan_grid(&ids(3)[1..], &[ChallengeType::Noise], &[2], 5).unwrap();
        assert_eq!(a[1].row.seed, b[0].row.seed);
        assert_ne!(a[0].row.seed, a[1].row.seed);
        assert_eq!(a[0].row.path, "ref00_08_2");
    }

    #[test]
    fn manifest_round_trip() {
        let mut m = Manifest { rows: plan_grid(&ids(2), &[ChallengeType::Rain, ChallengeType::Haze], &[1, 5], 3).unwrap().into_iter().map(|j| j.row).collect() };
        m.rows.push(job(0, "ref00", ManifestKind::Composed(vec![(ChallengeType::Rain, 5), (ChallengeType::Exposure, 1)]), 3).row);
        let text = manifest_to_csv(&m);
        assert!(text.starts_with("ref_id,type,level,seed,path\n"));
        assert!(text.contains(",09:5+06:1,,"));
        assert_eq!(parse_manifest_str(&text, "m").unwrap(), m);
        assert!(parse_manifest_str("a,b\n", "m").is_err());
        assert!(matches!(
            parse_manifest_str("ref_id,type,level,seed,path\nx,13,1,0,p\n", "m"),
            Err(ChallengeError::Manifest { line: 2, .. })
        ));
    }

    #[test]
    fn synth_writes_layout_and_detects_collisions() {
        let tmp = tempfile::tempdir().unwrap();
        let refs: Vec<(String, FrameSequence)> = (0..2).map(|i| (format!("r{i}"), synthetic_scene(12, 10, 3, i).0)).collect();
        let m = synth_grid(&refs, &[ChallengeType::Shadow, ChallengeType::Noise], &[1, 2], 9, tmp.path(), FrameFormat::Ppm, &SynthOptions::default()).unwrap();
        assert_eq!(m.rows.len(), 8);
        let seq = load_sequence(tmp.path().join("r1_08_2"), 30.0).unwrap();
        assert_eq!(seq.len(), 3);
        let again = synth_grid(&refs, &[ChallengeType::Noise], &[2], 9, tmp.path(), FrameFormat::Ppm, &SynthOptions::default());
        assert!(matches!(again, Err(ChallengeError::Collision(_))));

        let composed = synth_composed(&refs, &[(ChallengeType::Rain, 5), (ChallengeType::Exposure, 1)], 9, tmp.path(), FrameFormat::Ppm, &SynthOptions::default()).unwrap();
        assert_eq!(composed.rows.len(), 2);
        assert!(tmp.path().join("r0_c_09-5_06-1/frame_00003.ppm").exists());
    }
}
