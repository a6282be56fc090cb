use std::collections::{BTreeMap, BTreeSet};

use super::{percent_change, ConfusionCounts, Metric, MetricsError, MetricsRecord};
use crate::challenge::ChallengeType;

/// Per-level means over challenge types.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMeans {
    pub level: u8,
    pub precision: f64,
    pub recall: f64,
    pub f05: f64,
    pub f2: f64,
    /// Records averaged into this level.
    pub cells: usize,
}

impl LevelMeans {
    pub fn value(&self, m: Metric) -> f64 {
        match m {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F05 => self.f05,
            Metric::F2 => self.f2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelAggregate {
    /// Sorted by level.
    pub levels: Vec<LevelMeans>,
    /// Percent drop from level 0 to level 5 per metric, in `Metric::ALL`
    /// order; `None` if either level is missing or the level-0 mean is zero.
    pub drop_5_vs_0: [Option<f64>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeDegradation {
    pub challenge: ChallengeType,
    /// Mean of the defined percentages; `None` if none were defined.
    pub mean_percent: Option<f64>,
    pub defined_cells: usize,
    pub undefined_cells: usize,
}

struct Grid<'a> {
    reference: Option<&'a MetricsRecord>,
    /// Level-0 records attached to a type (optional per-type references).
    type_zero: BTreeMap<ChallengeType, &'a MetricsRecord>,
    cells: BTreeMap<(ChallengeType, u8), &'a MetricsRecord>,
}

impl<'a> Grid<'a> {
    fn build(records: &'a [MetricsRecord]) -> Result<Self, MetricsError> {
        let mut grid = Grid { reference: None, type_zero: BTreeMap::new(), cells: BTreeMap::new() };
        for r in records {
            if r.level > 5 {
                return Err(MetricsError::RaggedGrid(format!("level {} out of range", r.level)));
            }
            let dup = match (r.challenge, r.level) {
                (None, 0) => grid.reference.replace(r).is_some(),
                (None, l) => return Err(MetricsError::RaggedGrid(format!("challenge-free record at level {l}"))),
                (Some(t), 0) => grid.type_zero.insert(t, r).is_some(),
                (Some(t), l) => grid.cells.insert((t, l), r).is_some(),
            };
            if dup {
                return Err(MetricsError::RaggedGrid(format!("duplicate record for {}", cell_name(r.challenge, r.level))));
            }
        }
        let types: BTreeSet<ChallengeType> = grid.cells.keys().map(|k| k.0).collect();
        let levels: BTreeSet<u8> = grid.cells.keys().map(|k| k.1).collect();
        let missing: Vec<String> = types
            .iter()
            .flat_map(|&t| levels.iter().map(move |&l| (t, l)))
            .filter(|k| !grid.cells.contains_key(k))
            .map(|(t, l)| cell_name(Some(t), l))
            .collect();
        if !missing.is_empty() {
            return Err(MetricsError::RaggedGrid(format!("missing {}", missing.join(", "))));
        }
        Ok(grid)
    }

    fn reference_for(&self, t: ChallengeType) -> Option<&'a MetricsRecord> {
        self.type_zero.get(&t).copied().or(self.reference)
    }

    fn key_set(&self) -> BTreeSet<(Option<ChallengeType>, u8)> {
        let mut keys: BTreeSet<_> = self.cells.keys().map(|&(t, l)| (Some(t), l)).collect();
        keys.extend(self.type_zero.keys().map(|&t| (Some(t), 0)));
        if self.reference.is_some() {
            keys.insert((None, 0));
        }
        keys
    }
}

fn cell_name(t: Option<ChallengeType>, level: u8) -> String {
    match t {
        Some(t) => format!("{}_{level}", t.name()),
        None => format!("challenge_free_{level}"),
    }
}

fn means(level: u8, rs: &[&MetricsRecord]) -> LevelMeans {
    let n = rs.len() as f64;
    let avg = |m: Metric| rs.iter().map(|r| m.of(r)).sum::<f64>() / n;
    LevelMeans {
        level,
        precision: avg(Metric::Precision),
        recall: avg(Metric::Recall),
        f05: avg(Metric::F05),
        f2: avg(Metric::F2),
        cells: rs.len(),
    }
}

/// Means of each metric over challenge types, per level.
///
/// Level 0 averages the per-type level-0 records when present, otherwise
/// the challenge-free reference.
pub fn aggregate_by_level(records: &[MetricsRecord]) -> Result<LevelAggregate, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty("records"));
    }
    let grid = Grid::build(records)?;
    let mut levels = Vec::new();
    let zero: Vec<&MetricsRecord> = if grid.type_zero.is_empty() {
        grid.reference.into_iter().collect()
    } else {
        grid.type_zero.values().copied().collect()
    };
    if !zero.is_empty() {
        levels.push(means(0, &zero));
    }
    let mut by_level: BTreeMap<u8, Vec<&MetricsRecord>> = BTreeMap::new();
    for (&(_, l), r) in &grid.cells {
        by_level.entry(l).or_default().push(r);
    }
    levels.extend(by_level.iter().map(|(&l, rs)| means(l, rs)));

    let at = |l: u8| levels.iter().find(|m| m.level == l);
    let drop_5_vs_0 = match (at(0), at(5)) {
        (Some(a), Some(b)) => Metric::ALL.map(|m| percent_change(a.value(m), b.value(m))),
        _ => [None; 4],
    };
    Ok(LevelAggregate { levels, drop_5_vs_0 })
}

/// Mean degradation percentage per challenge type over metrics × algorithms
/// × levels. Each algorithm's cells are measured against its own level-0
/// reference.
pub fn aggregate_by_type(algorithms: &[Vec<MetricsRecord>]) -> Result<Vec<TypeDegradation>, MetricsError> {
    let grids = checked_grids(algorithms)?;
    let types: BTreeSet<ChallengeType> = grids[0].cells.keys().map(|k| k.0).collect();
    let mut out = Vec::new();
    for t in types {
        let (mut sum, mut defined, mut undefined) = (0.0, 0usize, 0usize);
        for (i, g) in grids.iter().enumerate() {
            let reference = g.reference_for(t).ok_or_else(|| MetricsError::MissingReference(format!("algorithm {}, {}", i + 1, t.name())))?;
            for (_, r) in g.cells.range((t, 1)..=(t, 5)) {
                for m in Metric::ALL {
                    match percent_change(m.of(reference), m.of(r)) {
                        Some(p) => {
                            sum += p;
                            defined += 1;
                        }
                        None => undefined += 1,
                    }
                }
            }
        }
        out.push(TypeDegradation {
            challenge: t,
            mean_percent: (defined > 0).then(|| sum / defined as f64),
            defined_cells: defined,
            undefined_cells: undefined,
        });
    }
    Ok(out)
}

/// Metric-level average of several algorithms' results over the same grid.
/// Confusion counts are summed.
pub fn average_algorithms(algorithms: &[Vec<MetricsRecord>]) -> Result<Vec<MetricsRecord>, MetricsError> {
    checked_grids(algorithms)?;
    let n = algorithms.len() as f64;
    let mut acc: BTreeMap<(Option<ChallengeType>, u8), (ConfusionCounts, [f64; 4])> = BTreeMap::new();
    for records in algorithms {
        for r in records {
            let e = acc.entry((r.challenge, r.level)).or_default();
            e.0 += r.counts;
            for (k, m) in Metric::ALL.into_iter().enumerate() {
                e.1[k] += m.of(r);
            }
        }
    }
    Ok(acc
        .into_iter()
        .map(|((challenge, level), (counts, s))| MetricsRecord {
            challenge,
            level,
            counts,
            precision: s[0] / n,
            recall: s[1] / n,
            f05: s[2] / n,
            f2: s[3] / n,
        })
        .collect())
}

fn checked_grids(algorithms: &[Vec<MetricsRecord>]) -> Result<Vec<Grid<'_>>, MetricsError> {
    if algorithms.is_empty() {
        return Err(MetricsError::Empty("algorithms"));
    }
    let grids = algorithms.iter().map(|a| Grid::build(a)).collect::<Result<Vec<_>, _>>()?;
    let first = grids[0].key_set();
    for (i, g) in grids.iter().enumerate().skip(1) {
        if g.key_set() != first {
            return Err(MetricsError::MismatchedGrids(format!("algorithm {} differs from algorithm 1", i + 1)));
        }
    }
    Ok(grids)
}
