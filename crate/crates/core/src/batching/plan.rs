use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

use super::grid::{assign, build_grid, Edit, LengthGrid, Placement};

#[derive(Debug, Clone, PartialEq)]
pub struct BatchConfig {
    pub grid_k: usize,
    pub grid_count: usize,
    pub max_len: usize,
    pub batch_cap: usize,
    pub max_edit_fraction: f64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            grid_k: 10,
            grid_count: 16,
            max_len: 700,
            batch_cap: 100,
            max_edit_fraction: 0.04,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub piece_id: String,
    pub segment: usize,
    pub target: usize,
    pub edit: Edit,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub piece_id: String,
    pub segment: usize,
    pub length: usize,
    pub fraction: f64,
}

/// Per-segment edits plus length-homogeneous batches of assignment indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatchPlan {
    pub assignments: Vec<Assignment>,
    pub batches: Vec<Vec<usize>>,
    pub excluded: Vec<Exclusion>,
}

/// A segment waiting for a standard length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentInfo {
    pub piece_id: String,
    pub segment: usize,
    pub length: usize,
}

/// Group by target length, shuffle within groups, chunk to `batch_cap`,
/// then shuffle the batch order.
pub fn make_batches<R: Rng + ?Sized>(assignments: Vec<Assignment>, batch_cap: usize, rng: &mut R) -> Result<BatchPlan> {
    if batch_cap == 0 {
        return Err(Error::invalid("batch cap", "must be at least 1"));
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, a) in assignments.iter().enumerate() {
        groups.entry(a.target).or_default().push(i);
    }
    let mut batches = Vec::new();
    for (_, mut members) in groups {
        members.shuffle(rng);
        batches.extend(members.chunks(batch_cap).map(<[usize]>::to_vec));
    }
    batches.shuffle(rng);
    Ok(BatchPlan {
        assignments,
        batches,
        excluded: Vec::new(),
    })
}

/// Build the grid over all segment lengths, place every segment and batch
/// the ones that fit within the edit bound.
pub fn plan_batches<R: Rng + ?Sized>(
    segments: &[SegmentInfo],
    cfg: &BatchConfig,
    rng: &mut R,
) -> Result<(LengthGrid, BatchPlan)> {
    let lengths: Vec<usize> = segments.iter().map(|s| s.length).collect();
    let grid = build_grid(&lengths, cfg.grid_k, cfg.grid_count, cfg.max_len)?;
    let mut assignments = Vec::new();
    let mut excluded = Vec::new();
    for s in segments {
        match assign(s.length, &grid, cfg.max_edit_fraction) {
            Placement::Assigned { target, edit, fraction } => assignments.push(Assignment {
                piece_id: s.piece_id.clone(),
                segment: s.segment,
                target,
                edit,
                fraction,
            }),
            Placement::Excluded { fraction, .. } => {
                log::info!(
                    "excluding {} segment {} ({} samples, edit {:.3})",
                    s.piece_id,
                    s.segment,
                    s.length,
                    fraction
                );
                excluded.push(Exclusion {
                    piece_id: s.piece_id.clone(),
                    segment: s.segment,
                    length: s.length,
                    fraction,
                })
            }
        }
    }
    let mut plan = make_batches(assignments, cfg.batch_cap, rng)?;
    plan.excluded = excluded;
    Ok((grid, plan))
}

impl BatchPlan {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for a in &self.assignments {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                a.piece_id,
                a.segment,
                a.target,
                a.edit.as_str(),
                a.fraction
            );
        }
        for b in &self.batches {
            let ids: Vec<String> = b.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "batch: {}", ids.join(" "));
        }
        for e in &self.excluded {
            let _ = writeln!(
                out,
                "# excluded {},{},{},{}",
                e.piece_id, e.segment, e.length, e.fraction
            );
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut plan = BatchPlan::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let bad = |reason: String| Error::Config { line: idx + 1, reason };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# excluded ") {
                let f: Vec<&str> = rest.split(',').collect();
                if f.len() != 4 {
                    return Err(bad(format!("bad exclusion `{rest}`")));
                }
                plan.excluded.push(Exclusion {
                    piece_id: f[0].to_string(),
                    segment: f[1].parse().map_err(|_| bad("bad segment".into()))?,
                    length: f[2].parse().map_err(|_| bad("bad length".into()))?,
                    fraction: f[3].parse().map_err(|_| bad("bad fraction".into()))?,
                });
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("batch:") {
                let ids = rest
                    .split_whitespace()
                    .map(|t| t.parse::<usize>().map_err(|_| bad(format!("bad index `{t}`"))))
                    .collect::<Result<Vec<_>>>()?;
                plan.batches.push(ids);
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(format!("expected 5 fields, got `{line}`")));
            }
            plan.assignments.push(Assignment {
                piece_id: f[0].to_string(),
                segment: f[1].parse().map_err(|_| bad("bad segment".into()))?,
                target: f[2].parse().map_err(|_| bad("bad target".into()))?,
                edit: Edit::parse(f[3]).ok_or_else(|| bad(format!("bad edit `{}`", f[3])))?,
                fraction: f[4].parse().map_err(|_| bad("bad fraction".into()))?,
            });
        }
        plan.validate()?;
        Ok(plan)
    }

    /// Batch indices in range and every batch length-homogeneous.
    pub fn validate(&self) -> Result<()> {
        for (b, batch) in self.batches.iter().enumerate() {
            let mut target = None;
            for &i in batch {
                let a = self.assignments.get(i).ok_or_else(|| {
                    Error::invalid("batch plan", format!("batch {b} refers to missing assignment {i}"))
                })?;
                if *target.get_or_insert(a.target) != a.target {
                    return Err(Error::invalid("batch plan", format!("batch {b} mixes target lengths")));
                }
            }
        }
        Ok(())
    }
}
