//! Per-sample pruning scores.
//!
//! Higher scores mean "more useful to keep": score-based pruning retains the
//! top of the ranking.

mod kcenter;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kcenter::{covering_radius, kcenter_select, DistanceMetric, EmbeddingSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("sample {id}: {reason}")]
    DimensionMismatch { id: u64, reason: String },
    #[error("sample {id}: not a probability vector ({reason})")]
    NotAProbability { id: u64, reason: String },
    #[error("window {window} needs at least that many epochs, log has {epochs}")]
    WindowTooLarge { window: usize, epochs: usize },
    #[error("window must be at least 2, got {0}")]
    WindowTooSmall(usize),
    #[error("score tables disagree: {0}")]
    KeyMismatch(String),
    #[error("no score tables given")]
    NoTables,
    #[error("invalid telemetry: {0}")]
    InvalidTelemetry(String),
    #[error("embedding set is empty")]
    EmptyEmbeddingSet,
    #[error("keep must be in 1..={available}, got {keep}")]
    InvalidKeep { keep: usize, available: usize },
    #[error("score for sample {0} is not finite")]
    NonFiniteScore(u64),
}

/// Where a score table came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMethod {
    El2n,
    Grand,
    Forgetting,
    Dynunc,
    Kcenter,
    External,
}

impl ScoreMethod {
    pub fn name(self) -> &'static str {
        match self {
            ScoreMethod::El2n => "el2n",
            ScoreMethod::Grand => "grand",
            ScoreMethod::Forgetting => "forgetting",
            ScoreMethod::Dynunc => "dynunc",
            ScoreMethod::Kcenter => "kcenter",
            ScoreMethod::External => "external",
        }
    }
}

impl fmt::Display for ScoreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "el2n" => ScoreMethod::El2n,
            "grand" => ScoreMethod::Grand,
            "forgetting" => ScoreMethod::Forgetting,
            "dynunc" => ScoreMethod::Dynunc,
            "kcenter" => ScoreMethod::Kcenter,
            "external" => ScoreMethod::External,
            other => return Err(format!("unknown score method `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub method: ScoreMethod,
    pub entries: BTreeMap<u64, f64>,
}

impl ScoreTable {
    pub fn new(method: ScoreMethod, entries: BTreeMap<u64, f64>) -> Result<Self, ScoreError> {
        if let Some((&id, _)) = entries.iter().find(|(_, v)| !v.is_finite()) {
            return Err(ScoreError::NonFiniteScore(id));
        }
        Ok(Self { method, entries })
    }

    pub fn get(&self, id: u64) -> Option<f64> {
        self.entries.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One telemetry record: a sample's target-class probability and
/// correctness at one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub id: u64,
    pub epoch: u32,
    pub p_target: f64,
    pub correct: bool,
}

/// Per-sample trajectories over epochs `0..epochs`, the same for every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryLog {
    epochs: usize,
    trajectories: BTreeMap<u64, Vec<(f64, bool)>>,
}

impl TelemetryLog {
    pub fn from_records(records: impl IntoIterator<Item = TelemetryRecord>) -> Result<Self, ScoreError> {
        let mut by_id: BTreeMap<u64, BTreeMap<u32, (f64, bool)>> = BTreeMap::new();
        for r in records {
            if !(0.0..=1.0).contains(&r.p_target) {
                return Err(ScoreError::InvalidTelemetry(format!(
                    "sample {} epoch {}: p_target {} outside [0, 1]",
                    r.id, r.epoch, r.p_target
                )));
            }
            if by_id.entry(r.id).or_default().insert(r.epoch, (r.p_target, r.correct)).is_some() {
                return Err(ScoreError::InvalidTelemetry(format!("sample {} epoch {} recorded twice", r.id, r.epoch)));
            }
        }
        let mut epochs = None;
        let mut trajectories = BTreeMap::new();
        for (id, per_epoch) in by_id {
            let n = per_epoch.len();
            if per_epoch.keys().next_back().map(|&e| e as usize + 1) != Some(n) {
                return Err(ScoreError::InvalidTelemetry(format!("sample {id}: epochs are not contiguous from 0")));
            }
            match epochs {
                None => epochs = Some(n),
                Some(e) if e != n => {
                    return Err(ScoreError::InvalidTelemetry(format!("sample {id} has {n} epochs, expected {e}")))
                }
                _ => {}
            }
            trajectories.insert(id, per_epoch.into_values().collect());
        }
        Ok(Self { epochs: epochs.unwrap_or(0), trajectories })
    }

    /// Builds a log from per-sample trajectories ordered by epoch.
    pub fn from_trajectories(trajectories: BTreeMap<u64, Vec<(f64, bool)>>) -> Result<Self, ScoreError> {
        Self::from_records(trajectories.into_iter().flat_map(|(id, traj)| {
            traj.into_iter().enumerate().map(move |(e, (p_target, correct))| TelemetryRecord {
                id,
                epoch: e as u32,
                p_target,
                correct,
            })
        }))
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn samples(&self) -> usize {
        self.trajectories.len()
    }

    pub fn trajectory(&self, id: u64) -> Option<&[(f64, bool)]> {
        self.trajectories.get(&id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[(f64, bool)])> {
        self.trajectories.iter().map(|(&id, t)| (id, t.as_slice()))
    }
}

/// EL2N: `‖p − onehot(y)‖₂`.
pub fn el2n_scores(probs: &BTreeMap<u64, Vec<f64>>, labels: &BTreeMap<u64, usize>) -> Result<ScoreTable, ScoreError> {
    let mut entries = BTreeMap::new();
    for (&id, p) in probs {
        let label = *labels.get(&id).ok_or_else(|| ScoreError::DimensionMismatch { id, reason: "no label".into() })?;
        if label >= p.len() {
            return Err(ScoreError::DimensionMismatch {
                id,
                reason: format!("label {label} out of range for {} classes", p.len()),
            });
        }
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ScoreError::NotAProbability { id, reason: format!("entry {bad}") });
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(ScoreError::NotAProbability { id, reason: format!("sums to {sum}") });
        }
        let sq: f64 = p
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let diff = if k == label { v - 1.0 } else { v };
                diff * diff
            })
            .sum();
        entries.insert(id, sq.sqrt());
    }
    if let Some(&id) = labels.keys().find(|id| !probs.contains_key(id)) {
        return Err(ScoreError::DimensionMismatch { id, reason: "label without probabilities".into() });
    }
    ScoreTable::new(ScoreMethod::El2n, entries)
}

fn forget_events(traj: &[(f64, bool)]) -> Option<u32> {
    if !traj.iter().any(|&(_, c)| c) {
        return None;
    }
    Some(traj.windows(2).filter(|w| w[0].1 && !w[1].1).count() as u32)
}

/// Forgetting: number of correct→incorrect transitions between consecutive
/// epochs. Samples never classified correctly score one more than the
/// largest count among the other samples.
pub fn forgetting_scores(log: &TelemetryLog) -> ScoreTable {
    let counts: BTreeMap<u64, Option<u32>> = log.iter().map(|(id, t)| (id, forget_events(t))).collect();
    let never_learned = counts.values().flatten().max().map_or(0, |&m| m) + 1;
    let entries = counts.into_iter().map(|(id, c)| (id, c.unwrap_or(never_learned) as f64)).collect();
    ScoreTable { method: ScoreMethod::Forgetting, entries }
}

fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let shift = xs[0];
    let (s1, s2) = xs.iter().fold((0.0, 0.0), |(a, b), x| (a + (x - shift), b + (x - shift) * (x - shift)));
    let mean = s1 / n;
    (s2 / n - mean * mean).max(0.0)
}

/// Dynamic uncertainty: the population variance of `p_target` over each
/// window of `window` consecutive epochs, averaged over all full windows.
pub fn dynunc_scores(log: &TelemetryLog, window: usize) -> Result<ScoreTable, ScoreError> {
    if window < 2 {
        return Err(ScoreError::WindowTooSmall(window));
    }
    if log.epochs() < window {
        return Err(ScoreError::WindowTooLarge { window, epochs: log.epochs() });
    }
    let mut buf = Vec::with_capacity(window);
    let entries = log
        .iter()
        .map(|(id, traj)| {
            let windows = traj.len() - window + 1;
            let total: f64 = (0..windows)
                .map(|start| {
                    buf.clear();
                    buf.extend(traj[start..start + window].iter().map(|&(p, _)| p));
                    population_variance(&buf)
                })
                .sum();
            (id, total / windows as f64)
        })
        .collect();
    Ok(ScoreTable { method: ScoreMethod::Dynunc, entries })
}

/// Elementwise mean of tables over the same samples and method.
pub fn average_scores(tables: &[ScoreTable]) -> Result<ScoreTable, ScoreError> {
    let first = tables.first().ok_or(ScoreError::NoTables)?;
    for (i, t) in tables.iter().enumerate().skip(1) {
        if t.method != first.method {
            return Err(ScoreError::KeyMismatch(format!(
                "table {i} has method {}, table 0 has {}",
                t.method, first.method
            )));
        }
        if t.entries.len() != first.entries.len() || !t.entries.keys().eq(first.entries.keys()) {
            return Err(ScoreError::KeyMismatch(format!("table {i} covers different samples than table 0")));
        }
    }
    let n = tables.len() as f64;
    let entries =
        first.entries.keys().map(|&id| (id, tables.iter().map(|t| t.entries[&id]).sum::<f64>() / n)).collect();
    ScoreTable::new(first.method, entries)
}

/// Turns a greedy selection order into scores: the `i`-th pick of `n`
/// scores `n − i`, so keeping the top `k` reproduces the first `k` picks.
pub fn selection_order_scores(order: &[u64]) -> ScoreTable {
    let n = order.len();
    let entries = order.iter().enumerate().map(|(i, &id)| (id, (n - i) as f64)).collect();
    ScoreTable { method: ScoreMethod::Kcenter, entries }
}
