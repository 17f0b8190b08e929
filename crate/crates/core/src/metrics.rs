//! Per-class recalls and classification-bias metrics.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no predictions")]
    NoPredictions,
    #[error("sample id {0} appears more than once")]
    DuplicateSample(u64),
    #[error("class {0} has no rows with that true class")]
    EmptyClass(u32),
    #[error("group {0} has no weight")]
    UnknownGroupWeight(u32),
    #[error("sample {0} has no group but group weights were given")]
    MissingGroup(u64),
    #[error("group weights must be non-negative with a positive sum")]
    InvalidWeights,
    #[error("{0} has zero variance")]
    DegenerateVariance(&'static str),
    #[error("correlation needs at least 3 classes, got {0}")]
    TooFewClasses(usize),
    #[error("class sets differ between densities and recalls")]
    KeyMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictionRow {
    pub sample_id: u64,
    pub true_class: u32,
    pub pred_class: u32,
    pub group: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    rows: Vec<PredictionRow>,
}

impl PredictionSet {
    pub fn new(rows: Vec<PredictionRow>) -> Result<Self, MetricsError> {
        let mut seen = BTreeSet::new();
        for r in &rows {
            if !seen.insert(r.sample_id) {
                return Err(MetricsError::DuplicateSample(r.sample_id));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[PredictionRow] {
        &self.rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub recalls: BTreeMap<u32, f64>,
    pub worst_class: f64,
    pub max_min_gap: f64,
    pub recall_std: f64,
    pub average: f64,
    pub weighted_average: Option<f64>,
}

/// Recalls for classes `0..K`, where `K − 1` is the largest class index seen
/// as either a true or a predicted label; every such class needs at least
/// one row. `average` is the overall fraction correct. With `weights`,
/// `weighted_average = Σ_g w_g · acc_g / Σ_g w_g` over the groups present.
pub fn evaluate(preds: &PredictionSet, weights: Option<&BTreeMap<u32, f64>>) -> Result<EvalReport, MetricsError> {
    let rows = preds.rows();
    if rows.is_empty() {
        return Err(MetricsError::NoPredictions);
    }
    let k = rows.iter().map(|r| r.true_class.max(r.pred_class)).max().expect("non-empty") as usize + 1;
    let mut hits = vec![0u64; k];
    let mut totals = vec![0u64; k];
    for r in rows {
        totals[r.true_class as usize] += 1;
        if r.true_class == r.pred_class {
            hits[r.true_class as usize] += 1;
        }
    }
    if let Some(empty) = totals.iter().position(|&t| t == 0) {
        return Err(MetricsError::EmptyClass(empty as u32));
    }
    let recalls: BTreeMap<u32, f64> = (0..k).map(|c| (c as u32, hits[c] as f64 / totals[c] as f64)).collect();

    let values: Vec<f64> = recalls.values().copied().collect();
    let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / k as f64;
    let var = values.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / k as f64;
    let average = hits.iter().sum::<u64>() as f64 / rows.len() as f64;

    let weighted_average = weights.map(|w| group_weighted_accuracy(rows, w)).transpose()?;

    Ok(EvalReport {
        recalls,
        worst_class: worst,
        max_min_gap: best - worst,
        recall_std: var.sqrt(),
        average,
        weighted_average,
    })
}

fn group_weighted_accuracy(rows: &[PredictionRow], weights: &BTreeMap<u32, f64>) -> Result<f64, MetricsError> {
    let mut per_group: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    for r in rows {
        let g = r.group.ok_or(MetricsError::MissingGroup(r.sample_id))?;
        let e = per_group.entry(g).or_insert((0, 0));
        e.1 += 1;
        if r.true_class == r.pred_class {
            e.0 += 1;
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&g, &(hit, total)) in &per_group {
        let w = *weights.get(&g).ok_or(MetricsError::UnknownGroupWeight(g))?;
        if !(w >= 0.0) || !w.is_finite() {
            return Err(MetricsError::InvalidWeights);
        }
        num += w * hit as f64 / total as f64;
        den += w;
    }
    if !(den > 0.0) {
        return Err(MetricsError::InvalidWeights);
    }
    Ok(num / den)
}

/// Pearson correlation across classes between retention density and the
/// recall of a model trained on the full data.
pub fn correlation_density_accuracy(
    densities: &BTreeMap<u32, f64>,
    base_recalls: &BTreeMap<u32, f64>,
) -> Result<f64, MetricsError> {
    if !densities.keys().eq(base_recalls.keys()) {
        return Err(MetricsError::KeyMismatch);
    }
    if densities.len() < 3 {
        return Err(MetricsError::TooFewClasses(densities.len()));
    }
    let xs: Vec<f64> = densities.values().copied().collect();
    let ys: Vec<f64> = base_recalls.values().copied().collect();
    pearson(&xs, &ys)
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(MetricsError::DegenerateVariance("densities"));
    }
    if syy == 0.0 {
        return Err(MetricsError::DegenerateVariance("recalls"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
