//! Retention plans.
//!
//! A plan is the set of sample ids kept after pruning. Random plans are a
//! pure function of `(manifest, parameters, seed)`: candidates are visited
//! in ascending id order, so the row order of the manifest file does not
//! matter. Score plans keep the highest scores and break ties toward the
//! lower sample id.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::apportion::round_count;
use crate::quota::{to_allocation, ClassStats, QuotaAllocation};
use crate::rng;
use crate::scoring::ScoreTable;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PruneError {
    #[error("sample id {0} appears more than once in the manifest")]
    DuplicateSample(u64),
    #[error("manifest is empty")]
    EmptyManifest,
    #[error("density {0} is outside (0, 1]")]
    InvalidDensity(f64),
    #[error("no scores for {count} manifest samples (first: {first})")]
    MissingScores { first: u64, count: usize },
    #[error("quotas do not cover class {0}")]
    QuotaClassMissing(u32),
    #[error("class {class_id} has {size} samples but its quota asks for {target}")]
    QuotaExceedsClass { class_id: u32, size: u64, target: u64 },
    #[error("imbalance injection needs equal class sizes, found {0:?}")]
    NotBalanced(Vec<u64>),
    #[error("imbalance injection needs at least two classes")]
    TooFewClasses,
    #[error("imbalance factor must be at least 1, got {0}")]
    InvalidFactor(f64),
    #[error("class {0} would be left with no samples")]
    DegenerateClass(u32),
    #[error("plan keeps sample {0}, which is not in the manifest")]
    UnknownSample(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sample {
    pub sample_id: u64,
    pub class_id: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    samples: Vec<Sample>,
}

impl DatasetManifest {
    pub fn new(samples: Vec<Sample>) -> Result<Self, PruneError> {
        let mut seen = BTreeSet::new();
        for s in &samples {
            if !seen.insert(s.sample_id) {
                return Err(PruneError::DuplicateSample(s.sample_id));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_sizes(&self) -> BTreeMap<u32, u64> {
        let mut sizes = BTreeMap::new();
        for s in &self.samples {
            *sizes.entry(s.class_id).or_insert(0) += 1;
        }
        sizes
    }

    /// Sample ids of each class, ascending.
    pub fn class_members(&self) -> BTreeMap<u32, Vec<u64>> {
        let mut members: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
        for s in &self.samples {
            members.entry(s.class_id).or_default().push(s.sample_id);
        }
        for ids in members.values_mut() {
            ids.sort_unstable();
        }
        members
    }

    pub fn ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.samples.iter().map(|s| s.sample_id).collect();
        ids.sort_unstable();
        ids
    }

    /// Manifest restricted to `keep`, in the original row order.
    pub fn restrict(&self, keep: &BTreeSet<u64>) -> DatasetManifest {
        DatasetManifest { samples: self.samples.iter().filter(|s| keep.contains(&s.sample_id)).copied().collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneMethod {
    Random,
    RandomQuota,
    Score,
    ScoreQuota,
}

impl PruneMethod {
    pub fn name(self) -> &'static str {
        match self {
            PruneMethod::Random => "random",
            PruneMethod::RandomQuota => "random-quota",
            PruneMethod::Score => "score",
            PruneMethod::ScoreQuota => "score-quota",
        }
    }
}

impl fmt::Display for PruneMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PruneMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "random" => PruneMethod::Random,
            "random-quota" => PruneMethod::RandomQuota,
            "score" => PruneMethod::Score,
            "score-quota" => PruneMethod::ScoreQuota,
            other => return Err(format!("unknown prune method `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrunePlan {
    pub retained: BTreeSet<u64>,
    pub method: String,
    pub density: f64,
    pub seed: Option<u64>,
}

impl PrunePlan {
    pub fn len(&self) -> usize {
        self.retained.len()
    }

    pub fn is_empty(&self) -> bool {
        self.retained.is_empty()
    }
}

fn check_density(d: f64) -> Result<(), PruneError> {
    if d > 0.0 && d <= 1.0 {
        Ok(())
    } else {
        Err(PruneError::InvalidDensity(d))
    }
}

fn global_target(man: &DatasetManifest, d: f64) -> usize {
    round_count(d * man.len() as f64).min(man.len() as u64) as usize
}

/// Uniformly random subset of size `round(d N)`.
pub fn prune_random_global(man: &DatasetManifest, d: f64, seed: u64) -> Result<PrunePlan, PruneError> {
    check_density(d)?;
    let mut ids = man.ids();
    let mut stream = rng::stream(seed);
    let retained = rng::choose_prefix(&mut stream, &mut ids, global_target(man, d)).iter().copied().collect();
    Ok(PrunePlan { retained, method: PruneMethod::Random.name().into(), density: d, seed: Some(seed) })
}

fn class_targets(
    man: &DatasetManifest,
    quotas: &QuotaAllocation,
) -> Result<BTreeMap<u32, (Vec<u64>, u64)>, PruneError> {
    let mut out = BTreeMap::new();
    for (class_id, ids) in man.class_members() {
        let target = *quotas.target_counts.get(&class_id).ok_or(PruneError::QuotaClassMissing(class_id))?;
        if target > ids.len() as u64 {
            return Err(PruneError::QuotaExceedsClass { class_id, size: ids.len() as u64, target });
        }
        out.insert(class_id, (ids, target));
    }
    Ok(out)
}

/// Uniformly random subset of `target_counts[k]` samples within each class.
pub fn prune_random_quota(man: &DatasetManifest, quotas: &QuotaAllocation, seed: u64) -> Result<PrunePlan, PruneError> {
    let targets = class_targets(man, quotas)?;
    let mut stream = rng::stream(seed);
    let mut retained = BTreeSet::new();
    for (_, (mut ids, target)) in targets {
        retained.extend(rng::choose_prefix(&mut stream, &mut ids, target as usize).iter().copied());
    }
    let density = retained.len() as f64 / man.len().max(1) as f64;
    Ok(PrunePlan { retained, method: PruneMethod::RandomQuota.name().into(), density, seed: Some(seed) })
}

fn require_scores(ids: impl IntoIterator<Item = u64>, scores: &ScoreTable) -> Result<(), PruneError> {
    let missing: Vec<u64> = ids.into_iter().filter(|id| scores.get(*id).is_none()).collect();
    match missing.first() {
        Some(&first) => Err(PruneError::MissingScores { first, count: missing.len() }),
        None => Ok(()),
    }
}

/// The `k` best ids by score, ties to the lower id.
fn top_k(ids: &[u64], scores: &ScoreTable, k: usize) -> Vec<u64> {
    let mut ranked: Vec<(f64, u64)> = ids.iter().map(|&id| (scores.entries[&id], id)).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().take(k).map(|(_, id)| id).collect()
}

/// Keeps the `round(d N)` highest-scored samples.
pub fn prune_score_global(man: &DatasetManifest, scores: &ScoreTable, d: f64) -> Result<PrunePlan, PruneError> {
    check_density(d)?;
    let ids = man.ids();
    require_scores(ids.iter().copied(), scores)?;
    let retained = top_k(&ids, scores, global_target(man, d)).into_iter().collect();
    Ok(PrunePlan { retained, method: PruneMethod::Score.name().into(), density: d, seed: None })
}

/// Keeps the `target_counts[k]` highest-scored samples of each class.
pub fn prune_score_quota(
    man: &DatasetManifest,
    scores: &ScoreTable,
    quotas: &QuotaAllocation,
) -> Result<PrunePlan, PruneError> {
    require_scores(man.ids(), scores)?;
    let targets = class_targets(man, quotas)?;
    let mut retained = BTreeSet::new();
    for (_, (ids, target)) in targets {
        retained.extend(top_k(&ids, scores, target as usize));
    }
    let density = retained.len() as f64 / man.len().max(1) as f64;
    Ok(PrunePlan { retained, method: PruneMethod::ScoreQuota.name().into(), density, seed: None })
}

/// The per-class retention a plan realizes.
pub fn extract_quotas(plan: &PrunePlan, man: &DatasetManifest) -> Result<QuotaAllocation, PruneError> {
    let known: BTreeSet<u64> = man.samples().iter().map(|s| s.sample_id).collect();
    if let Some(&id) = plan.retained.iter().find(|id| !known.contains(id)) {
        return Err(PruneError::UnknownSample(id));
    }
    let mut kept: BTreeMap<u32, u64> = man.class_sizes().keys().map(|&k| (k, 0)).collect();
    for s in man.samples() {
        if plan.retained.contains(&s.sample_id) {
            *kept.get_mut(&s.class_id).expect("class present") += 1;
        }
    }
    let sizes = man.class_sizes();
    Ok(QuotaAllocation {
        densities: kept.iter().map(|(&k, &c)| (k, c as f64 / sizes[&k] as f64)).collect(),
        target_counts: kept,
        requested_density: plan.retained.len() as f64 / man.len().max(1) as f64,
    })
}

/// Quotas that keep every class whole.
pub fn full_quotas(man: &DatasetManifest) -> QuotaAllocation {
    let stats: Vec<ClassStats> =
        man.class_sizes().into_iter().map(|(class_id, size)| ClassStats { class_id, size, recall: 0.0 }).collect();
    to_allocation(&stats, &vec![1.0; stats.len()], 1.0)
}

/// Makes a balanced dataset long-tailed: with `μ = I^{−1/(K−1)}`, the `k`-th
/// class in ascending id order (1-based) keeps a random `round(μ^{k−1} N_k)`
/// of its samples, so the largest-to-smallest size ratio is `I`.
pub fn inject_imbalance(man: &DatasetManifest, factor: f64, seed: u64) -> Result<DatasetManifest, PruneError> {
    if !(factor >= 1.0) || !factor.is_finite() {
        return Err(PruneError::InvalidFactor(factor));
    }
    let members = man.class_members();
    if members.len() < 2 {
        return Err(PruneError::TooFewClasses);
    }
    let sizes: Vec<u64> = members.values().map(|ids| ids.len() as u64).collect();
    if sizes.windows(2).any(|w| w[0] != w[1]) {
        return Err(PruneError::NotBalanced(sizes));
    }
    let last = (members.len() - 1) as f64;
    let mut stream = rng::stream(seed);
    let mut keep = BTreeSet::new();
    for (k, (class_id, mut ids)) in members.into_iter().enumerate() {
        let target = round_count(factor.powf(-(k as f64) / last) * ids.len() as f64) as usize;
        if target == 0 {
            return Err(PruneError::DegenerateClass(class_id));
        }
        keep.extend(rng::choose_prefix(&mut stream, &mut ids, target).iter().copied());
    }
    Ok(man.restrict(&keep))
}
