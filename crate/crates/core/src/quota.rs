//! DRoP quota allocation and CDB-W class weights.
//!
//! Given per-class sizes `N_k` and validation recalls `r_k`, DRoP retains a
//! fraction `d_k ∝ 1 − r_k` of each class, scaled so that `Σ d_k N_k = d N`.
//! Classes whose density would exceed one are kept whole and their excess is
//! spread over the remaining classes in the same proportions, which repeats
//! until no excess is left.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apportion::{largest_remainder, round_count};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub class_id: u32,
    pub size: u64,
    pub recall: f64,
}

/// Per-class retention produced by an allocator (or measured from a plan).
#[derive(Debug, Clone, PartialEq)]
pub struct QuotaAllocation {
    pub densities: BTreeMap<u32, f64>,
    pub target_counts: BTreeMap<u32, u64>,
    pub requested_density: f64,
}

impl QuotaAllocation {
    pub fn total_count(&self) -> u64 {
        self.target_counts.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuotaError {
    #[error("no classes given")]
    NoClasses,
    #[error("class {0} listed more than once")]
    DuplicateClass(u32),
    #[error("class {0} has size 0")]
    EmptyClass(u32),
    #[error("recall {recall} of class {class_id} is outside [0, 1]")]
    InvalidRecall { class_id: u32, recall: f64 },
    #[error("density {0} is outside (0, 1]")]
    InvalidDensity(f64),
    #[error("target size d·N = {0} is below one sample")]
    TargetTooSmall(f64),
    #[error("density {density} cannot be met: {unplaced} samples left over with no class able to absorb them")]
    InfeasibleDensity { density: f64, unplaced: f64 },
    #[error("every class has recall 1, so DRoP assigns no class any mass")]
    AllPerfectRecall,
}

/// Result of the saturating proportional allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Waterfill {
    pub densities: Vec<f64>,
    /// Number of passes of the outer loop.
    pub passes: usize,
}

/// Distributes `budget` samples over classes of the given `sizes` so that
/// class densities are proportional to `weights`, capping densities at one.
///
/// This is the DRoP loop with `weights[k] = 1 − r_k` and `budget = d N`: each
/// pass computes `Z = Σ_{k∈U} N_k w_k / E`, adds `w_k / Z` to every
/// unsaturated density, and returns the overflow of classes that crossed one
/// to the excess `E`. Classes with zero weight never receive mass.
pub fn saturating_proportional(sizes: &[u64], weights: &[f64], budget: f64) -> Result<Waterfill, QuotaError> {
    assert_eq!(sizes.len(), weights.len());
    let k = sizes.len();
    let total: f64 = sizes.iter().map(|&n| n as f64).sum();
    let tolerance = 1e-12 * total.max(1.0);

    let mut densities = vec![0.0; k];
    let mut unsaturated: Vec<usize> = (0..k).collect();
    let mut excess = budget;
    let mut passes = 0;

    while excess > tolerance {
        let mass: f64 = unsaturated.iter().map(|&i| sizes[i] as f64 * weights[i]).sum();
        if unsaturated.is_empty() || mass <= 0.0 {
            return Err(if weights.iter().all(|&w| w <= 0.0) {
                QuotaError::AllPerfectRecall
            } else {
                QuotaError::InfeasibleDensity { density: budget / total, unplaced: excess }
            });
        }
        passes += 1;
        let z = mass / excess;
        let snapshot = unsaturated.clone();
        for i in snapshot {
            let step = weights[i] / z;
            densities[i] += step;
            excess -= sizes[i] as f64 * step;
            if densities[i] > 1.0 {
                unsaturated.retain(|&j| j != i);
                excess += sizes[i] as f64 * (densities[i] - 1.0);
                densities[i] = 1.0;
            }
        }
    }
    Ok(Waterfill { densities, passes })
}

fn validate(stats: &[ClassStats], density: f64) -> Result<(), QuotaError> {
    if stats.is_empty() {
        return Err(QuotaError::NoClasses);
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(QuotaError::InvalidDensity(density));
    }
    let mut seen = BTreeSet::new();
    for s in stats {
        if !seen.insert(s.class_id) {
            return Err(QuotaError::DuplicateClass(s.class_id));
        }
        if s.size == 0 {
            return Err(QuotaError::EmptyClass(s.class_id));
        }
        if !(0.0..=1.0).contains(&s.recall) {
            return Err(QuotaError::InvalidRecall { class_id: s.class_id, recall: s.recall });
        }
    }
    Ok(())
}

/// DRoP quotas with no per-class floor.
pub fn drop_quotas(stats: &[ClassStats], density: f64) -> Result<QuotaAllocation, QuotaError> {
    drop_quotas_with_floor(stats, density, 0)
}

/// DRoP quotas where every class keeps at least `min(min_per_class, N_k)`
/// samples. The floor is reserved first and the remaining budget is
/// allocated over the remaining capacity; a floor of zero is the plain
/// algorithm.
pub fn drop_quotas_with_floor(
    stats: &[ClassStats],
    density: f64,
    min_per_class: u64,
) -> Result<QuotaAllocation, QuotaError> {
    validate(stats, density)?;
    let n_total: u64 = stats.iter().map(|s| s.size).sum();
    let target = density * n_total as f64;
    if target < 1.0 {
        return Err(QuotaError::TargetTooSmall(target));
    }

    let densities: Vec<f64> = if density == 1.0 {
        vec![1.0; stats.len()]
    } else {
        let reserved: Vec<u64> = stats.iter().map(|s| s.size.min(min_per_class)).collect();
        let reserved_total: u64 = reserved.iter().sum();
        let budget = target - reserved_total as f64;
        if budget < 0.0 {
            return Err(QuotaError::InfeasibleDensity { density, unplaced: -budget });
        }
        let residual: Vec<u64> = stats.iter().zip(&reserved).map(|(s, &r)| s.size - r).collect();
        let weights: Vec<f64> = stats.iter().map(|s| 1.0 - s.recall).collect();
        let fill = saturating_proportional(&residual, &weights, budget)?;
        stats
            .iter()
            .zip(&reserved)
            .zip(&fill.densities)
            .map(|((s, &r), &d)| (r as f64 + d * (s.size - r) as f64) / s.size as f64)
            .collect()
    };

    Ok(to_allocation(stats, &densities, density))
}

/// Builds an allocation from fractional densities, apportioning counts so
/// they sum to `round(d N)`.
pub(crate) fn to_allocation(stats: &[ClassStats], densities: &[f64], density: f64) -> QuotaAllocation {
    let n_total: u64 = stats.iter().map(|s| s.size).sum();
    let total = round_count(density * n_total as f64).min(n_total);
    let exact: Vec<f64> = stats.iter().zip(densities).map(|(s, &d)| d * s.size as f64).collect();
    let caps: Vec<u64> = stats.iter().map(|s| s.size).collect();

    // Apportion in class-id order so remainder ties go to the lower id.
    let mut order: Vec<usize> = (0..stats.len()).collect();
    order.sort_by_key(|&i| stats[i].class_id);
    let exact_sorted: Vec<f64> = order.iter().map(|&i| exact[i]).collect();
    let caps_sorted: Vec<u64> = order.iter().map(|&i| caps[i]).collect();
    let counts = largest_remainder(&exact_sorted, &caps_sorted, total);

    QuotaAllocation {
        densities: stats.iter().zip(densities).map(|(s, &d)| (s.class_id, d)).collect(),
        target_counts: order.iter().zip(counts).map(|(&i, c)| (stats[i].class_id, c)).collect(),
        requested_density: density,
    }
}

/// CDB-W class weights `w_k = 1 − r_k`, unnormalized. Recalls are expected in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdbwWeights {
    pub weights: BTreeMap<u32, f64>,
}

pub fn cdbw_weights(recalls: &BTreeMap<u32, f64>) -> CdbwWeights {
    CdbwWeights { weights: recalls.iter().map(|(&k, &r)| (k, 1.0 - r)).collect() }
}
