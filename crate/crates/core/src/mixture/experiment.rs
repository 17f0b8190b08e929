//! Monte-Carlo pruning experiments on the Gaussian mixture.
//!
//! Each replicate draws a dataset, prunes it with one of the arms below,
//! fits the ERM threshold on what is left, and scores that threshold under
//! the true mixture. Replicate `i` uses seed `seed + i`; sampling and
//! pruning draw from separate ChaCha streams of that seed.

use std::fmt;
use std::str::FromStr;

use super::{
    class_risks, fit_erm, optimal_class_densities, optimal_threshold, sample_mixture, ssp_margin_for_removal,
    ssp_prune_1d, worst_class_threshold, DensityRule, GaussianMixture, MixtureError, SampleSet1D, SspMode, Threshold,
};
use crate::apportion::{largest_remainder, round_count};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    /// Random pruning within classes to the variance-based optimal densities.
    VarianceQuota,
    /// Margin pruning around the class means, margin set for the target removal.
    Ssp,
    /// Random pruning within classes to the per-class counts margin pruning keeps.
    SspQuota,
    /// Random pruning within classes to the error-based (DRoP) densities.
    ErrorQuota,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::VarianceQuota, Arm::Ssp, Arm::SspQuota, Arm::ErrorQuota];

    pub fn name(self) -> &'static str {
        match self {
            Arm::VarianceQuota => "variance_quota",
            Arm::Ssp => "ssp",
            Arm::SspQuota => "ssp_quota",
            Arm::ErrorQuota => "error_quota",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Arm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown arm `{s}` (expected variance_quota, ssp, ssp_quota or error_quota)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruningExperiment {
    pub mixture: GaussianMixture,
    /// Points per dataset, split between classes by the mixture priors.
    pub points: usize,
    pub replicates: usize,
    pub density: f64,
    pub seed: u64,
    pub arm: Arm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub threshold: Threshold,
    pub retained: (usize, usize),
    pub r0: f64,
    pub r1: f64,
    pub avg_risk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub arm: Arm,
    pub mixture: GaussianMixture,
    pub replicates: Vec<ReplicateOutcome>,
    /// `T̄`, the mean ERM threshold over replicates.
    pub mean_threshold: Threshold,
    /// Average-risk minimizer of the unpruned mixture, when it exists.
    pub t_star: Option<Threshold>,
    pub t_hat: Threshold,
}

/// One CSV row `experiment,replicate,threshold,r0,r1,avg_risk`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub replicate: String,
    pub threshold: f64,
    pub r0: f64,
    pub r1: f64,
    pub avg_risk: f64,
}

impl ResultRow {
    fn at(experiment: &str, replicate: String, m: &GaussianMixture, t: Threshold) -> Self {
        let r = class_risks(m, t);
        ResultRow {
            experiment: experiment.to_string(),
            replicate,
            threshold: t.0,
            r0: r.r0,
            r1: r.r1,
            avg_risk: m.phi0 * r.r0 + m.phi1 * r.r1,
        }
    }
}

impl ExperimentResult {
    /// Per-replicate rows, then `mean`, `t_star` and `t_hat` reference rows.
    pub fn rows(&self) -> Vec<ResultRow> {
        let name = self.arm.name();
        let m = &self.mixture;
        let mut rows: Vec<ResultRow> =
            self.replicates.iter().map(|o| ResultRow::at(name, o.replicate.to_string(), m, o.threshold)).collect();
        rows.push(ResultRow::at(name, "mean".into(), m, self.mean_threshold));
        if let Some(t) = self.t_star {
            rows.push(ResultRow::at(name, "t_star".into(), m, t));
        }
        rows.push(ResultRow::at(name, "t_hat".into(), m, self.t_hat));
        rows
    }
}

/// Reference rows for the unpruned mixture: `t_star` (if it exists) and `t_hat`.
pub fn analytic_rows(m: &GaussianMixture) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    if let Ok(t) = optimal_threshold(m) {
        rows.push(ResultRow::at("analytic", "t_star".into(), m, t));
    }
    rows.push(ResultRow::at("analytic", "t_hat".into(), m, worst_class_threshold(m)));
    rows
}

/// Keeps `counts.0` random class-0 and `counts.1` random class-1 samples.
fn random_class_subset(s: &SampleSet1D, counts: (usize, usize), rng: &mut rng::StreamRng) -> SampleSet1D {
    let mut keep = Vec::with_capacity(counts.0 + counts.1);
    for (class, k) in [(0u8, counts.0), (1u8, counts.1)] {
        let mut idx = s.class_indices(class);
        keep.extend_from_slice(rng::choose_prefix(rng, &mut idx, k));
    }
    keep.sort_unstable();
    s.select(&keep)
}

fn quota_counts(n: (usize, usize), densities: (f64, f64), density: f64) -> (usize, usize) {
    let total = round_count(density * (n.0 + n.1) as f64);
    let c = largest_remainder(&[densities.0 * n.0 as f64, densities.1 * n.1 as f64], &[n.0 as u64, n.1 as u64], total);
    (c[0] as usize, c[1] as usize)
}

pub fn run_pruning_experiment(cfg: &PruningExperiment) -> Result<ExperimentResult, MixtureError> {
    let m = &cfg.mixture;
    if !(cfg.density > 0.0 && cfg.density <= 1.0) {
        return Err(MixtureError::InvalidDensity(cfg.density));
    }
    let n0 = round_count(cfg.points as f64 * m.phi0) as usize;
    let n1 = cfg.points.saturating_sub(n0);

    // Arm parameters do not depend on the draw.
    let densities = match cfg.arm {
        Arm::VarianceQuota => {
            Some(optimal_class_densities(m, n0 as u64, n1 as u64, cfg.density, DensityRule::VarianceBased)?)
        }
        Arm::ErrorQuota => {
            Some(optimal_class_densities(m, n0 as u64, n1 as u64, cfg.density, DensityRule::ErrorBased)?)
        }
        Arm::Ssp | Arm::SspQuota => None,
    };
    let margin = match cfg.arm {
        Arm::Ssp | Arm::SspQuota if cfg.density < 1.0 => {
            Some(ssp_margin_for_removal(&m.with_counts(n0 as f64, n1 as f64)?, 1.0 - cfg.density)?)
        }
        _ => None,
    };

    let mut replicates = Vec::with_capacity(cfg.replicates);
    for i in 0..cfg.replicates {
        let seed = cfg.seed.wrapping_add(i as u64);
        let data = sample_mixture(m, n0, n1, seed)?;
        let mut prune_rng = rng::substream(seed, 1);
        let pruned = match (cfg.arm, densities, margin) {
            (_, Some(d), _) => random_class_subset(&data, quota_counts((n0, n1), d, cfg.density), &mut prune_rng),
            (Arm::Ssp, None, Some(margin)) => ssp_prune_1d(&data, m, margin, SspMode::RemoveWithin)?,
            (Arm::SspQuota, None, Some(margin)) => {
                let counts = ssp_prune_1d(&data, m, margin, SspMode::RemoveWithin)?.class_counts();
                random_class_subset(&data, counts, &mut prune_rng)
            }
            _ => data.clone(),
        };
        let threshold = fit_erm(&pruned);
        let r = class_risks(m, threshold);
        replicates.push(ReplicateOutcome {
            replicate: i,
            threshold,
            retained: pruned.class_counts(),
            r0: r.r0,
            r1: r.r1,
            avg_risk: m.phi0 * r.r0 + m.phi1 * r.r1,
        });
    }

    let mean = replicates.iter().map(|o| o.threshold.0).sum::<f64>() / replicates.len().max(1) as f64;
    Ok(ExperimentResult {
        arm: cfg.arm,
        mixture: *m,
        replicates,
        mean_threshold: Threshold(mean),
        t_star: optimal_threshold(m).ok(),
        t_hat: worst_class_threshold(m),
    })
}

/// One draw of the density-ratio comparison: variance-based ratio
/// `d0/d1 = σ0 φ1 / (σ1 φ0)` against error-based `R0/R1` at `t*(φ0/φ1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSample {
    pub sigma0: f64,
    pub sigma1: f64,
    pub phi0: f64,
    pub variance_ratio: f64,
    pub error_ratio: f64,
}

/// Draws `σ0 < σ1` uniformly from `[1e−2, 1e2]` and `φ0 ~ U(0, 1)`, keeping
/// draws where `t*` exists and is the risk minimizer. Means are fixed at ∓1.
pub fn density_ratio_sweep(samples: usize, seed: u64) -> Vec<RatioSample> {
    use rand::Rng;
    let mut stream = rng::stream(seed);
    let mut out = Vec::with_capacity(samples);
    let mut attempts = 0usize;
    while out.len() < samples && attempts < samples.saturating_mul(1000).max(1000) {
        attempts += 1;
        let a: f64 = stream.gen_range(1e-2..1e2);
        let b: f64 = stream.gen_range(1e-2..1e2);
        let phi0 = rng::open_uniform(&mut stream);
        let (s0, s1) = if a < b { (a, b) } else { (b, a) };
        let Ok(m) = GaussianMixture::new(-1.0, 1.0, s0, s1, phi0, 1.0 - phi0) else { continue };
        let Ok(t) = optimal_threshold(&m) else { continue };
        let r = class_risks(&m, t);
        if r.r1 <= 0.0 {
            continue;
        }
        out.push(RatioSample {
            sigma0: s0,
            sigma1: s1,
            phi0,
            variance_ratio: s0 * (1.0 - phi0) / (s1 * phi0),
            error_ratio: r.r0 / r.r1,
        });
    }
    out
}
