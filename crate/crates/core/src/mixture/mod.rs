//! Two-class univariate Gaussian mixture with threshold classifiers.
//!
//! Class `y` has density `N(μ_y, σ_y²)` and prior `φ_y`, with `μ0 < μ1` and
//! `σ0 ≤ σ1`. A threshold `t` predicts class 1 when `x > t`. Everything in
//! this module is closed form; Monte-Carlo counterparts live in [`sample`]
//! and [`experiment`].

pub mod experiment;
pub mod sample;

use std::fmt;

use thiserror::Error;

use crate::normal;
use crate::quota::saturating_proportional;

pub use sample::{fit_erm, sample_mixture, ssp_prune_1d, SampleSet1D, SspMode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixtureError {
    #[error("invalid mixture: {0}")]
    Invalid(&'static str),
    #[error("no intersection of the scaled class densities (discriminant {discriminant})")]
    ExistenceViolated { discriminant: f64 },
    #[error("stationary point {stationary} is not the global risk minimizer")]
    NotGlobalMinimum { stationary: f64 },
    #[error("means are not separated enough for the worst-class optimal priors (slack {slack})")]
    SeparationViolated { slack: f64 },
    #[error("class {0} has no samples left")]
    EmptyClass(u8),
    #[error("margin must be positive, got {0}")]
    InvalidMargin(f64),
    #[error("density {0} is outside (0, 1]")]
    InvalidDensity(f64),
    #[error("mean vector is zero")]
    ZeroMeanVector,
    #[error("class counts must be at least one")]
    EmptySample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMixture {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub phi0: f64,
    pub phi1: f64,
}

impl GaussianMixture {
    pub fn new(mu0: f64, mu1: f64, sigma0: f64, sigma1: f64, phi0: f64, phi1: f64) -> Result<Self, MixtureError> {
        let all_finite = [mu0, mu1, sigma0, sigma1, phi0, phi1].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(MixtureError::Invalid("parameters must be finite"));
        }
        if !(mu0 < mu1) {
            return Err(MixtureError::Invalid("mu0 must be below mu1"));
        }
        if !(sigma0 > 0.0 && sigma1 > 0.0) {
            return Err(MixtureError::Invalid("standard deviations must be positive"));
        }
        if sigma0 > sigma1 {
            return Err(MixtureError::Invalid("sigma0 must not exceed sigma1"));
        }
        if !(phi0 > 0.0 && phi0 < 1.0 && phi1 > 0.0 && phi1 < 1.0) {
            return Err(MixtureError::Invalid("priors must lie in (0, 1)"));
        }
        if (phi0 + phi1 - 1.0).abs() > 1e-12 {
            return Err(MixtureError::Invalid("priors must sum to one"));
        }
        Ok(Self { mu0, mu1, sigma0, sigma1, phi0, phi1 })
    }

    /// Equal priors.
    pub fn balanced(mu0: f64, mu1: f64, sigma0: f64, sigma1: f64) -> Result<Self, MixtureError> {
        Self::new(mu0, mu1, sigma0, sigma1, 0.5, 0.5)
    }

    /// Same class conditionals, priors `(phi0, 1 − phi0)`.
    pub fn with_priors(&self, phi0: f64) -> Result<Self, MixtureError> {
        Self::new(self.mu0, self.mu1, self.sigma0, self.sigma1, phi0, 1.0 - phi0)
    }

    /// Same class conditionals, priors proportional to `(n0, n1)`.
    pub fn with_counts(&self, n0: f64, n1: f64) -> Result<Self, MixtureError> {
        self.with_priors(n0 / (n0 + n1))
    }

    pub fn mean(&self, class: u8) -> f64 {
        if class == 0 {
            self.mu0
        } else {
            self.mu1
        }
    }

    pub fn sigma(&self, class: u8) -> f64 {
        if class == 0 {
            self.sigma0
        } else {
            self.sigma1
        }
    }
}

/// Decision threshold on the extended real line; predicts 1 when `x > t`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Threshold(pub f64);

impl Threshold {
    pub const NEG_INFINITY: Threshold = Threshold(f64::NEG_INFINITY);
    pub const INFINITY: Threshold = Threshold(f64::INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn predict(self, x: f64) -> u8 {
        u8::from(x > self.0)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Class-conditional 0-1 risks `(R0, R1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskPair {
    pub r0: f64,
    pub r1: f64,
}

impl RiskPair {
    pub fn worst(&self) -> f64 {
        self.r0.max(self.r1)
    }
}

/// `R0(t) = Φ((μ0 − t)/σ0)`, `R1(t) = Φ((t − μ1)/σ1)`.
pub fn class_risks(m: &GaussianMixture, t: Threshold) -> RiskPair {
    RiskPair { r0: normal::cdf((m.mu0 - t.0) / m.sigma0), r1: normal::cdf((t.0 - m.mu1) / m.sigma1) }
}

/// Prior-weighted risk `φ0 R0(t) + φ1 R1(t)`.
pub fn average_risk(m: &GaussianMixture, t: Threshold) -> f64 {
    let r = class_risks(m, t);
    m.phi0 * r.r0 + m.phi1 * r.r1
}

/// The average-risk minimizer `t*(φ0/φ1)`.
///
/// For `σ0 < σ1` this is the larger root of `∂R/∂t = 0`; the root is taken
/// in the cancellation-free form. It must exist (non-negative discriminant)
/// and must beat the trivial rule `t = −∞`, otherwise the stationary point
/// is reported in [`MixtureError::NotGlobalMinimum`]. For `σ0 = σ1` the
/// equation is linear and its single root is always the minimizer.
pub fn optimal_threshold(m: &GaussianMixture) -> Result<Threshold, MixtureError> {
    let (mu0, mu1, s0, s1) = (m.mu0, m.mu1, m.sigma0, m.sigma1);
    let log_ratio = (m.phi0 * s1 / (m.phi1 * s0)).ln();

    if s0 == s1 {
        let t = (2.0 * s0 * s0 * (m.phi0 / m.phi1).ln() + (mu1 * mu1 - mu0 * mu0)) / (2.0 * (mu1 - mu0));
        return Ok(Threshold(t));
    }

    let (v0, v1) = (s0 * s0, s1 * s1);
    let discriminant = (mu0 - mu1).powi(2) + 2.0 * (v1 - v0) * log_ratio;
    if discriminant < 0.0 {
        return Err(MixtureError::ExistenceViolated { discriminant });
    }
    // Roots of a t² − 2 h t + c = 0 are (h ± s)/a.
    let a = v1 - v0;
    let h = mu0 * v1 - mu1 * v0;
    let c = mu0 * mu0 * v1 - mu1 * mu1 * v0 - 2.0 * log_ratio * v0 * v1;
    let s = s0 * s1 * discriminant.sqrt();
    let t = if h >= 0.0 { (h + s) / a } else { c / (h - s) };

    // R(−∞) = φ0 must not beat R(t): φ0 Φ((t − μ0)/σ0) > φ1 Φ((t − μ1)/σ1).
    let lhs = m.phi0 * normal::cdf((t - mu0) / s0);
    let rhs = m.phi1 * normal::cdf((t - mu1) / s1);
    if lhs > rhs {
        Ok(Threshold(t))
    } else {
        Err(MixtureError::NotGlobalMinimum { stationary: t })
    }
}

/// The worst-class threshold `t̂ = (μ0 σ1 + μ1 σ0)/(σ0 + σ1)`, where the two
/// class risks coincide.
pub fn worst_class_threshold(m: &GaussianMixture) -> Threshold {
    Threshold((m.mu0 * m.sigma1 + m.mu1 * m.sigma0) / (m.sigma0 + m.sigma1))
}

/// Priors `(σ0, σ1)/(σ0 + σ1)` under which the average-risk minimizer is the
/// worst-class threshold. Requires `μ1 − μ0 > (σ0 + σ1) Φ⁻¹(σ1/(σ0 + σ1))`.
pub fn worst_class_optimal_priors(m: &GaussianMixture) -> Result<(f64, f64), MixtureError> {
    let total = m.sigma0 + m.sigma1;
    let phi1 = m.sigma1 / total;
    let slack = (m.mu1 - m.mu0) - total * normal::quantile(phi1);
    if slack > 0.0 {
        Ok((m.sigma0 / total, phi1))
    } else {
        Err(MixtureError::SeparationViolated { slack })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityRule {
    /// `d0 N0 σ1 = d1 N1 σ0`.
    VarianceBased,
    /// `d0 R1[t*(N0/N1)] = d1 R0[t*(N0/N1)]`.
    ErrorBased,
}

/// Per-class retention densities for a dataset of `n0 + n1` points pruned to
/// overall density `d`. Densities above one are capped and the excess moved
/// to the other class, as the quota allocator does.
pub fn optimal_class_densities(
    m: &GaussianMixture,
    n0: u64,
    n1: u64,
    d: f64,
    rule: DensityRule,
) -> Result<(f64, f64), MixtureError> {
    if n0 == 0 || n1 == 0 {
        return Err(MixtureError::EmptySample);
    }
    if !(d > 0.0 && d <= 1.0) {
        return Err(MixtureError::InvalidDensity(d));
    }
    // Densities are proportional to these weights.
    let (w0, w1) = match rule {
        DensityRule::VarianceBased => (m.sigma0 / n0 as f64, m.sigma1 / n1 as f64),
        DensityRule::ErrorBased => {
            let prior = m.with_counts(n0 as f64, n1 as f64)?;
            let risks = class_risks(&prior, optimal_threshold(&prior)?);
            (risks.r0, risks.r1)
        }
    };
    let budget = d * (n0 + n1) as f64;
    let fill = saturating_proportional(&[n0, n1], &[w0, w1], budget).map_err(|_| MixtureError::InvalidDensity(d))?;
    Ok((fill.densities[0], fill.densities[1]))
}

/// Reduces two isotropic Gaussians centred at `∓mu` to the univariate
/// mixture seen along the projection `w = mu/‖mu‖`, i.e. means `∓‖mu‖`.
pub fn reduce_isotropic(mu: &[f64], sigma0: f64, sigma1: f64, phi0: f64) -> Result<GaussianMixture, MixtureError> {
    let norm = mu.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(MixtureError::ZeroMeanVector);
    }
    GaussianMixture::new(-norm, norm, sigma0, sigma1, phi0, 1.0 - phi0)
}

/// Margin `M` at which margin pruning removes `target` of the mixture mass:
/// `φ0 (2Φ(M/σ0) − 1) + φ1 (2Φ(M/σ1) − 1) = target`. Solved by bisection.
pub fn ssp_margin_for_removal(m: &GaussianMixture, target: f64) -> Result<f64, MixtureError> {
    if !(target > 0.0 && target < 1.0) {
        return Err(MixtureError::InvalidDensity(target));
    }
    let removed = |margin: f64| {
        m.phi0 * (2.0 * normal::cdf(margin / m.sigma0) - 1.0) + m.phi1 * (2.0 * normal::cdf(margin / m.sigma1) - 1.0)
    };
    let (mut lo, mut hi) = (0.0, m.sigma1);
    while removed(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if removed(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Expected fraction of a class with standard deviation `sigma` that margin
/// pruning removes: `2Φ(M/σ) − 1`.
pub fn ssp_removed_mass(margin: f64, sigma: f64) -> f64 {
    2.0 * normal::cdf(margin / sigma) - 1.0
}
