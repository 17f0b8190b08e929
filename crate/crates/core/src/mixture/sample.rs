//! Finite samples from a mixture, empirical risk minimization and margin
//! pruning.

use super::{GaussianMixture, MixtureError, Threshold};
use crate::rng;

/// Labelled univariate sample. `ys[i]` is 0 or 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet1D {
    pub xs: Vec<f64>,
    pub ys: Vec<u8>,
    pub seed: u64,
}

impl SampleSet1D {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.ys.iter().filter(|&&y| y == 1).count();
        (self.ys.len() - ones, ones)
    }

    /// Indices of samples in `class`, in sample order.
    pub fn class_indices(&self, class: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.ys[i] == class).collect()
    }

    /// Keeps the samples at `indices` (in the given order).
    pub fn select(&self, indices: &[usize]) -> SampleSet1D {
        SampleSet1D {
            xs: indices.iter().map(|&i| self.xs[i]).collect(),
            ys: indices.iter().map(|&i| self.ys[i]).collect(),
            seed: self.seed,
        }
    }

    /// Fraction of samples misclassified by `t`.
    pub fn empirical_risk(&self, t: Threshold) -> f64 {
        let errors = self.xs.iter().zip(&self.ys).filter(|&(&x, &y)| t.predict(x) != y).count();
        errors as f64 / self.len() as f64
    }
}

/// Draws `n0` points from class 0 followed by `n1` points from class 1 with
/// a stream seeded by `seed`.
pub fn sample_mixture(m: &GaussianMixture, n0: usize, n1: usize, seed: u64) -> Result<SampleSet1D, MixtureError> {
    if n0 == 0 || n1 == 0 {
        return Err(MixtureError::EmptySample);
    }
    let mut stream = rng::stream(seed);
    let mut xs = Vec::with_capacity(n0 + n1);
    let mut ys = Vec::with_capacity(n0 + n1);
    for (class, n) in [(0u8, n0), (1u8, n1)] {
        for _ in 0..n {
            xs.push(rng::normal(&mut stream, m.mean(class), m.sigma(class)));
            ys.push(class);
        }
    }
    Ok(SampleSet1D { xs, ys, seed })
}

/// Threshold minimizing the empirical 0-1 risk of `1{x > t}`.
///
/// Candidates are `−∞`, `+∞` and the midpoints of consecutive sorted
/// samples; among candidates with equal risk the smallest wins. The risk is
/// constant on each interval between distinct sample values, so one sweep
/// over the distinct values suffices.
pub fn fit_erm(s: &SampleSet1D) -> Threshold {
    let mut points: Vec<(f64, u8)> = s.xs.iter().copied().zip(s.ys.iter().copied()).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));

    // At t = −∞ every class-0 point is an error.
    let mut errors = points.iter().filter(|p| p.1 == 0).count();
    let mut best = (errors, f64::NEG_INFINITY);

    let mut i = 0;
    while i < points.len() {
        let value = points[i].0;
        let mut j = i;
        while j < points.len() && points[j].0 == value {
            // This point moves to the predict-0 side.
            if points[j].1 == 0 {
                errors -= 1;
            } else {
                errors += 1;
            }
            j += 1;
        }
        // Smallest candidate in [value, next): `value` itself when it is the
        // midpoint of a duplicated pair, otherwise the midpoint to the next
        // value (or +∞ past the end).
        let candidate = if j - i >= 2 {
            value
        } else if j < points.len() {
            0.5 * (value + points[j].0)
        } else {
            f64::INFINITY
        };
        if errors < best.0 {
            best = (errors, candidate);
        }
        i = j;
    }
    Threshold(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SspMode {
    /// Drop samples within the margin of their class mean.
    RemoveWithin,
    /// Keep only samples within the margin.
    KeepWithin,
}

/// Margin pruning with the mixture means as class prototypes: a sample `x`
/// of class `y` is "within" when `|x − μ_y| ≤ margin`.
pub fn ssp_prune_1d(
    s: &SampleSet1D,
    m: &GaussianMixture,
    margin: f64,
    mode: SspMode,
) -> Result<SampleSet1D, MixtureError> {
    if !(margin > 0.0) {
        return Err(MixtureError::InvalidMargin(margin));
    }
    let keep: Vec<usize> = (0..s.len())
        .filter(|&i| {
            let within = (s.xs[i] - m.mean(s.ys[i])).abs() <= margin;
            match mode {
                SspMode::RemoveWithin => !within,
                SspMode::KeepWithin => within,
            }
        })
        .collect();
    let out = s.select(&keep);
    let (c0, c1) = out.class_counts();
    let (in0, in1) = s.class_counts();
    if c0 == 0 && in0 > 0 {
        return Err(MixtureError::EmptyClass(0));
    }
    if c1 == 0 && in1 > 0 {
        return Err(MixtureError::EmptyClass(1));
    }
    Ok(out)
}
