//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use prunekit::mixture::{fit_erm, SampleSet1D, Threshold};
use prunekit::normal;
use prunekit::pruner::{prune_random_global, prune_random_quota, DatasetManifest, Sample};
use prunekit::quota::{drop_quotas, ClassStats};
use prunekit::rng;

/// Clamp-and-renormalize: scale weights to the remaining budget, clamp every
/// class that would exceed one, repeat until nothing new clamps.
/// `None` when the budget cannot be placed.
pub fn clamp_renormalize(sizes: &[u64], weights: &[f64], budget: f64) -> Option<Vec<f64>> {
    let k = sizes.len();
    let mut clamped = vec![false; k];
    loop {
        let fixed: f64 = (0..k).filter(|&i| clamped[i]).map(|i| sizes[i] as f64).sum();
        let mass: f64 = (0..k).filter(|&i| !clamped[i]).map(|i| sizes[i] as f64 * weights[i]).sum();
        let remaining = budget - fixed;
        if remaining <= 1e-9 * budget.max(1.0) {
            return Some((0..k).map(|i| if clamped[i] { 1.0 } else { 0.0 }).collect());
        }
        if mass <= 0.0 {
            return None;
        }
        let lambda = remaining / mass;
        let mut changed = false;
        for i in 0..k {
            if !clamped[i] && lambda * weights[i] >= 1.0 {
                clamped[i] = true;
                changed = true;
            }
        }
        if !changed {
            return Some((0..k).map(|i| if clamped[i] { 1.0 } else { lambda * weights[i] }).collect());
        }
    }
}

/// Smallest-risk threshold over `±∞` and the midpoint of every consecutive
/// pair of sorted samples, ties to the smallest.
pub fn brute_force_erm(s: &SampleSet1D) -> (Threshold, f64) {
    let mut xs = s.xs.clone();
    xs.sort_by(f64::total_cmp);
    let mut candidates = vec![f64::NEG_INFINITY, f64::INFINITY];
    candidates.extend(xs.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    let mut best = (Threshold(f64::NAN), f64::INFINITY);
    for c in candidates {
        let r = s.empirical_risk(Threshold(c));
        if r < best.1 || (r == best.1 && c < best.0 .0) {
            best = (Threshold(c), r);
        }
    }
    best
}

pub fn forgetting_oracle(correct: &[bool]) -> Option<u32> {
    if !correct.contains(&true) {
        return None;
    }
    let mut events = 0;
    for e in 1..correct.len() {
        if correct[e - 1] && !correct[e] {
            events += 1;
        }
    }
    Some(events)
}

/// Two-pass population variance of each full window, averaged.
pub fn dynunc_oracle(p: &[f64], window: usize) -> f64 {
    let count = p.len() - window + 1;
    let mut total = 0.0;
    for s in 0..count {
        let w = &p[s..s + window];
        let mean = w.iter().sum::<f64>() / window as f64;
        total += w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / window as f64;
    }
    total / count as f64
}

pub fn el2n_oracle(p: &[f64], label: usize) -> f64 {
    let mut sq = 0.0;
    for (k, &v) in p.iter().enumerate() {
        let target = if k == label { 1.0 } else { 0.0 };
        sq += (v - target) * (v - target);
    }
    sq.sqrt()
}

/// Optimal k-center radius over all `keep`-subsets of `points`.
pub fn exhaustive_kcenter_radius(points: &[Vec<f64>], keep: usize) -> f64 {
    let n = points.len();
    let dist: Vec<Vec<f64>> = points
        .iter()
        .map(|a| points.iter().map(|b| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()).collect())
        .collect();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..keep).collect();
    loop {
        let r = (0..n).map(|i| idx.iter().map(|&c| dist[i][c]).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
        best = best.min(r);
        let mut i = keep;
        while i > 0 && idx[i - 1] == i - 1 + n - keep {
            i -= 1;
        }
        if i == 0 {
            return best;
        }
        idx[i - 1] += 1;
        for j in i..keep {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// `(nΣxy − ΣxΣy) / sqrt((nΣx² − (Σx)²)(nΣy² − (Σy)²))`.
pub fn pearson_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (sx, sy) = (xs.iter().sum::<f64>(), ys.iter().sum::<f64>());
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

/// A K-class univariate Gaussian mixture with equal priors. Classes are
/// ordered by mean; a model is one cut between each adjacent pair.
pub struct LineMixture {
    pub means: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl LineMixture {
    pub fn classes(&self) -> usize {
        self.means.len()
    }

    /// `per_class` draws of every class, ids `class * per_class + i`.
    pub fn sample(&self, per_class: usize, seed: u64) -> (DatasetManifest, BTreeMap<u64, f64>) {
        let mut stream = rng::stream(seed);
        let mut samples = Vec::new();
        let mut xs = BTreeMap::new();
        for (k, (&mu, &sd)) in self.means.iter().zip(&self.sigmas).enumerate() {
            for i in 0..per_class {
                let id = (k * per_class + i) as u64;
                samples.push(Sample { sample_id: id, class_id: k as u32 });
                xs.insert(id, rng::normal(&mut stream, mu, sd));
            }
        }
        (DatasetManifest::new(samples).unwrap(), xs)
    }

    /// ERM cut between classes `k` and `k + 1` on the retained samples,
    /// cuts forced non-decreasing.
    pub fn fit(&self, man: &DatasetManifest, xs: &BTreeMap<u64, f64>, keep: &BTreeSet<u64>) -> Vec<f64> {
        let mut cuts = Vec::new();
        for k in 0..self.classes() - 1 {
            let mut set = SampleSet1D { xs: Vec::new(), ys: Vec::new(), seed: 0 };
            for s in man.samples() {
                if keep.contains(&s.sample_id) && (s.class_id as usize == k || s.class_id as usize == k + 1) {
                    set.xs.push(xs[&s.sample_id]);
                    set.ys.push((s.class_id as usize - k) as u8);
                }
            }
            let t = fit_erm(&set).0.clamp(-1e300, 1e300);
            cuts.push(t);
        }
        for i in 1..cuts.len() {
            cuts[i] = cuts[i].max(cuts[i - 1]);
        }
        cuts
    }

    /// Per-class recall of the cut model under the true distribution.
    pub fn recalls(&self, cuts: &[f64]) -> Vec<f64> {
        (0..self.classes())
            .map(|k| {
                let (mu, sd) = (self.means[k], self.sigmas[k]);
                let hi = if k + 1 < self.classes() { normal::cdf((cuts[k] - mu) / sd) } else { 1.0 };
                let lo = if k > 0 { normal::cdf((cuts[k - 1] - mu) / sd) } else { 0.0 };
                hi - lo
            })
            .collect()
    }

    /// Per-class fraction of `man` predicted correctly, where a point is
    /// predicted as the number of cuts below it.
    pub fn empirical_recalls(&self, cuts: &[f64], man: &DatasetManifest, xs: &BTreeMap<u64, f64>) -> Vec<f64> {
        let mut hits = vec![0usize; self.classes()];
        let mut totals = vec![0usize; self.classes()];
        for s in man.samples() {
            let x = xs[&s.sample_id];
            let pred = cuts.iter().filter(|&&c| x > c).count();
            totals[s.class_id as usize] += 1;
            hits[s.class_id as usize] += usize::from(pred == s.class_id as usize);
        }
        hits.iter().zip(&totals).map(|(&h, &t)| h as f64 / t as f64).collect()
    }
}

/// Worst-class recall after global random pruning and after random pruning
/// to DRoP quotas. Quotas come from the validation recalls of a model fit
/// on the full training draw.
pub fn desk_scale_trial(mix: &LineMixture, per_class: usize, density: f64, seed: u64) -> (f64, f64) {
    let (man, xs) = mix.sample(per_class, seed);
    let (val_man, val_xs) = mix.sample(per_class, seed ^ 0x5eed_0000_0000);
    let all: BTreeSet<u64> = man.ids().into_iter().collect();
    let val_recalls = mix.empirical_recalls(&mix.fit(&man, &xs, &all), &val_man, &val_xs);
    let stats: Vec<ClassStats> = val_recalls
        .iter()
        .enumerate()
        .map(|(k, &r)| ClassStats { class_id: k as u32, size: per_class as u64, recall: r })
        .collect();
    let quotas = drop_quotas(&stats, density).unwrap();

    let random = prune_random_global(&man, density, seed).unwrap();
    let drop = prune_random_quota(&man, &quotas, seed).unwrap();
    let worst = |keep: &BTreeSet<u64>| mix.recalls(&mix.fit(&man, &xs, keep)).into_iter().fold(1.0, f64::min);
    (worst(&random.retained), worst(&drop.retained))
}
