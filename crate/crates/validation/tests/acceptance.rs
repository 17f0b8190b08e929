//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prunekit::metrics::{correlation_density_accuracy, evaluate, PredictionRow, PredictionSet};
use prunekit::mixture::experiment::{run_pruning_experiment, Arm, PruningExperiment};
use prunekit::mixture::{
    class_risks, optimal_class_densities, optimal_threshold, worst_class_threshold, DensityRule, GaussianMixture,
    Threshold,
};
use prunekit::quota::{drop_quotas, saturating_proportional, ClassStats, QuotaError};
use prunekit::scoring::{
    covering_radius, dynunc_scores, el2n_scores, forgetting_scores, kcenter_select, DistanceMetric, EmbeddingSet,
    TelemetryLog,
};

use common::*;

/// Tolerance on the analytic risks, in probability units (0.05 percentage points).
const ANCHOR_TOL: f64 = 0.0005;
/// Allowed distance of a Monte-Carlo mean threshold from its target.
const THRESHOLD_TOL: f64 = 0.12;
/// Minimum distance of the margin-pruned mean threshold from `t̂`.
const SSP_AWAY_FROM_T_HAT: f64 = 0.1;
const VARIANCE_ARM_MAX_RISK: f64 = 0.11;
const QUOTA_TOL: f64 = 1e-9;
const REAL_SCORE_TOL: f64 = 1e-12;
const PEARSON_TOL: f64 = 1e-9;
const METRIC_TOL: f64 = 1e-12;

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn reference_mixture() -> GaussianMixture {
    GaussianMixture::balanced(-1.0, 1.0, 0.5, 1.0).unwrap()
}

fn experiment(arm: Arm, density: f64) -> PruningExperiment {
    PruningExperiment { mixture: reference_mixture(), points: 400, replicates: 10, density, seed: SEED, arm }
}

fn analytic_anchors() -> Outcome {
    let m = reference_mixture();
    let t_star = optimal_threshold(&m).unwrap();
    let at_star = class_risks(&m, t_star);
    let at_hat = class_risks(&m, worst_class_threshold(&m));
    let ok = (at_star.r0 - 0.048).abs() <= ANCHOR_TOL
        && (at_star.r1 - 0.121).abs() <= ANCHOR_TOL
        && (at_hat.r0 - 0.091).abs() <= ANCHOR_TOL
        && (at_hat.r1 - 0.091).abs() <= ANCHOR_TOL;
    outcome(
        ok,
        format!("R0(t*)={:.4} R1(t*)={:.4} R0(t^)={:.4} R1(t^)={:.4}", at_star.r0, at_star.r1, at_hat.r0, at_hat.r1),
    )
}

fn variance_arm() -> Outcome {
    let cfg = experiment(Arm::VarianceQuota, 0.5);
    let m = cfg.mixture;
    let (d0, d1) = optimal_class_densities(&m, 200, 200, 0.5, DensityRule::VarianceBased).unwrap();
    let balance = (d1 * m.phi1 * m.sigma0 - d0 * m.phi0 * m.sigma1).abs();
    let res = run_pruning_experiment(&cfg).unwrap();
    let t_bar = res.mean_threshold;
    let worst = class_risks(&m, t_bar).worst();
    let gap = (t_bar.0 - res.t_hat.0).abs();
    outcome(
        balance < 1e-12 && gap <= THRESHOLD_TOL && worst <= VARIANCE_ARM_MAX_RISK,
        format!("T={:.4} |T-t^|={gap:.4} max risk={worst:.4} quota balance={balance:.1e}", t_bar.0),
    )
}

fn margin_arm() -> Outcome {
    let res = run_pruning_experiment(&experiment(Arm::Ssp, 0.5)).unwrap();
    let t_bar = res.mean_threshold.0;
    let t_star = res.t_star.map_or(f64::NAN, Threshold::value);
    let to_star = (t_bar - t_star).abs();
    let to_hat = (t_bar - res.t_hat.0).abs();
    outcome(
        to_star <= THRESHOLD_TOL && to_hat > SSP_AWAY_FROM_T_HAT,
        format!("T={t_bar:.4} |T-t*|={to_star:.4} |T-t^|={to_hat:.4}"),
    )
}

fn error_arm() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [0.75, 0.5] {
        let res = run_pruning_experiment(&experiment(Arm::ErrorQuota, d)).unwrap();
        let gap = (res.mean_threshold.0 - res.t_hat.0).abs();
        ok &= gap <= THRESHOLD_TOL;
        parts.push(format!("d={d}: T={:.4} |T-t^|={gap:.4}", res.mean_threshold.0));
    }
    outcome(ok, parts.join("; "))
}

fn random_recall(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..20) {
        0 | 1 => 1.0,
        2 => 0.0,
        _ => rng.gen(),
    }
}

fn allocation_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = Vec::new();
    let (mut solved, mut infeasible) = (0, 0);
    for case in 0..10_000 {
        let k = rng.gen_range(1..=20);
        let sizes: Vec<u64> = (0..k).map(|_| rng.gen_range(1..=2000)).collect();
        let recalls: Vec<f64> = (0..k).map(|_| random_recall(&mut rng)).collect();
        let d: f64 = if rng.gen_range(0..20) == 0 { 1.0 } else { rng.gen_range(0.01..0.99) };
        let n: u64 = sizes.iter().sum();
        let stats: Vec<ClassStats> =
            (0..k).map(|i| ClassStats { class_id: i as u32, size: sizes[i], recall: recalls[i] }).collect();
        let quotas = drop_quotas(&stats, d);
        if d * (n as f64) < 1.0 {
            if !matches!(quotas, Err(QuotaError::TargetTooSmall(_))) {
                failures.push(format!("case {case}: tiny target accepted"));
            }
            continue;
        }
        if d == 1.0 {
            let q = quotas.unwrap();
            if q.target_counts.values().sum::<u64>() != n || q.densities.values().any(|&x| x != 1.0) {
                failures.push(format!("case {case}: d=1 does not keep everything"));
            }
            continue;
        }
        let weights: Vec<f64> = recalls.iter().map(|r| 1.0 - r).collect();
        let budget = d * n as f64;
        let fill = saturating_proportional(&sizes, &weights, budget);
        let Some(oracle) = clamp_renormalize(&sizes, &weights, budget) else {
            infeasible += 1;
            if fill.is_ok() || quotas.is_ok() {
                failures.push(format!("case {case}: infeasible instance accepted"));
            }
            continue;
        };
        let fill = match fill {
            Ok(f) => f,
            Err(e) => {
                failures.push(format!("case {case}: {e}"));
                continue;
            }
        };
        solved += 1;
        let dens = &fill.densities;
        let placed: f64 = dens.iter().zip(&sizes).map(|(x, &s)| x * s as f64).sum();
        if (placed - budget).abs() > QUOTA_TOL * budget {
            failures.push(format!("case {case}: conservation {placed} vs {budget}"));
        }
        if dens.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            failures.push(format!("case {case}: density out of bounds"));
        }
        if fill.passes > k {
            failures.push(format!("case {case}: {} passes for {k} classes", fill.passes));
        }
        for i in 0..k {
            for j in 0..i {
                if dens[i] < 1.0 && dens[j] < 1.0 && weights[i] > 0.0 && weights[j] > 0.0 {
                    let lhs = dens[j] / dens[i];
                    let rhs = weights[j] / weights[i];
                    if (lhs - rhs).abs() > QUOTA_TOL * rhs.max(1.0) {
                        failures.push(format!("case {case}: ratio {lhs} vs {rhs}"));
                    }
                }
            }
        }
        let diff = dens.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if diff > QUOTA_TOL {
            failures.push(format!("case {case}: differs from oracle by {diff:e}"));
        }
        match quotas {
            Ok(q) => {
                let want = (d * n as f64 + 0.5).floor() as u64;
                let total: u64 = q.target_counts.values().sum();
                let fits = (0..k).all(|i| {
                    let c = q.target_counts[&(i as u32)];
                    c <= sizes[i] && (c as f64 - dens[i] * sizes[i] as f64).abs() < 1.0 + 1e-9
                });
                if total != want || !fits {
                    failures.push(format!("case {case}: counts {total} vs {want}"));
                }
            }
            Err(e) => failures.push(format!("case {case}: quotas failed: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        match failures.first() {
            None => format!("{solved} solved, {infeasible} infeasible agreed with oracle"),
            Some(f) => format!("{} failures, first: {f}", failures.len()),
        },
    )
}

fn scoring_oracles() -> Outcome {
    let mut failures = Vec::new();

    // Hand traces.
    let hand = TelemetryLog::from_trajectories(
        [
            (0, vec![(0.1, false), (0.9, true), (0.2, false), (0.8, true), (0.9, true)]),
            (1, vec![(0.0, false), (1.0, true), (0.0, false), (1.0, true), (0.0, false)]),
        ]
        .into(),
    )
    .unwrap();
    let f = forgetting_scores(&hand);
    if f.get(0) != Some(1.0) || f.get(1) != Some(2.0) {
        failures.push("forgetting hand trace".to_string());
    }
    let dy = dynunc_scores(&hand, 2).unwrap();
    if dy.get(1) != Some(0.25) {
        failures.push("dynunc hand trace".to_string());
    }
    let el = el2n_scores(&[(0, vec![0.7, 0.2, 0.1])].into(), &[(0, 0)].into()).unwrap();
    if (el.get(0).unwrap() - 0.14f64.sqrt()).abs() > REAL_SCORE_TOL {
        failures.push("el2n hand trace".to_string());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for case in 0..1000 {
        let samples = rng.gen_range(1..=20u64);
        let epochs = rng.gen_range(2..=15usize);
        let learn_rate: f64 = rng.gen();
        let mut trajectories = BTreeMap::new();
        for id in 0..samples {
            let traj: Vec<(f64, bool)> = (0..epochs).map(|_| (rng.gen::<f64>(), rng.gen_bool(learn_rate))).collect();
            trajectories.insert(id * 3 + 1, traj);
        }
        let log = TelemetryLog::from_trajectories(trajectories.clone()).unwrap();

        let forget = forgetting_scores(&log);
        let counts: BTreeMap<u64, Option<u32>> = trajectories
            .iter()
            .map(|(&id, t)| (id, forgetting_oracle(&t.iter().map(|p| p.1).collect::<Vec<_>>())))
            .collect();
        let sentinel = counts.values().flatten().max().map_or(0, |&m| m) + 1;
        for (&id, c) in &counts {
            if forget.get(id) != Some(c.unwrap_or(sentinel) as f64) {
                failures.push(format!("case {case}: forgetting for {id}"));
            }
        }

        let window = rng.gen_range(2..=epochs);
        let dyn_scores = dynunc_scores(&log, window).unwrap();
        for (&id, t) in &trajectories {
            let p: Vec<f64> = t.iter().map(|x| x.0).collect();
            let want = dynunc_oracle(&p, window);
            if (dyn_scores.get(id).unwrap() - want).abs() > REAL_SCORE_TOL {
                failures.push(format!("case {case}: dynunc for {id}"));
            }
        }

        let classes = rng.gen_range(2..=10usize);
        let mut probs = BTreeMap::new();
        let mut labels = BTreeMap::new();
        for id in 0..samples {
            let raw: Vec<f64> = (0..classes).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let sum: f64 = raw.iter().sum();
            probs.insert(id, raw.iter().map(|x| x / sum).collect::<Vec<_>>());
            labels.insert(id, rng.gen_range(0..classes));
        }
        let el = el2n_scores(&probs, &labels).unwrap();
        for (id, p) in &probs {
            if (el.get(*id).unwrap() - el2n_oracle(p, labels[id])).abs() > REAL_SCORE_TOL {
                failures.push(format!("case {case}: el2n for {id}"));
            }
        }
    }

    let mut worst_ratio: f64 = 0.0;
    for case in 0..200 {
        let n = rng.gen_range(1..=30usize);
        let keep = rng.gen_range(1..=n.min(5));
        let dim = rng.gen_range(1..=3usize);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect()).collect();
        let emb = EmbeddingSet::new(points.iter().cloned().enumerate().map(|(i, p)| (i as u64, p)).collect()).unwrap();
        let picks = kcenter_select(&emb, keep, DistanceMetric::Euclidean).unwrap();
        let greedy = covering_radius(&emb, &picks, DistanceMetric::Euclidean);
        let optimum = exhaustive_kcenter_radius(&points, keep);
        if greedy > 2.0 * optimum + 1e-12 {
            failures.push(format!("k-center case {case}: {greedy} > 2 x {optimum}"));
        }
        if optimum > 0.0 {
            worst_ratio = worst_ratio.max(greedy / optimum);
        }
    }

    outcome(
        failures.is_empty(),
        match failures.first() {
            None => format!("1000 telemetry instances, 200 k-center instances (worst ratio {worst_ratio:.3})"),
            Some(f) => format!("{} failures, first: {f}", failures.len()),
        },
    )
}

fn metrics_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = Vec::new();
    for case in 0..1000 {
        let k = rng.gen_range(2..=8u32);
        let n = rng.gen_range(k as usize..=200);
        let skill: f64 = rng.gen();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let truth = if i < k as usize { i as u32 } else { rng.gen_range(0..k) };
            let pred = if rng.gen_bool(skill) { truth } else { rng.gen_range(0..k) };
            rows.push(PredictionRow {
                sample_id: i as u64 * 7,
                true_class: truth,
                pred_class: pred,
                group: Some(rng.gen_range(0..3)),
            });
        }
        let weights: BTreeMap<u32, f64> = (0..3).map(|g| (g, rng.gen_range(0.1..2.0))).collect();
        let report = evaluate(&PredictionSet::new(rows.clone()).unwrap(), Some(&weights)).unwrap();

        let mut hits = vec![0u32; k as usize];
        let mut totals = vec![0u32; k as usize];
        let mut group = BTreeMap::<u32, (u32, u32)>::new();
        for r in &rows {
            totals[r.true_class as usize] += 1;
            let ok = r.true_class == r.pred_class;
            hits[r.true_class as usize] += u32::from(ok);
            let g = group.entry(r.group.unwrap()).or_default();
            g.0 += u32::from(ok);
            g.1 += 1;
        }
        let recalls: Vec<f64> = hits.iter().zip(&totals).map(|(&h, &t)| f64::from(h) / f64::from(t)).collect();
        let min = recalls.iter().copied().fold(f64::INFINITY, f64::min);
        let max = recalls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = recalls.iter().sum::<f64>() / f64::from(k);
        let std = (recalls.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / f64::from(k)).sqrt();
        let micro = recalls.iter().zip(&totals).map(|(r, &t)| r * f64::from(t)).sum::<f64>() / n as f64;
        let (num, den) = group
            .iter()
            .fold((0.0, 0.0), |(a, b), (g, &(h, t))| (a + weights[g] * f64::from(h) / f64::from(t), b + weights[g]));

        let ok = report.recalls.values().copied().eq(recalls.iter().copied())
            && report.worst_class == min
            && report.max_min_gap == max - min
            && report.max_min_gap >= 0.0
            && (report.recall_std - std).abs() <= METRIC_TOL
            && report.recall_std <= report.max_min_gap / 2.0 + METRIC_TOL
            && (report.average - micro).abs() <= METRIC_TOL
            && (report.weighted_average.unwrap() - num / den).abs() <= METRIC_TOL;
        if !ok {
            failures.push(format!("case {case}: report disagrees with oracle"));
        }

        let mut shuffled = rows.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        if evaluate(&PredictionSet::new(shuffled).unwrap(), Some(&weights)).unwrap() != report {
            failures.push(format!("case {case}: depends on row order"));
        }

        if k >= 3 {
            let dens: BTreeMap<u32, f64> = (0..k).map(|c| (c, rng.gen())).collect();
            let base: BTreeMap<u32, f64> = report.recalls.clone();
            match correlation_density_accuracy(&dens, &base) {
                Ok(r) => {
                    let xs: Vec<f64> = dens.values().copied().collect();
                    let want = pearson_oracle(&xs, &recalls);
                    if (r - want).abs() > PEARSON_TOL {
                        failures.push(format!("case {case}: pearson {r} vs {want}"));
                    }
                }
                Err(_) => {
                    if recalls.iter().any(|&r| r != recalls[0]) {
                        failures.push(format!("case {case}: correlation refused"));
                    }
                }
            }
        }
    }

    // DRoP signature: densities equal to one minus the full-data recalls.
    let mut signature = Vec::new();
    for k in [3u32, 10, 100] {
        let recalls: BTreeMap<u32, f64> = (0..k).map(|c| (c, f64::from(rng.gen_range(0..=64u32)) / 64.0)).collect();
        let dens: BTreeMap<u32, f64> = recalls.iter().map(|(&c, &r)| (c, 1.0 - r)).collect();
        let r = correlation_density_accuracy(&dens, &recalls).unwrap();
        signature.push(r);
        if r != -1.0 {
            failures.push(format!("signature with {k} classes gave {r}"));
        }
    }

    outcome(
        failures.is_empty(),
        match failures.first() {
            None => format!("1000 prediction sets; signature correlations {signature:?}"),
            Some(f) => format!("{} failures, first: {f}", failures.len()),
        },
    )
}

fn desk_scale() -> Outcome {
    let mix = LineMixture { means: vec![0.0, 3.0, 6.0, 9.0, 12.0], sigmas: vec![0.5, 2.0, 0.8, 1.5, 0.6] };
    let (mut random, mut drop) = (0.0, 0.0);
    let seeds = 20;
    for seed in 0..seeds {
        let (r, d) = desk_scale_trial(&mix, 400, 0.5, seed);
        random += r;
        drop += d;
    }
    random /= seeds as f64;
    drop /= seeds as f64;
    outcome(drop >= random, format!("mean worst-class recall: DRoP {drop:.4}, random {random:.4}"))
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let checks: [(&str, Check, Option<Duration>); 8] = [
        ("two-gaussian analytic anchors", analytic_anchors, Some(Duration::from_secs(1))),
        ("variance-quota arm lands near t^", variance_arm, Some(Duration::from_secs(5))),
        ("margin-pruning arm stays near t*", margin_arm, Some(Duration::from_secs(5))),
        ("error-quota arm lands near t^ at d=0.75 and d=0.5", error_arm, Some(Duration::from_secs(5))),
        ("quota allocation property suite", allocation_suite, Some(Duration::from_secs(30))),
        ("scoring oracles", scoring_oracles, None),
        ("metrics suite", metrics_suite, None),
        ("desk-scale worst-class check", desk_scale, None),
    ];
    let mut all = true;
    for (name, check, limit) in checks {
        let start = Instant::now();
        let mut out = check();
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > limit {
                out.pass = false;
                out.detail.push_str(&format!("; over time limit {limit:?}"));
            }
        }
        all &= out.pass;
        println!("{} {name}: {} [{:.3}s]", if out.pass { "PASS" } else { "FAIL" }, out.detail, elapsed.as_secs_f64());
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
