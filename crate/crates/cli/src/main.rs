//! `prunekit`: per-class quota allocation, scoring, pruning, metrics and
//! the two-Gaussian lab from the command line.
//!
//! Every subcommand writes its artifact atomically and prints a one-line
//! JSON summary. Exit codes: 0 on success, 1 on a module error (with a JSON
//! error object on stderr), 2 on an argument error.

mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use prunekit::io::{self, json_real};
use prunekit::metrics::{correlation_density_accuracy, evaluate};
use prunekit::mixture::experiment::{
    analytic_rows, density_ratio_sweep, run_pruning_experiment, Arm, PruningExperiment,
};
use prunekit::mixture::GaussianMixture;
use prunekit::pruner::{
    extract_quotas, inject_imbalance, prune_random_global, prune_random_quota, prune_score_global, prune_score_quota,
    PruneMethod,
};
use prunekit::quota::drop_quotas_with_floor;
use prunekit::scoring::{
    average_scores, dynunc_scores, el2n_scores, forgetting_scores, kcenter_select, selection_order_scores,
    DistanceMetric, ScoreMethod, ScoreTable,
};

use output::{emit, load, write_atomic, Failure};

#[derive(Parser, Debug)]
#[command(name = "prunekit", version, about = "Class-aware data pruning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Allocate per-class retention quotas from class sizes and recalls.
    Quota(QuotaArgs),
    /// Compute per-sample difficulty scores.
    Score(ScoreArgs),
    /// Produce a prune plan from a manifest.
    Prune(PruneArgs),
    /// Evaluate predictions, or correlate densities with recalls.
    Metrics(MetricsArgs),
    /// Two-Gaussian experiments with plot-ready CSV output.
    Gaussian(GaussianArgs),
    /// Subsample a balanced manifest into an exponentially imbalanced one.
    Imbalance(ImbalanceArgs),
}

fn density(s: &str) -> Result<f64, String> {
    let d: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if d > 0.0 && d <= 1.0 {
        Ok(d)
    } else {
        Err(format!("density {d} is outside (0, 1]"))
    }
}

#[derive(Args, Debug)]
struct QuotaArgs {
    /// Class statistics CSV `class_id,size,recall`.
    #[arg(long, conflicts_with_all = ["from_plan", "manifest"], required_unless_present = "from_plan")]
    stats: Option<PathBuf>,
    /// Overall target density in (0, 1].
    #[arg(long, value_parser = density, required_unless_present = "from_plan")]
    density: Option<f64>,
    /// Keep at least this many samples per class (capped at the class size).
    #[arg(long, default_value_t = 0)]
    min_per_class: u64,
    /// Measure the quotas an existing plan realizes instead of allocating.
    #[arg(long, requires = "manifest")]
    from_plan: Option<PathBuf>,
    /// Manifest CSV `sample_id,class_id`, used with --from-plan.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output quotas CSV `class_id,density,target_count`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ScoreKind {
    El2n,
    Forgetting,
    Dynunc,
    Kcenter,
    Average,
    External,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MetricKind {
    Euclidean,
    Cosine,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Scoring method.
    #[arg(long, value_enum)]
    method: ScoreKind,
    /// Predicted class probabilities CSV `sample_id,p0,p1,...` (el2n).
    #[arg(long)]
    probs: Option<PathBuf>,
    /// Manifest CSV `sample_id,class_id` giving the labels (el2n).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Training telemetry JSONL (forgetting, dynunc).
    #[arg(long)]
    telemetry: Option<PathBuf>,
    /// Sliding window length in epochs (dynunc).
    #[arg(long, default_value_t = 10)]
    window: usize,
    /// Embeddings CSV `sample_id,e0,e1,...` (kcenter).
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Number of centers to select (kcenter); defaults to every sample.
    #[arg(long)]
    keep: Option<usize>,
    /// Distance for k-center selection.
    #[arg(long, value_enum, default_value_t = MetricKind::Euclidean)]
    metric: MetricKind,
    /// Score tables to combine (average) or relabel (external).
    #[arg(long = "input", num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Output score CSV `sample_id,score,method`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PruneKind {
    Random,
    RandomQuota,
    Score,
    ScoreQuota,
}

#[derive(Args, Debug)]
struct PruneArgs {
    /// Manifest CSV `sample_id,class_id`.
    #[arg(long)]
    manifest: PathBuf,
    /// Pruning method.
    #[arg(long, value_enum)]
    method: PruneKind,
    /// Overall density in (0, 1] (random, score).
    #[arg(long, value_parser = density)]
    density: Option<f64>,
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Score CSV; higher scores are kept first (score, score-quota).
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Quotas CSV (random-quota, score-quota).
    #[arg(long)]
    quotas: Option<PathBuf>,
    /// Output plan JSONL; the plan goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Predictions CSV `sample_id,true_class,pred_class[,group]`.
    #[arg(long, conflicts_with_all = ["quotas", "stats"], required_unless_present = "quotas")]
    predictions: Option<PathBuf>,
    /// Group weights CSV `group,weight` for the weighted average.
    #[arg(long, requires = "predictions")]
    group_weights: Option<PathBuf>,
    /// Quotas CSV whose densities are correlated with --stats recalls.
    #[arg(long, requires = "stats")]
    quotas: Option<PathBuf>,
    /// Class statistics CSV of the full-data model.
    #[arg(long, requires = "quotas")]
    stats: Option<PathBuf>,
    /// Output JSON report; the report goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GaussianArgs {
    #[command(subcommand)]
    experiment: GaussianCommand,
}

#[derive(Args, Debug, Clone, Copy)]
struct MixtureArgs {
    /// Mean of class 0.
    #[arg(long, allow_negative_numbers = true, default_value_t = -1.0)]
    mu0: f64,
    /// Mean of class 1.
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    mu1: f64,
    /// Standard deviation of class 0.
    #[arg(long, default_value_t = 0.5)]
    sigma0: f64,
    /// Standard deviation of class 1.
    #[arg(long, default_value_t = 1.0)]
    sigma1: f64,
    /// Prior of class 0; class 1 gets the rest.
    #[arg(long, default_value_t = 0.5)]
    phi0: f64,
}

impl MixtureArgs {
    fn mixture(self) -> Result<GaussianMixture, Failure> {
        Ok(GaussianMixture::new(self.mu0, self.mu1, self.sigma0, self.sigma1, self.phi0, 1.0 - self.phi0)?)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
#[value(rename_all = "snake_case")]
enum ArmKind {
    VarianceQuota,
    Ssp,
    SspQuota,
    ErrorQuota,
}

impl From<ArmKind> for Arm {
    fn from(a: ArmKind) -> Arm {
        match a {
            ArmKind::VarianceQuota => Arm::VarianceQuota,
            ArmKind::Ssp => Arm::Ssp,
            ArmKind::SspQuota => Arm::SspQuota,
            ArmKind::ErrorQuota => Arm::ErrorQuota,
        }
    }
}

#[derive(Subcommand, Debug)]
enum GaussianCommand {
    /// Prune, refit and score replicates of one arm; rows per replicate plus reference rows.
    Fig3 {
        #[command(flatten)]
        mixture: MixtureArgs,
        /// Overall density kept by pruning.
        #[arg(long, value_parser = density, default_value_t = 0.5)]
        density: f64,
        /// Number of replicates.
        #[arg(long, default_value_t = 10)]
        replicates: usize,
        /// Points per replicate dataset.
        #[arg(long, default_value_t = 400)]
        points: usize,
        /// Seed; replicate i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pruning arm.
        #[arg(long, value_enum)]
        arm: ArmKind,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Variance-based against error-based density ratios over random mixtures.
    Fig4a {
        /// Number of mixtures to draw.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Seed for the draws.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form risks at the average-optimal and worst-class-optimal thresholds.
    Analytic {
        #[command(flatten)]
        mixture: MixtureArgs,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ImbalanceArgs {
    /// Balanced manifest CSV `sample_id,class_id`.
    #[arg(long)]
    manifest: PathBuf,
    /// Ratio between the largest and smallest class, at least 1.
    #[arg(long)]
    factor: f64,
    /// Seed for the per-class subsampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output manifest CSV.
    #[arg(long)]
    out: PathBuf,
}

fn path_str(p: &Path) -> Value {
    Value::from(p.display().to_string())
}

fn need<'a>(opt: &'a Option<PathBuf>, flag: &str, why: &str) -> Result<&'a Path, Failure> {
    opt.as_deref().ok_or_else(|| Failure::usage(format!("{flag} is required {why}")))
}

fn quota(a: &QuotaArgs) -> Result<Value, Failure> {
    let q = match (&a.from_plan, &a.stats) {
        (Some(plan), _) => {
            let plan = load(plan, io::read_plan)?;
            let man = load(need(&a.manifest, "--manifest", "with --from-plan")?, io::read_manifest)?;
            extract_quotas(&plan, &man)?
        }
        (None, Some(stats)) => {
            let stats = load(stats, io::read_class_stats)?;
            let d = a.density.ok_or_else(|| Failure::usage("--density is required with --stats"))?;
            drop_quotas_with_floor(&stats, d, a.min_per_class)?
        }
        (None, None) => return Err(Failure::usage("either --stats or --from-plan is required")),
    };
    write_atomic(&a.out, &io::write_quotas(&q))?;
    Ok(json!({
        "command": "quota",
        "classes": q.target_counts.len(),
        "retained": q.total_count(),
        "requested_density": json_real(q.requested_density),
        "out": path_str(&a.out),
    }))
}

fn score(a: &ScoreArgs) -> Result<Value, Failure> {
    let why = |m: &str| format!("for --method {m}");
    let table = match a.method {
        ScoreKind::El2n => {
            let probs = load(need(&a.probs, "--probs", &why("el2n"))?, |t| io::read_vectors(t, 'p'))?;
            let man = load(need(&a.labels, "--labels", &why("el2n"))?, io::read_manifest)?;
            let labels: BTreeMap<u64, usize> =
                man.samples().iter().map(|s| (s.sample_id, s.class_id as usize)).collect();
            el2n_scores(&probs, &labels)?
        }
        ScoreKind::Forgetting => {
            forgetting_scores(&load(need(&a.telemetry, "--telemetry", &why("forgetting"))?, io::read_telemetry)?)
        }
        ScoreKind::Dynunc => {
            let log = load(need(&a.telemetry, "--telemetry", &why("dynunc"))?, io::read_telemetry)?;
            dynunc_scores(&log, a.window)?
        }
        ScoreKind::Kcenter => {
            let emb = load(need(&a.embeddings, "--embeddings", &why("kcenter"))?, io::read_embeddings)?;
            let metric = match a.metric {
                MetricKind::Euclidean => DistanceMetric::Euclidean,
                MetricKind::Cosine => DistanceMetric::Cosine,
            };
            selection_order_scores(&kcenter_select(&emb, a.keep.unwrap_or(emb.len()), metric)?)
        }
        ScoreKind::Average => {
            if a.inputs.is_empty() {
                return Err(Failure::usage("--input is required for --method average"));
            }
            let tables = a.inputs.iter().map(|p| load(p, io::read_scores)).collect::<Result<Vec<_>, _>>()?;
            average_scores(&tables)?
        }
        ScoreKind::External => {
            let [input] = a.inputs.as_slice() else {
                return Err(Failure::usage("--method external takes exactly one --input"));
            };
            ScoreTable::new(ScoreMethod::External, load(input, io::read_scores)?.entries)?
        }
    };
    write_atomic(&a.out, &io::write_scores(&table))?;
    Ok(json!({
        "command": "score",
        "method": table.method.name(),
        "samples": table.len(),
        "out": path_str(&a.out),
    }))
}

fn prune(a: &PruneArgs) -> Result<(Value, bool), Failure> {
    let method = match a.method {
        PruneKind::Random => PruneMethod::Random,
        PruneKind::RandomQuota => PruneMethod::RandomQuota,
        PruneKind::Score => PruneMethod::Score,
        PruneKind::ScoreQuota => PruneMethod::ScoreQuota,
    };
    let why = format!("for --method {method}");
    let man = load(&a.manifest, io::read_manifest)?;
    let global_density = || a.density.ok_or_else(|| Failure::usage(format!("--density is required {why}")));
    let plan = match method {
        PruneMethod::Random => prune_random_global(&man, global_density()?, a.seed)?,
        PruneMethod::Score => {
            let scores = load(need(&a.scores, "--scores", &why)?, io::read_scores)?;
            prune_score_global(&man, &scores, global_density()?)?
        }
        PruneMethod::RandomQuota => {
            let q = load(need(&a.quotas, "--quotas", &why)?, io::read_quotas)?;
            prune_random_quota(&man, &q, a.seed)?
        }
        PruneMethod::ScoreQuota => {
            let scores = load(need(&a.scores, "--scores", &why)?, io::read_scores)?;
            let q = load(need(&a.quotas, "--quotas", &why)?, io::read_quotas)?;
            prune_score_quota(&man, &scores, &q)?
        }
    };
    let to_file = emit(a.out.as_deref(), &io::write_plan(&plan))?;
    let summary = json!({
        "command": "prune",
        "method": plan.method,
        "samples": man.len(),
        "retained": plan.len(),
        "density": json_real(plan.density),
        "seed": plan.seed,
        "out": a.out.as_deref().map_or(Value::Null, path_str),
    });
    Ok((summary, to_file))
}

fn metrics(a: &MetricsArgs) -> Result<(Value, bool), Failure> {
    let (report, summary) = match (&a.predictions, &a.quotas, &a.stats) {
        (Some(p), _, _) => {
            let preds = load(p, io::read_predictions)?;
            let weights = a.group_weights.as_deref().map(|w| load(w, io::read_group_weights)).transpose()?;
            let r = evaluate(&preds, weights.as_ref())?;
            let summary = json!({
                "command": "metrics",
                "classes": r.recalls.len(),
                "worst_class": json_real(r.worst_class),
                "average": json_real(r.average),
            });
            (io::report_json(&r), summary)
        }
        (None, Some(q), Some(s)) => {
            let q = load(q, io::read_quotas)?;
            let recalls: BTreeMap<u32, f64> =
                load(s, io::read_class_stats)?.into_iter().map(|c| (c.class_id, c.recall)).collect();
            let r = json_real(correlation_density_accuracy(&q.densities, &recalls)?);
            (json!({ "correlation": r }), json!({ "command": "metrics", "correlation": r }))
        }
        _ => return Err(Failure::usage("give --predictions, or --quotas with --stats")),
    };
    let to_file = emit(a.out.as_deref(), &format!("{report}\n"))?;
    let mut summary = summary;
    summary["out"] = a.out.as_deref().map_or(Value::Null, path_str);
    Ok((summary, to_file))
}

fn gaussian(a: &GaussianArgs) -> Result<(Value, bool), Failure> {
    let (csv, summary, out) = match &a.experiment {
        GaussianCommand::Fig3 { mixture, density, replicates, points, seed, arm, out } => {
            if *replicates == 0 || *points == 0 {
                return Err(Failure::usage("--replicates and --points must be positive"));
            }
            let cfg = PruningExperiment {
                mixture: mixture.mixture()?,
                points: *points,
                replicates: *replicates,
                density: *density,
                seed: *seed,
                arm: Arm::from(*arm),
            };
            let res = run_pruning_experiment(&cfg)?;
            let summary = json!({
                "command": "gaussian fig3",
                "arm": res.arm.name(),
                "replicates": res.replicates.len(),
                "mean_threshold": json_real(res.mean_threshold.0),
                "t_hat": json_real(res.t_hat.0),
                "t_star": res.t_star.map_or(Value::Null, |t| json_real(t.0)),
            });
            (io::write_experiment_rows(&res.rows()), summary, out)
        }
        GaussianCommand::Fig4a { samples, seed, out } => {
            let sweep = density_ratio_sweep(*samples, *seed);
            let summary = json!({ "command": "gaussian fig4a", "samples": sweep.len() });
            (io::write_ratio_sweep(&sweep), summary, out)
        }
        GaussianCommand::Analytic { mixture, out } => {
            let rows = analytic_rows(&mixture.mixture()?);
            let summary = json!({ "command": "gaussian analytic", "rows": rows.len() });
            (io::write_experiment_rows(&rows), summary, out)
        }
    };
    let to_file = emit(out.as_deref(), &csv)?;
    let mut summary = summary;
    summary["out"] = out.as_deref().map_or(Value::Null, path_str);
    Ok((summary, to_file))
}

fn imbalance(a: &ImbalanceArgs) -> Result<Value, Failure> {
    let man = load(&a.manifest, io::read_manifest)?;
    let out = inject_imbalance(&man, a.factor, a.seed)?;
    write_atomic(&a.out, &io::write_manifest(&out))?;
    let sizes: serde_json::Map<String, Value> =
        out.class_sizes().into_iter().map(|(k, n)| (k.to_string(), Value::from(n))).collect();
    Ok(json!({
        "command": "imbalance",
        "samples": out.len(),
        "class_sizes": sizes,
        "out": path_str(&a.out),
    }))
}

fn run(cli: &Cli) -> Result<(Value, bool), Failure> {
    match &cli.command {
        Command::Quota(a) => quota(a).map(|s| (s, true)),
        Command::Score(a) => score(a).map(|s| (s, true)),
        Command::Prune(a) => prune(a),
        Command::Metrics(a) => metrics(a),
        Command::Gaussian(a) => gaussian(a),
        Command::Imbalance(a) => imbalance(a).map(|s| (s, true)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        // With the artifact on stdout, the summary moves to stderr.
        Ok((summary, true)) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Ok((summary, false)) => {
            eprintln!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.code)
        }
    }
}
