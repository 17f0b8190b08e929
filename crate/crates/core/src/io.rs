//! File formats.
//!
//! Readers take the whole file as text and report the 1-based line of the
//! first problem. Writers produce UTF-8 with LF line endings and print reals
//! with 12 significant digits (see [`fmt_real`]).
//!
//! | file | layout |
//! |------|--------|
//! | class stats | CSV `class_id,size,recall` |
//! | quotas | CSV `class_id,density,target_count` |
//! | manifest | CSV `sample_id,class_id` |
//! | scores | CSV `sample_id,score,method` |
//! | embeddings / probabilities | CSV `sample_id,e0,e1,…` / `sample_id,p0,p1,…` |
//! | telemetry | JSONL `{"id":…,"epoch":…,"p_target":…,"correct":…}` |
//! | predictions | CSV `sample_id,true_class,pred_class[,group]` |
//! | group weights | CSV `group,weight` |
//! | plan | JSONL header `{"method":…,"density":…,"seed":…}` then `{"id":…}` per kept sample |
//! | experiment rows | CSV `experiment,replicate,threshold,r0,r1,avg_risk` |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::metrics::{EvalReport, PredictionRow, PredictionSet};
use crate::mixture::experiment::{RatioSample, ResultRow};
use crate::pruner::{DatasetManifest, PrunePlan, Sample};
use crate::quota::{ClassStats, QuotaAllocation};
use crate::scoring::{EmbeddingSet, ScoreMethod, ScoreTable, TelemetryLog, TelemetryRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FormatError {
    pub line: u64,
    pub message: String,
}

impl FormatError {
    fn new(line: u64, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

/// Formats a real with 12 significant digits, trailing zeros trimmed.
/// Plain notation for exponents in `[−5, 12)`, otherwise `d.ddde±x`.
/// Infinities print as `inf`/`-inf`, which [`str::parse`] accepts.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if (-5..12).contains(&exp) {
        if exp < 0 {
            out.push_str("0.");
            out.extend(std::iter::repeat('0').take((-exp - 1) as usize));
            out.push_str(digits);
        } else {
            let int_len = exp as usize + 1;
            if digits.len() <= int_len {
                out.push_str(digits);
                out.extend(std::iter::repeat('0').take(int_len - digits.len()));
            } else {
                out.push_str(&digits[..int_len]);
                out.push('.');
                out.push_str(&digits[int_len..]);
            }
        }
    } else {
        out.push_str(&digits[..1]);
        if digits.len() > 1 {
            out.push('.');
            out.push_str(&digits[1..]);
        }
        let _ = write!(out, "e{exp}");
    }
    out
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes())
}

/// Records with their line numbers, after checking the header line.
fn csv_rows(text: &str, expected: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>, FormatError> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for rec in reader(text).records() {
        let rec = rec.map_err(|e| FormatError::new(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if !header_seen {
            let got: Vec<&str> = rec.iter().collect();
            if got != expected {
                return Err(FormatError::new(line, format!("expected header `{}`", expected.join(","))));
            }
            header_seen = true;
            continue;
        }
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != expected.len() {
            return Err(FormatError::new(line, format!("expected {} fields, found {}", expected.len(), rec.len())));
        }
        rows.push((line, rec));
    }
    if !header_seen {
        return Err(FormatError::new(1, format!("missing header `{}`", expected.join(","))));
    }
    Ok(rows)
}

fn field<T: FromStr>(line: u64, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T, FormatError> {
    let raw = rec.get(i).unwrap_or("");
    raw.trim().parse().map_err(|_| FormatError::new(line, format!("bad {name} `{raw}`")))
}

fn finite(line: u64, v: f64, name: &str) -> Result<f64, FormatError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FormatError::new(line, format!("{name} must be finite")))
    }
}

pub fn read_class_stats(text: &str) -> Result<Vec<ClassStats>, FormatError> {
    let mut seen = BTreeSet::new();
    csv_rows(text, &["class_id", "size", "recall"])?
        .into_iter()
        .map(|(line, rec)| {
            let s = ClassStats {
                class_id: field(line, &rec, 0, "class_id")?,
                size: field(line, &rec, 1, "size")?,
                recall: field(line, &rec, 2, "recall")?,
            };
            if !seen.insert(s.class_id) {
                return Err(FormatError::new(line, format!("duplicate class {}", s.class_id)));
            }
            if s.size == 0 {
                return Err(FormatError::new(line, "size must be at least 1"));
            }
            if !(0.0..=1.0).contains(&s.recall) {
                return Err(FormatError::new(line, "recall must lie in [0, 1]"));
            }
            Ok(s)
        })
        .collect()
}

pub fn write_class_stats(stats: &[ClassStats]) -> String {
    let mut out = String::from("class_id,size,recall\n");
    for s in stats {
        let _ = writeln!(out, "{},{},{}", s.class_id, s.size, fmt_real(s.recall));
    }
    out
}

pub fn write_quotas(q: &QuotaAllocation) -> String {
    let mut out = String::from("class_id,density,target_count\n");
    for (k, d) in &q.densities {
        let _ = writeln!(out, "{},{},{}", k, fmt_real(*d), q.target_counts.get(k).copied().unwrap_or(0));
    }
    out
}

/// Reads a quota file. The file does not carry the requested density, so it
/// is reported as the count-weighted mean of the class densities where that
/// is recoverable (NaN otherwise).
pub fn read_quotas(text: &str) -> Result<QuotaAllocation, FormatError> {
    let mut densities = BTreeMap::new();
    let mut target_counts = BTreeMap::new();
    for (line, rec) in csv_rows(text, &["class_id", "density", "target_count"])? {
        let k: u32 = field(line, &rec, 0, "class_id")?;
        let d: f64 = field(line, &rec, 1, "density")?;
        if !(0.0..=1.0).contains(&d) {
            return Err(FormatError::new(line, "density must lie in [0, 1]"));
        }
        let c: u64 = field(line, &rec, 2, "target_count")?;
        if densities.insert(k, d).is_some() {
            return Err(FormatError::new(line, format!("duplicate class {k}")));
        }
        target_counts.insert(k, c);
    }
    let kept: f64 = target_counts.values().map(|&c| c as f64).sum();
    let sizes: Option<f64> =
        densities.iter().map(|(k, &d)| if d > 0.0 { Some(target_counts[k] as f64 / d) } else { None }).sum();
    let requested_density = sizes.map_or(f64::NAN, |n| if n > 0.0 { kept / n } else { f64::NAN });
    Ok(QuotaAllocation { densities, target_counts, requested_density })
}

pub fn read_manifest(text: &str) -> Result<DatasetManifest, FormatError> {
    let mut samples = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, rec) in csv_rows(text, &["sample_id", "class_id"])? {
        let s = Sample { sample_id: field(line, &rec, 0, "sample_id")?, class_id: field(line, &rec, 1, "class_id")? };
        if !seen.insert(s.sample_id) {
            return Err(FormatError::new(line, format!("duplicate sample {}", s.sample_id)));
        }
        samples.push(s);
    }
    Ok(DatasetManifest::new(samples).expect("ids checked above"))
}

pub fn write_manifest(man: &DatasetManifest) -> String {
    let mut out = String::from("sample_id,class_id\n");
    for s in man.samples() {
        let _ = writeln!(out, "{},{}", s.sample_id, s.class_id);
    }
    out
}

pub fn read_scores(text: &str) -> Result<ScoreTable, FormatError> {
    let mut method = None;
    let mut entries = BTreeMap::new();
    for (line, rec) in csv_rows(text, &["sample_id", "score", "method"])? {
        let id: u64 = field(line, &rec, 0, "sample_id")?;
        let score = finite(line, field(line, &rec, 1, "score")?, "score")?;
        let m: ScoreMethod = field(line, &rec, 2, "method")?;
        if *method.get_or_insert(m) != m {
            return Err(FormatError::new(line, "all rows must share one method"));
        }
        if entries.insert(id, score).is_some() {
            return Err(FormatError::new(line, format!("duplicate sample {id}")));
        }
    }
    Ok(ScoreTable { method: method.unwrap_or(ScoreMethod::External), entries })
}

pub fn write_scores(t: &ScoreTable) -> String {
    let mut out = String::from("sample_id,score,method\n");
    for (id, s) in &t.entries {
        let _ = writeln!(out, "{},{},{}", id, fmt_real(*s), t.method);
    }
    out
}

/// `sample_id,<prefix>0,<prefix>1,…` with at least one component column.
pub fn read_vectors(text: &str, prefix: char) -> Result<BTreeMap<u64, Vec<f64>>, FormatError> {
    let mut records = reader(text).into_records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| FormatError::new(1, e.to_string()))?,
        None => return Err(FormatError::new(1, "missing header")),
    };
    let dim = header.len().saturating_sub(1);
    let header_ok = dim >= 1
        && header.get(0) == Some("sample_id")
        && header.iter().skip(1).enumerate().all(|(i, h)| h == format!("{prefix}{i}"));
    if !header_ok {
        return Err(FormatError::new(1, format!("expected header `sample_id,{prefix}0,{prefix}1,…`")));
    }
    let mut out = BTreeMap::new();
    for rec in records {
        let rec = rec.map_err(|e| FormatError::new(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != dim + 1 {
            return Err(FormatError::new(line, format!("expected {} fields, found {}", dim + 1, rec.len())));
        }
        let id: u64 = field(line, &rec, 0, "sample_id")?;
        let v = (1..=dim)
            .map(|i| field::<f64>(line, &rec, i, "component").and_then(|x| finite(line, x, "component")))
            .collect::<Result<Vec<_>, _>>()?;
        if out.insert(id, v).is_some() {
            return Err(FormatError::new(line, format!("duplicate sample {id}")));
        }
    }
    Ok(out)
}

pub fn read_embeddings(text: &str) -> Result<EmbeddingSet, FormatError> {
    let vectors = read_vectors(text, 'e')?;
    EmbeddingSet::new(vectors).map_err(|e| FormatError::new(0, e.to_string()))
}

pub fn write_vectors(vectors: &BTreeMap<u64, Vec<f64>>, prefix: char) -> String {
    let dim = vectors.values().next().map_or(0, Vec::len);
    let mut out = String::from("sample_id");
    for i in 0..dim {
        let _ = write!(out, ",{prefix}{i}");
    }
    out.push('\n');
    for (id, v) in vectors {
        let _ = write!(out, "{id}");
        for x in v {
            let _ = write!(out, ",{}", fmt_real(*x));
        }
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TelemetryLine {
    id: u64,
    epoch: u32,
    p_target: f64,
    correct: bool,
}

pub fn read_telemetry_records(text: &str) -> Result<Vec<TelemetryRecord>, FormatError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let r: TelemetryLine = serde_json::from_str(raw).map_err(|e| FormatError::new(line, e.to_string()))?;
        if !(0.0..=1.0).contains(&r.p_target) {
            return Err(FormatError::new(line, "p_target must lie in [0, 1]"));
        }
        out.push(TelemetryRecord { id: r.id, epoch: r.epoch, p_target: r.p_target, correct: r.correct });
    }
    Ok(out)
}

pub fn read_telemetry(text: &str) -> Result<TelemetryLog, FormatError> {
    TelemetryLog::from_records(read_telemetry_records(text)?).map_err(|e| FormatError::new(0, e.to_string()))
}

pub fn write_telemetry(records: &[TelemetryRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = writeln!(
            out,
            "{{\"id\":{},\"epoch\":{},\"p_target\":{},\"correct\":{}}}",
            r.id,
            r.epoch,
            fmt_real(r.p_target),
            r.correct
        );
    }
    out
}

pub fn read_predictions(text: &str) -> Result<PredictionSet, FormatError> {
    let mut records = reader(text).into_records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| FormatError::new(1, e.to_string()))?,
        None => return Err(FormatError::new(1, "missing header")),
    };
    let cols: Vec<&str> = header.iter().collect();
    let with_group = match cols.as_slice() {
        ["sample_id", "true_class", "pred_class"] => false,
        ["sample_id", "true_class", "pred_class", "group"] => true,
        _ => return Err(FormatError::new(1, "expected header `sample_id,true_class,pred_class[,group]`")),
    };
    let width = if with_group { 4 } else { 3 };
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for rec in records {
        let rec = rec.map_err(|e| FormatError::new(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != width {
            return Err(FormatError::new(line, format!("expected {width} fields, found {}", rec.len())));
        }
        let row = PredictionRow {
            sample_id: field(line, &rec, 0, "sample_id")?,
            true_class: field(line, &rec, 1, "true_class")?,
            pred_class: field(line, &rec, 2, "pred_class")?,
            group: if with_group && !rec.get(3).unwrap_or("").trim().is_empty() {
                Some(field(line, &rec, 3, "group")?)
            } else {
                None
            },
        };
        if !seen.insert(row.sample_id) {
            return Err(FormatError::new(line, format!("duplicate sample {}", row.sample_id)));
        }
        rows.push(row);
    }
    Ok(PredictionSet::new(rows).expect("ids checked above"))
}

pub fn write_predictions(preds: &PredictionSet) -> String {
    let with_group = preds.rows().iter().any(|r| r.group.is_some());
    let mut out = String::from(if with_group {
        "sample_id,true_class,pred_class,group\n"
    } else {
        "sample_id,true_class,pred_class\n"
    });
    for r in preds.rows() {
        let _ = write!(out, "{},{},{}", r.sample_id, r.true_class, r.pred_class);
        if with_group {
            out.push(',');
            if let Some(g) = r.group {
                let _ = write!(out, "{g}");
            }
        }
        out.push('\n');
    }
    out
}

pub fn read_group_weights(text: &str) -> Result<BTreeMap<u32, f64>, FormatError> {
    let mut out = BTreeMap::new();
    for (line, rec) in csv_rows(text, &["group", "weight"])? {
        let g: u32 = field(line, &rec, 0, "group")?;
        let w = finite(line, field(line, &rec, 1, "weight")?, "weight")?;
        if w < 0.0 {
            return Err(FormatError::new(line, "weight must be non-negative"));
        }
        if out.insert(g, w).is_some() {
            return Err(FormatError::new(line, format!("duplicate group {g}")));
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanHeader {
    method: String,
    density: f64,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanEntry {
    id: u64,
}

pub fn write_plan(plan: &PrunePlan) -> String {
    let seed = plan.seed.map_or("null".to_string(), |s| s.to_string());
    let mut out = format!(
        "{{\"method\":{},\"density\":{},\"seed\":{}}}\n",
        Value::from(plan.method.as_str()),
        fmt_real(plan.density),
        seed
    );
    for id in &plan.retained {
        let _ = writeln!(out, "{{\"id\":{id}}}");
    }
    out
}

pub fn read_plan(text: &str) -> Result<PrunePlan, FormatError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| FormatError::new(1, "missing plan header"))?;
    let header: PlanHeader =
        serde_json::from_str(first).map_err(|e| FormatError::new(1, format!("plan header: {e}")))?;
    if !header.density.is_finite() {
        return Err(FormatError::new(1, "density must be finite"));
    }
    let mut retained = BTreeSet::new();
    for (i, raw) in lines {
        let line = i as u64 + 1;
        let e: PlanEntry = serde_json::from_str(raw).map_err(|e| FormatError::new(line, e.to_string()))?;
        if !retained.insert(e.id) {
            return Err(FormatError::new(line, format!("duplicate id {}", e.id)));
        }
    }
    Ok(PrunePlan { retained, method: header.method, density: header.density, seed: header.seed })
}

/// A JSON number printed at 12 significant digits; non-finite values become null.
pub fn json_real(x: f64) -> Value {
    if x.is_finite() {
        fmt_real(x).parse::<f64>().map_or(Value::Null, Value::from)
    } else {
        Value::Null
    }
}

/// The flat JSON object for an evaluation report.
pub fn report_json(r: &EvalReport) -> Value {
    let recalls: serde_json::Map<String, Value> =
        r.recalls.iter().map(|(k, v)| (k.to_string(), json_real(*v))).collect();
    serde_json::json!({
        "recalls": recalls,
        "worst_class": json_real(r.worst_class),
        "max_min_gap": json_real(r.max_min_gap),
        "recall_std": json_real(r.recall_std),
        "average": json_real(r.average),
        "weighted_average": r.weighted_average.map_or(Value::Null, json_real),
    })
}

pub const EXPERIMENT_HEADER: &str = "experiment,replicate,threshold,r0,r1,avg_risk";

pub fn write_experiment_rows(rows: &[ResultRow]) -> String {
    let mut out = format!("{EXPERIMENT_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.experiment,
            r.replicate,
            fmt_real(r.threshold),
            fmt_real(r.r0),
            fmt_real(r.r1),
            fmt_real(r.avg_risk)
        );
    }
    out
}

pub fn read_experiment_rows(text: &str) -> Result<Vec<ResultRow>, FormatError> {
    let cols: Vec<&str> = EXPERIMENT_HEADER.split(',').collect();
    csv_rows(text, &cols)?
        .into_iter()
        .map(|(line, rec)| {
            Ok(ResultRow {
                experiment: rec.get(0).unwrap_or("").to_string(),
                replicate: rec.get(1).unwrap_or("").to_string(),
                threshold: field(line, &rec, 2, "threshold")?,
                r0: field(line, &rec, 3, "r0")?,
                r1: field(line, &rec, 4, "r1")?,
                avg_risk: field(line, &rec, 5, "avg_risk")?,
            })
        })
        .collect()
}

pub fn write_ratio_sweep(samples: &[RatioSample]) -> String {
    let mut out = String::from("sample,sigma0,sigma1,phi0,variance_ratio,error_ratio\n");
    for (i, s) in samples.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            i,
            fmt_real(s.sigma0),
            fmt_real(s.sigma1),
            fmt_real(s.phi0),
            fmt_real(s.variance_ratio),
            fmt_real(s.error_ratio)
        );
    }
    out
}
