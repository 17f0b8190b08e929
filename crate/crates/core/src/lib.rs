//! Class-robust data pruning.
//!
//! * [`quota`]: DRoP per-class retention quotas and CDB-W weights.
//! * [`scoring`]: per-sample pruning scores from training telemetry and embeddings.
//! * [`pruner`]: retention plans for random and score-based pruning, globally or per class.
//! * [`metrics`]: per-class recalls and classification-bias metrics.
//! * [`mixture`]: closed-form and Monte-Carlo analysis of a two-Gaussian mixture.
//! * [`io`]: the CSV and JSONL file formats shared with the command-line tool.

// Negated comparisons below double as NaN checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apportion;
pub mod io;
pub mod metrics;
pub mod mixture;
pub mod normal;
pub mod pruner;
pub mod quota;
pub mod rng;
pub mod scoring;
