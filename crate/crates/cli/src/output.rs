use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use prunekit::io::FormatError;
use prunekit::metrics::MetricsError;
use prunekit::mixture::MixtureError;
use prunekit::pruner::PruneError;
use prunekit::quota::QuotaError;
use prunekit::scoring::ScoreError;

/// A failed run: exit code plus a machine-readable error object.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, kind: "usage", message: message.into() }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": self.kind, "message": self.message })
    }
}

macro_rules! module_error {
    ($($ty:ty => $kind:literal),* $(,)?) => {$(
        impl From<$ty> for Failure {
            fn from(e: $ty) -> Self {
                Failure { code: 1, kind: $kind, message: e.to_string() }
            }
        }
    )*};
}

module_error! {
    QuotaError => "quota",
    PruneError => "prune",
    ScoreError => "scoring",
    MetricsError => "metrics",
    MixtureError => "mixture",
}

/// Reads and parses an input file. A missing or unreadable file is an
/// argument error; a malformed one is a module error.
pub fn load<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T, FormatError>) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| Failure { code: 1, kind: "format", message: format!("{}: {e}", path.display()) })
}

/// Writes `contents` through a temp file in the target directory, then
/// renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let fail =
        |e: &dyn Display| Failure { code: 1, kind: "io", message: format!("cannot write {}: {e}", path.display()) };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| fail(&e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| fail(&e))?;
    tmp.as_file().sync_all().map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

/// Sends an artifact to `out`, or to stdout when no path is given.
/// Returns whether a file was written.
pub fn emit(out: Option<&Path>, contents: &str) -> Result<bool, Failure> {
    match out {
        Some(p) => write_atomic(p, contents).map(|()| true),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes()).and_then(|()| stdout.flush()).map_err(|e| Failure {
                code: 1,
                kind: "io",
                message: format!("cannot write stdout: {e}"),
            })?;
            Ok(false)
        }
    }
}
