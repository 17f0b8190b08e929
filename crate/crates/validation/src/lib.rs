//! Acceptance checks for prunekit live in `tests/acceptance.rs`.
