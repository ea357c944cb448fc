//! passmine: discovery of recurring pass sequences from soccer event
//! logs, and the season-level tactical analytics built on top of them.
//!
//! The pipeline is ingest -> preprocess -> discover -> analyze ->
//! report. Each stage is a pure function over its inputs; the CLI in
//! `src/main.rs` wires them to files.

pub mod analytics;
pub mod config;
pub mod discovery;
pub mod events;
pub mod preprocess;
pub mod report;
pub mod synth;

use serde::Serialize;

/// Serialize with sorted object keys and a trailing newline, so output
/// files are byte-stable across runs and worker counts.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}
