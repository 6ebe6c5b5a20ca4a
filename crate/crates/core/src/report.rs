//! Line-oriented `key = value` reports.
//!
//! Clean report keys, in order:
//!
//! ```text
//! report = clean
//! version = 1
//! mode = batch | sliding
//! threshold = <r^2 threshold>
//! source = u | v
//! n_comp = <count>
//! correlations = <comma-separated, descending>
//! n_bad = <count>
//! bad_components = <comma-separated, numbered from 1>
//! variance_removed = <comma-separated, one per data channel>
//! window_len = <samples, 0 for batch>
//! window_hop = <samples, 0 for batch>
//! windows_processed = <count>
//! window_starts = <comma-separated sample offsets>
//! window_bad_counts = <comma-separated>
//! elapsed_seconds = <wall clock>
//! ```
//!
//! Empty lists are written as an empty value. Lines starting with `#` are
//! comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use crate::bench::BenchReport;
use crate::cleaner::{CleanConfig, CleanReport};

pub const REPORT_VERSION: u32 = 1;

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

pub fn clean_report_text(report: &CleanReport, config: &CleanConfig, elapsed: Duration) -> String {
    let mode = if config.window_len == 0 { "batch" } else { "sliding" };
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("report", "clean".into());
    kv("version", REPORT_VERSION.to_string());
    kv("mode", mode.into());
    kv("threshold", report.threshold.to_string());
    kv("source", report.source.to_string());
    kv("n_comp", report.n_comp.to_string());
    kv("correlations", join(&report.correlations));
    kv("n_bad", report.bad_indices.len().to_string());
    kv("bad_components", join(report.bad_indices.iter().map(|i| i + 1)));
    kv("variance_removed", join(&report.variance_removed_per_channel));
    kv("window_len", config.window_len.to_string());
    let hop = if config.window_len == 0 { 0 } else { config.hop() };
    kv("window_hop", hop.to_string());
    kv("windows_processed", report.windows_processed.to_string());
    kv("window_starts", join(report.windows.iter().map(|w| w.start)));
    kv(
        "window_bad_counts",
        join(report.windows.iter().map(|w| w.bad_indices.len())),
    );
    kv("elapsed_seconds", elapsed.as_secs_f64().to_string());
    out
}

pub fn bench_report_text(report: &BenchReport) -> String {
    let p = &report.params;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("report", "bench".into());
    kv("version", REPORT_VERSION.to_string());
    kv("samples", p.n_samples.to_string());
    kv("data_channels", p.n_data.to_string());
    kv("noise_channels", p.n_noise.to_string());
    kv("sampling_rate_hz", p.sampling_rate_hz.to_string());
    kv("repetitions", p.repetitions.to_string());
    kv("threshold", p.thresh.to_string());
    kv("batch_seconds", report.batch_seconds.to_string());
    kv("batch_samples_per_second", report.batch_samples_per_second.to_string());
    kv("batch_realtime_factor", report.batch_realtime_factor.to_string());
    if let Some(s) = &report.sliding {
        kv("window_len", s.window_len.to_string());
        kv("window_hop", s.hop.to_string());
        kv("windows_processed", s.windows_processed.to_string());
        kv("sliding_seconds", s.seconds.to_string());
        kv("sliding_seconds_per_window", s.seconds_per_window.to_string());
        kv("sliding_samples_per_second", s.samples_per_second.to_string());
        kv("sliding_realtime_factor", s.realtime_factor.to_string());
    }
    out
}

/// Parses `key = value` lines, skipping blanks and `#` comments. Returns
/// `None` on a line without `=` or a repeated key.
pub fn parse_report(text: &str) -> Option<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=')?;
        if map.insert(k.trim().to_owned(), v.trim().to_owned()).is_some() {
            return None;
        }
    }
    Some(map)
}

/// Splits a comma-separated report value; empty yields an empty list.
pub fn parse_list<T: std::str::FromStr>(value: &str) -> Option<Vec<T>> {
    if value.is_empty() {
        return Some(Vec::new());
    }
    value.split(',').map(|s| s.trim().parse().ok()).collect()
}
