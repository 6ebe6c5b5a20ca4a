use nalgebra::DMatrix;

use super::{check_aligned, run_pipeline, variance_fractions, CleanConfig, CleanReport, WindowModel, WindowSummary};
use crate::cca::min_samples;
use crate::error::{Error, Result};
use crate::recording::Recording;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Span {
    pub start: usize,
    pub len: usize,
    /// Too short to fit; reuse the previous fitted window.
    pub reuse: bool,
}

/// Window layout for a record of `total` samples: full windows at multiples
/// of `hop`, then a trailing partial window if samples remain. A partial
/// window with at least `required` samples is fitted on its own; a shorter
/// one covers only the uncovered tail and reuses the last fit.
pub(crate) fn plan_windows(total: usize, len: usize, hop: usize, required: usize) -> Result<Vec<Span>> {
    if total < len {
        if total < required {
            return Err(Error::InsufficientSamples {
                samples: total,
                required,
            });
        }
        return Ok(vec![Span {
            start: 0,
            len: total,
            reuse: false,
        }]);
    }
    let mut spans: Vec<Span> = (0..)
        .map(|k| k * hop)
        .take_while(|s| s + len <= total)
        .map(|start| Span {
            start,
            len,
            reuse: false,
        })
        .collect();
    let last_start = spans.last().expect("total >= len gives one window").start;
    let covered = last_start + len;
    if covered < total {
        let next = last_start + hop;
        if total - next >= required {
            spans.push(Span {
                start: next,
                len: total - next,
                reuse: false,
            });
        } else {
            spans.push(Span {
                start: covered,
                len: total - covered,
                reuse: true,
            });
        }
    }
    Ok(spans)
}

/// Triangular crossfade weight for position `j` of a window of `len` samples.
fn crossfade_weight(j: usize, len: usize) -> f64 {
    (j + 1).min(len - j) as f64
}

/// Cleans each window independently with its own means and CCA fit, then
/// stitches the results. Overlapping windows are blended with normalized
/// triangular weights; without overlap the windows are concatenated.
pub fn clean_sliding(x: &Recording, y: &Recording, config: &CleanConfig) -> Result<(Recording, CleanReport)> {
    config.validate()?;
    if config.window_len == 0 {
        return Err(Error::config("sliding-window cleaning needs a window length > 0"));
    }
    check_aligned(x, y)?;
    let required = min_samples(x.n_channels(), y.n_channels());
    if config.window_len < required {
        return Err(Error::WindowTooShort {
            window: config.window_len,
            required,
        });
    }
    let hop = config.hop();
    let total = x.n_samples();
    let spans = plan_windows(total, config.window_len, hop, required)?;
    let overlapping = hop < config.window_len;

    let (xs, ys) = (x.samples(), y.samples());
    let n = x.n_channels();
    let mut acc = DMatrix::<f64>::zeros(total, n);
    let mut weight = vec![0.0; total];
    let mut last_model: Option<WindowModel> = None;
    let mut windows = Vec::with_capacity(spans.len());

    for span in &spans {
        let xw = xs.rows(span.start, span.len).into_owned();
        let yw = ys.rows(span.start, span.len).into_owned();
        let cleaned = if span.reuse {
            let model = last_model.as_ref().expect("a fitted window precedes any reuse");
            windows.push(WindowSummary {
                start: span.start,
                len: span.len,
                fitted: false,
                correlations: Vec::new(),
                bad_indices: Vec::new(),
            });
            model.apply(&xw, &yw)
        } else {
            let trace = run_pipeline(&xw, &yw, config)?;
            last_model = Some(trace.window_model(config.source));
            windows.push(WindowSummary {
                start: span.start,
                len: span.len,
                fitted: true,
                correlations: trace.cca.correlations.clone(),
                bad_indices: trace.selection.bad_indices.clone(),
            });
            trace.x_clean
        };

        for j in 0..span.len {
            let w = if overlapping && !span.reuse {
                crossfade_weight(j, span.len)
            } else {
                1.0
            };
            let row = span.start + j;
            weight[row] += w;
            for c in 0..n {
                acc[(row, c)] += w * cleaned[(j, c)];
            }
        }
    }

    for (row, &w) in weight.iter().enumerate() {
        debug_assert!(w > 0.0, "sample {row} not covered by any window");
        if w != 1.0 {
            for c in 0..n {
                acc[(row, c)] /= w;
            }
        }
    }

    let n_comp = windows.iter().map(|w| w.correlations.len()).max().unwrap_or(0);
    let mut correlations = vec![0.0f64; n_comp];
    let mut bad_indices: Vec<usize> = Vec::new();
    for w in &windows {
        for (i, r) in w.correlations.iter().enumerate() {
            correlations[i] = correlations[i].max(*r);
        }
        bad_indices.extend(&w.bad_indices);
    }
    bad_indices.sort_unstable();
    bad_indices.dedup();

    let removed = xs - &acc;
    let report = CleanReport {
        threshold: config.thresh,
        source: config.source,
        correlations,
        bad_indices,
        n_comp,
        variance_removed_per_channel: variance_fractions(&removed, xs),
        windows_processed: windows.len(),
        windows,
    };
    Ok((x.with_samples(acc)?, report))
}
