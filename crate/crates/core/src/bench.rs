//! Wall-clock throughput of batch and sliding-window cleaning on synthetic
//! input.

use std::time::{Duration, Instant};

use crate::cleaner::{clean_batch, clean_sliding, CleanConfig};
use crate::error::{Error, Result};
use crate::synth::{generate_scenario, ScenarioParams};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchParams {
    pub n_samples: usize,
    pub n_data: usize,
    pub n_noise: usize,
    /// 0 skips the sliding-window measurement.
    pub window_len: usize,
    pub window_hop: Option<usize>,
    pub repetitions: usize,
    pub sampling_rate_hz: f64,
    pub thresh: f64,
    pub seed: u64,
}

impl Default for BenchParams {
    fn default() -> Self {
        BenchParams {
            n_samples: 10_000,
            n_data: 64,
            n_noise: 8,
            window_len: 500,
            window_hop: None,
            repetitions: 3,
            sampling_rate_hz: 500.0,
            thresh: 0.5,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlidingTiming {
    pub window_len: usize,
    pub hop: usize,
    pub windows_processed: usize,
    /// Fastest of the repetitions, whole record.
    pub seconds: f64,
    pub seconds_per_window: f64,
    pub samples_per_second: f64,
    /// Seconds of recording cleaned per second of wall-clock time.
    pub realtime_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub params: BenchParams,
    /// Fastest of the repetitions.
    pub batch_seconds: f64,
    pub batch_samples_per_second: f64,
    pub batch_realtime_factor: f64,
    pub sliding: Option<SlidingTiming>,
}

fn fastest<F: FnMut() -> Result<()>>(reps: usize, mut f: F) -> Result<Duration> {
    let mut best = Duration::MAX;
    for _ in 0..reps {
        let start = Instant::now();
        f()?;
        best = best.min(start.elapsed());
    }
    Ok(best)
}

pub fn benchmark_throughput(params: &BenchParams) -> Result<BenchReport> {
    if params.repetitions == 0 {
        return Err(Error::config("repetitions must be at least 1"));
    }
    let scenario = generate_scenario(&ScenarioParams {
        n_samples: params.n_samples,
        n_data: params.n_data,
        n_noise: params.n_noise,
        n_signal_sources: 4.min(params.n_data),
        n_noise_sources: params.n_noise,
        sampling_rate_hz: params.sampling_rate_hz,
        ref_sensor_noise_level: 0.1,
        seed: params.seed,
        ..ScenarioParams::default()
    })?;
    let duration_s = params.n_samples as f64 / params.sampling_rate_hz;

    let batch_cfg = CleanConfig::new(params.thresh);
    let batch = fastest(params.repetitions, || {
        clean_batch(&scenario.x, &scenario.y, &batch_cfg).map(|_| ())
    })?
    .as_secs_f64();

    let sliding = if params.window_len > 0 {
        let cfg = CleanConfig::new(params.thresh).with_window(params.window_len, params.window_hop);
        let mut windows = 0;
        let secs = fastest(params.repetitions, || {
            let (_, report) = clean_sliding(&scenario.x, &scenario.y, &cfg)?;
            windows = report.windows_processed;
            Ok(())
        })?
        .as_secs_f64();
        Some(SlidingTiming {
            window_len: params.window_len,
            hop: cfg.hop(),
            windows_processed: windows,
            seconds: secs,
            seconds_per_window: secs / windows as f64,
            samples_per_second: params.n_samples as f64 / secs,
            realtime_factor: duration_s / secs,
        })
    } else {
        None
    };

    Ok(BenchReport {
        params: params.clone(),
        batch_seconds: batch,
        batch_samples_per_second: params.n_samples as f64 / batch,
        batch_realtime_factor: duration_s / batch,
        sliding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_profile_runs() {
        let report = benchmark_throughput(&BenchParams {
            n_samples: 2000,
            n_data: 8,
            n_noise: 2,
            window_len: 250,
            repetitions: 1,
            ..BenchParams::default()
        })
        .unwrap();
        assert!(report.batch_samples_per_second > 0.0);
        let sliding = report.sliding.unwrap();
        assert_eq!(sliding.windows_processed, 8);
        assert_eq!(sliding.hop, 250);
    }

    #[test]
    fn zero_repetitions_rejected() {
        let p = BenchParams {
            repetitions: 0,
            ..BenchParams::default()
        };
        assert!(matches!(benchmark_throughput(&p), Err(Error::Config(_))));
    }
}
