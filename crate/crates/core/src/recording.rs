use std::collections::HashSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// A multichannel recording: samples (time x channel), one label per channel
/// and a uniform sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    samples: DMatrix<f64>,
    channel_labels: Vec<String>,
    sampling_rate_hz: f64,
    start_time_s: f64,
}

impl Recording {
    pub fn new(samples: DMatrix<f64>, channel_labels: Vec<String>, sampling_rate_hz: f64) -> Result<Self> {
        Self::with_start_time(samples, channel_labels, sampling_rate_hz, 0.0)
    }

    pub fn with_start_time(
        samples: DMatrix<f64>,
        channel_labels: Vec<String>,
        sampling_rate_hz: f64,
        start_time_s: f64,
    ) -> Result<Self> {
        linalg::validate_matrix(&samples)?;
        if channel_labels.len() != samples.ncols() {
            return Err(Error::shape(format!(
                "{} channel labels for {} columns",
                channel_labels.len(),
                samples.ncols()
            )));
        }
        let mut seen = HashSet::new();
        for label in &channel_labels {
            if label.is_empty() {
                return Err(Error::config("channel labels must be non-empty"));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::config(format!("duplicate channel label {label:?}")));
            }
        }
        if !(sampling_rate_hz > 0.0 && sampling_rate_hz.is_finite()) {
            return Err(Error::config(format!(
                "sampling rate must be positive, got {sampling_rate_hz}"
            )));
        }
        if !start_time_s.is_finite() {
            return Err(Error::config("start time must be finite"));
        }
        Ok(Recording {
            samples,
            channel_labels,
            sampling_rate_hz,
            start_time_s,
        })
    }

    /// Labels `prefix1 .. prefixN`.
    pub fn with_numbered_labels(samples: DMatrix<f64>, prefix: &str, sampling_rate_hz: f64) -> Result<Self> {
        let labels = (1..=samples.ncols()).map(|i| format!("{prefix}{i}")).collect();
        Self::new(samples, labels, sampling_rate_hz)
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.channel_labels
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.sampling_rate_hz
    }

    pub fn start_time_s(&self) -> f64 {
        self.start_time_s
    }

    pub fn n_samples(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.samples.ncols()
    }

    /// Time stamp of sample `i`.
    pub fn time_of(&self, i: usize) -> f64 {
        self.start_time_s + i as f64 / self.sampling_rate_hz
    }

    /// Same labels, rate and start time with new samples of identical shape.
    pub fn with_samples(&self, samples: DMatrix<f64>) -> Result<Self> {
        if samples.shape() != self.samples.shape() {
            return Err(Error::shape(format!(
                "replacement samples are {:?}, expected {:?}",
                samples.shape(),
                self.samples.shape()
            )));
        }
        linalg::validate_matrix(&samples)?;
        Ok(Recording {
            samples,
            ..self.clone()
        })
    }

    /// Rows `start .. start + len` as a new recording with a shifted start time.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.n_samples() {
            return Err(Error::shape(format!(
                "slice {start}..{} out of range for {} samples",
                start + len,
                self.n_samples()
            )));
        }
        Ok(Recording {
            samples: self.samples.rows(start, len).into_owned(),
            channel_labels: self.channel_labels.clone(),
            sampling_rate_hz: self.sampling_rate_hz,
            start_time_s: self.time_of(start),
        })
    }

    pub fn into_samples(self) -> DMatrix<f64> {
        self.samples
    }
}
