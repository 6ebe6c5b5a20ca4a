//! Synthetic phantom: known brain-like and artifact sources mixed into data
//! and reference channels, plus scoring against the known clean signal.
//!
//! Signal sources occupy a low band (about 1-20 Hz at 500 Hz sampling) and
//! noise sources a distinct higher band (about 25-80 Hz). Each source is a sum
//! of sinusoids with random frequencies, amplitudes and phases plus a small
//! white component. Every random draw comes from its own ChaCha stream, so
//! changing one parameter (for example the reference sensor noise level)
//! leaves the other draws untouched.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::recording::Recording;
use crate::stats;

const SINUSOIDS_PER_SOURCE: usize = 6;
const WHITE_LEVEL: f64 = 0.1;
const NOISE_SOURCE_GAIN: f64 = 3.0;
const SIGNAL_BAND: (f64, f64) = (0.002, 0.04);
const NOISE_BAND: (f64, f64) = (0.05, 0.16);

/// SNR reported for an exact recovery, in dB.
pub const SNR_CAP_DB: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefMixing {
    /// Gaussian random mixing from noise sources to reference channels.
    #[default]
    Random,
    /// Reference channel `i` records noise source `i` directly. Needs as many
    /// reference channels as noise sources.
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub n_samples: usize,
    pub n_data: usize,
    pub n_noise: usize,
    pub n_signal_sources: usize,
    pub n_noise_sources: usize,
    pub sampling_rate_hz: f64,
    /// Standard deviation of independent white sensor noise on each
    /// reference channel.
    pub ref_sensor_noise_level: f64,
    /// Scale of the noise-to-data mixing; 0 gives noise-free data channels.
    pub noise_to_data_gain: f64,
    pub ref_mixing: RefMixing,
    /// Noise sources are silent before this sample when set.
    pub transient_onset: Option<usize>,
    pub seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            n_samples: 20_000,
            n_data: 64,
            n_noise: 8,
            n_signal_sources: 4,
            n_noise_sources: 8,
            sampling_rate_hz: 500.0,
            ref_sensor_noise_level: 0.0,
            noise_to_data_gain: 1.0,
            ref_mixing: RefMixing::Random,
            transient_onset: None,
            seed: 42,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("samples", self.n_samples),
            ("data channels", self.n_data),
            ("noise channels", self.n_noise),
            ("signal sources", self.n_signal_sources),
            ("noise sources", self.n_noise_sources),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::config(format!("number of {name} must be at least 1")));
            }
        }
        if !(self.sampling_rate_hz > 0.0 && self.sampling_rate_hz.is_finite()) {
            return Err(Error::config("sampling rate must be positive"));
        }
        if !(self.ref_sensor_noise_level >= 0.0 && self.ref_sensor_noise_level.is_finite()) {
            return Err(Error::config("reference sensor noise level must be non-negative"));
        }
        if !self.noise_to_data_gain.is_finite() {
            return Err(Error::config("noise-to-data gain must be finite"));
        }
        if self.ref_mixing == RefMixing::Identity && self.n_noise != self.n_noise_sources {
            return Err(Error::config(format!(
                "identity reference mixing needs {} reference channels, got {}",
                self.n_noise_sources, self.n_noise
            )));
        }
        Ok(())
    }
}

/// A generated scenario with its ground-truth factors.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: ScenarioParams,
    /// T x n_s
    pub signal_sources: DMatrix<f64>,
    /// T x n_n
    pub noise_sources: DMatrix<f64>,
    /// n_s x N_data
    pub signal_mixing: DMatrix<f64>,
    /// n_n x N_data
    pub noise_mixing_data: DMatrix<f64>,
    /// n_n x N_noise
    pub noise_mixing_ref: DMatrix<f64>,
    /// Corrupted data channels.
    pub x: Recording,
    /// Reference noise channels.
    pub y: Recording,
    /// Noise-free data channels.
    pub truth: Recording,
}

// Independent random streams, one per draw site.
const STREAM_SIGNAL_SOURCES: u64 = 1;
const STREAM_NOISE_SOURCES: u64 = 2;
const STREAM_SIGNAL_MIXING: u64 = 3;
const STREAM_NOISE_MIXING_DATA: u64 = 4;
const STREAM_NOISE_MIXING_REF: u64 = 5;
const STREAM_SENSOR_NOISE: u64 = 6;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn band_sources(t: usize, count: usize, fs: f64, band: (f64, f64), gain: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(t, count);
    for j in 0..count {
        let tones: Vec<(f64, f64, f64)> = (0..SINUSOIDS_PER_SOURCE)
            .map(|_| {
                let freq = rng.random_range(band.0..band.1) * fs;
                let amp = rng.random_range(0.5..1.5);
                let phase = rng.random_range(0.0..TAU);
                (freq, amp, phase)
            })
            .collect();
        let col = linalg::col_mut(&mut out, j);
        for (i, v) in col.iter_mut().enumerate() {
            let time = i as f64 / fs;
            let tonal: f64 = tones.iter().map(|(f, a, p)| a * (TAU * f * time + p).sin()).sum();
            let white: f64 = StandardNormal.sample(rng);
            *v = gain * (tonal + WHITE_LEVEL * white);
        }
    }
    out
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Generates a scenario; identical parameters give bit-identical output.
pub fn generate_scenario(params: &ScenarioParams) -> Result<Scenario> {
    params.validate()?;
    let p = params;
    let t = p.n_samples;
    let fs = p.sampling_rate_hz;

    let signal_sources = band_sources(
        t,
        p.n_signal_sources,
        fs,
        SIGNAL_BAND,
        1.0,
        &mut stream(p.seed, STREAM_SIGNAL_SOURCES),
    );
    let mut noise_sources = band_sources(
        t,
        p.n_noise_sources,
        fs,
        NOISE_BAND,
        NOISE_SOURCE_GAIN,
        &mut stream(p.seed, STREAM_NOISE_SOURCES),
    );
    if let Some(onset) = p.transient_onset {
        noise_sources.rows_mut(0, onset.min(t)).fill(0.0);
    }

    let signal_mixing = gaussian(p.n_signal_sources, p.n_data, &mut stream(p.seed, STREAM_SIGNAL_MIXING));
    let noise_mixing_data = gaussian(
        p.n_noise_sources,
        p.n_data,
        &mut stream(p.seed, STREAM_NOISE_MIXING_DATA),
    ) * p.noise_to_data_gain;
    let noise_mixing_ref = match p.ref_mixing {
        RefMixing::Random => gaussian(
            p.n_noise_sources,
            p.n_noise,
            &mut stream(p.seed, STREAM_NOISE_MIXING_REF),
        ),
        RefMixing::Identity => DMatrix::identity(p.n_noise_sources, p.n_noise),
    };

    let truth = &signal_sources * &signal_mixing;
    let x = &truth + &noise_sources * &noise_mixing_data;
    let mut y = &noise_sources * &noise_mixing_ref;
    if p.ref_sensor_noise_level > 0.0 {
        y += gaussian(t, p.n_noise, &mut stream(p.seed, STREAM_SENSOR_NOISE)) * p.ref_sensor_noise_level;
    }

    let data_labels = labels("data", p.n_data);
    Ok(Scenario {
        params: p.clone(),
        x: Recording::new(x, data_labels.clone(), fs)?,
        y: Recording::new(y, labels("ref", p.n_noise), fs)?,
        truth: Recording::new(truth, data_labels, fs)?,
        signal_sources,
        noise_sources,
        signal_mixing,
        noise_mixing_data,
        noise_mixing_ref,
    })
}

/// Per-channel cleaning quality. `None` marks a metric that is undefined
/// for the channel (zero-variance truth or output).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScore {
    pub corr_clean: Option<f64>,
    pub corr_raw: Option<f64>,
    pub snr_raw_db: Option<f64>,
    pub snr_clean_db: Option<f64>,
    pub snr_improvement_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleaningScore {
    pub channels: Vec<ChannelScore>,
    pub mean_corr_clean: Option<f64>,
    pub mean_corr_raw: Option<f64>,
    pub mean_snr_improvement_db: Option<f64>,
}

/// `10 log10(var(truth) / var(recording - truth))`, capped at
/// [`SNR_CAP_DB`].
fn snr_db(recording: &[f64], truth: &[f64]) -> Option<f64> {
    let signal = stats::variance(truth);
    if signal == 0.0 {
        return None;
    }
    let residual: Vec<f64> = recording.iter().zip(truth).map(|(r, t)| r - t).collect();
    let noise = stats::variance(&residual);
    if noise == 0.0 {
        return Some(SNR_CAP_DB);
    }
    Some((10.0 * (signal / noise).log10()).min(SNR_CAP_DB))
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Scores a cleaned recording against the known truth.
pub fn score_cleaning(x: &Recording, x_clean: &Recording, truth: &Recording) -> Result<CleaningScore> {
    let shape = truth.samples().shape();
    if x.samples().shape() != shape || x_clean.samples().shape() != shape {
        return Err(Error::shape(format!(
            "scoring needs equal shapes: raw {:?}, clean {:?}, truth {:?}",
            x.samples().shape(),
            x_clean.samples().shape(),
            shape
        )));
    }
    let channels: Vec<ChannelScore> = (0..shape.1)
        .map(|j| {
            let raw = linalg::col(x.samples(), j);
            let clean = linalg::col(x_clean.samples(), j);
            let tr = linalg::col(truth.samples(), j);
            let truth_flat = stats::variance(tr) == 0.0;
            let snr_raw_db = snr_db(raw, tr);
            let snr_clean_db = snr_db(clean, tr);
            ChannelScore {
                corr_clean: if truth_flat {
                    None
                } else {
                    stats::correlation(clean, tr)
                },
                corr_raw: if truth_flat { None } else { stats::correlation(raw, tr) },
                snr_improvement_db: snr_clean_db.zip(snr_raw_db).map(|(c, r)| c - r),
                snr_raw_db,
                snr_clean_db,
            }
        })
        .collect();
    Ok(CleaningScore {
        mean_corr_clean: mean_defined(channels.iter().map(|c| c.corr_clean)),
        mean_corr_raw: mean_defined(channels.iter().map(|c| c.corr_raw)),
        mean_snr_improvement_db: mean_defined(channels.iter().map(|c| c.snr_improvement_db)),
        channels,
    })
}
