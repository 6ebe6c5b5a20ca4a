//! Removal of reference-correlated subspaces from data recordings.
//!
//! The pipeline runs CCA between the data and reference recordings, keeps
//! every component whose squared canonical correlation reaches the
//! threshold, regresses the mean-centered data onto those components and
//! subtracts the fitted part from the raw data.

mod sliding;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::cca::{self, CcaResult};
use crate::error::{Error, Result};
use crate::linalg;
use crate::recording::Recording;
use crate::stats;

pub use sliding::clean_sliding;

/// Which set of canonical variates supplies the components to remove.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ComponentSource {
    /// Variates computed from the data channels (`U`).
    #[default]
    DataVariates,
    /// Variates computed from the reference channels (`V`).
    NoiseVariates,
}

impl fmt::Display for ComponentSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentSource::DataVariates => f.write_str("u"),
            ComponentSource::NoiseVariates => f.write_str("v"),
        }
    }
}

impl FromStr for ComponentSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u" | "U" => Ok(ComponentSource::DataVariates),
            "v" | "V" => Ok(ComponentSource::NoiseVariates),
            other => Err(Error::config(format!(
                "unknown component source {other:?}, expected u or v"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanConfig {
    /// Threshold on the squared canonical correlation, in [0, 1].
    pub thresh: f64,
    pub source: ComponentSource,
    /// Samples per window; 0 cleans the whole record at once.
    pub window_len: usize,
    /// Samples between window starts; `None` means `window_len`.
    pub window_hop: Option<usize>,
}

impl CleanConfig {
    pub fn new(thresh: f64) -> Self {
        CleanConfig {
            thresh,
            source: ComponentSource::DataVariates,
            window_len: 0,
            window_hop: None,
        }
    }

    pub fn with_source(mut self, source: ComponentSource) -> Self {
        self.source = source;
        self
    }

    pub fn with_window(mut self, window_len: usize, window_hop: Option<usize>) -> Self {
        self.window_len = window_len;
        self.window_hop = window_hop;
        self
    }

    pub fn hop(&self) -> usize {
        self.window_hop.unwrap_or(self.window_len)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.thresh) {
            return Err(Error::config(format!(
                "threshold must lie in [0, 1], got {}",
                self.thresh
            )));
        }
        if self.window_len > 0 {
            let hop = self.hop();
            if hop == 0 || hop > self.window_len {
                return Err(Error::config(format!(
                    "hop must be in 1..={}, got {hop}",
                    self.window_len
                )));
            }
        } else if self.window_hop.is_some_and(|h| h > 0) {
            return Err(Error::config("hop given without a window length"));
        }
        Ok(())
    }
}

/// Components chosen for removal. Indices are zero-based positions in the
/// CCA output.
#[derive(Debug, Clone)]
pub struct Selection {
    pub bad_indices: Vec<usize>,
    /// T x n_bad activity of the selected components.
    pub bad_activity: DMatrix<f64>,
}

impl Selection {
    pub fn n_bad(&self) -> usize {
        self.bad_indices.len()
    }
}

/// Selects every component with `correlation^2 >= thresh`.
pub fn select_bad_components(cca: &CcaResult, config: &CleanConfig) -> Selection {
    let bad_indices: Vec<usize> = cca
        .correlations
        .iter()
        .enumerate()
        .filter(|(_, r)| *r * *r >= config.thresh)
        .map(|(i, _)| i)
        .collect();
    let variates = match config.source {
        ComponentSource::DataVariates => &cca.u_variates,
        ComponentSource::NoiseVariates => &cca.v_variates,
    };
    Selection {
        bad_activity: variates.select_columns(&bad_indices),
        bad_indices,
    }
}

#[derive(Debug, Clone)]
pub struct NoiseProjection {
    /// n_bad x N_data least-squares map from component space to channels.
    pub projection: DMatrix<f64>,
    /// T x N_data; the part of the data explained by the selected components.
    pub projected_noise: DMatrix<f64>,
}

/// Regresses `x_centered` onto the selected component activity.
pub fn project_noise(selection: &Selection, x_centered: &DMatrix<f64>) -> Result<NoiseProjection> {
    let (t, n) = x_centered.shape();
    if selection.bad_activity.nrows() != t {
        return Err(Error::shape(format!(
            "component activity has {} samples, data has {t}",
            selection.bad_activity.nrows()
        )));
    }
    if selection.n_bad() == 0 {
        return Ok(NoiseProjection {
            projection: DMatrix::zeros(0, n),
            projected_noise: DMatrix::zeros(t, n),
        });
    }
    let projection = linalg::least_squares_solve(&selection.bad_activity, x_centered)?;
    let projected_noise = &selection.bad_activity * &projection;
    Ok(NoiseProjection {
        projection,
        projected_noise,
    })
}

/// Every intermediate of one pass of the cleaning pipeline.
#[derive(Debug, Clone)]
pub struct PipelineTrace {
    pub cca: CcaResult,
    pub x_centered: DMatrix<f64>,
    pub x_mean: DVector<f64>,
    pub selection: Selection,
    pub projection: DMatrix<f64>,
    pub projected_noise: DMatrix<f64>,
    pub x_clean: DMatrix<f64>,
}

/// Runs CCA, selection, projection and subtraction on raw sample matrices.
pub fn run_pipeline(x: &DMatrix<f64>, y: &DMatrix<f64>, config: &CleanConfig) -> Result<PipelineTrace> {
    config.validate()?;
    let cca = cca::canoncorr(x, y)?;
    let (x_centered, x_mean) = linalg::mean_center_unchecked(x);
    let selection = select_bad_components(&cca, config);
    let NoiseProjection {
        projection,
        projected_noise,
    } = project_noise(&selection, &x_centered)?;
    let x_clean = x - &projected_noise;
    Ok(PipelineTrace {
        cca,
        x_centered,
        x_mean,
        selection,
        projection,
        projected_noise,
        x_clean,
    })
}

impl PipelineTrace {
    fn window_model(&self, source: ComponentSource) -> WindowModel {
        let idx = &self.selection.bad_indices;
        let unmix_bad = match source {
            ComponentSource::DataVariates => self.cca.a_unmix.select_columns(idx),
            ComponentSource::NoiseVariates => self.cca.b_unmix.select_columns(idx),
        };
        WindowModel {
            source,
            x_mean: self.cca.x_mean.clone(),
            y_mean: self.cca.y_mean.clone(),
            unmix_bad,
            projection: self.projection.clone(),
        }
    }
}

/// A fitted removal step that can be replayed on other samples.
#[derive(Debug, Clone)]
pub(crate) struct WindowModel {
    source: ComponentSource,
    x_mean: DVector<f64>,
    y_mean: DVector<f64>,
    unmix_bad: DMatrix<f64>,
    projection: DMatrix<f64>,
}

impl WindowModel {
    pub(crate) fn apply(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
        if self.projection.nrows() == 0 {
            return x.clone();
        }
        let (input, mean) = match self.source {
            ComponentSource::DataVariates => (x, &self.x_mean),
            ComponentSource::NoiseVariates => (y, &self.y_mean),
        };
        let mut centered = input.clone();
        for (j, mu) in mean.iter().enumerate() {
            linalg::col_mut(&mut centered, j).iter_mut().for_each(|v| *v -= mu);
        }
        let activity = centered * &self.unmix_bad;
        x - activity * &self.projection
    }
}

/// Per-window diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSummary {
    pub start: usize,
    pub len: usize,
    /// False when the window reused the previous window's fit.
    pub fitted: bool,
    pub correlations: Vec<f64>,
    pub bad_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanReport {
    pub threshold: f64,
    pub source: ComponentSource,
    /// Canonical correlations. For multi-window runs, the maximum over
    /// windows at each component position.
    pub correlations: Vec<f64>,
    /// Zero-based removed components; the union over windows when sliding.
    pub bad_indices: Vec<usize>,
    pub n_comp: usize,
    /// Fraction of each channel's variance that was removed, in [0, 1].
    pub variance_removed_per_channel: Vec<f64>,
    pub windows_processed: usize,
    pub windows: Vec<WindowSummary>,
}

/// `var(removed_j) / var(reference_j)` clamped to [0, 1]; zero for a flat
/// reference channel.
pub(crate) fn variance_fractions(removed: &DMatrix<f64>, reference: &DMatrix<f64>) -> Vec<f64> {
    (0..reference.ncols())
        .map(|j| {
            let denom = stats::variance(linalg::col(reference, j));
            if denom == 0.0 {
                return 0.0;
            }
            let frac = stats::variance(linalg::col(removed, j)) / denom;
            if frac > 1.0 && frac <= 1.0 + 1e-12 {
                1.0
            } else {
                frac.clamp(0.0, 1.0)
            }
        })
        .collect()
}

pub(crate) fn check_aligned(x: &Recording, y: &Recording) -> Result<()> {
    if x.n_samples() != y.n_samples() {
        return Err(Error::shape(format!(
            "data has {} samples but reference has {}",
            x.n_samples(),
            y.n_samples()
        )));
    }
    let (fx, fy) = (x.sampling_rate_hz(), y.sampling_rate_hz());
    if (fx - fy).abs() > 1e-9 * fx.max(fy) {
        return Err(Error::shape(format!(
            "data sampled at {fx} Hz but reference at {fy} Hz"
        )));
    }
    Ok(())
}

/// Cleans the whole record in one pass.
pub fn clean_batch(x: &Recording, y: &Recording, config: &CleanConfig) -> Result<(Recording, CleanReport)> {
    config.validate()?;
    check_aligned(x, y)?;
    if config.window_len != 0 && config.window_len < x.n_samples() {
        return Err(Error::config(format!(
            "batch cleaning needs window length 0 or at least {} samples, got {}",
            x.n_samples(),
            config.window_len
        )));
    }
    let trace = run_pipeline(x.samples(), y.samples(), config)?;
    let report = CleanReport {
        threshold: config.thresh,
        source: config.source,
        correlations: trace.cca.correlations.clone(),
        bad_indices: trace.selection.bad_indices.clone(),
        n_comp: trace.cca.n_comp,
        variance_removed_per_channel: variance_fractions(&trace.projected_noise, &trace.x_centered),
        windows_processed: 1,
        windows: vec![WindowSummary {
            start: 0,
            len: x.n_samples(),
            fitted: true,
            correlations: trace.cca.correlations.clone(),
            bad_indices: trace.selection.bad_indices.clone(),
        }],
    };
    Ok((x.with_samples(trace.x_clean)?, report))
}

/// Batch cleaning when `window_len` is 0, sliding-window cleaning otherwise.
pub fn clean(x: &Recording, y: &Recording, config: &CleanConfig) -> Result<(Recording, CleanReport)> {
    if config.window_len == 0 {
        clean_batch(x, y, config)
    } else {
        clean_sliding(x, y, config)
    }
}

/// A fixed linear map on data channels:
/// `out = (x - train_mean) * matrix + train_mean`.
#[derive(Debug, Clone)]
pub struct SpatialFilter {
    /// N_data x N_data; the identity when nothing was selected.
    pub matrix: DMatrix<f64>,
    pub train_mean: DVector<f64>,
    pub threshold: f64,
    pub n_bad: usize,
    pub correlations: Vec<f64>,
    // matrix = I - removal; applying as x - (x - mean) * removal keeps the
    // empty filter an exact no-op.
    removal: DMatrix<f64>,
}

impl SpatialFilter {
    pub fn n_channels(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Fits the static filter equivalent to [`clean_batch`] on this record.
/// Only data-variate selection can be expressed without reference channels.
pub fn fit_spatial_filter(x: &Recording, y: &Recording, config: &CleanConfig) -> Result<SpatialFilter> {
    config.validate()?;
    if config.source == ComponentSource::NoiseVariates {
        return Err(Error::Unsupported(
            "spatial filters require data-variate (u) components; reference-variate components need the reference channels at application time".into(),
        ));
    }
    check_aligned(x, y)?;
    let trace = run_pipeline(x.samples(), y.samples(), config)?;
    let n = x.n_channels();
    let a_bad = trace.cca.a_unmix.select_columns(&trace.selection.bad_indices);
    let removal = if trace.selection.n_bad() == 0 {
        DMatrix::zeros(n, n)
    } else {
        a_bad * &trace.projection
    };
    Ok(SpatialFilter {
        matrix: DMatrix::identity(n, n) - &removal,
        train_mean: trace.x_mean,
        threshold: config.thresh,
        n_bad: trace.selection.n_bad(),
        correlations: trace.cca.correlations,
        removal,
    })
}

/// Applies a fitted filter to new samples; any number of rows, including one.
pub fn apply_spatial_filter(x_new: &Recording, filter: &SpatialFilter) -> Result<Recording> {
    if x_new.n_channels() != filter.n_channels() {
        return Err(Error::shape(format!(
            "filter expects {} channels, recording has {}",
            filter.n_channels(),
            x_new.n_channels()
        )));
    }
    if filter.n_bad == 0 {
        return Ok(x_new.clone());
    }
    let mut centered = x_new.samples().clone();
    for (j, mu) in filter.train_mean.iter().enumerate() {
        linalg::col_mut(&mut centered, j).iter_mut().for_each(|v| *v -= mu);
    }
    let out = x_new.samples() - centered * &filter.removal;
    x_new.with_samples(out)
}
