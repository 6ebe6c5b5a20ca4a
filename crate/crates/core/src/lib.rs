//! Artifact removal for multichannel recordings using reference noise
//! channels.
//!
//! Canonical correlation analysis finds the subspaces that the corrupted data
//! and the reference recordings share. Components whose squared canonical
//! correlation reaches a threshold are regressed out of the data. Cleaning
//! can run on the whole record, on sliding windows, or through a fitted
//! static spatial filter.
//!
//! ```
//! use icanclean::{clean_batch, CleanConfig, generate_scenario, ScenarioParams};
//!
//! let scenario = generate_scenario(&ScenarioParams {
//!     n_samples: 2000,
//!     n_data: 8,
//!     n_noise: 2,
//!     n_signal_sources: 2,
//!     n_noise_sources: 2,
//!     ..ScenarioParams::default()
//! })
//! .unwrap();
//! let (clean, report) = clean_batch(&scenario.x, &scenario.y, &CleanConfig::new(0.5)).unwrap();
//! assert_eq!(report.bad_indices, vec![0, 1]);
//! assert_eq!(clean.n_channels(), 8);
//! ```

pub mod bench;
pub mod cca;
pub mod cleaner;
pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod recording;
pub mod report;
pub mod stats;
pub mod synth;

pub use cca::{canoncorr, CcaResult};
pub use cleaner::{
    apply_spatial_filter, clean, clean_batch, clean_sliding, fit_spatial_filter, project_noise, run_pipeline,
    select_bad_components, CleanConfig, CleanReport, ComponentSource, PipelineTrace, Selection, SpatialFilter,
};
pub use error::{Error, Result};
pub use io::{read_recording, write_recording};
pub use linalg::{estimate_rank, least_squares_solve, mean_center};
pub use recording::Recording;
pub use synth::{generate_scenario, score_cleaning, Scenario, ScenarioParams};
