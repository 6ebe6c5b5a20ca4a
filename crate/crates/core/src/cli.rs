//! Command-line entry points.
//!
//! Exit codes: 0 success, 2 invalid arguments or configuration, 3 unreadable
//! or malformed input files, 4 numerical or precondition failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{benchmark_throughput, BenchParams};
use crate::cleaner::{clean, CleanConfig, ComponentSource};
use crate::error::Error;
use crate::io::{read_recording, write_atomically, write_recording};
use crate::report::{bench_report_text, clean_report_text};
use crate::synth::{generate_scenario, RefMixing, ScenarioParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "icanclean",
    version,
    about = "Remove reference-correlated noise from multichannel recordings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean a data recording using a reference noise recording
    Clean(CleanArgs),
    /// Generate a synthetic scenario with known ground truth
    Synth(SynthArgs),
    /// Measure cleaning throughput on synthetic data
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceArg {
    U,
    V,
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

#[derive(Debug, Args)]
struct CleanArgs {
    /// Corrupted data recording (CSV)
    #[arg(long)]
    data: PathBuf,
    /// Reference noise recording (CSV), time-aligned with --data
    #[arg(long)]
    noise: PathBuf,
    /// Where to write the cleaned recording (CSV)
    #[arg(long)]
    out: PathBuf,
    /// Squared-correlation threshold; components with r^2 >= thresh are removed
    #[arg(long, value_parser = unit_interval)]
    thresh: f64,
    /// Remove data-side (u) or reference-side (v) components
    #[arg(long, value_enum, default_value = "u")]
    source: SourceArg,
    /// Samples per window; 0 cleans the whole record at once
    #[arg(long, default_value_t = 0)]
    window: usize,
    /// Samples between window starts (defaults to --window)
    #[arg(long)]
    hop: Option<usize>,
    /// Optional path for a key-value report
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long, default_value_t = 64)]
    data_channels: usize,
    #[arg(long, default_value_t = 8)]
    noise_channels: usize,
    #[arg(long, default_value_t = 4)]
    signal_sources: usize,
    #[arg(long, default_value_t = 8)]
    noise_sources: usize,
    #[arg(long, default_value_t = 500.0)]
    rate: f64,
    /// Standard deviation of white sensor noise on reference channels
    #[arg(long, default_value_t = 0.0)]
    ref_noise: f64,
    /// Scale of the noise mixing into data channels
    #[arg(long, default_value_t = 1.0)]
    noise_gain: f64,
    /// Reference channels record the noise sources directly
    #[arg(long)]
    identity_ref: bool,
    /// Noise sources start at this sample
    #[arg(long)]
    transient_onset: Option<usize>,
    #[arg(long)]
    data_out: PathBuf,
    #[arg(long)]
    noise_out: PathBuf,
    #[arg(long)]
    truth_out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 64)]
    data_channels: usize,
    #[arg(long, default_value_t = 8)]
    noise_channels: usize,
    /// Sliding window length; 0 measures batch only
    #[arg(long, default_value_t = 500)]
    window: usize,
    #[arg(long)]
    hop: Option<usize>,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    #[arg(long, default_value_t = 500.0)]
    rate: f64,
    #[arg(long, default_value_t = 0.5, value_parser = unit_interval)]
    thresh: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

/// Maps a library error to its exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_USAGE,
        Error::Parse { .. } | Error::Io { .. } => EXIT_PARSE,
        Error::NonFinite { .. }
        | Error::Shape(_)
        | Error::InsufficientSamples { .. }
        | Error::Degenerate(_)
        | Error::WindowTooShort { .. }
        | Error::Unsupported(_)
        | Error::Numerical(_) => EXIT_NUMERICAL,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Clean(a) => cmd_clean(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("icanclean: {e}");
            exit_code(&e)
        }
    }
}

fn cmd_clean(a: CleanArgs) -> crate::Result<()> {
    let source = match a.source {
        SourceArg::U => ComponentSource::DataVariates,
        SourceArg::V => ComponentSource::NoiseVariates,
    };
    let config = CleanConfig::new(a.thresh)
        .with_source(source)
        .with_window(a.window, a.hop);
    config.validate()?;

    let x = read_recording(&a.data)?;
    let y = read_recording(&a.noise)?;
    let started = Instant::now();
    let (x_clean, report) = clean(&x, &y, &config)?;
    let elapsed = started.elapsed();

    write_recording(&x_clean, &a.out)?;
    if let Some(path) = &a.report {
        let text = clean_report_text(&report, &config, elapsed);
        write_atomically(path, |w| w.write_all(text.as_bytes()))?;
    }
    println!(
        "removed {} of {} components over {} window(s) in {:.3} s",
        report.bad_indices.len(),
        report.n_comp,
        report.windows_processed,
        elapsed.as_secs_f64()
    );
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> crate::Result<()> {
    let params = ScenarioParams {
        n_samples: a.samples,
        n_data: a.data_channels,
        n_noise: a.noise_channels,
        n_signal_sources: a.signal_sources,
        n_noise_sources: a.noise_sources,
        sampling_rate_hz: a.rate,
        ref_sensor_noise_level: a.ref_noise,
        noise_to_data_gain: a.noise_gain,
        ref_mixing: if a.identity_ref {
            RefMixing::Identity
        } else {
            RefMixing::Random
        },
        transient_onset: a.transient_onset,
        seed: a.seed,
    };
    let s = generate_scenario(&params)?;
    write_recording(&s.x, &a.data_out)?;
    write_recording(&s.y, &a.noise_out)?;
    write_recording(&s.truth, &a.truth_out)?;
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> crate::Result<()> {
    let report = benchmark_throughput(&BenchParams {
        n_samples: a.samples,
        n_data: a.data_channels,
        n_noise: a.noise_channels,
        window_len: a.window,
        window_hop: a.hop,
        repetitions: a.repetitions,
        sampling_rate_hz: a.rate,
        thresh: a.thresh,
        seed: a.seed,
    })?;
    print!("{}", bench_report_text(&report));
    Ok(())
}
