//! CSV recordings.
//!
//! Layout: a header line `time,<label1>,...,<labelN>`, then one line per
//! sample. The time column must be strictly increasing and uniformly spaced;
//! the sampling rate is inferred from it. Values are written in shortest
//! round-trip form, so a write followed by a read reproduces every sample
//! bit for bit.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::recording::Recording;

/// Allowed relative deviation of any time step from the median step.
pub const MAX_TIME_JITTER: f64 = 1e-6;

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn io_err(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Rounds to 9 significant digits. Rates such as 500 or 256 come back
/// exactly despite rounding in the written time stamps.
fn round_rate(rate: f64) -> f64 {
    format!("{rate:.8e}").parse().unwrap_or(rate)
}

pub fn read_recording(path: impl AsRef<Path>) -> Result<Recording> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(io::BufReader::new(file));

    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(parse_err(path, 1, "empty file")),
        Some(r) => r.map_err(|e| parse_err(path, 1, e.to_string()))?,
    };
    if header.get(0) != Some("time") {
        return Err(parse_err(path, 1, "header must start with a `time` column"));
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    if labels.is_empty() {
        return Err(parse_err(path, 1, "header names no channels"));
    }
    let mut seen = std::collections::HashSet::new();
    for label in &labels {
        if label.is_empty() {
            return Err(parse_err(path, 1, "empty channel label"));
        }
        if !seen.insert(label.as_str()) {
            return Err(parse_err(path, 1, format!("duplicate channel label {label:?}")));
        }
    }

    let n = labels.len();
    let mut times: Vec<f64> = Vec::new();
    let mut lines: Vec<u64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != n + 1 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", n + 1, rec.len()),
            ));
        }
        for (k, field) in rec.iter().enumerate() {
            let column = if k == 0 { "time" } else { labels[k - 1].as_str() };
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, line, format!("column {column}: not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(
                    path,
                    line,
                    format!("row {}, column {column}: non-finite value {field:?}", line - 1),
                ));
            }
            if k == 0 {
                if let Some(&prev) = times.last() {
                    if v <= prev {
                        return Err(parse_err(path, line, "time column is not strictly increasing"));
                    }
                }
                times.push(v);
                lines.push(line);
            } else {
                values.push(v);
            }
        }
    }

    let t = times.len();
    if t < 2 {
        return Err(parse_err(
            path,
            lines.first().copied().unwrap_or(2),
            "at least two samples are needed to infer the sampling rate",
        ));
    }
    let deltas: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sorted = deltas.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[(sorted.len() - 1) / 2];
    for (i, d) in deltas.iter().enumerate() {
        if ((d - median) / median).abs() > MAX_TIME_JITTER {
            return Err(parse_err(path, lines[i + 1], "time column is not uniformly spaced"));
        }
    }
    let rate = round_rate((t - 1) as f64 / (times[t - 1] - times[0]));

    let samples = DMatrix::from_row_slice(t, n, &values);
    Recording::with_start_time(samples, labels, rate, times[0]).map_err(|e| parse_err(path, 1, e.to_string()))
}

/// Writes the recording as CSV through a temporary file in the same
/// directory, renamed into place only after a complete write.
pub fn write_recording(rec: &Recording, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_atomically(path, |w| write_csv(rec, w))
}

fn write_csv<W: Write>(rec: &Recording, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = std::iter::once("time")
        .chain(rec.channel_labels().iter().map(String::as_str))
        .collect();
    w.write_record(&header)?;
    let mut bufs: Vec<ryu::Buffer> = (0..=rec.n_channels()).map(|_| ryu::Buffer::new()).collect();
    let samples = rec.samples();
    for i in 0..rec.n_samples() {
        let (first, rest) = bufs.split_first_mut().expect("at least one buffer");
        let mut fields: Vec<&str> = Vec::with_capacity(rest.len() + 1);
        fields.push(first.format_finite(rec.time_of(i)));
        for (j, b) in rest.iter_mut().enumerate() {
            fields.push(b.format_finite(samples[(i, j)]));
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `fill` against a temporary file next to `path` and renames it over
/// `path` on success. On failure nothing is left at `path`.
pub(crate) fn write_atomically<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> io::Result<()>,
{
    if path.as_os_str().is_empty() {
        return Err(io_err(
            path,
            io::Error::new(io::ErrorKind::InvalidInput, "empty output path"),
        ));
    }
    if path.is_dir() {
        return Err(io_err(path, io::Error::other("output path is a directory")));
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w).map_err(|e| io_err(path, e))?;
        w.flush().map_err(|e| io_err(path, e))?;
    }
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}
