use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};

use super::{Marker, MarkerStream, Recording, StreamKind, TimeSeries};
use crate::error::{Error, Result};
use crate::stats;

pub const META_FILE: &str = "meta.json";

/// Loads and validates a session directory.
///
/// All six stream CSVs are required; `meta.json` is optional and yields an
/// empty map when absent.
pub fn load_recording(dir: impl AsRef<Path>) -> Result<Recording> {
    let dir = dir.as_ref();
    for kind in StreamKind::ALL {
        let p = dir.join(kind.file_name());
        if !p.is_file() {
            return Err(Error::MissingFile(p));
        }
    }
    let load = |kind| load_series(&dir.join(StreamKind::file_name(kind)), kind);
    let recording = Recording {
        accel_rh: load(StreamKind::AccelRh)?,
        accel_lh: load(StreamKind::AccelLh)?,
        rssi_rh: load(StreamKind::RssiRh)?,
        rssi_lh: load(StreamKind::RssiLh)?,
        gaze: load(StreamKind::Gaze)?,
        markers: load_markers(&dir.join(StreamKind::Markers.file_name()))?,
        meta: load_meta(&dir.join(META_FILE))?,
    };
    recording.validate()?;
    Ok(recording)
}

/// Writes the session layout read by [`load_recording`]. Numbers use the
/// shortest representation that parses back to the same `f64`.
pub fn save_recording(recording: &Recording, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for kind in StreamKind::ALL {
        if let Some(series) = recording.series(kind) {
            let header: Vec<&str> = std::iter::once("t")
                .chain(kind.value_columns().iter().copied())
                .collect();
            write_csv(&dir.join(kind.file_name()), &header, series_rows(series))?;
        }
    }
    let rows = recording
        .markers
        .events()
        .iter()
        .map(|m| vec![fmt_f64(m.t), m.label.clone()]);
    write_csv(&dir.join(StreamKind::Markers.file_name()), &["t", "label"], rows)?;
    let meta = serde_json::to_string_pretty(&recording.meta).map_err(|e| Error::InvalidSpec(format!("meta: {e}")))?;
    let path = dir.join(META_FILE);
    fs::write(&path, meta + "\n").map_err(|e| Error::io(path, e))
}

/// Writes `t,<channels...>` for any series.
pub fn write_series_csv(path: impl AsRef<Path>, series: &TimeSeries) -> Result<()> {
    let header: Vec<&str> = std::iter::once("t")
        .chain(series.channels().iter().map(String::as_str))
        .collect();
    write_csv(path.as_ref(), &header, series_rows(series))
}

fn series_rows(series: &TimeSeries) -> impl Iterator<Item = Vec<String>> + '_ {
    (0..series.len()).map(move |i| {
        std::iter::once(fmt_f64(series.timestamps()[i]))
            .chain(series.row(i).into_iter().map(fmt_opt))
            .collect()
    })
}

pub(crate) fn fmt_f64(v: f64) -> String {
    // Display prints the shortest round-tripping form; avoid "-0".
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub(crate) fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let to_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(to_err)?;
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(row).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Header and data records with their 1-based line numbers.
fn read_records(path: &Path) -> Result<(StringRecord, Vec<(u64, StringRecord)>)> {
    let file_name = display_name(path);
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::MalformedFile {
            location: format!("{file_name}:{}", e.position().map_or(0, |p| p.line())),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(Error::MalformedFile {
            location: format!("{file_name}:1"),
            message: "missing header row".into(),
        });
    }
    let (_, header) = records.remove(0);
    Ok((header, records))
}

fn display_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn check_header(path: &Path, header: &StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(Error::MalformedFile {
            location: format!("{}:1", display_name(path)),
            message: format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn parse_number(field: &str, location: &str, column: &str) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::MalformedFile {
            location: location.to_string(),
            message: format!("column `{column}`: cannot parse `{field}` as a finite number"),
        }),
    }
}

fn load_series(path: &Path, kind: StreamKind) -> Result<TimeSeries> {
    let file_name = display_name(path);
    let (header, records) = read_records(path)?;
    let value_cols = kind.value_columns();
    let expected: Vec<&str> = std::iter::once("t").chain(value_cols.iter().copied()).collect();
    check_header(path, &header, &expected)?;

    let mut timestamps = Vec::with_capacity(records.len());
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(records.len()); value_cols.len()];
    for (line, rec) in records {
        let location = format!("{file_name}:{line}");
        if rec.len() != expected.len() {
            return Err(Error::MalformedFile {
                location,
                message: format!("expected {} fields, found {}", expected.len(), rec.len()),
            });
        }
        let t = parse_number(&rec[0], &location, "t")?;
        if let Some(&prev) = timestamps.last() {
            if t <= prev {
                return Err(Error::NonMonotoneTimestamps { location, t });
            }
        }
        timestamps.push(t);
        for (c, name) in value_cols.iter().enumerate() {
            let field = &rec[c + 1];
            let v = if field.is_empty() {
                None
            } else {
                let v = parse_number(field, &location, name)?;
                if kind == StreamKind::Gaze && !(0.0..=1.0).contains(&v) {
                    return Err(Error::GazeOutOfRange { location, value: v });
                }
                Some(v)
            };
            columns[c].push(v);
        }
    }
    let channels = value_cols.iter().map(|s| s.to_string()).collect();
    let series = TimeSeries::new(kind.name(), channels, timestamps, columns)?;
    Ok(match kind.nominal_rate() {
        Some(r) => series.with_nominal_rate(r),
        None => series,
    })
}

fn load_markers(path: &Path) -> Result<MarkerStream> {
    let file_name = display_name(path);
    let (header, records) = read_records(path)?;
    check_header(path, &header, &["t", "label"])?;
    let mut events: Vec<Marker> = Vec::with_capacity(records.len());
    for (line, rec) in records {
        let location = format!("{file_name}:{line}");
        if rec.len() != 2 {
            return Err(Error::MalformedFile {
                location,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let t = parse_number(&rec[0], &location, "t")?;
        if events.last().is_some_and(|m| t < m.t) {
            return Err(Error::NonMonotoneTimestamps { location, t });
        }
        if rec[1].is_empty() {
            return Err(Error::MalformedFile {
                location,
                message: "empty marker label".into(),
            });
        }
        events.push(Marker {
            t,
            label: rec[1].to_string(),
        });
    }
    MarkerStream::new(events)
}

fn load_meta(path: &PathBuf) -> Result<BTreeMap<String, String>> {
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedFile {
        location: format!("{META_FILE}:{}", e.line()),
        message: format!("expected a JSON object of string values: {e}"),
    })
}

/// Per-stream ingestion statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamStats {
    pub name: &'static str,
    pub samples: usize,
    /// `1 / median(dt)`; `None` with fewer than two samples.
    pub rate_hz: Option<f64>,
    /// Fraction of missing entries over all value cells.
    pub missing_fraction: f64,
}

impl Recording {
    /// One entry per stream, markers last.
    pub fn stream_stats(&self) -> Vec<StreamStats> {
        let mut out: Vec<StreamStats> = StreamKind::ALL
            .iter()
            .filter_map(|&kind| {
                let s = self.series(kind)?;
                let dts: Vec<f64> = s.timestamps().windows(2).map(|w| w[1] - w[0]).collect();
                let cells = s.len() * s.channels().len();
                let missing = cells - (0..s.channels().len()).map(|c| s.present_count(c)).sum::<usize>();
                Some(StreamStats {
                    name: kind.name(),
                    samples: s.len(),
                    rate_hz: stats::median(&dts).map(|d| 1.0 / d),
                    missing_fraction: if cells == 0 { 0.0 } else { missing as f64 / cells as f64 },
                })
            })
            .collect();
        let marker_dts: Vec<f64> = self.markers.events().windows(2).map(|w| w[1].t - w[0].t).collect();
        out.push(StreamStats {
            name: StreamKind::Markers.name(),
            samples: self.markers.len(),
            rate_hz: stats::median(&marker_dts).filter(|d| *d > 0.0).map(|d| 1.0 / d),
            missing_fraction: 0.0,
        });
        out
    }
}
