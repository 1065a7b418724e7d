//! Time-series data model, session ingestion, resampling and cross-stream alignment.

mod align;
pub(crate) mod io;
mod lag;
mod resample;

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub use align::{align, StreamLags};
pub use io::{load_recording, save_recording, write_series_csv, StreamStats};
pub use lag::estimate_lag;
pub use resample::{resample_to_grid, resample_uniform, UniformGrid, DEFAULT_MAX_GAP_S};

/// Relative tolerance on sample spacing for a series to count as uniform.
const UNIFORM_TOL: f64 = 1e-6;

/// A channel bundle sampled at explicit timestamps. Missing entries are `None`.
///
/// Values are stored column-major: `columns[c][i]` is channel `c` at
/// `timestamps[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    stream_id: String,
    timestamps: Vec<f64>,
    channels: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
    nominal_rate: Option<f64>,
}

impl TimeSeries {
    /// Builds a series, checking strictly increasing finite timestamps,
    /// one column per channel and finite present values.
    pub fn new(
        stream_id: impl Into<String>,
        channels: Vec<String>,
        timestamps: Vec<f64>,
        columns: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        let stream_id = stream_id.into();
        if channels.len() != columns.len() {
            return Err(Error::InvalidSpec(format!(
                "series `{stream_id}`: {} channels but {} columns",
                channels.len(),
                columns.len()
            )));
        }
        for (name, col) in channels.iter().zip(&columns) {
            if col.len() != timestamps.len() {
                return Err(Error::InvalidSpec(format!(
                    "series `{stream_id}`: channel `{name}` has {} values for {} timestamps",
                    col.len(),
                    timestamps.len()
                )));
            }
            if col.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "series `{stream_id}`: channel `{name}` has a non-finite value"
                )));
            }
        }
        for (i, &t) in timestamps.iter().enumerate() {
            if !t.is_finite() || (i > 0 && t <= timestamps[i - 1]) {
                return Err(Error::NonMonotoneTimestamps {
                    location: format!("{stream_id}[{i}]"),
                    t,
                });
            }
        }
        Ok(Self {
            stream_id,
            timestamps,
            channels,
            columns,
            nominal_rate: None,
        })
    }

    /// Single-channel convenience constructor.
    pub fn single(
        stream_id: impl Into<String>,
        channel: impl Into<String>,
        timestamps: Vec<f64>,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        Self::new(stream_id, vec![channel.into()], timestamps, vec![values])
    }

    /// Series on the grid `t_k = start + k / rate` with all values present.
    pub fn from_uniform(
        stream_id: impl Into<String>,
        channels: Vec<String>,
        start: f64,
        rate: f64,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        let timestamps = (0..n).map(|k| start + k as f64 / rate).collect();
        let columns = columns.into_iter().map(|c| c.into_iter().map(Some).collect()).collect();
        Ok(Self::new(stream_id, channels, timestamps, columns)?.with_nominal_rate(rate))
    }

    pub fn with_nominal_rate(mut self, rate: f64) -> Self {
        self.nominal_rate = Some(rate);
        self
    }

    pub fn with_stream_id(mut self, id: impl Into<String>) -> Self {
        self.stream_id = id.into();
        self
    }

    pub fn stream_id(&self) -> &str {
        &self.stream_id
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn nominal_rate(&self) -> Option<f64> {
        self.nominal_rate
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn channel(&self, idx: usize) -> &[Option<f64>] {
        &self.columns[idx]
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }

    pub fn columns(&self) -> &[Vec<Option<f64>>] {
        &self.columns
    }

    pub fn value(&self, row: usize, channel: usize) -> Option<f64> {
        self.columns[channel][row]
    }

    pub fn row(&self, row: usize) -> Vec<Option<f64>> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    /// First and last timestamp.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((*self.timestamps.first()?, *self.timestamps.last()?))
    }

    pub fn present_count(&self, channel: usize) -> usize {
        self.columns[channel].iter().flatten().count()
    }

    /// Present values of one channel, in time order.
    pub fn present_values(&self, channel: usize) -> Vec<f64> {
        self.columns[channel].iter().flatten().copied().collect()
    }

    /// Sample interval of a uniformly sampled series.
    pub fn sample_interval(&self) -> Result<f64> {
        let n = self.len();
        if n < 2 {
            return Err(Error::NonUniformSeries(self.stream_id.clone()));
        }
        let dt = (self.timestamps[n - 1] - self.timestamps[0]) / (n - 1) as f64;
        let tol = UNIFORM_TOL * dt + 1e-9;
        let uniform = self.timestamps.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= tol);
        if uniform {
            Ok(dt)
        } else {
            Err(Error::NonUniformSeries(self.stream_id.clone()))
        }
    }

    /// A one-channel series holding channel `idx`.
    pub fn select_channel(&self, idx: usize) -> TimeSeries {
        TimeSeries {
            stream_id: self.stream_id.clone(),
            timestamps: self.timestamps.clone(),
            channels: vec![self.channels[idx].clone()],
            columns: vec![self.columns[idx].clone()],
            nominal_rate: self.nominal_rate,
        }
    }

    /// Rows with `t0 <= t < t1`.
    pub fn slice_time(&self, t0: f64, t1: f64) -> TimeSeries {
        let lo = self.timestamps.partition_point(|&t| t < t0);
        let hi = self.timestamps.partition_point(|&t| t < t1);
        TimeSeries {
            stream_id: self.stream_id.clone(),
            timestamps: self.timestamps[lo..hi.max(lo)].to_vec(),
            channels: self.channels.clone(),
            columns: self.columns.iter().map(|c| c[lo..hi.max(lo)].to_vec()).collect(),
            nominal_rate: self.nominal_rate,
        }
    }

    /// Same data with every timestamp offset by `delta` seconds.
    pub fn shifted(&self, delta: f64) -> TimeSeries {
        TimeSeries {
            timestamps: self.timestamps.iter().map(|t| t + delta).collect(),
            ..self.clone()
        }
    }

    /// Replaces the value columns, keeping timestamps. Column count and
    /// lengths must match the timestamps.
    pub fn with_columns(&self, channels: Vec<String>, columns: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let mut out = TimeSeries::new(self.stream_id.clone(), channels, self.timestamps.clone(), columns)?;
        out.nominal_rate = self.nominal_rate;
        Ok(out)
    }

    /// True when both series have the same timestamps within `1e-9` s.
    pub fn same_grid(&self, other: &TimeSeries) -> bool {
        self.len() == other.len()
            && self
                .timestamps
                .iter()
                .zip(&other.timestamps)
                .all(|(a, b)| (a - b).abs() <= 1e-9)
    }
}

/// A labeled instant on the session clock.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub t: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarkerStream {
    events: Vec<Marker>,
}

impl MarkerStream {
    pub fn new(events: Vec<Marker>) -> Result<Self> {
        for (i, m) in events.iter().enumerate() {
            if m.label.trim().is_empty() {
                return Err(Error::MalformedFile {
                    location: format!("markers[{i}]"),
                    message: "empty marker label".into(),
                });
            }
            if !m.t.is_finite() || (i > 0 && m.t < events[i - 1].t) {
                return Err(Error::NonMonotoneTimestamps {
                    location: format!("markers[{i}]"),
                    t: m.t,
                });
            }
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[Marker] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn shifted(&self, delta: f64) -> MarkerStream {
        MarkerStream {
            events: self
                .events
                .iter()
                .map(|m| Marker {
                    t: m.t + delta,
                    label: m.label.clone(),
                })
                .collect(),
        }
    }

    /// Segments opened by a marker with exactly `label`. Each segment runs to
    /// the next marker of any label, or to `span_end` when none follows.
    pub fn segments(&self, label: &str, span_end: f64) -> Vec<(f64, f64)> {
        self.events
            .iter()
            .enumerate()
            .filter(|(_, m)| m.label == label)
            .map(|(i, m)| {
                let end = self.events[i + 1..]
                    .iter()
                    .map(|n| n.t)
                    .find(|&t| t > m.t)
                    .unwrap_or(span_end);
                (m.t, end)
            })
            .filter(|(a, b)| b > a)
            .collect()
    }
}

/// The streams of one session, identified by their file stem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StreamKind {
    AccelRh,
    AccelLh,
    RssiRh,
    RssiLh,
    Gaze,
    Markers,
}

impl StreamKind {
    pub const ALL: [StreamKind; 6] = [
        StreamKind::AccelRh,
        StreamKind::AccelLh,
        StreamKind::RssiRh,
        StreamKind::RssiLh,
        StreamKind::Gaze,
        StreamKind::Markers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StreamKind::AccelRh => "accel_rh",
            StreamKind::AccelLh => "accel_lh",
            StreamKind::RssiRh => "rssi_rh",
            StreamKind::RssiLh => "rssi_lh",
            StreamKind::Gaze => "gaze",
            StreamKind::Markers => "markers",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.csv", self.name())
    }

    /// Expected value columns after the leading `t`.
    pub fn value_columns(self) -> &'static [&'static str] {
        match self {
            StreamKind::AccelRh | StreamKind::AccelLh => &["acc_x", "acc_y", "acc_z"],
            StreamKind::RssiRh | StreamKind::RssiLh => &["rssi"],
            StreamKind::Gaze => &["gaze_x", "gaze_y"],
            StreamKind::Markers => &["label"],
        }
    }

    /// Device rate; RSSI has none (advertisement driven).
    pub fn nominal_rate(self) -> Option<f64> {
        match self {
            StreamKind::AccelRh | StreamKind::AccelLh => Some(ACCEL_RATE_HZ),
            StreamKind::Gaze => Some(GAZE_RATE_HZ),
            _ => None,
        }
    }
}

pub const ACCEL_RATE_HZ: f64 = 40.0;
pub const GAZE_RATE_HZ: f64 = 50.0;

/// One recorded session.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub accel_rh: TimeSeries,
    pub accel_lh: TimeSeries,
    pub rssi_rh: TimeSeries,
    pub rssi_lh: TimeSeries,
    pub gaze: TimeSeries,
    pub markers: MarkerStream,
    pub meta: BTreeMap<String, String>,
}

impl Recording {
    /// Checks channel counts and the gaze unit-square range.
    pub fn validate(&self) -> Result<()> {
        for kind in StreamKind::ALL {
            if let Some(series) = self.series(kind) {
                let want = kind.value_columns().len();
                if series.channels().len() != want {
                    return Err(Error::InvalidSpec(format!(
                        "{} needs {want} channels, has {}",
                        kind.name(),
                        series.channels().len()
                    )));
                }
            }
        }
        for (c, col) in self.gaze.columns().iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                if let Some(v) = *v {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::GazeOutOfRange {
                            location: format!("gaze[{i}].{}", self.gaze.channels()[c]),
                            value: v,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn series(&self, kind: StreamKind) -> Option<&TimeSeries> {
        match kind {
            StreamKind::AccelRh => Some(&self.accel_rh),
            StreamKind::AccelLh => Some(&self.accel_lh),
            StreamKind::RssiRh => Some(&self.rssi_rh),
            StreamKind::RssiLh => Some(&self.rssi_lh),
            StreamKind::Gaze => Some(&self.gaze),
            StreamKind::Markers => None,
        }
    }

    pub(crate) fn series_mut(&mut self, kind: StreamKind) -> Option<&mut TimeSeries> {
        match kind {
            StreamKind::AccelRh => Some(&mut self.accel_rh),
            StreamKind::AccelLh => Some(&mut self.accel_lh),
            StreamKind::RssiRh => Some(&mut self.rssi_rh),
            StreamKind::RssiLh => Some(&mut self.rssi_lh),
            StreamKind::Gaze => Some(&mut self.gaze),
            StreamKind::Markers => None,
        }
    }

    /// Earliest and latest instant over all data streams and markers.
    pub fn span(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for kind in StreamKind::ALL {
            if let Some((a, b)) = self.series(kind).and_then(TimeSeries::span) {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        for m in self.markers.events() {
            lo = lo.min(m.t);
            hi = hi.max(m.t);
        }
        (lo <= hi).then_some((lo, hi))
    }
}
