use serde::{Deserialize, Serialize};

use super::io::fmt_f64;
use super::{Recording, StreamKind};

/// Per-stream clock lag in seconds; a stream's timestamps are reduced by its lag.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamLags {
    pub accel_rh: f64,
    pub accel_lh: f64,
    pub rssi_rh: f64,
    pub rssi_lh: f64,
    pub gaze: f64,
    pub markers: f64,
}

impl StreamLags {
    pub fn get(&self, kind: StreamKind) -> f64 {
        match kind {
            StreamKind::AccelRh => self.accel_rh,
            StreamKind::AccelLh => self.accel_lh,
            StreamKind::RssiRh => self.rssi_rh,
            StreamKind::RssiLh => self.rssi_lh,
            StreamKind::Gaze => self.gaze,
            StreamKind::Markers => self.markers,
        }
    }

    pub fn set(&mut self, kind: StreamKind, lag: f64) {
        match kind {
            StreamKind::AccelRh => self.accel_rh = lag,
            StreamKind::AccelLh => self.accel_lh = lag,
            StreamKind::RssiRh => self.rssi_rh = lag,
            StreamKind::RssiLh => self.rssi_lh = lag,
            StreamKind::Gaze => self.gaze = lag,
            StreamKind::Markers => self.markers = lag,
        }
    }

    pub fn negated(&self) -> StreamLags {
        let mut out = *self;
        for kind in StreamKind::ALL {
            out.set(kind, -self.get(kind));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        StreamKind::ALL.iter().all(|&k| self.get(k) == 0.0)
    }
}

/// Shifts every stream by `-lag`, then moves the origin so the earliest
/// timestamp (samples and markers) is zero.
///
/// Lags and the origin shift accumulate in `meta` under `lag_s.<stream>` and
/// `origin_shift_s`.
pub fn align(recording: &Recording, lags: &StreamLags) -> Recording {
    let mut out = recording.clone();
    for kind in StreamKind::ALL {
        let lag = lags.get(kind);
        if let Some(series) = out.series_mut(kind) {
            *series = series.shifted(-lag);
        }
    }
    out.markers = out.markers.shifted(-lags.markers);

    let origin = out.span().map_or(0.0, |(t0, _)| t0);
    if origin != 0.0 {
        for kind in StreamKind::ALL {
            if let Some(series) = out.series_mut(kind) {
                *series = series.shifted(-origin);
            }
        }
        out.markers = out.markers.shifted(-origin);
    }

    for kind in StreamKind::ALL {
        accumulate(&mut out.meta, &format!("lag_s.{}", kind.name()), lags.get(kind));
    }
    accumulate(&mut out.meta, "origin_shift_s", origin);
    out
}

fn accumulate(meta: &mut std::collections::BTreeMap<String, String>, key: &str, delta: f64) {
    let prev = meta.get(key).and_then(|v| v.parse::<f64>().ok()).unwrap_or(0.0);
    meta.insert(key.to_string(), fmt_f64(prev + delta));
}
