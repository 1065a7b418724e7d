//! Analysis configuration: a TOML file with one table per stage. Every key
//! is optional and unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::{BlinkImputation, GazeGridSpec};
use crate::phases::SignatureRules;
use crate::proximity::{DEFAULT_HYSTERESIS_SAMPLES, DEFAULT_MARGIN_DB};
use crate::signal::{SavGolSpec, DEFAULT_BASELINE_S, DEFAULT_LEAK_HALF_LIFE_S};
use crate::streams::{StreamLags, ACCEL_RATE_HZ, DEFAULT_MAX_GAP_S, GAZE_RATE_HZ};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub grid: GridConfig,
    pub savgol: SavGolSpec,
    pub velocity: VelocityConfig,
    pub proximity: ProximityConfig,
    pub calibration: CalibrationConfig,
    pub gaze: GazeConfig,
    pub signatures: SignatureRules,
    pub sync: SyncConfig,
    pub lags: StreamLags,
}

/// Common analysis grid for accelerometer, RSSI and proximity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub rate_hz: f64,
    pub max_gap_s: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            rate_hz: ACCEL_RATE_HZ,
            max_gap_s: DEFAULT_MAX_GAP_S,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VelocityConfig {
    pub baseline_s: f64,
    pub leak_half_life_s: f64,
}

impl Default for VelocityConfig {
    fn default() -> Self {
        VelocityConfig {
            baseline_s: DEFAULT_BASELINE_S,
            leak_half_life_s: DEFAULT_LEAK_HALF_LIFE_S,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProximityConfig {
    pub margin_db: f64,
    pub hysteresis: bool,
    pub hysteresis_samples: usize,
}

impl Default for ProximityConfig {
    fn default() -> Self {
        ProximityConfig {
            margin_db: DEFAULT_MARGIN_DB,
            hysteresis: false,
            hysteresis_samples: DEFAULT_HYSTERESIS_SAMPLES,
        }
    }
}

/// Explicit calibration windows `[start, end)` in seconds on the aligned
/// clock. When both are set they take precedence over calibration markers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub near: Option<[f64; 2]>,
    pub far: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GazeConfig {
    pub rate_hz: f64,
    pub bins: usize,
    pub window_s: f64,
    pub hop_s: f64,
    pub min_valid: f64,
    pub blink_max_s: f64,
    pub spline_support: usize,
}

impl Default for GazeConfig {
    fn default() -> Self {
        let grid = GazeGridSpec::default();
        let blink = BlinkImputation::default();
        GazeConfig {
            rate_hz: GAZE_RATE_HZ,
            bins: grid.bins,
            window_s: grid.window_s,
            hop_s: grid.hop_s,
            min_valid: grid.min_valid,
            blink_max_s: blink.max_gap_s,
            spline_support: blink.support,
        }
    }
}

impl GazeConfig {
    pub fn grid_spec(&self) -> GazeGridSpec {
        GazeGridSpec {
            bins: self.bins,
            window_s: self.window_s,
            hop_s: self.hop_s,
            min_valid: self.min_valid,
        }
    }

    pub fn blink_imputation(&self) -> BlinkImputation {
        BlinkImputation {
            max_gap_s: self.blink_max_s,
            support: self.spline_support,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncConfig {
    pub max_lag_s: f64,
    /// Common rate both sync signals are resampled to.
    pub rate_hz: f64,
}

impl Default for SyncConfig {
    fn default() -> Self {
        SyncConfig {
            max_lag_s: 0.5,
            rate_hz: 200.0,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.grid.rate_hz) || !(self.grid.max_gap_s >= 0.0) {
            return bad("grid: rate_hz must be > 0 and max_gap_s >= 0".into());
        }
        self.savgol
            .validate()
            .map_err(|e| Error::Config(format!("savgol: {e}")))?;
        if !positive(self.velocity.baseline_s) || !positive(self.velocity.leak_half_life_s) {
            return bad("velocity: baseline_s and leak_half_life_s must be > 0".into());
        }
        if !positive(self.proximity.margin_db) || self.proximity.hysteresis_samples == 0 {
            return bad("proximity: margin_db must be > 0 and hysteresis_samples >= 1".into());
        }
        for (name, range) in [("near", self.calibration.near), ("far", self.calibration.far)] {
            if let Some([a, b]) = range {
                if !(b > a) {
                    return bad(format!("calibration.{name}: end must exceed start"));
                }
            }
        }
        if self.calibration.near.is_some() != self.calibration.far.is_some() {
            return bad("calibration: set both near and far, or neither".into());
        }
        if !positive(self.gaze.rate_hz) || self.gaze.spline_support == 0 || !(self.gaze.blink_max_s >= 0.0) {
            return bad("gaze: rate_hz > 0, spline_support >= 1 and blink_max_s >= 0 required".into());
        }
        self.gaze
            .grid_spec()
            .validate()
            .map_err(|e| Error::Config(format!("gaze: {e}")))?;
        let s = &self.signatures;
        if !(s.low_activity_ratio >= 0.0) || !(s.high_activity_ratio >= s.low_activity_ratio) {
            return bad("signatures: need 0 <= low_activity_ratio <= high_activity_ratio".into());
        }
        for (name, v) in [
            ("focus_fraction", s.focus_fraction),
            ("near_patient_fraction", s.near_patient_fraction),
            ("max_table_fraction", s.max_table_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("signatures: {name} outside [0, 1]"));
            }
        }
        if !(self.sync.max_lag_s >= 0.0) || !positive(self.sync.rate_hz) {
            return bad("sync: max_lag_s >= 0 and rate_hz > 0 required".into());
        }
        Ok(())
    }
}
