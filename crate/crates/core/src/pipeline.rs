//! End-to-end analysis of one session and its file outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::{GazeConfig, PipelineConfig};
use crate::error::{Error, Result};
use crate::gaze::{
    impute_blinks, low_entropy_mask, robustness_sweep, sliding_entropy, EntropySeries, LowEntropyMask, SweepMatrix,
};
use crate::phases::{
    format_report, global_mean_speed, match_signatures, phases_from_markers, summarize_phase, write_phase_report,
    PhaseAnnotation, PhaseInputs, PhaseSummary, PhaseVerdict,
};
use crate::proximity::{
    calibrate, discretize, discretize_with_hysteresis, fuse_rssi, CalibrationModel, ProximitySeries,
};
use crate::render::BehaviorgramData;
use crate::signal::{leak_for_half_life, remove_gravity, savgol_filter, velocity_magnitude};
use crate::streams::io::{fmt_f64, fmt_opt, write_csv};
use crate::streams::{
    align, estimate_lag, resample_to_grid, write_series_csv, Recording, StreamLags, TimeSeries, UniformGrid,
};
use crate::synth::{CALIB_FAR_LABEL, CALIB_NEAR_LABEL, SYNC_LABEL};

pub const VELOCITY_FILE: &str = "velocity.csv";
pub const RSSI_FILE: &str = "rssi_fused.csv";
pub const PROXIMITY_FILE: &str = "proximity.csv";
pub const GAZE_FILE: &str = "gaze_imputed.csv";
pub const ENTROPY_FILE: &str = "entropy.csv";
pub const MASK_FILE: &str = "low_entropy_mask.csv";
pub const PHASE_FILE: &str = "phase_summary.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const META_FILE: &str = "analysis_meta.json";
pub const SWEEP_FILE: &str = "robustness.csv";

/// Everything derived from one session.
#[derive(Debug, Clone)]
pub struct Analysis {
    /// The session after applying the configured lags.
    pub recording: Recording,
    pub grid: UniformGrid,
    pub velocity_rh: TimeSeries,
    pub velocity_lh: TimeSeries,
    pub rssi_fused: TimeSeries,
    pub calibration: CalibrationModel,
    pub calibration_source: String,
    pub proximity: ProximitySeries,
    pub gaze: TimeSeries,
    pub entropy: EntropySeries,
    pub mask: LowEntropyMask,
    pub phases: Vec<PhaseAnnotation>,
    pub summaries: Vec<PhaseSummary>,
    pub verdicts: Vec<PhaseVerdict>,
    pub global_mean_speed: f64,
    pub config: PipelineConfig,
}

fn hand_velocity(accel: &TimeSeries, grid: &UniformGrid, cfg: &PipelineConfig) -> Result<TimeSeries> {
    let on_grid = resample_to_grid(accel, grid, cfg.grid.max_gap_s)?;
    let smooth = savgol_filter(&on_grid, &cfg.savgol)?;
    let linear = remove_gravity(&smooth, cfg.velocity.baseline_s)?;
    velocity_magnitude(&linear, leak_for_half_life(cfg.velocity.leak_half_life_s, grid.rate))
}

fn calibration(
    rec: &Recording,
    fused: &TimeSeries,
    span_end: f64,
    cfg: &PipelineConfig,
) -> Result<(CalibrationModel, String)> {
    let margin = cfg.proximity.margin_db;
    if let (Some([n0, n1]), Some([f0, f1])) = (cfg.calibration.near, cfg.calibration.far) {
        let model = calibrate(&fused.slice_time(n0, n1), &fused.slice_time(f0, f1), margin)?;
        return Ok((model, format!("config near [{n0}, {n1}) far [{f0}, {f1})")));
    }
    let near = rec.markers.segments(CALIB_NEAR_LABEL, span_end).first().copied();
    let far = rec.markers.segments(CALIB_FAR_LABEL, span_end).first().copied();
    match (near, far) {
        (Some((n0, n1)), Some((f0, f1))) => {
            let model = calibrate(&fused.slice_time(n0, n1), &fused.slice_time(f0, f1), margin)?;
            Ok((model, format!("markers near [{n0}, {n1}) far [{f0}, {f1})")))
        }
        _ => Err(Error::NoCalibrationSource),
    }
}

/// Runs the full chain: alignment, velocity, proximity, gaze entropy and
/// phase validation.
pub fn analyze(recording: &Recording, cfg: &PipelineConfig) -> Result<Analysis> {
    cfg.validate()?;
    let rec = align(recording, &cfg.lags);
    let (t0, t1) = rec.span().ok_or(Error::EmptyRange)?;
    let grid = UniformGrid::covering(t0, t1, cfg.grid.rate_hz);
    if grid.len < 2 {
        return Err(Error::EmptyRange);
    }
    let span = (grid.time(0), grid.time(grid.len - 1) + grid.dt());

    let velocity_rh = hand_velocity(&rec.accel_rh, &grid, cfg)?.with_stream_id("velocity_rh");
    let velocity_lh = hand_velocity(&rec.accel_lh, &grid, cfg)?.with_stream_id("velocity_lh");

    let rssi_rh = resample_to_grid(&rec.rssi_rh, &grid, cfg.grid.max_gap_s)?;
    let rssi_lh = resample_to_grid(&rec.rssi_lh, &grid, cfg.grid.max_gap_s)?;
    let rssi_fused = fuse_rssi(&rssi_rh, &rssi_lh)?.with_nominal_rate(grid.rate);
    let (model, calibration_source) = calibration(&rec, &rssi_fused, span.1, cfg)?;
    let proximity = if cfg.proximity.hysteresis {
        discretize_with_hysteresis(&rssi_fused, &model, cfg.proximity.hysteresis_samples)
    } else {
        discretize(&rssi_fused, &model)
    };

    // blinks must stay missing here; imputation fills them
    let gaze_grid = UniformGrid::covering(t0, t1, cfg.gaze.rate_hz);
    let gaze_on_grid = resample_to_grid(&rec.gaze, &gaze_grid, 0.0)?;
    let gaze = impute_blinks(&gaze_on_grid, &cfg.gaze.blink_imputation())?;
    let entropy = sliding_entropy(&gaze, &cfg.gaze.grid_spec())?;
    let mask = low_entropy_mask(&entropy)?;

    let phases = match phases_from_markers(&rec.markers, span) {
        Ok(p) => p,
        Err(Error::NoPhaseMarkers) => Vec::new(),
        Err(e) => return Err(e),
    };
    let inputs = PhaseInputs {
        velocity_rh: &velocity_rh,
        velocity_lh: &velocity_lh,
        proximity: &proximity,
        mask: &mask,
        markers: &rec.markers,
    };
    let summaries = phases
        .iter()
        .map(|p| summarize_phase(p, &inputs))
        .collect::<Result<Vec<_>>>()?;
    let (g0, g1) = match (phases.first(), phases.last()) {
        (Some(a), Some(b)) => (a.t_start, b.t_end),
        _ => span,
    };
    let global = global_mean_speed(&velocity_rh, &velocity_lh, g0, g1).unwrap_or(0.0);
    let verdicts = match_signatures(&summaries, &cfg.signatures, global);

    Ok(Analysis {
        recording: rec,
        grid,
        velocity_rh,
        velocity_lh,
        rssi_fused,
        calibration: model,
        calibration_source,
        proximity,
        gaze,
        entropy,
        mask,
        phases,
        summaries,
        verdicts,
        global_mean_speed: global,
        config: cfg.clone(),
    })
}

impl Analysis {
    pub fn behaviorgram_data(&self) -> BehaviorgramData<'_> {
        BehaviorgramData {
            velocity_rh: &self.velocity_rh,
            velocity_lh: &self.velocity_lh,
            rssi_fused: &self.rssi_fused,
            proximity: &self.proximity,
            mask: &self.mask,
            phases: &self.phases,
            calibration: Some(&self.calibration),
        }
    }

    pub fn report_text(&self) -> String {
        if self.summaries.is_empty() {
            return format!(
                "no phase markers; global mean speed {:.4} m/s\n",
                self.global_mean_speed
            );
        }
        format_report(
            &self.summaries,
            &self.verdicts,
            &self.config.signatures,
            self.global_mean_speed,
        )
    }

    pub fn all_consistent(&self) -> bool {
        self.verdicts.iter().all(|v| v.verdict.is_consistent())
    }

    /// Entropy sweep over the imputed gaze.
    pub fn sweep(&self) -> Result<SweepMatrix> {
        robustness_sweep(&self.gaze, self.config.gaze.hop_s, self.config.gaze.min_valid)
    }

    /// Writes every derived series, the phase report and the metadata file.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let mut path = |name: &str| {
            let p = dir.join(name);
            written.push(p.clone());
            p
        };

        let ts = self.velocity_rh.timestamps();
        let rows = (0..ts.len()).map(|i| {
            [
                fmt_f64(ts[i]),
                fmt_opt(self.velocity_rh.value(i, 0)),
                fmt_opt(self.velocity_lh.value(i, 0)),
            ]
        });
        write_csv(&path(VELOCITY_FILE), &["t", "speed_rh", "speed_lh"], rows)?;
        write_series_csv(path(RSSI_FILE), &self.rssi_fused)?;
        let rows = self
            .proximity
            .timestamps
            .iter()
            .zip(&self.proximity.states)
            .map(|(t, s)| [fmt_f64(*t), s.as_str().to_string()]);
        write_csv(&path(PROXIMITY_FILE), &["t", "state"], rows)?;
        write_series_csv(path(GAZE_FILE), &self.gaze)?;
        write_series_csv(path(ENTROPY_FILE), &self.entropy.series)?;
        let rows = self.mask.intervals.iter().map(|(a, b)| [fmt_f64(*a), fmt_f64(*b)]);
        write_csv(&path(MASK_FILE), &["t_start", "t_end"], rows)?;
        write_phase_report(path(PHASE_FILE), &self.summaries, &self.verdicts)?;
        let p = path(REPORT_FILE);
        std::fs::write(&p, self.report_text()).map_err(|e| Error::io(&p, e))?;
        let p = path(META_FILE);
        let meta = serde_json::to_string_pretty(&self.metadata()).expect("json value serializes");
        std::fs::write(&p, meta + "\n").map_err(|e| Error::io(&p, e))?;
        Ok(written)
    }

    /// Analysis choices and derived constants, for the metadata file.
    pub fn metadata(&self) -> serde_json::Value {
        let cfg = &self.config;
        let edge = cfg.savgol.edge_samples();
        let dt = self.grid.dt();
        let first = self.grid.time(0);
        let last = self.grid.time(self.grid.len - 1);
        let applied: BTreeMap<&str, &String> = self
            .recording
            .meta
            .iter()
            .filter(|(k, _)| k.starts_with("lag_s.") || k.as_str() == "origin_shift_s")
            .map(|(k, v)| (k.as_str(), v))
            .collect();
        json!({
            "grid": { "rate_hz": self.grid.rate, "t_first": first, "t_last": last, "samples": self.grid.len },
            "savgol": {
                "window_len": cfg.savgol.window_len,
                "poly_order": cfg.savgol.poly_order,
                "edge_samples": edge,
                "edge_affected_s": [[first, first + edge as f64 * dt], [last - edge as f64 * dt, last]],
            },
            "velocity": {
                "leak": leak_for_half_life(cfg.velocity.leak_half_life_s, self.grid.rate),
                "leak_half_life_s": cfg.velocity.leak_half_life_s,
                "baseline_s": cfg.velocity.baseline_s,
                "integration": "per-axis leaky trapezoid",
                "norm": "euclidean norm of the three axis velocities",
            },
            "calibration": {
                "rssi_near": self.calibration.rssi_near,
                "rssi_far": self.calibration.rssi_far,
                "margin_db": self.calibration.margin,
                "source": self.calibration_source,
                "hysteresis": cfg.proximity.hysteresis,
            },
            "entropy": {
                "bins": self.entropy.bins,
                "window_s": self.entropy.window_s,
                "hop_s": self.entropy.hop_s,
                // The hop is an analysis choice; flag whether it was left at the default.
                "hop_is_default": cfg.gaze.hop_s == GazeConfig::default().hop_s,
                "min_valid": cfg.gaze.min_valid,
                "threshold_bits": self.mask.threshold,
                "windows": self.entropy.times().len(),
            },
            "phases": {
                "count": self.phases.len(),
                "global_mean_speed": self.global_mean_speed,
                "all_consistent": self.all_consistent(),
            },
            "applied_lags": applied,
        })
    }
}

/// Lag of gaze behind the right-hand accelerometer, from the `sync` segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncEstimate {
    pub lag_s: f64,
    pub segment: (f64, f64),
    /// Lags to pass to `align`.
    pub lags: StreamLags,
}

/// Correlates `acc_x` of the right hand with `gaze_y` over the first `sync`
/// segment, both resampled to `cfg.sync.rate_hz`.
pub fn estimate_sync(recording: &Recording, cfg: &PipelineConfig) -> Result<SyncEstimate> {
    let (_, end) = recording.span().ok_or(Error::EmptyRange)?;
    let segment = *recording
        .markers
        .segments(SYNC_LABEL, end)
        .first()
        .ok_or(Error::NoSyncSegment)?;
    let acc = recording.accel_rh.select_channel(0).slice_time(segment.0, segment.1);
    let gaze = recording.gaze.select_channel(1).slice_time(segment.0, segment.1);
    let (a0, a1) = acc.span().ok_or_else(|| Error::EmptySeries("accel_rh".into()))?;
    let (b0, b1) = gaze.span().ok_or_else(|| Error::EmptySeries("gaze".into()))?;
    let grid = UniformGrid::covering(a0.max(b0), a1.min(b1), cfg.sync.rate_hz);
    let a = resample_to_grid(&acc, &grid, cfg.grid.max_gap_s)?;
    let b = resample_to_grid(&gaze, &grid, cfg.grid.max_gap_s)?;
    let lag_s = estimate_lag(&a, &b, cfg.sync.max_lag_s)?;
    let mut lags = StreamLags::default();
    lags.gaze = lag_s;
    Ok(SyncEstimate { lag_s, segment, lags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::{Marker, MarkerStream};
    use crate::synth::{generate, make_sync_scenario, ScenarioSpec};

    #[test]
    fn sync_recovers_offset() {
        for offset in [-0.1, 0.0, 0.05] {
            let est = estimate_sync(&make_sync_scenario(offset, 3), &PipelineConfig::default()).unwrap();
            assert!((est.lag_s - offset).abs() <= 0.02, "{offset}: {}", est.lag_s);
        }
    }

    #[test]
    fn sync_needs_segment() {
        let mut rec = make_sync_scenario(0.0, 1);
        rec.markers = MarkerStream::new(vec![Marker {
            t: 0.0,
            label: "other".into(),
        }])
        .unwrap();
        assert!(matches!(
            estimate_sync(&rec, &PipelineConfig::default()),
            Err(Error::NoSyncSegment)
        ));
    }

    #[test]
    fn no_calibration_source() {
        let mut rec = generate(&ScenarioSpec::two_regime(1)).unwrap().recording;
        rec.markers = MarkerStream::new(vec![Marker {
            t: 0.0,
            label: "phase:I".into(),
        }])
        .unwrap();
        let err = analyze(&rec, &PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NoCalibrationSource));
        assert!(err.to_string().contains("no calibration source"));
    }

    #[test]
    fn configured_calibration_ranges() {
        let sc = generate(&ScenarioSpec::empty(2)).unwrap();
        let mut rec = sc.recording;
        rec.markers = MarkerStream::default();
        let cfg = PipelineConfig::from_toml("[calibration]\nnear = [0.5, 5.5]\nfar = [6.5, 11.5]\n").unwrap();
        let a = analyze(&rec, &cfg).unwrap();
        assert!(a.calibration.rssi_near > a.calibration.rssi_far);
        assert!(a.calibration_source.starts_with("config"));
        assert!(a.phases.is_empty());
    }
}
