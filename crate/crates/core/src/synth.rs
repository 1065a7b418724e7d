//! Seeded synthetic sessions with known ground truth.
//!
//! Each stream draws from its own ChaCha8 stream, so changing one
//! component's parameters never perturbs the others.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::proximity::ProximityState;
use crate::signal::{
    leak_for_half_life, remove_gravity, savgol_filter, velocity_magnitude, SavGolSpec, DEFAULT_BASELINE_S,
    DEFAULT_LEAK_HALF_LIFE_S, GRAVITY_M_S2,
};
use crate::streams::io::{fmt_f64, write_csv};
use crate::streams::{
    save_recording, Marker, MarkerStream, Recording, StreamKind, StreamLags, TimeSeries, ACCEL_RATE_HZ, GAZE_RATE_HZ,
};

pub const RSSI_RATE_HZ: f64 = 10.0;
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
pub const CALIB_NEAR_LABEL: &str = "calib_near";
pub const CALIB_FAR_LABEL: &str = "calib_far";
pub const SYNC_LABEL: &str = "sync";

const BURST_MIN_S: f64 = 0.3;
const BURST_MAX_S: f64 = 0.5;
const AMPLITUDE_ITERATIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GazeRegime {
    /// Gaussian cluster around a fixed point.
    Fixation {
        #[serde(default = "default_fix_std")]
        std: f64,
        #[serde(default = "default_fix_centre")]
        x: f64,
        #[serde(default = "default_fix_centre")]
        y: f64,
    },
    /// Independent uniform points over the unit square.
    Scatter,
}

fn default_fix_std() -> f64 {
    0.002
}

// At least 0.005 from every bin edge for 10, 25, 50, 75 and 100 bins.
fn default_fix_centre() -> f64 {
    0.315
}

impl GazeRegime {
    pub fn fixation(std: f64) -> Self {
        GazeRegime::Fixation {
            std,
            x: default_fix_centre(),
            y: default_fix_centre(),
        }
    }
}

/// Behaviour held for one stretch of a phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    /// Relative length within the phase; shares are normalized.
    #[serde(default = "one")]
    pub share: f64,
    /// Target mean speed per hand, m/s.
    #[serde(default)]
    pub speed_rh: f64,
    #[serde(default)]
    pub speed_lh: f64,
    /// Mean pause between movement bursts, s.
    #[serde(default = "default_gap")]
    pub burst_gap_s: f64,
    pub proximity: ProximityState,
    pub gaze: GazeRegime,
    #[serde(default = "default_blink_rate")]
    pub blink_rate_hz: f64,
    #[serde(default = "default_blink_duration")]
    pub blink_duration_s: f64,
}

fn one() -> f64 {
    1.0
}

fn default_gap() -> f64 {
    0.3
}

fn default_blink_rate() -> f64 {
    0.25
}

fn default_blink_duration() -> f64 {
    0.15
}

impl Segment {
    pub fn new(speed_rh: f64, speed_lh: f64, proximity: ProximityState, gaze: GazeRegime) -> Self {
        Segment {
            share: 1.0,
            speed_rh,
            speed_lh,
            burst_gap_s: default_gap(),
            proximity,
            gaze,
            blink_rate_hz: default_blink_rate(),
            blink_duration_s: default_blink_duration(),
        }
    }

    pub fn share(mut self, share: f64) -> Self {
        self.share = share;
        self
    }

    pub fn gap(mut self, burst_gap_s: f64) -> Self {
        self.burst_gap_s = burst_gap_s;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasePlan {
    pub label: String,
    pub duration_s: f64,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RssiSpec {
    pub near_dbm: f64,
    pub far_dbm: f64,
    pub noise_db: f64,
    /// Probability that a reading is missing.
    pub dropout: f64,
}

impl Default for RssiSpec {
    fn default() -> Self {
        RssiSpec {
            near_dbm: -50.0,
            far_dbm: -85.0,
            noise_db: 2.0,
            dropout: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    /// Length of each calibration segment (near, then far); 0 omits them.
    #[serde(default = "default_calibration")]
    pub calibration_s: f64,
    #[serde(default = "default_accel_noise")]
    pub accel_noise_g: f64,
    #[serde(default = "default_gaze_noise")]
    pub gaze_noise: f64,
    #[serde(default)]
    pub rssi: RssiSpec,
    /// Content delay per stream: file time `t` carries the signal of `t - lag`.
    #[serde(default)]
    pub lags: StreamLags,
    #[serde(default)]
    pub phases: Vec<PhasePlan>,
}

fn default_calibration() -> f64 {
    6.0
}

fn default_accel_noise() -> f64 {
    0.005
}

fn default_gaze_noise() -> f64 {
    0.0
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidSpec(format!("scenario: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidSpec(format!("scenario: {e}")))
    }

    pub fn empty(seed: u64) -> Self {
        ScenarioSpec {
            seed,
            calibration_s: default_calibration(),
            accel_noise_g: default_accel_noise(),
            gaze_noise: default_gaze_noise(),
            rssi: RssiSpec::default(),
            lags: StreamLags::default(),
            phases: Vec::new(),
        }
    }

    /// Five-phase assessment: active hands at the bedside, idle observation,
    /// moderate examination, alternating work between bed and table, and a
    /// calm closing phase with a few movements.
    pub fn abcde(seed: u64) -> Self {
        use ProximityState::*;
        let fix = GazeRegime::fixation(0.002);
        let mut spec = ScenarioSpec::empty(seed);
        spec.lags.gaze = 0.05;
        spec.phases = vec![
            PhasePlan {
                label: "I".into(),
                duration_s: 45.0,
                segments: vec![Segment::new(0.35, 0.3, NearPatient, fix).gap(0.2)],
            },
            PhasePlan {
                label: "IIa".into(),
                duration_s: 30.0,
                segments: vec![Segment::new(0.0, 0.0, NearPatient, fix)],
            },
            PhasePlan {
                label: "IIb".into(),
                duration_s: 25.0,
                segments: vec![Segment::new(0.12, 0.08, NearPatient, fix).gap(0.8)],
            },
            PhasePlan {
                label: "III".into(),
                duration_s: 60.0,
                segments: vec![
                    Segment::new(0.3, 0.0, NearPatient, fix).share(0.25),
                    Segment::new(0.0, 0.3, NearTable, fix).share(0.15),
                    Segment::new(0.3, 0.1, Intermediate, GazeRegime::Scatter).share(0.15),
                    Segment::new(0.05, 0.3, NearPatient, fix).share(0.3),
                    Segment::new(0.25, 0.0, NearTable, fix).share(0.15),
                ],
            },
            PhasePlan {
                label: "IV".into(),
                duration_s: 40.0,
                segments: vec![
                    Segment::new(0.06, 0.06, NearPatient, fix).gap(2.0).share(0.4),
                    Segment::new(0.06, 0.06, NearTable, fix).gap(2.0).share(0.3),
                    Segment::new(0.06, 0.06, NearPatient, fix).gap(2.0).share(0.3),
                ],
            },
        ];
        spec
    }

    /// Shorter repeat of the assessment by a practised performer: the
    /// examination phases are merged and the closing phase has fewer moves.
    pub fn abcde_repeated(seed: u64) -> Self {
        use ProximityState::*;
        let fix = GazeRegime::fixation(0.002);
        let mut spec = ScenarioSpec::abcde(seed);
        spec.phases = vec![
            PhasePlan {
                label: "I".into(),
                duration_s: 30.0,
                segments: vec![Segment::new(0.4, 0.35, NearPatient, fix).gap(0.2)],
            },
            PhasePlan {
                label: "IIa".into(),
                duration_s: 20.0,
                segments: vec![Segment::new(0.0, 0.0, NearPatient, fix)],
            },
            PhasePlan {
                label: "III".into(),
                duration_s: 40.0,
                segments: vec![
                    Segment::new(0.3, 0.05, NearPatient, fix).share(0.3),
                    Segment::new(0.05, 0.3, NearTable, fix).share(0.2),
                    Segment::new(0.2, 0.2, Intermediate, GazeRegime::Scatter).share(0.2),
                    Segment::new(0.3, 0.05, NearPatient, fix).share(0.3),
                ],
            },
            PhasePlan {
                label: "IV".into(),
                duration_s: 30.0,
                segments: vec![
                    Segment::new(0.05, 0.05, NearTable, fix).gap(2.5).share(0.5),
                    Segment::new(0.05, 0.05, NearPatient, fix).gap(2.5).share(0.5),
                ],
            },
        ];
        spec
    }

    /// Gaze-only contrast: alternating fixation and uniform scatter blocks,
    /// no calibration and still hands.
    pub fn two_regime(seed: u64) -> Self {
        use ProximityState::*;
        let mut spec = ScenarioSpec::empty(seed);
        spec.calibration_s = 0.0;
        let block = |label: &str, gaze| PhasePlan {
            label: label.into(),
            duration_s: 20.0,
            segments: vec![Segment::new(0.0, 0.0, NearPatient, gaze)],
        };
        spec.phases = vec![
            block("fixation", GazeRegime::fixation(0.0005)),
            block("scatter", GazeRegime::Scatter),
            block("fixation", GazeRegime::fixation(0.0005)),
            block("scatter", GazeRegime::Scatter),
        ];
        spec
    }

    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        match name {
            "abcde" => Ok(Self::abcde(seed)),
            "abcde-repeated" => Ok(Self::abcde_repeated(seed)),
            "two-regime" => Ok(Self::two_regime(seed)),
            "empty" => Ok(Self::empty(seed)),
            other => Err(Error::InvalidSpec(format!(
                "unknown preset `{other}` (expected abcde, abcde-repeated, two-regime or empty)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if !(self.calibration_s >= 0.0) || !self.calibration_s.is_finite() {
            return bad(format!("calibration_s {} must be >= 0", self.calibration_s));
        }
        if !(self.accel_noise_g >= 0.0) || !(self.gaze_noise >= 0.0) || !(self.rssi.noise_db >= 0.0) {
            return bad("noise levels must be >= 0".into());
        }
        if !(0.0..1.0).contains(&self.rssi.dropout) {
            return bad(format!("rssi dropout {} outside [0, 1)", self.rssi.dropout));
        }
        if !(self.rssi.near_dbm > self.rssi.far_dbm) {
            return bad("rssi near level must exceed far level".into());
        }
        for kind in StreamKind::ALL {
            if !self.lags.get(kind).is_finite() {
                return bad(format!("lag for {} must be finite", kind.name()));
            }
        }
        for p in &self.phases {
            if p.label.trim().is_empty() {
                return bad("phase label must be non-empty".into());
            }
            if !(p.duration_s > 0.0) || !p.duration_s.is_finite() {
                return bad(format!("phase {} duration must be > 0", p.label));
            }
            if p.segments.is_empty() {
                return bad(format!("phase {} needs at least one segment", p.label));
            }
            for s in &p.segments {
                if !(s.share > 0.0) || !(s.speed_rh >= 0.0) || !(s.speed_lh >= 0.0) || !(s.burst_gap_s >= 0.0) {
                    return bad(format!("phase {}: share must be > 0, speeds and gaps >= 0", p.label));
                }
                if let GazeRegime::Fixation { std, x, y } = s.gaze {
                    if !(std >= 0.0) || !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                        return bad(format!("phase {}: fixation std >= 0 and centre in [0, 1]", p.label));
                    }
                }
                if !(s.blink_rate_hz >= 0.0) || !(s.blink_duration_s >= 0.0) {
                    return bad(format!("phase {}: blink parameters must be >= 0", p.label));
                }
                if s.blink_rate_hz > 0.0 && !(s.blink_duration_s < 1.0 / s.blink_rate_hz) {
                    return bad(format!(
                        "phase {}: blink duration must be below 1 / blink rate",
                        p.label
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Generator targets for one phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTruth {
    pub label: String,
    pub t_start: f64,
    pub t_end: f64,
    pub speed_rh: f64,
    pub speed_lh: f64,
    pub frac_near_patient: f64,
    pub frac_near_table: f64,
    pub frac_intermediate: f64,
    pub frac_fixation: f64,
}

impl PhaseTruth {
    pub fn state_fraction(&self, s: ProximityState) -> f64 {
        match s {
            ProximityState::NearPatient => self.frac_near_patient,
            ProximityState::NearTable => self.frac_near_table,
            ProximityState::Intermediate => self.frac_intermediate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub phases: Vec<PhaseTruth>,
    pub lags: StreamLags,
    pub duration_s: f64,
}

impl GroundTruth {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let header = [
            "label",
            "t_start",
            "t_end",
            "speed_rh",
            "speed_lh",
            "frac_near_patient",
            "frac_near_table",
            "frac_intermediate",
            "frac_fixation",
        ];
        let rows = self.phases.iter().map(|p| {
            vec![
                p.label.clone(),
                fmt_f64(p.t_start),
                fmt_f64(p.t_end),
                fmt_f64(p.speed_rh),
                fmt_f64(p.speed_lh),
                fmt_f64(p.frac_near_patient),
                fmt_f64(p.frac_near_table),
                fmt_f64(p.frac_intermediate),
                fmt_f64(p.frac_fixation),
            ]
        });
        write_csv(path.as_ref(), &header, rows)
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub recording: Recording,
    pub truth: GroundTruth,
}

impl Scenario {
    /// Session layout plus `ground_truth.csv`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        save_recording(&self.recording, dir)?;
        self.truth.write_csv(dir.join(GROUND_TRUTH_FILE))
    }
}

/// One stretch of constant behaviour on the true clock.
#[derive(Debug, Clone)]
struct Span {
    t0: f64,
    t1: f64,
    seg: Segment,
}

struct Timeline {
    spans: Vec<Span>,
    markers: Vec<Marker>,
    truth: Vec<PhaseTruth>,
    duration: f64,
}

impl Timeline {
    fn build(spec: &ScenarioSpec) -> Timeline {
        use ProximityState::*;
        let mut spans = Vec::new();
        let mut markers = Vec::new();
        let mut t = 0.0;
        if spec.calibration_s > 0.0 {
            for (label, state) in [(CALIB_NEAR_LABEL, NearPatient), (CALIB_FAR_LABEL, NearTable)] {
                markers.push(Marker { t, label: label.into() });
                let mut seg = Segment::new(0.0, 0.0, state, GazeRegime::Scatter);
                seg.blink_rate_hz = 0.0;
                spans.push(Span {
                    t0: t,
                    t1: t + spec.calibration_s,
                    seg,
                });
                t += spec.calibration_s;
            }
        }
        let mut truth = Vec::new();
        for p in &spec.phases {
            markers.push(Marker {
                t,
                label: format!("phase:{}", p.label),
            });
            let total: f64 = p.segments.iter().map(|s| s.share).sum();
            let start = t;
            let mut pt = PhaseTruth {
                label: p.label.clone(),
                t_start: start,
                t_end: start + p.duration_s,
                speed_rh: 0.0,
                speed_lh: 0.0,
                frac_near_patient: 0.0,
                frac_near_table: 0.0,
                frac_intermediate: 0.0,
                frac_fixation: 0.0,
            };
            for (k, s) in p.segments.iter().enumerate() {
                let w = s.share / total;
                let t1 = if k + 1 == p.segments.len() {
                    start + p.duration_s
                } else {
                    t + w * p.duration_s
                };
                spans.push(Span {
                    t0: t,
                    t1,
                    seg: s.clone(),
                });
                t = t1;
                pt.speed_rh += w * s.speed_rh;
                pt.speed_lh += w * s.speed_lh;
                match s.proximity {
                    NearPatient => pt.frac_near_patient += w,
                    NearTable => pt.frac_near_table += w,
                    Intermediate => pt.frac_intermediate += w,
                }
                if matches!(s.gaze, GazeRegime::Fixation { .. }) {
                    pt.frac_fixation += w;
                }
            }
            truth.push(pt);
        }
        Timeline {
            spans,
            markers,
            truth,
            duration: t,
        }
    }

    fn index_at(&self, t: f64) -> Option<usize> {
        let i = self.spans.partition_point(|s| s.t1 <= t);
        (i < self.spans.len() && t >= self.spans[i].t0).then_some(i)
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sample_times(duration: f64, rate: f64) -> Vec<f64> {
    let n = (duration * rate - 1e-9).ceil().max(0.0) as usize;
    (0..n).map(|k| k as f64 / rate).collect()
}

fn normal(std: f64) -> Normal<f64> {
    Normal::new(0.0, std).expect("finite non-negative std")
}

struct Burst {
    t0: f64,
    dur: f64,
    dir: [f64; 3],
    span: usize,
}

/// Movement bursts per span for one hand. A burst is one period of
/// `sin(2 pi (t - t0) / dur)` along a random direction, so its velocity is a
/// raised-cosine pulse.
fn burst_train(timeline: &Timeline, speed: impl Fn(&Segment) -> f64, rng: &mut ChaCha8Rng) -> Vec<Burst> {
    let mut out = Vec::new();
    for (k, span) in timeline.spans.iter().enumerate() {
        if speed(&span.seg) <= 0.0 {
            continue;
        }
        let gap = span.seg.burst_gap_s;
        let mut t = span.t0 + rng.gen_range(0.0..=gap.max(0.05));
        loop {
            let dur = rng.gen_range(BURST_MIN_S..=BURST_MAX_S);
            if t + dur > span.t1 {
                break;
            }
            let d: [f64; 3] = UnitSphere.sample(rng);
            out.push(Burst {
                t0: t,
                dur,
                dir: d,
                span: k,
            });
            t += dur + gap * rng.gen_range(0.5..=1.5);
        }
    }
    out
}

/// Linear acceleration (m/s²) of the bursts at the given true times.
fn burst_accel(bursts: &[Burst], amps: &[f64], true_times: &[f64]) -> [Vec<f64>; 3] {
    let mut out = [
        vec![0.0; true_times.len()],
        vec![0.0; true_times.len()],
        vec![0.0; true_times.len()],
    ];
    for b in bursts {
        let a = amps[b.span];
        if a == 0.0 {
            continue;
        }
        let i0 = true_times.partition_point(|&t| t < b.t0);
        let i1 = true_times.partition_point(|&t| t < b.t0 + b.dur);
        for i in i0..i1 {
            let v = a * (2.0 * PI * (true_times[i] - b.t0) / b.dur).sin();
            for ax in 0..3 {
                out[ax][i] += v * b.dir[ax];
            }
        }
    }
    out
}

const ACCEL_CHANNELS: [&str; 3] = ["acc_x", "acc_y", "acc_z"];

fn accel_series(id: &str, times: &[f64], lin: &[Vec<f64>; 3], noise: &[Vec<f64>; 3]) -> Result<TimeSeries> {
    let cols: Vec<Vec<f64>> = (0..3)
        .map(|ax| {
            (0..times.len())
                .map(|i| lin[ax][i] / GRAVITY_M_S2 + noise[ax][i] + if ax == 2 { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let channels = ACCEL_CHANNELS.map(String::from).to_vec();
    TimeSeries::new(
        id,
        channels,
        times.to_vec(),
        cols.into_iter().map(|c| c.into_iter().map(Some).collect()).collect(),
    )
    .map(|s| s.with_nominal_rate(ACCEL_RATE_HZ))
}

/// Speed through the default filtering chain.
fn chain_speed(accel: &TimeSeries) -> Result<TimeSeries> {
    let smooth = savgol_filter(accel, &SavGolSpec::default())?;
    let lin = remove_gravity(&smooth, DEFAULT_BASELINE_S)?;
    velocity_magnitude(&lin, leak_for_half_life(DEFAULT_LEAK_HALF_LIFE_S, ACCEL_RATE_HZ))
}

/// Accelerometer stream of one hand whose per-span mean speed, measured by
/// the default chain, matches the span target.
fn hand_accel(
    id: &str,
    spec: &ScenarioSpec,
    timeline: &Timeline,
    speed: impl Fn(&Segment) -> f64 + Copy,
    lag: f64,
    stream: u64,
) -> Result<TimeSeries> {
    let times = sample_times(timeline.duration, ACCEL_RATE_HZ);
    let true_times: Vec<f64> = times.iter().map(|t| t - lag).collect();
    let mut burst_rng = rng_for(spec.seed, stream);
    let bursts = burst_train(timeline, speed, &mut burst_rng);
    let mut noise_rng = rng_for(spec.seed, stream + 1);
    let nd = normal(spec.accel_noise_g);
    let noise: [Vec<f64>; 3] = std::array::from_fn(|_| (0..times.len()).map(|_| nd.sample(&mut noise_rng)).collect());

    let span_of: Vec<Option<usize>> = true_times.iter().map(|&t| timeline.index_at(t)).collect();
    let targets: Vec<f64> = timeline.spans.iter().map(|s| speed(&s.seg)).collect();
    let mut amps: Vec<f64> = targets.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
    for _ in 0..AMPLITUDE_ITERATIONS {
        let lin = burst_accel(&bursts, &amps, &true_times);
        let v = chain_speed(&accel_series(id, &times, &lin, &noise)?)?;
        let mut sum = vec![0.0; amps.len()];
        let mut count = vec![0usize; amps.len()];
        for (i, s) in span_of.iter().enumerate() {
            if let (Some(k), Some(val)) = (s, v.value(i, 0)) {
                sum[*k] += val;
                count[*k] += 1;
            }
        }
        for k in 0..amps.len() {
            if targets[k] > 0.0 && count[k] > 0 && sum[k] > 0.0 {
                let measured = sum[k] / count[k] as f64;
                amps[k] *= (targets[k] / measured).clamp(0.1, 10.0);
            }
        }
    }
    let lin = burst_accel(&bursts, &amps, &true_times);
    accel_series(id, &times, &lin, &noise)
}

fn rssi_level(spec: &RssiSpec, state: ProximityState) -> f64 {
    match state {
        ProximityState::NearPatient => spec.near_dbm,
        ProximityState::NearTable => spec.far_dbm,
        ProximityState::Intermediate => (spec.near_dbm + spec.far_dbm) / 2.0,
    }
}

fn rssi_stream(id: &str, spec: &ScenarioSpec, timeline: &Timeline, lag: f64, stream: u64) -> Result<TimeSeries> {
    let times = sample_times(timeline.duration, RSSI_RATE_HZ);
    let mut rng = rng_for(spec.seed, stream);
    let nd = normal(spec.rssi.noise_db);
    let values = times
        .iter()
        .map(|&t| {
            let noise = nd.sample(&mut rng);
            let drop = rng.gen_bool(spec.rssi.dropout);
            let state = timeline
                .index_at((t - lag).max(0.0))
                .map_or(ProximityState::Intermediate, |k| timeline.spans[k].seg.proximity);
            (!drop).then_some(rssi_level(&spec.rssi, state) + noise)
        })
        .collect();
    Ok(TimeSeries::single(id, "rssi", times, values)?)
}

fn gaze_stream(spec: &ScenarioSpec, timeline: &Timeline, lag: f64, stream: u64) -> Result<TimeSeries> {
    let times = sample_times(timeline.duration, GAZE_RATE_HZ);
    let mut rng = rng_for(spec.seed, stream);
    let mut blink_rng = rng_for(spec.seed, stream + 1);

    // blink onsets on the true clock, per span
    let mut blinks: Vec<(f64, f64)> = Vec::new();
    for span in &timeline.spans {
        let rate = span.seg.blink_rate_hz;
        if rate <= 0.0 {
            continue;
        }
        let exp = Exp::new(rate).expect("positive rate");
        let mut t = span.t0 + exp.sample(&mut blink_rng);
        while t + span.seg.blink_duration_s < span.t1 {
            blinks.push((t, t + span.seg.blink_duration_s));
            t += span.seg.blink_duration_s + exp.sample(&mut blink_rng);
        }
    }
    let jitter = normal(spec.gaze_noise);
    let mut xs = Vec::with_capacity(times.len());
    let mut ys = Vec::with_capacity(times.len());
    for &t in &times {
        let tt = t - lag;
        let span = timeline.index_at(tt.max(0.0)).map(|k| &timeline.spans[k]);
        let (x, y) = match span.map(|s| s.seg.gaze) {
            Some(GazeRegime::Fixation { std, x, y }) => {
                let d = normal(std);
                (x + d.sample(&mut rng), y + d.sample(&mut rng))
            }
            _ => (rng.gen::<f64>(), rng.gen::<f64>()),
        };
        let (x, y) = (
            (x + jitter.sample(&mut rng)).clamp(0.0, 1.0),
            (y + jitter.sample(&mut rng)).clamp(0.0, 1.0),
        );
        let k = blinks.partition_point(|b| b.1 <= tt);
        let blinking = blinks.get(k).is_some_and(|b| b.0 <= tt);
        xs.push((!blinking).then_some(x));
        ys.push((!blinking).then_some(y));
    }
    TimeSeries::new("gaze", vec!["gaze_x".into(), "gaze_y".into()], times, vec![xs, ys])
        .map(|s| s.with_nominal_rate(GAZE_RATE_HZ))
}

/// Builds the session described by `spec`; identical specs give identical
/// recordings.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let timeline = Timeline::build(spec);
    let lags = spec.lags;
    let recording = if timeline.duration > 0.0 {
        let accel_rh = hand_accel("accel_rh", spec, &timeline, |s| s.speed_rh, lags.accel_rh, 10)?;
        let accel_lh = hand_accel("accel_lh", spec, &timeline, |s| s.speed_lh, lags.accel_lh, 20)?;
        let rssi_rh = rssi_stream("rssi_rh", spec, &timeline, lags.rssi_rh, 30)?;
        let rssi_lh = rssi_stream("rssi_lh", spec, &timeline, lags.rssi_lh, 40)?;
        let gaze = gaze_stream(spec, &timeline, lags.gaze, 50)?;
        let markers = MarkerStream::new(
            timeline
                .markers
                .iter()
                .map(|m| Marker {
                    t: m.t + lags.markers,
                    label: m.label.clone(),
                })
                .collect(),
        )?;
        Recording {
            accel_rh,
            accel_lh,
            rssi_rh,
            rssi_lh,
            gaze,
            markers,
            meta: meta(spec, &lags),
        }
    } else {
        empty_recording(meta(spec, &lags))?
    };
    Ok(Scenario {
        recording,
        truth: GroundTruth {
            phases: timeline.truth,
            lags,
            duration_s: timeline.duration,
        },
    })
}

fn meta(spec: &ScenarioSpec, lags: &StreamLags) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("subject".into(), "synthetic".into());
    m.insert("session".into(), format!("seed-{}", spec.seed));
    for kind in StreamKind::ALL {
        m.insert(format!("injected_lag_s.{}", kind.name()), fmt_f64(lags.get(kind)));
    }
    m
}

fn empty_recording(meta: BTreeMap<String, String>) -> Result<Recording> {
    let accel = |id: &str| TimeSeries::new(id, ACCEL_CHANNELS.map(String::from).to_vec(), vec![], vec![vec![]; 3]);
    Ok(Recording {
        accel_rh: accel("accel_rh")?,
        accel_lh: accel("accel_lh")?,
        rssi_rh: TimeSeries::single("rssi_rh", "rssi", vec![], vec![])?,
        rssi_lh: TimeSeries::single("rssi_lh", "rssi", vec![], vec![])?,
        gaze: TimeSeries::new(
            "gaze",
            vec!["gaze_x".into(), "gaze_y".into()],
            vec![],
            vec![vec![], vec![]],
        )?,
        markers: MarkerStream::default(),
        meta,
    })
}

pub const SYNC_DURATION_S: f64 = 20.0;

/// A slow vertical head sweep seen by the right-hand accelerometer (`acc_x`)
/// and, delayed by `offset` seconds, by the eye tracker (`gaze_y`).
pub fn make_sync_scenario(offset: f64, seed: u64) -> Recording {
    let mut rng = rng_for(seed, 60);
    let comps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.5..1.0),
                rng.gen_range(0.2..0.6),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let raw = |t: f64| {
        comps
            .iter()
            .map(|(a, f, p)| a * (2.0 * PI * f * t + p).sin())
            .sum::<f64>()
    };
    let peak = (0..=2000)
        .map(|k| raw(k as f64 * 0.01).abs())
        .fold(0.0, f64::max)
        .max(1e-12);
    let s = |t: f64| raw(t) / peak;

    let mut noise_rng = rng_for(seed, 61);
    let an = normal(0.005);
    let gn = normal(0.002);
    let at = sample_times(SYNC_DURATION_S, ACCEL_RATE_HZ);
    let mut accel_cols = vec![Vec::new(), Vec::new(), Vec::new()];
    let mut still_cols = vec![Vec::new(), Vec::new(), Vec::new()];
    for &t in &at {
        accel_cols[0].push(0.3 * s(t) + an.sample(&mut noise_rng));
        accel_cols[1].push(an.sample(&mut noise_rng));
        accel_cols[2].push(1.0 + an.sample(&mut noise_rng));
        for (ax, col) in still_cols.iter_mut().enumerate() {
            col.push(if ax == 2 { 1.0 } else { 0.0 } + an.sample(&mut noise_rng));
        }
    }
    let channels = ACCEL_CHANNELS.map(String::from).to_vec();
    let accel_rh =
        TimeSeries::from_uniform("accel_rh", channels.clone(), 0.0, ACCEL_RATE_HZ, accel_cols).expect("finite samples");
    let accel_lh =
        TimeSeries::from_uniform("accel_lh", channels, 0.0, ACCEL_RATE_HZ, still_cols).expect("finite samples");

    let gt = sample_times(SYNC_DURATION_S, GAZE_RATE_HZ);
    let gx: Vec<f64> = gt
        .iter()
        .map(|_| (0.5 + gn.sample(&mut noise_rng)).clamp(0.0, 1.0))
        .collect();
    let gy: Vec<f64> = gt
        .iter()
        .map(|&t| (0.5 + 0.25 * s(t - offset) + gn.sample(&mut noise_rng)).clamp(0.0, 1.0))
        .collect();
    let gaze = TimeSeries::from_uniform(
        "gaze",
        vec!["gaze_x".into(), "gaze_y".into()],
        0.0,
        GAZE_RATE_HZ,
        vec![gx, gy],
    )
    .expect("finite samples");

    let rn = normal(2.0);
    let rt = sample_times(SYNC_DURATION_S, RSSI_RATE_HZ);
    let mut rssi = |id: &str| {
        let v = rt.iter().map(|_| Some(-60.0 + rn.sample(&mut noise_rng))).collect();
        TimeSeries::single(id, "rssi", rt.clone(), v).expect("finite samples")
    };
    let rssi_rh = rssi("rssi_rh");
    let rssi_lh = rssi("rssi_lh");

    let mut meta = BTreeMap::new();
    meta.insert("subject".into(), "synthetic".into());
    meta.insert("session".into(), format!("sync-seed-{seed}"));
    meta.insert("injected_lag_s.gaze".into(), fmt_f64(offset));
    Recording {
        accel_rh,
        accel_lh,
        rssi_rh,
        rssi_lh,
        gaze,
        markers: MarkerStream::new(vec![Marker {
            t: 0.0,
            label: SYNC_LABEL.into(),
        }])
        .expect("valid marker"),
        meta,
    }
}
