//! Marker-driven phase sequencing, per-phase summaries and signature checks.

use std::fmt::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::LowEntropyMask;
use crate::proximity::{count_transitions, ProximitySeries, ProximityState};
use crate::stats;
use crate::streams::io::{fmt_f64, fmt_opt, write_csv};
use crate::streams::{MarkerStream, TimeSeries};

pub const PHASE_MARKER_PREFIX: &str = "phase:";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PhaseLabel {
    I,
    IIa,
    IIb,
    III,
    IV,
    Other(String),
}

impl PhaseLabel {
    pub fn parse(s: &str) -> PhaseLabel {
        match s {
            "I" => PhaseLabel::I,
            "IIa" => PhaseLabel::IIa,
            "IIb" => PhaseLabel::IIb,
            "III" => PhaseLabel::III,
            "IV" => PhaseLabel::IV,
            other => PhaseLabel::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            PhaseLabel::I => "I",
            PhaseLabel::IIa => "IIa",
            PhaseLabel::IIb => "IIb",
            PhaseLabel::III => "III",
            PhaseLabel::IV => "IV",
            PhaseLabel::Other(s) => s,
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAnnotation {
    pub label: PhaseLabel,
    pub t_start: f64,
    pub t_end: f64,
}

impl PhaseAnnotation {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Each `phase:<label>` marker opens a phase that the next phase marker, or
/// the span end, closes. Phases are clipped to the span; empty ones are
/// dropped.
pub fn phases_from_markers(markers: &MarkerStream, span: (f64, f64)) -> Result<Vec<PhaseAnnotation>> {
    let opens: Vec<(f64, &str)> = markers
        .events()
        .iter()
        .filter_map(|m| m.label.strip_prefix(PHASE_MARKER_PREFIX).map(|l| (m.t, l.trim())))
        .collect();
    if opens.is_empty() {
        return Err(Error::NoPhaseMarkers);
    }
    let mut out = Vec::with_capacity(opens.len());
    for (k, &(t, label)) in opens.iter().enumerate() {
        let end = opens.get(k + 1).map_or(span.1, |n| n.0);
        let (a, b) = (t.max(span.0), end.min(span.1));
        if b > a {
            out.push(PhaseAnnotation {
                label: PhaseLabel::parse(label),
                t_start: a,
                t_end: b,
            });
        }
    }
    Ok(out)
}

/// Derived series a phase summary draws from. Velocities and proximity
/// share one grid.
#[derive(Debug, Clone, Copy)]
pub struct PhaseInputs<'a> {
    pub velocity_rh: &'a TimeSeries,
    pub velocity_lh: &'a TimeSeries,
    pub proximity: &'a ProximitySeries,
    pub mask: &'a LowEntropyMask,
    pub markers: &'a MarkerStream,
}

impl PhaseInputs<'_> {
    fn check_grid(&self) -> Result<()> {
        let ts = self.velocity_rh.timestamps();
        let same = |other: &[f64]| other.len() == ts.len() && other.iter().zip(ts).all(|(a, b)| (a - b).abs() <= 1e-9);
        if !same(self.velocity_lh.timestamps()) || !same(&self.proximity.timestamps) {
            return Err(Error::GridMismatch(
                "velocity and proximity series must share one grid".into(),
            ));
        }
        Ok(())
    }

    fn rows(&self, t0: f64, t1: f64) -> std::ops::Range<usize> {
        let ts = self.velocity_rh.timestamps();
        ts.partition_point(|&t| t < t0)..ts.partition_point(|&t| t < t1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSummary {
    pub label: String,
    pub t_start: f64,
    pub t_end: f64,
    pub duration_s: f64,
    pub samples: usize,
    pub mean_speed_rh: Option<f64>,
    pub p95_speed_rh: Option<f64>,
    pub mean_speed_lh: Option<f64>,
    pub p95_speed_lh: Option<f64>,
    pub frac_near_patient: f64,
    pub frac_near_table: f64,
    pub frac_intermediate: f64,
    pub low_entropy_fraction: f64,
    pub proximity_transitions: usize,
    pub marker_count: usize,
}

impl PhaseSummary {
    /// Mean of the per-hand mean speeds that are present.
    pub fn combined_speed(&self) -> Option<f64> {
        let v: Vec<f64> = [self.mean_speed_rh, self.mean_speed_lh].into_iter().flatten().collect();
        stats::mean(&v)
    }

    pub fn state_fraction(&self, state: ProximityState) -> f64 {
        match state {
            ProximityState::NearPatient => self.frac_near_patient,
            ProximityState::NearTable => self.frac_near_table,
            ProximityState::Intermediate => self.frac_intermediate,
        }
    }
}

/// Statistics over grid samples in `[t_start, t_end)`; missing speeds are
/// left out of the speed statistics only.
pub fn summarize_phase(annotation: &PhaseAnnotation, inputs: &PhaseInputs<'_>) -> Result<PhaseSummary> {
    inputs.check_grid()?;
    let rows = inputs.rows(annotation.t_start, annotation.t_end);
    if rows.is_empty() {
        return Err(Error::EmptyInterval(format!(
            "phase {} [{}, {}) holds no grid samples",
            annotation.label, annotation.t_start, annotation.t_end
        )));
    }
    let n = rows.len() as f64;
    let speeds = |s: &TimeSeries| -> (Option<f64>, Option<f64>) {
        let v: Vec<f64> = s.channel(0)[rows.clone()].iter().flatten().copied().collect();
        (stats::mean(&v), stats::percentile(&v, 95.0))
    };
    let (mean_rh, p95_rh) = speeds(inputs.velocity_rh);
    let (mean_lh, p95_lh) = speeds(inputs.velocity_lh);
    let states = &inputs.proximity.states[rows.clone()];
    let frac = |s: ProximityState| states.iter().filter(|&&x| x == s).count() as f64 / n;
    let ts = &inputs.velocity_rh.timestamps()[rows.clone()];
    let low = ts.iter().filter(|&&t| inputs.mask.contains(t)).count() as f64 / n;
    let marker_count = inputs
        .markers
        .events()
        .iter()
        .filter(|m| m.t >= annotation.t_start && m.t < annotation.t_end)
        .count();
    Ok(PhaseSummary {
        label: annotation.label.to_string(),
        t_start: annotation.t_start,
        t_end: annotation.t_end,
        duration_s: annotation.duration(),
        samples: rows.len(),
        mean_speed_rh: mean_rh,
        p95_speed_rh: p95_rh,
        mean_speed_lh: mean_lh,
        p95_speed_lh: p95_lh,
        frac_near_patient: frac(ProximityState::NearPatient),
        frac_near_table: frac(ProximityState::NearTable),
        frac_intermediate: frac(ProximityState::Intermediate),
        low_entropy_fraction: low,
        proximity_transitions: count_transitions(states),
        marker_count,
    })
}

/// Combined (two-hand average) mean speed over `[t0, t1)`, the reference
/// for the relative activity rules.
pub fn global_mean_speed(velocity_rh: &TimeSeries, velocity_lh: &TimeSeries, t0: f64, t1: f64) -> Option<f64> {
    let hand = |s: &TimeSeries| {
        let v: Vec<f64> = s
            .timestamps()
            .iter()
            .zip(s.channel(0))
            .filter(|(t, _)| **t >= t0 && **t < t1)
            .filter_map(|(_, v)| *v)
            .collect();
        stats::mean(&v)
    };
    let v: Vec<f64> = [hand(velocity_rh), hand(velocity_lh)].into_iter().flatten().collect();
    stats::mean(&v)
}

/// Thresholds of the phase signature table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignatureRules {
    /// Below this multiple of the global mean speed, hands count as idle.
    pub low_activity_ratio: f64,
    /// At or above this multiple, hands count as highly active.
    pub high_activity_ratio: f64,
    /// Minimum low-entropy fraction for visual focus.
    pub focus_fraction: f64,
    pub near_patient_fraction: f64,
    /// Maximum near-table fraction for phases spent at the bedside.
    pub max_table_fraction: f64,
    pub min_transitions: usize,
}

impl Default for SignatureRules {
    fn default() -> Self {
        SignatureRules {
            low_activity_ratio: 0.25,
            high_activity_ratio: 1.0,
            focus_fraction: 0.5,
            near_patient_fraction: 0.6,
            max_table_fraction: 0.4,
            min_transitions: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Consistent,
    /// Failed rules, human readable.
    Inconsistent(Vec<String>),
    /// Free-text label without a signature.
    NoSignature,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::Inconsistent(_) => "inconsistent",
            Verdict::NoSignature => "no_signature",
        }
    }

    pub fn is_consistent(&self) -> bool {
        matches!(self, Verdict::Consistent)
    }

    pub fn reasons(&self) -> &[String] {
        match self {
            Verdict::Inconsistent(r) => r,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVerdict {
    pub label: String,
    pub verdict: Verdict,
}

/// Checks each summary against the rule for its label. This validates the
/// annotated phases; it does not classify.
pub fn match_signatures(summaries: &[PhaseSummary], rules: &SignatureRules, global_mean: f64) -> Vec<PhaseVerdict> {
    summaries
        .iter()
        .map(|s| PhaseVerdict {
            label: s.label.clone(),
            verdict: check(s, rules, global_mean),
        })
        .collect()
}

fn check(s: &PhaseSummary, r: &SignatureRules, global_mean: f64) -> Verdict {
    let low = r.low_activity_ratio * global_mean;
    let high = r.high_activity_ratio * global_mean;
    let speed = s.combined_speed();
    let mut failed = Vec::new();
    let mut need = |ok: bool, what: String| {
        if !ok {
            failed.push(what);
        }
    };
    let speed_txt = speed.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    let focus = |need: &mut dyn FnMut(bool, String)| {
        need(
            s.low_entropy_fraction >= r.focus_fraction,
            format!(
                "low-entropy fraction {:.2} < {}",
                s.low_entropy_fraction, r.focus_fraction
            ),
        )
    };
    let transitions = |need: &mut dyn FnMut(bool, String)| {
        need(
            s.proximity_transitions >= r.min_transitions,
            format!(
                "{} proximity transitions < {}",
                s.proximity_transitions, r.min_transitions
            ),
        )
    };
    let bedside = |need: &mut dyn FnMut(bool, String)| {
        need(
            s.frac_near_table <= r.max_table_fraction,
            format!(
                "near-table fraction {:.2} > {}",
                s.frac_near_table, r.max_table_fraction
            ),
        )
    };
    match PhaseLabel::parse(&s.label) {
        PhaseLabel::I => {
            need(
                speed.is_some_and(|v| v >= high),
                format!("speed {speed_txt} < {high:.3} (high activity)"),
            );
            need(
                s.frac_near_patient >= r.near_patient_fraction,
                format!(
                    "near-patient fraction {:.2} < {}",
                    s.frac_near_patient, r.near_patient_fraction
                ),
            );
            focus(&mut need);
        }
        PhaseLabel::IIa => {
            need(
                speed.is_some_and(|v| v < low),
                format!("speed {speed_txt} >= {low:.3} (expected idle hands)"),
            );
            focus(&mut need);
            bedside(&mut need);
        }
        PhaseLabel::IIb => {
            need(
                speed.is_some_and(|v| v >= low && v < high),
                format!("speed {speed_txt} outside [{low:.3}, {high:.3}) (moderate activity)"),
            );
            focus(&mut need);
            bedside(&mut need);
        }
        PhaseLabel::III => {
            transitions(&mut need);
            focus(&mut need);
            need(
                speed.is_some_and(|v| v >= low),
                format!("speed {speed_txt} < {low:.3} (expected hand activity)"),
            );
        }
        PhaseLabel::IV => {
            transitions(&mut need);
            focus(&mut need);
            need(
                speed.is_some_and(|v| v < high),
                format!("speed {speed_txt} >= {high:.3} (expected few movements)"),
            );
        }
        PhaseLabel::Other(_) => return Verdict::NoSignature,
    }
    if failed.is_empty() {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent(failed)
    }
}

pub const REPORT_COLUMNS: [&str; 18] = [
    "label",
    "t_start",
    "t_end",
    "duration_s",
    "samples",
    "mean_speed_rh",
    "p95_speed_rh",
    "mean_speed_lh",
    "p95_speed_lh",
    "frac_near_patient",
    "frac_near_table",
    "frac_intermediate",
    "low_entropy_fraction",
    "proximity_transitions",
    "marker_count",
    "combined_speed",
    "verdict",
    "reasons",
];

/// One row per phase: every summary field plus the verdict.
pub fn write_phase_report(path: impl AsRef<Path>, summaries: &[PhaseSummary], verdicts: &[PhaseVerdict]) -> Result<()> {
    let rows = summaries.iter().zip(verdicts).map(|(s, v)| {
        vec![
            s.label.clone(),
            fmt_f64(s.t_start),
            fmt_f64(s.t_end),
            fmt_f64(s.duration_s),
            s.samples.to_string(),
            fmt_opt(s.mean_speed_rh),
            fmt_opt(s.p95_speed_rh),
            fmt_opt(s.mean_speed_lh),
            fmt_opt(s.p95_speed_lh),
            fmt_f64(s.frac_near_patient),
            fmt_f64(s.frac_near_table),
            fmt_f64(s.frac_intermediate),
            fmt_f64(s.low_entropy_fraction),
            s.proximity_transitions.to_string(),
            s.marker_count.to_string(),
            fmt_opt(s.combined_speed()),
            v.verdict.as_str().to_string(),
            v.verdict.reasons().join("; "),
        ]
    });
    write_csv(path.as_ref(), &REPORT_COLUMNS, rows)
}

/// Fixed-width table of summaries, verdicts and the thresholds used.
pub fn format_report(
    summaries: &[PhaseSummary],
    verdicts: &[PhaseVerdict],
    rules: &SignatureRules,
    global_mean: f64,
) -> String {
    let mut out = String::new();
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
    let _ = writeln!(
        out,
        "{:<6} {:>8} {:>8} {:>8} {:>8} {:>6} {:>6} {:>6} {:>6} {:>5}  verdict",
        "phase", "start", "dur_s", "v_rh", "v_lh", "pat", "table", "inter", "lowH", "trans"
    );
    for (s, v) in summaries.iter().zip(verdicts) {
        let _ = writeln!(
            out,
            "{:<6} {:>8.2} {:>8.2} {:>8} {:>8} {:>6.2} {:>6.2} {:>6.2} {:>6.2} {:>5}  {}",
            s.label,
            s.t_start,
            s.duration_s,
            opt(s.mean_speed_rh),
            opt(s.mean_speed_lh),
            s.frac_near_patient,
            s.frac_near_table,
            s.frac_intermediate,
            s.low_entropy_fraction,
            s.proximity_transitions,
            v.verdict.as_str()
        );
        for reason in v.verdict.reasons() {
            let _ = writeln!(out, "       - {reason}");
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "global mean speed: {global_mean:.4} m/s");
    let _ = writeln!(
        out,
        "thresholds: idle < {} x global, high >= {} x global, focus >= {}, near patient >= {}, near table <= {}, transitions >= {}",
        rules.low_activity_ratio,
        rules.high_activity_ratio,
        rules.focus_fraction,
        rules.near_patient_fraction,
        rules.max_table_fraction,
        rules.min_transitions
    );
    let _ = writeln!(
        out,
        "note: IIa and IIb rules differ only in hand-activity level; separating them otherwise needs video."
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::Marker;

    fn markers(list: &[(f64, &str)]) -> MarkerStream {
        MarkerStream::new(
            list.iter()
                .map(|(t, l)| Marker {
                    t: *t,
                    label: l.to_string(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn sequencing_rule() {
        let m = markers(&[(10.0, "phase:I"), (60.0, "phase:IIa"), (120.0, "end")]);
        let p = phases_from_markers(&m, (0.0, 120.0)).unwrap();
        assert_eq!(
            p,
            vec![
                PhaseAnnotation {
                    label: PhaseLabel::I,
                    t_start: 10.0,
                    t_end: 60.0
                },
                PhaseAnnotation {
                    label: PhaseLabel::IIa,
                    t_start: 60.0,
                    t_end: 120.0
                },
            ]
        );
    }

    #[test]
    fn single_marker_runs_to_span_end() {
        let p = phases_from_markers(&markers(&[(0.0, "phase:I")]), (0.0, 42.0)).unwrap();
        assert_eq!(
            p,
            vec![PhaseAnnotation {
                label: PhaseLabel::I,
                t_start: 0.0,
                t_end: 42.0
            }]
        );
    }

    #[test]
    fn no_phase_markers() {
        let r = phases_from_markers(&markers(&[(1.0, "sync"), (2.0, "calib_near")]), (0.0, 10.0));
        assert!(matches!(r, Err(Error::NoPhaseMarkers)));
    }

    #[test]
    fn free_text_labels_kept() {
        let p = phases_from_markers(&markers(&[(0.0, "phase:handover")]), (0.0, 5.0)).unwrap();
        assert_eq!(p[0].label, PhaseLabel::Other("handover".into()));
    }

    struct Fixture {
        vrh: TimeSeries,
        vlh: TimeSeries,
        prox: ProximitySeries,
        mask: LowEntropyMask,
        markers: MarkerStream,
    }

    impl Fixture {
        fn new(
            speed_rh: impl Fn(usize) -> f64,
            state: impl Fn(usize) -> ProximityState,
            mask: Vec<(f64, f64)>,
        ) -> Self {
            let n = 400;
            let ts: Vec<f64> = (0..n).map(|i| i as f64 / 40.0).collect();
            let vrh =
                TimeSeries::single("v", "speed", ts.clone(), (0..n).map(|i| Some(speed_rh(i))).collect()).unwrap();
            let vlh = TimeSeries::single("v", "speed", ts.clone(), vec![Some(0.0); n]).unwrap();
            Fixture {
                vrh,
                vlh,
                prox: ProximitySeries {
                    timestamps: ts,
                    states: (0..n).map(state).collect(),
                },
                mask: LowEntropyMask {
                    threshold: 1.0,
                    intervals: mask,
                },
                markers: markers(&[(0.0, "phase:I"), (2.0, "note")]),
            }
        }

        fn inputs(&self) -> PhaseInputs<'_> {
            PhaseInputs {
                velocity_rh: &self.vrh,
                velocity_lh: &self.vlh,
                proximity: &self.prox,
                mask: &self.mask,
                markers: &self.markers,
            }
        }
    }

    fn ann(label: PhaseLabel, a: f64, b: f64) -> PhaseAnnotation {
        PhaseAnnotation {
            label,
            t_start: a,
            t_end: b,
        }
    }

    #[test]
    fn near_patient_throughout_and_fully_masked() {
        let f = Fixture::new(|_| 1.0, |_| ProximityState::NearPatient, vec![(-1.0, 100.0)]);
        let s = summarize_phase(&ann(PhaseLabel::I, 0.0, 10.0), &f.inputs()).unwrap();
        assert_eq!(s.frac_near_patient, 1.0);
        assert_eq!(s.low_entropy_fraction, 1.0);
        assert_eq!(s.samples, 400);
        assert_eq!(s.marker_count, 2);
        assert_eq!(s.mean_speed_rh, Some(1.0));
        assert_eq!(s.combined_speed(), Some(0.5));
    }

    #[test]
    fn fractions_sum_to_one() {
        let f = Fixture::new(
            |i| i as f64,
            |i| ProximityState::ALL[(i / 7) % 3],
            vec![(1.0, 2.0), (3.0, 3.5)],
        );
        let s = summarize_phase(&ann(PhaseLabel::III, 0.5, 8.25), &f.inputs()).unwrap();
        assert!((s.frac_near_patient + s.frac_near_table + s.frac_intermediate - 1.0).abs() <= 1e-9);
        assert!((s.low_entropy_fraction - 1.5 / 7.75).abs() < 0.01);
        assert!(s.proximity_transitions > 10);
    }

    #[test]
    fn split_means_recombine() {
        let f = Fixture::new(|i| ((i * 37) % 11) as f64 * 0.1, |_| ProximityState::NearTable, vec![]);
        let whole = summarize_phase(&ann(PhaseLabel::I, 1.0, 9.0), &f.inputs()).unwrap();
        let a = summarize_phase(&ann(PhaseLabel::I, 1.0, 3.5), &f.inputs()).unwrap();
        let b = summarize_phase(&ann(PhaseLabel::I, 3.5, 9.0), &f.inputs()).unwrap();
        let recombined = (a.mean_speed_rh.unwrap() * a.duration_s + b.mean_speed_rh.unwrap() * b.duration_s)
            / (a.duration_s + b.duration_s);
        assert!((recombined - whole.mean_speed_rh.unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn empty_interval() {
        let f = Fixture::new(|_| 0.0, |_| ProximityState::NearTable, vec![]);
        let r = summarize_phase(&ann(PhaseLabel::I, 50.0, 60.0), &f.inputs());
        assert!(matches!(r, Err(Error::EmptyInterval(_))));
    }

    #[test]
    fn grid_mismatch() {
        let mut f = Fixture::new(|_| 0.0, |_| ProximityState::NearTable, vec![]);
        f.prox.states.pop();
        f.prox.timestamps.pop();
        let r = summarize_phase(&ann(PhaseLabel::I, 0.0, 5.0), &f.inputs());
        assert!(matches!(r, Err(Error::GridMismatch(_))));
    }

    fn summary(label: &str, speed: f64, patient: f64, table: f64, low: f64, transitions: usize) -> PhaseSummary {
        PhaseSummary {
            label: label.into(),
            t_start: 0.0,
            t_end: 10.0,
            duration_s: 10.0,
            samples: 400,
            mean_speed_rh: Some(speed),
            p95_speed_rh: Some(speed),
            mean_speed_lh: Some(speed),
            p95_speed_lh: Some(speed),
            frac_near_patient: patient,
            frac_near_table: table,
            frac_intermediate: 1.0 - patient - table,
            low_entropy_fraction: low,
            proximity_transitions: transitions,
            marker_count: 1,
        }
    }

    #[test]
    fn idle_focused_phase_is_consistent() {
        let v = match_signatures(
            &[summary("IIa", 0.01, 1.0, 0.0, 0.95, 0)],
            &SignatureRules::default(),
            0.3,
        );
        assert_eq!(v[0].verdict, Verdict::Consistent);
    }

    #[test]
    fn phase_one_at_the_table_is_inconsistent() {
        let v = match_signatures(&[summary("I", 0.5, 0.1, 0.9, 0.9, 0)], &SignatureRules::default(), 0.3);
        match &v[0].verdict {
            Verdict::Inconsistent(r) => assert!(r.iter().any(|m| m.contains("near-patient"))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn signature_table() {
        let rules = SignatureRules::default();
        let g = 0.4;
        let cases = [
            (summary("I", 0.5, 0.9, 0.0, 0.7, 0), true),
            (summary("I", 0.3, 0.9, 0.0, 0.7, 0), false),
            (summary("IIb", 0.2, 0.9, 0.0, 0.7, 0), true),
            (summary("IIb", 0.05, 0.9, 0.0, 0.7, 0), false),
            (summary("III", 0.3, 0.5, 0.3, 0.6, 4), true),
            (summary("III", 0.3, 0.5, 0.3, 0.6, 1), false),
            (summary("III", 0.3, 0.5, 0.3, 0.2, 4), false),
            (summary("IV", 0.2, 0.5, 0.3, 0.6, 3), true),
            (summary("IV", 0.6, 0.5, 0.3, 0.6, 3), false),
        ];
        for (s, ok) in cases {
            let v = match_signatures(std::slice::from_ref(&s), &rules, g);
            assert_eq!(v[0].verdict.is_consistent(), ok, "{s:?} {:?}", v[0].verdict);
        }
        let v = match_signatures(&[summary("debrief", 0.0, 0.0, 0.0, 0.0, 0)], &rules, g);
        assert_eq!(v[0].verdict, Verdict::NoSignature);
    }

    #[test]
    fn report_outputs() {
        let s = vec![
            summary("IIa", 0.01, 1.0, 0.0, 0.95, 0),
            summary("I", 0.5, 0.1, 0.9, 0.9, 0),
        ];
        let rules = SignatureRules::default();
        let v = match_signatures(&s, &rules, 0.3);
        let text = format_report(&s, &v, &rules, 0.3);
        assert!(text.contains("consistent") && text.contains("inconsistent"));
        assert!(text.contains("IIa and IIb"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("phase_summary.csv");
        write_phase_report(&p, &s, &v).unwrap();
        let csv = std::fs::read_to_string(p).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("label,t_start,t_end"));
    }
}
