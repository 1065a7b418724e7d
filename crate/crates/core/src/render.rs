//! Deterministic SVG behaviorgrams.
//!
//! Every number is written with three decimals, so identical inputs give
//! identical bytes on every platform.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaze::LowEntropyMask;
use crate::phases::PhaseAnnotation;
use crate::proximity::{CalibrationModel, ProximitySeries, ProximityState};
use crate::stats;
use crate::streams::TimeSeries;

/// RSSI range used for the colour ramp when no calibration is known.
pub const DEFAULT_RSSI_RANGE: (f64, f64) = (-100.0, -30.0);
pub const MISSING_COLOR: &str = "#808080";

const LEFT_MARGIN: f64 = 56.0;
const RIGHT_MARGIN: f64 = 8.0;
const LABEL_STRIP: f64 = 16.0;
const LANE_HEIGHT: f64 = 12.0;
const GAP: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Extended,
    Simplified,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Extended => "extended",
            Variant::Simplified => "simplified",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extended" => Ok(Variant::Extended),
            "simplified" => Ok(Variant::Simplified),
            other => Err(Error::InvalidSpec(format!("unknown variant `{other}`"))),
        }
    }
}

/// Single-hue brightness ramps: weak signal dark, strong signal bright.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorMap {
    Blue,
    Green,
    Orange,
    Gray,
}

impl ColorMap {
    /// Dark and bright endpoints; the bright end is componentwise at least
    /// the dark end, so the ramp never darkens.
    fn endpoints(self) -> ([f64; 3], [f64; 3]) {
        match self {
            ColorMap::Blue => ([8.0, 29.0, 88.0], [222.0, 235.0, 247.0]),
            ColorMap::Green => ([0.0, 68.0, 27.0], [229.0, 245.0, 224.0]),
            ColorMap::Orange => ([127.0, 39.0, 4.0], [254.0, 230.0, 206.0]),
            ColorMap::Gray => ([20.0, 20.0, 20.0], [240.0, 240.0, 240.0]),
        }
    }

    /// Colour at position `u` in `[0, 1]` (clamped).
    pub fn rgb(self, u: f64) -> [u8; 3] {
        let u = if u.is_nan() { 0.0 } else { u.clamp(0.0, 1.0) };
        let (dark, bright) = self.endpoints();
        [0, 1, 2].map(|c| (dark[c] + u * (bright[c] - dark[c])).round() as u8)
    }

    pub fn hex(self, u: f64) -> String {
        let [r, g, b] = self.rgb(u);
        format!("#{r:02x}{g:02x}{b:02x}")
    }
}

impl FromStr for ColorMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blue" => Ok(ColorMap::Blue),
            "green" => Ok(ColorMap::Green),
            "orange" => Ok(ColorMap::Orange),
            "gray" | "grey" => Ok(ColorMap::Gray),
            other => Err(Error::InvalidSpec(format!("unknown color map `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorgramSpec {
    pub width: f64,
    pub height: f64,
    /// Half-open `[start, end)`; `None` renders the whole grid. Clipped to
    /// the data.
    pub time_range: Option<(f64, f64)>,
    pub variant: Variant,
    pub color_map: ColorMap,
    pub entropy_track_height: f64,
    pub labels: bool,
}

impl Default for BehaviorgramSpec {
    fn default() -> Self {
        BehaviorgramSpec {
            width: 1200.0,
            height: 300.0,
            time_range: None,
            variant: Variant::Extended,
            color_map: ColorMap::Blue,
            entropy_track_height: 20.0,
            labels: true,
        }
    }
}

impl BehaviorgramSpec {
    fn validate(&self) -> Result<()> {
        let min_height = LABEL_STRIP + 2.0 * LANE_HEIGHT + self.entropy_track_height + 4.0 * GAP + 10.0;
        if !(self.width > LEFT_MARGIN + RIGHT_MARGIN) || !(self.height >= min_height) {
            return Err(Error::InvalidSpec(format!(
                "canvas {}x{} too small (needs width > {} and height >= {min_height})",
                self.width,
                self.height,
                LEFT_MARGIN + RIGHT_MARGIN
            )));
        }
        if !(self.entropy_track_height > 0.0) {
            return Err(Error::InvalidSpec("entropy track height must be positive".into()));
        }
        Ok(())
    }
}

/// Derived series on one grid, plus annotations.
#[derive(Debug, Clone, Copy)]
pub struct BehaviorgramData<'a> {
    pub velocity_rh: &'a TimeSeries,
    pub velocity_lh: &'a TimeSeries,
    pub rssi_fused: &'a TimeSeries,
    pub proximity: &'a ProximitySeries,
    pub mask: &'a LowEntropyMask,
    pub phases: &'a [PhaseAnnotation],
    pub calibration: Option<&'a CalibrationModel>,
}

impl BehaviorgramData<'_> {
    fn check_grid(&self) -> Result<()> {
        let ts = self.velocity_rh.timestamps();
        let same = |o: &[f64]| o.len() == ts.len() && o.iter().zip(ts).all(|(a, b)| (a - b).abs() <= 1e-9);
        for (name, other) in [
            ("velocity_lh", self.velocity_lh.timestamps()),
            ("rssi_fused", self.rssi_fused.timestamps()),
            ("proximity", &self.proximity.timestamps[..]),
        ] {
            if !same(other) {
                return Err(Error::GridMismatch(format!("{name} is not on the velocity grid")));
            }
        }
        Ok(())
    }

    fn rssi_range(&self) -> (f64, f64) {
        match self.calibration {
            Some(m) => (m.rssi_far - m.margin, m.rssi_near + m.margin),
            None => DEFAULT_RSSI_RANGE,
        }
    }
}

/// Fixed three-decimal number without a negative zero.
fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    t_min: f64,
    t_max: f64,
    x0: f64,
    scale: f64,
    dt: f64,
    rows: std::ops::Range<usize>,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        self.x0 + (t - self.t_min) * self.scale
    }

    fn clip(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let (a, b) = (a.max(self.t_min), b.min(self.t_max));
        (b > a).then_some((a, b))
    }
}

fn frame(data: &BehaviorgramData<'_>, spec: &BehaviorgramSpec) -> Result<Frame> {
    let ts = data.velocity_rh.timestamps();
    if ts.is_empty() {
        return Err(Error::EmptyRange);
    }
    let dt = if ts.len() > 1 {
        data.velocity_rh.sample_interval()?
    } else {
        1.0
    };
    let data_span = (ts[0], ts[ts.len() - 1] + dt);
    let (a, b) = spec.time_range.unwrap_or(data_span);
    let (t_min, t_max) = (a.max(data_span.0), b.min(data_span.1));
    if !(t_max > t_min) {
        return Err(Error::EmptyRange);
    }
    let rows = ts.partition_point(|&t| t < t_min)..ts.partition_point(|&t| t < t_max);
    if rows.is_empty() {
        return Err(Error::EmptyRange);
    }
    Ok(Frame {
        t_min,
        t_max,
        x0: LEFT_MARGIN,
        scale: (spec.width - LEFT_MARGIN - RIGHT_MARGIN) / (t_max - t_min),
        dt,
        rows,
    })
}

/// 99th percentile of present speeds of both hands in range; 1 when that is
/// zero or undefined.
fn speed_norm(data: &BehaviorgramData<'_>, f: &Frame) -> (f64, Option<f64>) {
    let mut v: Vec<f64> = Vec::new();
    for s in [data.velocity_rh, data.velocity_lh] {
        v.extend(s.channel(0)[f.rows.clone()].iter().flatten());
    }
    let p99 = stats::percentile(&v, 99.0);
    (p99.filter(|&p| p > 0.0).unwrap_or(1.0), p99)
}

fn header(out: &mut String, spec: &BehaviorgramSpec, f: &Frame, p99: Option<f64>, norm: f64) {
    let (w, h) = (num(spec.width), num(spec.height));
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" class="behaviorgram {}">"#,
        spec.variant.as_str()
    );
    let _ = writeln!(
        out,
        "<metadata>variant={}; t_min={}; t_max={}; speed_p99={}; bar_scale_speed={}</metadata>",
        spec.variant.as_str(),
        num(f.t_min),
        num(f.t_max),
        p99.map_or("none".to_string(), num),
        num(norm)
    );
    let _ = writeln!(
        out,
        r##"<rect class="background" x="0.000" y="0.000" width="{w}" height="{h}" fill="#ffffff"/>"##
    );
}

fn phase_marks(
    out: &mut String,
    data: &BehaviorgramData<'_>,
    spec: &BehaviorgramSpec,
    f: &Frame,
    top: f64,
    bottom: f64,
) {
    for p in data.phases {
        let Some((a, b)) = f.clip(p.t_start, p.t_end) else {
            continue;
        };
        let x = num(f.x(a));
        let _ = writeln!(out, r#"<g class="phase" data-label="{}">"#, escape(p.label.as_str()));
        let _ = writeln!(
            out,
            r##"<line class="phase-boundary" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#d62728" stroke-width="1.000"/>"##,
            num(top),
            num(bottom)
        );
        if spec.labels {
            let _ = writeln!(
                out,
                r#"<text class="phase-label" x="{}" y="{}" font-size="11.000" font-family="sans-serif" text-anchor="middle">{}</text>"#,
                num((f.x(a) + f.x(b)) / 2.0),
                num(LABEL_STRIP - 4.0),
                escape(p.label.as_str())
            );
        }
        let _ = writeln!(out, "</g>");
    }
}

/// Contiguous runs of `state` as time spans `[t_first, t_last + dt)`.
fn state_runs(p: &ProximitySeries, f: &Frame, state: ProximityState) -> Vec<(f64, f64)> {
    let mut runs = Vec::new();
    let mut start: Option<f64> = None;
    for i in f.rows.clone() {
        let t = p.timestamps[i];
        match (p.states[i] == state, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                runs.push((s, t));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, (p.timestamps[f.rows.end - 1] + f.dt).min(f.t_max)));
    }
    runs
}

fn span_rect(out: &mut String, f: &Frame, class: &str, (a, b): (f64, f64), y: f64, h: f64, fill: &str) {
    let _ = writeln!(
        out,
        r#"<rect class="{class}" x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
        num(f.x(a)),
        num(y),
        num((b - a) * f.scale),
        num(h)
    );
}

/// Extended behaviorgram: position lanes, mirrored accelerograph coloured by
/// fused RSSI (left hand above the axis, right hand below), low-entropy
/// track and phase boundaries.
pub fn render_extended(data: &BehaviorgramData<'_>, spec: &BehaviorgramSpec) -> Result<String> {
    spec.validate()?;
    data.check_grid()?;
    let f = frame(data, spec)?;
    let (norm, p99) = speed_norm(data, &f);
    let mut out = String::new();
    header(&mut out, spec, &f, p99, norm);

    let lanes_top = LABEL_STRIP;
    let accel_top = lanes_top + 2.0 * LANE_HEIGHT + GAP;
    let entropy_top = spec.height - spec.entropy_track_height - GAP;
    let accel_bottom = entropy_top - GAP;
    let axis = (accel_top + accel_bottom) / 2.0;
    let half = (accel_bottom - accel_top) / 2.0;
    let x_end = num(spec.width - RIGHT_MARGIN);

    // position lanes
    let _ = writeln!(out, r#"<g class="position">"#);
    for (k, (state, class, name)) in [
        (ProximityState::NearPatient, "lane-patient", "patient"),
        (ProximityState::NearTable, "lane-table", "table"),
    ]
    .into_iter()
    .enumerate()
    {
        let y = lanes_top + k as f64 * LANE_HEIGHT;
        if spec.labels {
            let _ = writeln!(
                out,
                r#"<text class="lane-label" x="4.000" y="{}" font-size="9.000" font-family="sans-serif">{name}</text>"#,
                num(y + LANE_HEIGHT - 3.0)
            );
        }
        for run in state_runs(data.proximity, &f, state) {
            span_rect(&mut out, &f, class, run, y + 1.0, LANE_HEIGHT - 2.0, "#2ca02c");
        }
    }
    let _ = writeln!(out, "</g>");

    // accelerograph
    let (lo, hi) = data.rssi_range();
    let width = num(f.dt * f.scale);
    let _ = writeln!(out, r#"<g class="accelerograph">"#);
    if spec.labels {
        let _ = writeln!(
            out,
            r#"<text class="axis-label" x="4.000" y="{}" font-size="9.000" font-family="sans-serif">left</text>"#,
            num(axis - 4.0)
        );
        let _ = writeln!(
            out,
            r#"<text class="axis-label" x="4.000" y="{}" font-size="9.000" font-family="sans-serif">right</text>"#,
            num(axis + 12.0)
        );
    }
    for i in f.rows.clone() {
        let t = data.velocity_rh.timestamps()[i];
        let fill = match data.rssi_fused.value(i, 0) {
            Some(r) => spec.color_map.hex((r - lo) / (hi - lo)),
            None => MISSING_COLOR.to_string(),
        };
        let x = num(f.x(t));
        if let Some(v) = data.velocity_lh.value(i, 0) {
            let h = (v / norm).min(1.0) * half;
            let _ = writeln!(
                out,
                r#"<rect class="bar-lh" x="{x}" y="{}" width="{width}" height="{}" fill="{fill}"/>"#,
                num(axis - h),
                num(h)
            );
        }
        if let Some(v) = data.velocity_rh.value(i, 0) {
            let h = (v / norm).min(1.0) * half;
            let _ = writeln!(
                out,
                r#"<rect class="bar-rh" x="{x}" y="{}" width="{width}" height="{}" fill="{fill}"/>"#,
                num(axis),
                num(h)
            );
        }
    }
    let _ = writeln!(
        out,
        r##"<line class="axis" x1="{}" y1="{a}" x2="{x_end}" y2="{a}" stroke="#000000" stroke-width="0.500"/>"##,
        num(LEFT_MARGIN),
        a = num(axis)
    );
    let _ = writeln!(out, "</g>");

    // entropy track
    let _ = writeln!(out, r#"<g class="entropy">"#);
    if spec.labels {
        let _ = writeln!(
            out,
            r#"<text class="lane-label" x="4.000" y="{}" font-size="9.000" font-family="sans-serif">low H</text>"#,
            num(entropy_top + spec.entropy_track_height - 4.0)
        );
    }
    let _ = writeln!(
        out,
        r##"<rect class="entropy-track" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#cccccc" stroke-width="0.500"/>"##,
        num(LEFT_MARGIN),
        num(entropy_top),
        num(spec.width - LEFT_MARGIN - RIGHT_MARGIN),
        num(spec.entropy_track_height)
    );
    for &(a, b) in &data.mask.intervals {
        if let Some(span) = f.clip(a, b) {
            span_rect(
                &mut out,
                &f,
                "low-entropy",
                span,
                entropy_top,
                spec.entropy_track_height,
                "#9467bd",
            );
        }
    }
    let _ = writeln!(out, "</g>");

    phase_marks(&mut out, data, spec, &f, LABEL_STRIP, spec.height - GAP);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Simplified behaviorgram: one activity track with bar height from the
/// faster hand, fill from the proximity state and a hatch over low-entropy
/// spans.
pub fn render_simplified(data: &BehaviorgramData<'_>, spec: &BehaviorgramSpec) -> Result<String> {
    spec.validate()?;
    data.check_grid()?;
    let f = frame(data, spec)?;
    let (norm, p99) = speed_norm(data, &f);
    let mut out = String::new();
    header(&mut out, spec, &f, p99, norm);
    let _ = writeln!(
        out,
        r##"<defs><pattern id="hatch" patternUnits="userSpaceOnUse" width="6.000" height="6.000"><path d="M0,6 L6,0" stroke="#000000" stroke-width="0.800"/></pattern></defs>"##
    );

    let top = LABEL_STRIP;
    let baseline = spec.height - GAP;
    let track = baseline - top;
    let width = num(f.dt * f.scale);
    let fill_for = |s: ProximityState| match s {
        ProximityState::NearPatient => spec.color_map.hex(1.0),
        ProximityState::NearTable => spec.color_map.hex(0.0),
        ProximityState::Intermediate => MISSING_COLOR.to_string(),
    };
    let _ = writeln!(out, r#"<g class="activity">"#);
    for i in f.rows.clone() {
        let v = match (data.velocity_rh.value(i, 0), data.velocity_lh.value(i, 0)) {
            (Some(a), Some(b)) => a.max(b),
            (Some(v), None) | (None, Some(v)) => v,
            (None, None) => continue,
        };
        let h = (v / norm).min(1.0) * track;
        let _ = writeln!(
            out,
            r#"<rect class="bar" x="{}" y="{}" width="{width}" height="{}" fill="{}"/>"#,
            num(f.x(data.velocity_rh.timestamps()[i])),
            num(baseline - h),
            num(h),
            fill_for(data.proximity.states[i])
        );
    }
    let _ = writeln!(
        out,
        r##"<line class="baseline" x1="{}" y1="{b}" x2="{}" y2="{b}" stroke="#000000" stroke-width="0.500"/>"##,
        num(LEFT_MARGIN),
        num(spec.width - RIGHT_MARGIN),
        b = num(baseline)
    );
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g class="entropy">"#);
    for &(a, b) in &data.mask.intervals {
        if let Some(span) = f.clip(a, b) {
            span_rect(&mut out, &f, "low-entropy-hatch", span, top, track, "url(#hatch)");
        }
    }
    let _ = writeln!(out, "</g>");
    phase_marks(&mut out, data, spec, &f, top, baseline);
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render(data: &BehaviorgramData<'_>, spec: &BehaviorgramSpec) -> Result<String> {
    match spec.variant {
        Variant::Extended => render_extended(data, spec),
        Variant::Simplified => render_simplified(data, spec),
    }
}

pub fn write_svg(path: impl AsRef<Path>, document: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, document).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phases::PhaseLabel;

    struct Scene {
        vrh: TimeSeries,
        vlh: TimeSeries,
        rssi: TimeSeries,
        prox: ProximitySeries,
        mask: LowEntropyMask,
        phases: Vec<PhaseAnnotation>,
        model: CalibrationModel,
    }

    impl Scene {
        fn new(
            n: usize,
            rh: impl Fn(usize) -> Option<f64>,
            lh: impl Fn(usize) -> Option<f64>,
            state: ProximityState,
        ) -> Scene {
            let ts: Vec<f64> = (0..n).map(|i| i as f64 / 40.0).collect();
            let mk = |f: &dyn Fn(usize) -> Option<f64>| {
                TimeSeries::single("v", "speed", ts.clone(), (0..n).map(f).collect()).unwrap()
            };
            Scene {
                vrh: mk(&rh),
                vlh: mk(&lh),
                rssi: mk(&|i| Some(-50.0 - (i % 30) as f64)),
                prox: ProximitySeries {
                    timestamps: ts.clone(),
                    states: vec![state; n],
                },
                mask: LowEntropyMask {
                    threshold: 1.0,
                    intervals: vec![],
                },
                phases: vec![],
                model: CalibrationModel::new(-50.0, -85.0, 3.0).unwrap(),
            }
        }

        fn data(&self) -> BehaviorgramData<'_> {
            BehaviorgramData {
                velocity_rh: &self.vrh,
                velocity_lh: &self.vlh,
                rssi_fused: &self.rssi,
                proximity: &self.prox,
                mask: &self.mask,
                phases: &self.phases,
                calibration: Some(&self.model),
            }
        }
    }

    fn count(doc: &str, needle: &str) -> usize {
        doc.matches(needle).count()
    }

    fn attr(line: &str, name: &str) -> f64 {
        let key = format!(" {name}=\"");
        let start = line.find(&key).unwrap() + key.len();
        line[start..].split('"').next().unwrap().parse().unwrap()
    }

    #[test]
    fn degenerate_scene() {
        let s = Scene::new(200, |_| Some(0.0), |_| Some(0.0), ProximityState::NearPatient);
        let doc = render_extended(&s.data(), &BehaviorgramSpec::default()).unwrap();
        assert_eq!(count(&doc, r#"class="lane-patient""#), 1);
        assert_eq!(count(&doc, r#"class="lane-table""#), 0);
        assert_eq!(count(&doc, r#"class="low-entropy""#), 0);
        assert!(doc
            .lines()
            .filter(|l| l.contains("class=\"bar-"))
            .all(|l| l.contains(r#"height="0.000""#)));
        // patient lane spans the full width
        let lane = doc.lines().find(|l| l.contains("lane-patient")).unwrap();
        assert!((attr(lane, "width") - (1200.0 - LEFT_MARGIN - RIGHT_MARGIN)).abs() < 1e-3);
        let simple = render_simplified(
            &s.data(),
            &BehaviorgramSpec {
                variant: Variant::Simplified,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(count(&simple, r#"class="bar""#), 200);
        assert!(!simple.contains("-0.000"));
    }

    #[test]
    fn right_hand_burst_below_axis() {
        let burst = |i: usize| Some(if (80..120).contains(&i) { 1.0 } else { 0.0 });
        let s = Scene::new(200, burst, |_| Some(0.0), ProximityState::NearPatient);
        let doc = render_extended(&s.data(), &BehaviorgramSpec::default()).unwrap();
        let axis_line = doc.lines().find(|l| l.contains(r#"class="axis""#)).unwrap();
        let axis = attr(axis_line, "y1");
        let mut tall = 0;
        for l in doc.lines() {
            if l.contains(r#"class="bar-rh""#) {
                assert!((attr(l, "y") - axis).abs() < 1e-9);
                if attr(l, "height") > 0.0 {
                    tall += 1;
                }
            }
            if l.contains(r#"class="bar-lh""#) {
                assert_eq!(attr(l, "height"), 0.0);
            }
        }
        assert_eq!(tall, 40);
    }

    #[test]
    fn one_bar_per_present_sample() {
        let s = Scene::new(
            300,
            |i| (i % 7 != 0).then_some(0.1 * (i % 5) as f64),
            |i| (i % 11 != 0).then_some(0.2),
            ProximityState::Intermediate,
        );
        let spec = BehaviorgramSpec {
            time_range: Some((1.0, 5.0)),
            ..Default::default()
        };
        let doc = render_extended(&s.data(), &spec).unwrap();
        let rows = 40..200;
        let rh = rows.clone().filter(|i| i % 7 != 0).count();
        let lh = rows.filter(|i| i % 11 != 0).count();
        assert_eq!(count(&doc, r#"class="bar-rh""#), rh);
        assert_eq!(count(&doc, r#"class="bar-lh""#), lh);
    }

    #[test]
    fn phase_lines_are_affine() {
        let mut s = Scene::new(400, |_| Some(0.1), |_| Some(0.1), ProximityState::NearTable);
        s.phases = vec![
            PhaseAnnotation {
                label: PhaseLabel::I,
                t_start: 0.0,
                t_end: 3.3,
            },
            PhaseAnnotation {
                label: PhaseLabel::IIa,
                t_start: 3.3,
                t_end: 7.1,
            },
            PhaseAnnotation {
                label: PhaseLabel::III,
                t_start: 7.1,
                t_end: 10.0,
            },
        ];
        let spec = BehaviorgramSpec::default();
        let doc = render_extended(&s.data(), &spec).unwrap();
        let xs: Vec<f64> = doc
            .lines()
            .filter(|l| l.contains("phase-boundary"))
            .map(|l| attr(l, "x1"))
            .collect();
        let scale = (spec.width - LEFT_MARGIN - RIGHT_MARGIN) / 10.0;
        assert_eq!(xs.len(), 3);
        for (x, t) in xs.iter().zip([0.0, 3.3, 7.1]) {
            assert!((x - (LEFT_MARGIN + t * scale)).abs() <= 5e-4 + 1e-6);
        }
        assert_eq!(count(&doc, r#"class="phase-label""#), 3);
    }

    #[test]
    fn proximity_only_changes_fill() {
        let a = Scene::new(
            100,
            |i| Some(i as f64 * 0.01),
            |_| Some(0.05),
            ProximityState::NearPatient,
        );
        let b = Scene::new(
            100,
            |i| Some(i as f64 * 0.01),
            |_| Some(0.05),
            ProximityState::NearTable,
        );
        let spec = BehaviorgramSpec {
            variant: Variant::Simplified,
            ..Default::default()
        };
        let da = render_simplified(&a.data(), &spec).unwrap();
        let db = render_simplified(&b.data(), &spec).unwrap();
        assert_ne!(da, db);
        let strip = |d: &str| -> Vec<String> {
            d.lines()
                .filter(|l| l.contains(r#"class="bar""#))
                .map(|l| l.split(" fill=").next().unwrap().to_string())
                .collect()
        };
        assert_eq!(strip(&da), strip(&db));
    }

    #[test]
    fn hatch_marks_low_entropy() {
        let mut s = Scene::new(400, |_| Some(0.1), |_| Some(0.1), ProximityState::NearTable);
        s.mask.intervals = vec![(1.0, 2.0), (5.0, 6.5)];
        let spec = BehaviorgramSpec {
            variant: Variant::Simplified,
            ..Default::default()
        };
        let doc = render(&s.data(), &spec).unwrap();
        assert_eq!(count(&doc, "low-entropy-hatch"), 2);
    }

    #[test]
    fn deterministic_bytes() {
        let s = Scene::new(
            150,
            |i| Some((i as f64).sin().abs()),
            |i| Some((i as f64).cos().abs()),
            ProximityState::NearPatient,
        );
        let spec = BehaviorgramSpec::default();
        assert_eq!(
            render_extended(&s.data(), &spec).unwrap(),
            render_extended(&s.data(), &spec).unwrap()
        );
    }

    #[test]
    fn color_ramp_monotone() {
        for cmap in [ColorMap::Blue, ColorMap::Green, ColorMap::Orange, ColorMap::Gray] {
            let mut prev = cmap.rgb(0.0);
            for k in 0..=700 {
                let rssi = -100.0 + k as f64 * 0.1;
                let c = cmap.rgb((rssi + 100.0) / 70.0);
                assert!((0..3).all(|i| c[i] >= prev[i]), "{cmap:?} at {rssi}");
                prev = c;
            }
        }
    }

    #[test]
    fn errors() {
        let s = Scene::new(100, |_| Some(0.1), |_| Some(0.1), ProximityState::NearTable);
        let spec = BehaviorgramSpec {
            time_range: Some((50.0, 60.0)),
            ..Default::default()
        };
        assert!(matches!(render_extended(&s.data(), &spec), Err(Error::EmptyRange)));
        let mut bad = Scene::new(100, |_| Some(0.1), |_| Some(0.1), ProximityState::NearTable);
        bad.prox.timestamps.pop();
        bad.prox.states.pop();
        assert!(matches!(
            render_extended(&bad.data(), &BehaviorgramSpec::default()),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn number_format() {
        assert_eq!(num(-0.0001), "0.000");
        assert_eq!(num(1.23456), "1.235");
        assert_eq!(num(-2.5), "-2.500");
    }
}
