use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;
use crate::streams::TimeSeries;

/// Gaze-plane discretization and windowing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GazeGridSpec {
    /// Bins per axis; the plane has `bins²` cells.
    pub bins: usize,
    pub window_s: f64,
    pub hop_s: f64,
    /// Minimum fraction of present samples for a window to get a value.
    pub min_valid: f64,
}

impl Default for GazeGridSpec {
    fn default() -> Self {
        GazeGridSpec {
            bins: 100,
            window_s: 5.0,
            hop_s: 0.2,
            min_valid: 0.5,
        }
    }
}

impl GazeGridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidSpec(format!("bins {} must be >= 2", self.bins)));
        }
        if !(self.window_s > 0.0) || !(self.hop_s > 0.0) || self.hop_s > self.window_s {
            return Err(Error::InvalidSpec(format!(
                "need 0 < hop_s ({}) <= window_s ({})",
                self.hop_s, self.window_s
            )));
        }
        if !(0.0..=1.0).contains(&self.min_valid) {
            return Err(Error::InvalidSpec(format!(
                "min_valid {} outside [0, 1]",
                self.min_valid
            )));
        }
        Ok(())
    }
}

/// Cell of a gaze point on a `bins x bins` grid; 1.0 falls in the last bin.
pub fn bin_gaze(x: f64, y: f64, bins: usize) -> Result<(usize, usize)> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::OutOfRange { x, y });
    }
    let cell = |v: f64| ((v * bins as f64).floor() as usize).min(bins - 1);
    Ok((cell(x), cell(y)))
}

/// Joint Shannon entropy in bits of the empirical cell distribution.
pub fn joint_entropy(cells: &[(usize, usize)]) -> Result<f64> {
    if cells.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut sorted = cells.to_vec();
    sorted.sort_unstable();
    // H = log2(n) - sum(c log2 c) / n keeps uniform windows exact
    let n = sorted.len() as f64;
    let mut weighted = 0.0;
    let mut distinct = 0;
    let mut i = 0;
    while i < sorted.len() {
        let j = i + sorted[i..].iter().take_while(|c| **c == sorted[i]).count();
        let c = (j - i) as f64;
        weighted += c * c.log2();
        distinct += 1;
        i = j;
    }
    if distinct == 1 {
        return Ok(0.0);
    }
    Ok((n.log2() - weighted / n).max(0.0))
}

/// Windowed entropy: channel `H` (bits, missing when the window is too
/// sparse) and `valid_fraction`, stamped at window centres.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropySeries {
    pub series: TimeSeries,
    pub bins: usize,
    pub window_s: f64,
    /// Effective hop after rounding to whole samples.
    pub hop_s: f64,
}

impl EntropySeries {
    pub fn times(&self) -> &[f64] {
        self.series.timestamps()
    }

    pub fn entropy(&self) -> &[Option<f64>] {
        self.series.channel(0)
    }

    pub fn valid_fraction(&self) -> &[Option<f64>] {
        self.series.channel(1)
    }

    pub fn max_bits(&self) -> f64 {
        2.0 * (self.bins as f64).log2()
    }
}

/// Sliding-window joint entropy of a uniformly sampled gaze series.
///
/// Windows hold `round(window_s / dt)` samples and advance by
/// `round(hop_s / dt)`; only rows with both coordinates present are binned.
/// Series too short for one window give an empty result.
pub fn sliding_entropy(gaze: &TimeSeries, spec: &GazeGridSpec) -> Result<EntropySeries> {
    spec.validate()?;
    if gaze.channels().len() < 2 {
        return Err(Error::InvalidSpec("gaze needs x and y channels".into()));
    }
    let n = gaze.len();
    let empty = |hop_s| -> Result<EntropySeries> {
        Ok(EntropySeries {
            series: TimeSeries::new(
                "entropy",
                vec!["H".into(), "valid_fraction".into()],
                vec![],
                vec![vec![], vec![]],
            )?,
            bins: spec.bins,
            window_s: spec.window_s,
            hop_s,
        })
    };
    if n < 2 {
        return empty(spec.hop_s);
    }
    let dt = gaze.sample_interval()?;
    let window = ((spec.window_s / dt).round() as usize).max(1);
    let hop = ((spec.hop_s / dt).round() as usize).max(1);
    if n < window {
        return empty(hop as f64 * dt);
    }

    let ts = gaze.timestamps();
    let cells: Vec<Option<(usize, usize)>> = (0..n)
        .map(|i| match (gaze.value(i, 0), gaze.value(i, 1)) {
            (Some(x), Some(y)) => bin_gaze(x, y, spec.bins).map(Some),
            _ => Ok(None),
        })
        .collect::<Result<_>>()?;

    let mut times = Vec::new();
    let mut h = Vec::new();
    let mut valid = Vec::new();
    let mut start = 0;
    while start + window <= n {
        let present: Vec<(usize, usize)> = cells[start..start + window].iter().flatten().copied().collect();
        let frac = present.len() as f64 / window as f64;
        times.push((ts[start] + ts[start + window - 1]) / 2.0);
        valid.push(Some(frac));
        h.push(if frac >= spec.min_valid && !present.is_empty() {
            Some(joint_entropy(&present)?)
        } else {
            None
        });
        start += hop;
    }
    let series = TimeSeries::new(
        "entropy",
        vec!["H".into(), "valid_fraction".into()],
        times,
        vec![h, valid],
    )?
    .with_nominal_rate(1.0 / (hop as f64 * dt));
    Ok(EntropySeries {
        series,
        bins: spec.bins,
        window_s: window as f64 * dt,
        hop_s: hop as f64 * dt,
    })
}

/// Time spans whose windowed entropy lies strictly below the session mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowEntropyMask {
    pub threshold: f64,
    /// Disjoint, ordered, half-open `[start, end)` spans.
    pub intervals: Vec<(f64, f64)>,
}

impl LowEntropyMask {
    pub fn contains(&self, t: f64) -> bool {
        let i = self.intervals.partition_point(|&(_, end)| end <= t);
        self.intervals.get(i).is_some_and(|&(start, _)| start <= t)
    }

    /// Total masked time inside `[t0, t1)`.
    pub fn overlap(&self, t0: f64, t1: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| (b.min(t1) - a.max(t0)).max(0.0))
            .sum()
    }
}

/// Thresholds at the mean of present entropy values and returns maximal
/// runs of windows strictly below it as `centre ± hop/2` spans. Missing
/// windows break runs.
pub fn low_entropy_mask(entropy: &EntropySeries) -> Result<LowEntropyMask> {
    let values: Vec<f64> = entropy.entropy().iter().flatten().copied().collect();
    let threshold = stats::mean(&values).ok_or(Error::AllMissing)?;
    let half = entropy.hop_s / 2.0;
    let times = entropy.times();
    let mut intervals = Vec::new();
    let mut run: Option<(usize, usize)> = None;
    for (i, h) in entropy.entropy().iter().enumerate() {
        let low = h.is_some_and(|h| h < threshold);
        run = match (run, low) {
            (None, true) => Some((i, i)),
            (Some((s, _)), true) => Some((s, i)),
            (Some((s, e)), false) => {
                intervals.push((times[s] - half, times[e] + half));
                None
            }
            (None, false) => None,
        };
    }
    if let Some((s, e)) = run {
        intervals.push((times[s] - half, times[e] + half));
    }
    Ok(LowEntropyMask { threshold, intervals })
}
