use super::TimeSeries;
use crate::error::{Error, Result};

/// Longest run of explicitly missing input that linear interpolation bridges.
pub const DEFAULT_MAX_GAP_S: f64 = 0.2;

/// Tolerance for treating a grid instant as coinciding with a sample.
const TIME_EPS: f64 = 1e-9;

/// The grid `t_k = (first + k) / rate` for `k in 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub first: i64,
    pub len: usize,
    pub rate: f64,
}

impl UniformGrid {
    /// All grid instants `k / rate` inside `[t0, t1]`.
    pub fn covering(t0: f64, t1: f64, rate: f64) -> Self {
        let first = (t0 * rate - TIME_EPS).ceil() as i64;
        let last = (t1 * rate + TIME_EPS).floor() as i64;
        UniformGrid {
            first,
            len: (last - first + 1).max(0) as usize,
            rate,
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        (self.first + k as i64) as f64 / self.rate
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.time(k)).collect()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rate
    }
}

/// Resamples onto `k / rate` over the input's own time range.
pub fn resample_uniform(series: &TimeSeries, rate: f64, max_gap_s: f64) -> Result<TimeSeries> {
    let (t0, t1) = series
        .span()
        .ok_or_else(|| Error::EmptySeries(series.stream_id().to_string()))?;
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidSpec(format!("resample rate {rate} must be positive")));
    }
    resample_to_grid(series, &UniformGrid::covering(t0, t1, rate), max_gap_s)
}

/// Linear interpolation of every channel onto `grid`.
///
/// A grid instant is missing when it lies outside a channel's present range,
/// or inside a hole left by explicitly missing rows whose present neighbours
/// are more than `max_gap_s` apart. Neighbouring present samples without a
/// missing row between them are always interpolated.
pub fn resample_to_grid(series: &TimeSeries, grid: &UniformGrid, max_gap_s: f64) -> Result<TimeSeries> {
    if !(grid.rate > 0.0) || !grid.rate.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "resample rate {} must be positive",
            grid.rate
        )));
    }
    if max_gap_s.is_nan() || max_gap_s < 0.0 {
        return Err(Error::InvalidSpec(format!(
            "max_gap_s {max_gap_s} must be non-negative"
        )));
    }
    let ts = series.timestamps();
    let grid_times = grid.times();
    let mut columns = Vec::with_capacity(series.channels().len());
    for c in 0..series.channels().len() {
        let col = series.channel(c);
        // (row index, t, v) of present samples
        let present: Vec<(usize, f64, f64)> = col
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, ts[i], v)))
            .collect();
        if present.len() < 2 {
            return Err(Error::EmptySeries(series.stream_id().to_string()));
        }
        let mut out = Vec::with_capacity(grid.len);
        let mut j = 0;
        for &tau in &grid_times {
            while j + 1 < present.len() && present[j + 1].1 <= tau + TIME_EPS {
                j += 1;
            }
            let (i0, t0, v0) = present[j];
            let on_sample = (tau - t0).abs() <= TIME_EPS;
            if tau < t0 || j + 1 >= present.len() {
                out.push(on_sample.then_some(v0));
                continue;
            }
            let (i1, t1, v1) = present[j + 1];
            let has_missing_rows = i1 > i0 + 1;
            if has_missing_rows && t1 - t0 > max_gap_s + TIME_EPS {
                out.push(on_sample.then_some(v0));
                continue;
            }
            out.push(Some(v0 + (v1 - v0) * (tau - t0) / (t1 - t0)));
        }
        columns.push(out);
    }
    let out = TimeSeries::new(series.stream_id(), series.channels().to_vec(), grid_times, columns)?;
    Ok(out.with_nominal_rate(grid.rate))
}
