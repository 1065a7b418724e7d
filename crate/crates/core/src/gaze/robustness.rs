use std::path::Path;

use super::entropy::{sliding_entropy, EntropySeries, GazeGridSpec};
use crate::error::{Error, Result};
use crate::stats;
use crate::streams::io::{fmt_opt, write_csv};

pub const SWEEP_BINS: [usize; 5] = [10, 25, 50, 75, 100];
pub const SWEEP_WINDOWS_S: [f64; 5] = [2.0, 3.0, 4.0, 5.0, 6.0];

/// Pairwise Spearman correlations between entropy series computed under
/// every (bins, window) setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMatrix {
    /// `(bins, window_s)` in row/column order.
    pub settings: Vec<(usize, f64)>,
    /// Symmetric; `None` where a pair shares too few present points or one
    /// side is constant.
    pub values: Vec<Vec<Option<f64>>>,
}

impl SweepMatrix {
    /// Smallest off-diagonal correlation, if any pair has one.
    pub fn min_off_diagonal(&self) -> Option<f64> {
        let n = self.settings.len();
        (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .filter_map(|(i, j)| self.values[i][j])
            .reduce(f64::min)
    }

    /// Number of off-diagonal pairs without a correlation.
    pub fn undefined_pairs(&self) -> usize {
        let n = self.settings.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.values[i][j].is_none())
            .count()
    }

    pub fn label(setting: (usize, f64)) -> String {
        format!("B{}_W{}", setting.0, setting.1)
    }

    /// Square CSV with a `setting` column followed by one column per setting.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let labels: Vec<String> = self.settings.iter().map(|s| Self::label(*s)).collect();
        let mut header = vec!["setting"];
        header.extend(labels.iter().map(String::as_str));
        let rows = labels.iter().zip(&self.values).map(|(l, row)| {
            std::iter::once(l.clone())
                .chain(row.iter().map(|v| fmt_opt(*v)))
                .collect::<Vec<_>>()
        });
        write_csv(path.as_ref(), &header, rows)
    }
}

/// Entropy for every setting in [`SWEEP_BINS`] x [`SWEEP_WINDOWS_S`],
/// resampled onto one hop-spaced grid over the common span, then compared
/// pairwise by rank correlation over points present in both series.
pub fn robustness_sweep(gaze: &crate::streams::TimeSeries, hop_s: f64, min_valid: f64) -> Result<SweepMatrix> {
    let settings: Vec<(usize, f64)> = SWEEP_BINS
        .iter()
        .flat_map(|&b| SWEEP_WINDOWS_S.iter().map(move |&w| (b, w)))
        .collect();
    let series = settings
        .iter()
        .map(|&(bins, window_s)| {
            sliding_entropy(
                gaze,
                &GazeGridSpec {
                    bins,
                    window_s,
                    hop_s,
                    min_valid,
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let start = series
        .iter()
        .filter_map(|s| s.times().first().copied())
        .reduce(f64::max);
    let end = series.iter().filter_map(|s| s.times().last().copied()).reduce(f64::min);
    let (start, end) = match (start, end) {
        (Some(a), Some(b)) if b >= a && series.iter().all(|s| !s.times().is_empty()) => (a, b),
        _ => return Err(Error::EmptyRange),
    };
    let step = series[0].hop_s;
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|k| start + k as f64 * step).collect();
    let sampled: Vec<Vec<Option<f64>>> = series.iter().map(|s| interpolate_at(s, &grid)).collect();

    let n = settings.len();
    let mut values = vec![vec![None; n]; n];
    for i in 0..n {
        values[i][i] = Some(1.0);
        for j in i + 1..n {
            let (x, y): (Vec<f64>, Vec<f64>) = sampled[i]
                .iter()
                .zip(&sampled[j])
                .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                .unzip();
            let r = if x.len() >= 3 { stats::spearman(&x, &y) } else { None };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(SweepMatrix { settings, values })
}

/// Linear interpolation between adjacent windows; missing if either
/// neighbour is missing.
fn interpolate_at(series: &EntropySeries, grid: &[f64]) -> Vec<Option<f64>> {
    let ts = series.times();
    let h = series.entropy();
    grid.iter()
        .map(|&t| {
            let k = ts.partition_point(|&c| c <= t);
            if k == 0 {
                return None;
            }
            let i = k - 1;
            if (t - ts[i]).abs() <= 1e-9 {
                return h[i];
            }
            if k == ts.len() {
                return None;
            }
            let (a, b) = (h[i]?, h[k]?);
            let w = (t - ts[i]) / (ts[k] - ts[i]);
            Some(a + w * (b - a))
        })
        .collect()
}
