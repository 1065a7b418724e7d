use serde::{Deserialize, Serialize};

use super::spline::CubicSpline;
use crate::error::{Error, Result};
use crate::streams::TimeSeries;

/// Name of the 0/1 channel appended by [`impute_blinks`].
pub const IMPUTED_CHANNEL: &str = "imputed";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlinkImputation {
    /// Longest interior missing run that is filled, in seconds.
    pub max_gap_s: f64,
    /// Present samples taken on each side of a run as spline knots.
    pub support: usize,
}

impl Default for BlinkImputation {
    fn default() -> Self {
        BlinkImputation {
            max_gap_s: 0.5,
            support: 4,
        }
    }
}

/// Fills short interior missing runs of the two gaze channels with a cubic
/// spline through the nearest present samples, clamped to `[0, 1]`.
///
/// Edge runs and runs longer than `max_gap_s` stay missing. Present samples
/// are never modified. The output carries `gaze_x`, `gaze_y` and an
/// `imputed` channel that is 1 where any coordinate was filled.
pub fn impute_blinks(gaze: &TimeSeries, params: &BlinkImputation) -> Result<TimeSeries> {
    if gaze.channels().len() < 2 {
        return Err(Error::InvalidSpec("gaze needs x and y channels".into()));
    }
    if params.support == 0 || !(params.max_gap_s >= 0.0) {
        return Err(Error::InvalidSpec(
            "blink imputation needs support >= 1 and max_gap_s >= 0".into(),
        ));
    }
    let n = gaze.len();
    let dt = if n < 2 { 0.0 } else { gaze.sample_interval()? };
    let ts = gaze.timestamps();
    let mut imputed = vec![false; n];
    let mut columns = Vec::with_capacity(3);
    for c in 0..2 {
        let mut col = gaze.channel(c).to_vec();
        let mut i = 0;
        while i < n {
            if col[i].is_some() {
                i += 1;
                continue;
            }
            let start = i;
            while i < n && col[i].is_none() {
                i += 1;
            }
            let end = i; // exclusive
            let interior = start > 0 && end < n;
            let duration = (end - start) as f64 * dt;
            if !interior || duration > params.max_gap_s + 1e-9 {
                continue;
            }
            let source = gaze.channel(c);
            let left: Vec<usize> = (0..start)
                .rev()
                .filter(|&k| source[k].is_some())
                .take(params.support)
                .collect();
            let right: Vec<usize> = (end..n).filter(|&k| source[k].is_some()).take(params.support).collect();
            let knots: Vec<usize> = left.into_iter().rev().chain(right).collect();
            let spline = CubicSpline::new(
                knots.iter().map(|&k| ts[k]).collect(),
                knots.iter().map(|&k| source[k].expect("present knot")).collect(),
            )?;
            for k in start..end {
                col[k] = Some(spline.eval(ts[k]).clamp(0.0, 1.0));
                imputed[k] = true;
            }
        }
        columns.push(col);
    }
    columns.push(imputed.iter().map(|&f| Some(if f { 1.0 } else { 0.0 })).collect());
    let channels = vec![
        gaze.channels()[0].clone(),
        gaze.channels()[1].clone(),
        IMPUTED_CHANNEL.to_string(),
    ];
    gaze.with_columns(channels, columns)
}
