use super::TimeSeries;
use crate::error::{Error, Result};
use crate::stats;

/// Lag of `b` relative to `a`, in seconds.
///
/// Both inputs are single-channel series on grids with the same sample
/// interval (typically the output of `resample_to_grid`). For each integer lag
/// `k` in `[-max_lag, max_lag]` the Pearson correlation between `a(t)` and
/// `b(t + k dt)` is computed over the pairs where both are present; the lag
/// with the largest correlation wins. Positive results mean `b` trails `a`.
/// Ties go to the smaller `|k|`.
pub fn estimate_lag(a: &TimeSeries, b: &TimeSeries, max_lag: f64) -> Result<f64> {
    for s in [a, b] {
        if s.channels().len() != 1 {
            return Err(Error::InvalidSpec(format!(
                "estimate_lag needs single-channel series, `{}` has {}",
                s.stream_id(),
                s.channels().len()
            )));
        }
    }
    if !(max_lag >= 0.0) || !max_lag.is_finite() {
        return Err(Error::InvalidSpec(format!("max_lag {max_lag} must be non-negative")));
    }
    let dt = a.sample_interval()?;
    let dt_b = b.sample_interval()?;
    if (dt - dt_b).abs() > 1e-9 * dt.max(1.0) {
        return Err(Error::GridMismatch(format!("sample intervals differ: {dt} vs {dt_b}")));
    }
    let (a0, a1) = a.span().expect("non-empty after sample_interval");
    let (b0, b1) = b.span().expect("non-empty after sample_interval");
    let offset = (b0 - a0) / dt;
    let offset_idx = offset.round();
    if (offset - offset_idx).abs() > 1e-6 {
        return Err(Error::GridMismatch("series grids are not aligned".into()));
    }
    let offset_idx = offset_idx as i64;

    let overlap = a1.min(b1) - a0.max(b0);
    let required = 4.0 * max_lag;
    if overlap < required - 1e-9 || overlap <= 0.0 {
        return Err(Error::InsufficientOverlap {
            required,
            available: overlap.max(0.0),
        });
    }
    for s in [a, b] {
        let v = s.present_values(0);
        let m = stats::mean(&v).unwrap_or(0.0);
        match stats::variance(&v) {
            Some(var) if var > 1e-20 * (1.0 + m * m) => {}
            _ => return Err(Error::ZeroVariance(s.stream_id().to_string())),
        }
    }

    let av = a.channel(0);
    let bv = b.channel(0);
    let max_k = (max_lag / dt + 1e-9).floor() as i64;
    let mut best: Option<(i64, f64)> = None;
    // 0, 1, -1, 2, -2, ... so that strict improvement keeps the smaller |k|.
    let order = std::iter::once(0).chain((1..=max_k).flat_map(|k| [k, -k]));
    for k in order {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, x) in av.iter().enumerate() {
            // b index whose time is a's time + k dt
            let j = i as i64 - offset_idx + k;
            if j < 0 || j >= bv.len() as i64 {
                continue;
            }
            if let (Some(x), Some(y)) = (x, bv[j as usize]) {
                xs.push(*x);
                ys.push(y);
            }
        }
        if xs.len() < 3 {
            continue;
        }
        if let Some(r) = stats::pearson(&xs, &ys) {
            if best.map_or(true, |(_, br)| r > br) {
                best = Some((k, r));
            }
        }
    }
    let (k, _) = best.ok_or_else(|| Error::ZeroVariance(b.stream_id().to_string()))?;
    Ok(k as f64 * dt)
}
