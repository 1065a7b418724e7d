use crate::error::{Error, Result};
use crate::streams::TimeSeries;

pub const GRAVITY_M_S2: f64 = 9.81;
pub const DEFAULT_BASELINE_S: f64 = 1.0;
pub const DEFAULT_LEAK_HALF_LIFE_S: f64 = 0.5;

/// Per-sample decay giving the requested half-life at `rate` Hz.
pub fn leak_for_half_life(half_life_s: f64, rate: f64) -> f64 {
    0.5f64.powf(1.0 / (half_life_s * rate))
}

/// Subtracts a centred moving-average baseline from each channel (g) and
/// converts to m/s².
///
/// The window spans `baseline_s` rounded to an odd sample count; near the
/// ends it is truncated to the available samples. Missing inputs stay
/// missing and are excluded from baselines.
pub fn remove_gravity(accel: &TimeSeries, baseline_s: f64) -> Result<TimeSeries> {
    let dt = accel.sample_interval()?;
    if !(baseline_s > 0.0) {
        return Err(Error::InvalidSpec(format!("baseline_s {baseline_s} must be positive")));
    }
    let half = ((baseline_s / dt) / 2.0).round().max(1.0) as usize;
    let n = accel.len();
    let columns = accel
        .columns()
        .iter()
        .map(|col| {
            (0..n)
                .map(|i| {
                    let x = col[i]?;
                    let window = &col[i.saturating_sub(half)..(i + half + 1).min(n)];
                    let (sum, count) = window.iter().flatten().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
                    Some((x - sum / count as f64) * GRAVITY_M_S2)
                })
                .collect()
        })
        .collect();
    Ok(accel
        .with_columns(accel.channels().to_vec(), columns)?
        .with_stream_id(format!("{}_linear", accel.stream_id())))
}

/// Speed from linear acceleration (m/s²) by per-axis leaky trapezoidal
/// integration, `v[k] = leak * v[k-1] + dt * (a[k] + a[k-1]) / 2` with
/// `v[0] = 0`, followed by the Euclidean norm over axes.
///
/// A row with any axis missing yields missing speed and restarts the
/// integrators from zero at the next complete row.
pub fn velocity_magnitude(linear_accel: &TimeSeries, leak: f64) -> Result<TimeSeries> {
    if !(leak > 0.0 && leak <= 1.0) {
        return Err(Error::InvalidSpec(format!("leak {leak} must lie in (0, 1]")));
    }
    if linear_accel.channels().len() != 3 {
        return Err(Error::InvalidSpec(format!(
            "velocity needs 3 acceleration axes, `{}` has {}",
            linear_accel.stream_id(),
            linear_accel.channels().len()
        )));
    }
    let dt = linear_accel.sample_interval()?;
    let mut v = [0.0f64; 3];
    let mut prev: Option<[f64; 3]> = None;
    let mut speed = Vec::with_capacity(linear_accel.len());
    for i in 0..linear_accel.len() {
        let row = linear_accel.row(i);
        let a = match (row[0], row[1], row[2]) {
            (Some(x), Some(y), Some(z)) => [x, y, z],
            _ => {
                prev = None;
                speed.push(None);
                continue;
            }
        };
        match prev {
            None => v = [0.0; 3],
            Some(p) => {
                for ax in 0..3 {
                    v[ax] = leak * v[ax] + dt * (a[ax] + p[ax]) / 2.0;
                }
            }
        }
        prev = Some(a);
        speed.push(Some((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()));
    }
    Ok(linear_accel
        .with_columns(vec!["speed".into()], vec![speed])?
        .with_stream_id(format!("{}_speed", linear_accel.stream_id())))
}
