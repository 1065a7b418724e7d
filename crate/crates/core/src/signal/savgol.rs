use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::streams::TimeSeries;

/// Savitzky–Golay window: odd `window_len >= 3`, `poly_order < window_len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SavGolSpec {
    pub window_len: usize,
    pub poly_order: usize,
}

impl Default for SavGolSpec {
    fn default() -> Self {
        // ~0.275 s at 40 Hz: keeps sub-second movement bursts
        SavGolSpec {
            window_len: 11,
            poly_order: 3,
        }
    }
}

impl SavGolSpec {
    pub fn new(window_len: usize, poly_order: usize) -> Result<Self> {
        let spec = SavGolSpec { window_len, poly_order };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len < 3 || self.window_len % 2 == 0 {
            return Err(Error::InvalidSpec(format!(
                "savgol window_len {} must be odd and >= 3",
                self.window_len
            )));
        }
        if self.poly_order >= self.window_len {
            return Err(Error::InvalidSpec(format!(
                "savgol poly_order {} must be below window_len {}",
                self.poly_order, self.window_len
            )));
        }
        Ok(())
    }

    /// Samples at each end whose window reaches into mirror padding.
    pub fn edge_samples(&self) -> usize {
        self.window_len / 2
    }
}

/// Centre-point weights of the least-squares polynomial fit over the window.
///
/// The fit's hat matrix is `Q Qᵀ` for an orthonormal basis `Q` of the
/// (scaled) Vandermonde columns; the kernel is its centre row. Scaling the
/// abscissae to `[-1, 1]` leaves the centre value unchanged and keeps the
/// Gram–Schmidt step well conditioned.
pub fn savgol_coefficients(spec: &SavGolSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let w = spec.window_len;
    let half = (w / 2) as f64;
    let z: Vec<f64> = (0..w).map(|i| (i as f64 - half) / half).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(spec.poly_order + 1);
    for p in 0..=spec.poly_order {
        let mut col: Vec<f64> = z.iter().map(|&x| x.powi(p as i32)).collect();
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = col.iter().zip(q).map(|(a, b)| a * b).sum();
                col.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = col.iter().map(|a| a * a).sum::<f64>().sqrt();
        col.iter_mut().for_each(|a| *a /= norm);
        basis.push(col);
    }
    let centre = w / 2;
    Ok((0..w).map(|i| basis.iter().map(|q| q[centre] * q[i]).sum()).collect())
}

/// Reflects an out-of-range index back into `0..n` (mirror without edge repeat).
fn mirror(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    (if m >= n as isize { period - m } else { m }) as usize
}

/// Per-channel convolution with the Savitzky–Golay kernel, mirror-padded.
///
/// An output sample is missing when any sample in its window is missing.
pub fn savgol_filter(series: &TimeSeries, spec: &SavGolSpec) -> Result<TimeSeries> {
    series.sample_interval()?;
    let kernel = savgol_coefficients(spec)?;
    let n = series.len();
    let half = (spec.window_len / 2) as isize;
    let columns = series
        .columns()
        .iter()
        .map(|col| {
            (0..n as isize)
                .map(|i| {
                    let mut acc = 0.0;
                    for (j, w) in kernel.iter().enumerate() {
                        acc += w * col[mirror(i + j as isize - half, n)]?;
                    }
                    Some(acc)
                })
                .collect()
        })
        .collect();
    series.with_columns(series.channels().to_vec(), columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_kernel(spec: SavGolSpec, expected: &[f64]) {
        let k = savgol_coefficients(&spec).unwrap();
        assert_eq!(k.len(), expected.len());
        for (a, b) in k.iter().zip(expected) {
            assert!((a - b).abs() <= 1e-12, "{k:?}");
        }
    }

    #[test]
    fn window3_order1_is_moving_average() {
        assert_kernel(SavGolSpec::new(3, 1).unwrap(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn window5_order2_matches_hand_solution() {
        // normal equations solved offline: [-3, 12, 17, 12, -3] / 35
        let e: Vec<f64> = [-3.0, 12.0, 17.0, 12.0, -3.0].iter().map(|v| v / 35.0).collect();
        assert_kernel(SavGolSpec::new(5, 2).unwrap(), &e);
    }

    #[test]
    fn window11_order3_matches_tabulated() {
        let e: Vec<f64> = [-36.0, 9.0, 44.0, 69.0, 84.0, 89.0, 84.0, 69.0, 44.0, 9.0, -36.0]
            .iter()
            .map(|v| v / 429.0)
            .collect();
        assert_kernel(SavGolSpec::default(), &e);
    }

    #[test]
    fn kernels_sum_to_one() {
        for w in (3..=51).step_by(2) {
            for p in 0..w.min(8) {
                let k = savgol_coefficients(&SavGolSpec::new(w, p).unwrap()).unwrap();
                assert!((k.iter().sum::<f64>() - 1.0).abs() <= 1e-12, "w={w} p={p}");
            }
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(SavGolSpec::new(4, 2).is_err());
        assert!(SavGolSpec::new(1, 0).is_err());
        assert!(SavGolSpec::new(5, 5).is_err());
    }

    fn uniform(vals: Vec<f64>, rate: f64) -> TimeSeries {
        TimeSeries::from_uniform("x", vec!["v".into()], 0.0, rate, vec![vals]).unwrap()
    }

    #[test]
    fn quadratic_reproduced_away_from_edges() {
        let vals: Vec<f64> = (0..200).map(|i| (i as f64 * 0.025).powi(2)).collect();
        let out = savgol_filter(&uniform(vals.clone(), 40.0), &SavGolSpec::default()).unwrap();
        for i in 5..195 {
            assert!((out.value(i, 0).unwrap() - vals[i]).abs() <= 1e-9);
        }
    }

    #[test]
    fn constant_preserved() {
        let out = savgol_filter(&uniform(vec![7.0; 50], 40.0), &SavGolSpec::default()).unwrap();
        assert!(out.channel(0).iter().all(|v| (v.unwrap() - 7.0).abs() <= 1e-12));
    }

    #[test]
    fn white_noise_variance_drops() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vals: Vec<f64> = (0..20_000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let out = savgol_filter(&uniform(vals.clone(), 40.0), &SavGolSpec::default()).unwrap();
        let var = |v: &[f64]| crate::stats::variance(v).unwrap();
        let filtered = out.present_values(0);
        assert!(var(&filtered) < var(&vals));
    }

    #[test]
    fn missing_propagates_through_window() {
        let mut col: Vec<Option<f64>> = vec![Some(1.0); 30];
        col[15] = None;
        let ts = (0..30).map(|i| i as f64 / 40.0).collect();
        let s = TimeSeries::single("x", "v", ts, col).unwrap();
        let out = savgol_filter(&s, &SavGolSpec::default()).unwrap();
        for i in 0..30 {
            assert_eq!(out.value(i, 0).is_none(), (10..=20).contains(&i), "i={i}");
        }
    }

    #[test]
    fn short_series_uses_repeated_mirroring() {
        let out = savgol_filter(&uniform(vec![2.0, 2.0, 2.0], 40.0), &SavGolSpec::default()).unwrap();
        assert!(out.channel(0).iter().all(|v| (v.unwrap() - 2.0).abs() < 1e-12));
    }

    #[test]
    fn rejects_non_uniform() {
        let s = TimeSeries::single("x", "v", vec![0.0, 0.1, 0.3], vec![Some(1.0); 3]).unwrap();
        assert!(matches!(
            savgol_filter(&s, &SavGolSpec::default()),
            Err(Error::NonUniformSeries(_))
        ));
    }

    proptest! {
        #[test]
        fn filter_is_linear(
            x in proptest::collection::vec(-5.0f64..5.0, 40),
            y in proptest::collection::vec(-5.0f64..5.0, 40),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let spec = SavGolSpec::default();
            let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let fx = savgol_filter(&uniform(x, 40.0), &spec).unwrap();
            let fy = savgol_filter(&uniform(y, 40.0), &spec).unwrap();
            let fc = savgol_filter(&uniform(combo, 40.0), &spec).unwrap();
            for i in 0..40 {
                let lhs = fc.value(i, 0).unwrap();
                let rhs = a * fx.value(i, 0).unwrap() + b * fy.value(i, 0).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-9);
            }
        }

        #[test]
        fn polynomials_up_to_order_reproduced(
            coeffs in proptest::collection::vec(-2.0f64..2.0, 4),
            order in 0usize..4,
            half in 2usize..8,
        ) {
            let w = 2 * half + 1;
            prop_assume!(order < w);
            let spec = SavGolSpec::new(w, order.max(1).min(w - 1)).unwrap();
            let deg = spec.poly_order;
            let vals: Vec<f64> = (0..60)
                .map(|i| {
                    let t = i as f64 * 0.025;
                    (0..=deg).map(|p| coeffs[p] * t.powi(p as i32)).sum()
                })
                .collect();
            let out = savgol_filter(&uniform(vals.clone(), 40.0), &spec).unwrap();
            for i in half..60 - half {
                prop_assert!((out.value(i, 0).unwrap() - vals[i]).abs() <= 1e-9);
            }
        }
    }
}
