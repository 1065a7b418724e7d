use crate::error::{Error, Result};
use crate::linalg::solve_dense;

/// Interpolating cubic spline with not-a-knot end conditions.
///
/// Two knots give the chord and three the interpolating parabola; from four
/// knots on, any cubic polynomial is reproduced exactly.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidSpec("spline needs at least two knots".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSpec("spline knots must be strictly increasing".into()));
        }
        let m = if n == 2 {
            vec![0.0; 2]
        } else {
            Self::second_derivatives(&x, &y)?
        };
        Ok(CubicSpline { x, y, m })
    }

    fn second_derivatives(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let mut a = vec![vec![0.0; n]; n];
        let mut b = vec![0.0; n];
        for i in 1..n - 1 {
            a[i][i - 1] = h[i - 1];
            a[i][i] = 2.0 * (h[i - 1] + h[i]);
            a[i][i + 1] = h[i];
            b[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
        }
        if n == 3 {
            // single parabola: constant second derivative
            a[0][0] = 1.0;
            a[0][1] = -1.0;
            a[2][1] = -1.0;
            a[2][2] = 1.0;
        } else {
            // third derivative continuous across the second and penultimate knots
            a[0][0] = h[1];
            a[0][1] = -(h[0] + h[1]);
            a[0][2] = h[0];
            a[n - 1][n - 3] = h[n - 2];
            a[n - 1][n - 2] = -(h[n - 3] + h[n - 2]);
            a[n - 1][n - 1] = h[n - 3];
        }
        solve_dense(a, b).ok_or_else(|| Error::InvalidSpec("singular spline system".into()))
    }

    /// Evaluates the spline; outside the knots the end pieces are extended.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = self.x.partition_point(|&k| k <= t).clamp(1, n - 1) - 1;
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let h = x1 - x0;
        let a = x1 - t;
        let b = t - x0;
        m0 * a * a * a / (6.0 * h)
            + m1 * b * b * b / (6.0 * h)
            + (y0 / h - m0 * h / 6.0) * a
            + (y1 / h - m1 * h / 6.0) * b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passes_through_knots() {
        let x = vec![0.0, 0.3, 0.5, 1.1, 1.2];
        let y = vec![1.0, -2.0, 0.5, 0.0, 3.0];
        let s = CubicSpline::new(x.clone(), y.clone()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((s.eval(*a) - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reproduces_cubics() {
        let f = |t: f64| 2.0 * t * t * t - t * t + 0.5 * t - 3.0;
        let x = vec![0.0, 0.02, 0.04, 0.06, 0.2, 0.22, 0.24, 0.26];
        let s = CubicSpline::new(x.clone(), x.iter().map(|&t| f(t)).collect()).unwrap();
        for k in 0..=26 {
            let t = k as f64 * 0.01;
            assert!((s.eval(t) - f(t)).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn three_knots_give_parabola() {
        let f = |t: f64| t * t - 2.0 * t;
        let x = vec![0.0, 1.0, 3.0];
        let s = CubicSpline::new(x.clone(), x.iter().map(|&t| f(t)).collect()).unwrap();
        assert!((s.eval(2.0) - f(2.0)).abs() < 1e-12);
    }

    #[test]
    fn two_knots_give_chord() {
        let s = CubicSpline::new(vec![0.0, 2.0], vec![1.0, 3.0]).unwrap();
        assert!((s.eval(0.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(CubicSpline::new(vec![0.0], vec![1.0]).is_err());
        assert!(CubicSpline::new(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
    }
}
