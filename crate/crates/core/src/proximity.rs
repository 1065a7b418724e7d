//! RSSI fusion, near/far calibration and three-state proximity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;
use crate::streams::TimeSeries;

pub const DEFAULT_MARGIN_DB: f64 = 3.0;
/// Present samples required in each calibration segment.
pub const MIN_CALIBRATION_SAMPLES: usize = 20;
pub const DEFAULT_HYSTERESIS_SAMPLES: usize = 3;

/// Reference RSSI levels at the closest and farthest calibration positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationModel {
    pub rssi_near: f64,
    pub rssi_far: f64,
    pub margin: f64,
}

impl CalibrationModel {
    pub fn new(rssi_near: f64, rssi_far: f64, margin: f64) -> Result<Self> {
        if !(margin > 0.0) || !margin.is_finite() {
            return Err(Error::InvalidSpec(format!("margin {margin} dB must be positive")));
        }
        if !(rssi_near - rssi_far > 2.0 * margin) {
            return Err(Error::InvertedCalibration {
                near: rssi_near,
                far: rssi_far,
                margin,
            });
        }
        Ok(CalibrationModel {
            rssi_near,
            rssi_far,
            margin,
        })
    }

    /// State of one fused reading; missing readings are `Intermediate`.
    pub fn classify(&self, rssi: Option<f64>) -> ProximityState {
        match rssi {
            Some(r) if r >= self.rssi_near - self.margin => ProximityState::NearPatient,
            Some(r) if r <= self.rssi_far + self.margin => ProximityState::NearTable,
            _ => ProximityState::Intermediate,
        }
    }
}

/// Ordered from farthest to nearest, so `Ord` follows proximity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProximityState {
    NearTable,
    Intermediate,
    NearPatient,
}

impl ProximityState {
    pub const ALL: [ProximityState; 3] = [
        ProximityState::NearPatient,
        ProximityState::NearTable,
        ProximityState::Intermediate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProximityState::NearPatient => "near_patient",
            ProximityState::NearTable => "near_table",
            ProximityState::Intermediate => "intermediate",
        }
    }
}

impl fmt::Display for ProximityState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A proximity state per grid timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximitySeries {
    pub timestamps: Vec<f64>,
    pub states: Vec<ProximityState>,
}

impl ProximitySeries {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of state changes between consecutive samples.
    pub fn transitions(&self) -> usize {
        count_transitions(&self.states)
    }
}

pub(crate) fn count_transitions(states: &[ProximityState]) -> usize {
    states.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Per-timestamp maximum of the present hand readings.
pub fn fuse_rssi(rh: &TimeSeries, lh: &TimeSeries) -> Result<TimeSeries> {
    if !rh.same_grid(lh) {
        return Err(Error::GridMismatch(format!(
            "`{}` and `{}` are not on the same grid",
            rh.stream_id(),
            lh.stream_id()
        )));
    }
    if rh.channels().len() != 1 || lh.channels().len() != 1 {
        return Err(Error::InvalidSpec("RSSI series must have one channel".into()));
    }
    let fused = rh
        .channel(0)
        .iter()
        .zip(lh.channel(0))
        .map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => Some(a.max(*b)),
            (Some(v), None) | (None, Some(v)) => Some(*v),
            (None, None) => None,
        })
        .collect();
    TimeSeries::single("rssi_fused", "rssi", rh.timestamps().to_vec(), fused).map(|s| match rh.nominal_rate() {
        Some(r) => s.with_nominal_rate(r),
        None => s,
    })
}

/// Medians of the near and far segments.
pub fn calibrate(near_segment: &TimeSeries, far_segment: &TimeSeries, margin: f64) -> Result<CalibrationModel> {
    let level = |s: &TimeSeries, name: &str| -> Result<f64> {
        let v = s.present_values(0);
        if v.len() < MIN_CALIBRATION_SAMPLES {
            return Err(Error::InsufficientCalibration {
                segment: name.to_string(),
                present: v.len(),
                required: MIN_CALIBRATION_SAMPLES,
            });
        }
        Ok(stats::median(&v).expect("non-empty"))
    };
    let near = level(near_segment, "near")?;
    let far = level(far_segment, "far")?;
    CalibrationModel::new(near, far, margin)
}

/// Three-state discretization; total over the grid.
pub fn discretize(fused: &TimeSeries, model: &CalibrationModel) -> ProximitySeries {
    ProximitySeries {
        timestamps: fused.timestamps().to_vec(),
        states: fused.channel(0).iter().map(|r| model.classify(*r)).collect(),
    }
}

/// Like [`discretize`], but a state change is accepted only after
/// `min_run` consecutive samples in the new band.
pub fn discretize_with_hysteresis(fused: &TimeSeries, model: &CalibrationModel, min_run: usize) -> ProximitySeries {
    let raw = discretize(fused, model);
    let min_run = min_run.max(1);
    let mut states = Vec::with_capacity(raw.len());
    let mut current = match raw.states.first() {
        Some(s) => *s,
        None => return raw,
    };
    let mut candidate = current;
    let mut run = 0;
    for (i, &s) in raw.states.iter().enumerate() {
        if s == current {
            run = 0;
        } else {
            if s == candidate {
                run += 1;
            } else {
                candidate = s;
                run = 1;
            }
            if run >= min_run {
                // the accepted run starts min_run samples back
                let start = i + 1 - min_run;
                for st in &mut states[start..] {
                    *st = s;
                }
                current = s;
                run = 0;
            }
        }
        states.push(current);
    }
    ProximitySeries {
        timestamps: raw.timestamps,
        states,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(vals: Vec<Option<f64>>) -> TimeSeries {
        let ts = (0..vals.len()).map(|i| i as f64 * 0.1).collect();
        TimeSeries::single("r", "rssi", ts, vals).unwrap()
    }

    fn model() -> CalibrationModel {
        CalibrationModel::new(-50.0, -85.0, 3.0).unwrap()
    }

    #[test]
    fn fuse_cases() {
        let rh = series(vec![Some(-60.0), None, None]);
        let lh = series(vec![Some(-70.0), Some(-72.0), None]);
        let f = fuse_rssi(&rh, &lh).unwrap();
        assert_eq!(f.channel(0), &[Some(-60.0), Some(-72.0), None]);
    }

    #[test]
    fn fuse_grid_mismatch() {
        let rh = series(vec![Some(-60.0); 3]);
        let lh = series(vec![Some(-60.0); 4]);
        assert!(matches!(fuse_rssi(&rh, &lh), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn calibrate_constant_segments() {
        let m = calibrate(&series(vec![Some(-50.0); 25]), &series(vec![Some(-85.0); 25]), 3.0).unwrap();
        assert_eq!(m, model());
    }

    #[test]
    fn calibrate_uses_medians() {
        // oracle: medians of {-49,-50,-51} repeated are -50, of {-84,-85,-86} are -85
        let near: Vec<Option<f64>> = (0..30).map(|i| Some(-49.0 - (i % 3) as f64)).collect();
        let far: Vec<Option<f64>> = (0..30).map(|i| Some(-84.0 - (i % 3) as f64)).collect();
        let m = calibrate(&series(near), &series(far), 3.0).unwrap();
        assert_eq!((m.rssi_near, m.rssi_far), (-50.0, -85.0));
    }

    #[test]
    fn calibrate_inverted() {
        let r = calibrate(&series(vec![Some(-80.0); 25]), &series(vec![Some(-78.0); 25]), 3.0);
        assert!(matches!(r, Err(Error::InvertedCalibration { .. })));
        // separation must exceed 2 x margin
        let r = calibrate(&series(vec![Some(-80.0); 25]), &series(vec![Some(-86.0); 25]), 3.0);
        assert!(matches!(r, Err(Error::InvertedCalibration { .. })));
    }

    #[test]
    fn calibrate_insufficient() {
        let mut near = vec![Some(-50.0); 19];
        near.extend(vec![None; 10]);
        let r = calibrate(&series(near), &series(vec![Some(-85.0); 25]), 3.0);
        assert!(matches!(r, Err(Error::InsufficientCalibration { present: 19, .. })));
    }

    #[test]
    fn discretize_bands() {
        let m = model();
        assert_eq!(m.classify(Some(-51.0)), ProximityState::NearPatient);
        assert_eq!(m.classify(Some(-53.0)), ProximityState::NearPatient);
        assert_eq!(m.classify(Some(-84.0)), ProximityState::NearTable);
        assert_eq!(m.classify(Some(-82.0)), ProximityState::NearTable);
        assert_eq!(m.classify(Some(-70.0)), ProximityState::Intermediate);
        assert_eq!(m.classify(None), ProximityState::Intermediate);
    }

    #[test]
    fn hysteresis_suppresses_short_excursions() {
        let vals = [-50.0, -50.0, -70.0, -50.0, -85.0, -85.0, -85.0, -85.0, -50.0]
            .map(Some)
            .to_vec();
        let p = discretize_with_hysteresis(&series(vals), &model(), 3);
        use ProximityState::*;
        assert_eq!(
            p.states,
            vec![
                NearPatient,
                NearPatient,
                NearPatient,
                NearPatient,
                NearTable,
                NearTable,
                NearTable,
                NearTable,
                NearTable
            ]
        );
        assert_eq!(p.transitions(), 1);
    }

    proptest! {
        #[test]
        fn fuse_dominates_and_commutes(
            a in proptest::collection::vec(proptest::option::of(-100.0f64..-30.0), 1..50),
            seed in any::<u64>(),
        ) {
            let b: Vec<Option<f64>> = a.iter().enumerate()
                .map(|(i, v)| if (seed >> (i % 64)) & 1 == 1 { v.map(|x| x - 7.0) } else { None })
                .collect();
            let (sa, sb) = (series(a.clone()), series(b.clone()));
            let f = fuse_rssi(&sa, &sb).unwrap();
            let g = fuse_rssi(&sb, &sa).unwrap();
            prop_assert_eq!(f.channel(0), g.channel(0));
            for i in 0..a.len() {
                for v in [a[i], b[i]].into_iter().flatten() {
                    prop_assert!(f.value(i, 0).unwrap() >= v);
                }
            }
        }

        #[test]
        fn discretize_monotone(x in -100.0f64..-30.0, y in -100.0f64..-30.0) {
            let m = model();
            let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
            prop_assert!(m.classify(Some(hi)) >= m.classify(Some(lo)));
        }

        #[test]
        fn calibration_order_invariant(mut near in proptest::collection::vec(-55.0f64..-45.0, 20..40), k in 0usize..40) {
            let far = vec![Some(-85.0); 20];
            let m1 = calibrate(&series(near.iter().map(|v| Some(*v)).collect()), &series(far.clone()), 3.0).unwrap();
            let len = near.len();
            near.rotate_left(k % len);
            near.reverse();
            let m2 = calibrate(&series(near.into_iter().map(Some).collect()), &series(far), 3.0).unwrap();
            prop_assert_eq!(m1, m2);
        }
    }
}
