//! Gaze preprocessing and stationary gaze entropy.

mod entropy;
mod impute;
mod robustness;
mod spline;

pub use entropy::{
    bin_gaze, joint_entropy, low_entropy_mask, sliding_entropy, EntropySeries, GazeGridSpec, LowEntropyMask,
};
pub use impute::{impute_blinks, BlinkImputation, IMPUTED_CHANNEL};
pub use robustness::{robustness_sweep, SweepMatrix, SWEEP_BINS, SWEEP_WINDOWS_S};
pub use spline::CubicSpline;
