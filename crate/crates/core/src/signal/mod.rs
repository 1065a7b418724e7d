//! Smoothing and hand-movement velocity from 3-axis acceleration.

mod savgol;
mod velocity;

pub use savgol::{savgol_coefficients, savgol_filter, SavGolSpec};
pub use velocity::{
    leak_for_half_life, remove_gravity, velocity_magnitude, DEFAULT_BASELINE_S, DEFAULT_LEAK_HALF_LIFE_S, GRAVITY_M_S2,
};
