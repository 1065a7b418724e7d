//! Offline multimodal behavioral analytics.
//!
//! The crate ingests recorded accelerometer, RSSI, gaze and marker streams,
//! aligns them on a common clock, derives hand-movement speed, discretized
//! proximity and windowed gaze entropy, summarizes marker-delimited phases,
//! and renders behaviorgrams as deterministic SVG.
//!
//! Modules follow the processing order:
//!
//! * [`streams`]: time-series model, session I/O, resampling, lag estimation, alignment
//! * [`signal`]: Savitzky–Golay smoothing, gravity removal, leaky velocity integration
//! * [`proximity`]: RSSI fusion, calibration and three-state discretization
//! * [`gaze`]: blink imputation, gaze binning, joint entropy, low-entropy masking
//! * [`phases`]: marker-driven phase sequencing, summaries and signature checks
//! * [`render`]: extended and simplified behaviorgram SVG documents
//! * [`synth`]: deterministic synthetic scenarios with ground truth
//! * [`pipeline`]: end-to-end analysis driven by a [`config::PipelineConfig`]

// `!(x > 0.0)` is used to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod gaze;
pub mod phases;
pub mod pipeline;
pub mod proximity;
pub mod render;
pub mod signal;
pub mod stats;
pub mod streams;
pub mod synth;

mod linalg;

pub use error::{Error, Result};
pub use streams::{MarkerStream, Recording, TimeSeries};
