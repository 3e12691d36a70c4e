//! Event-stream video anomaly detection toolkit.
//!
//! The crate covers the whole chain from raw events to localized anomalies:
//!
//! - [`event_model`]: events, streams, validation and the `EVS1` container.
//! - [`simulator`]: synthetic scenes rendered to intensity frames and converted
//!   to events with a log-intensity threshold model.
//! - [`framing`]: adaptive event-frame generation with a per-bin event budget.
//! - [`sampling`]: event-density aware nucleus partition and weighted sampling.
//! - [`attention`]: the distance-decay temporal kernel modulated by density.
//! - [`distillation`]: binary and standardized multi-class distillation losses.
//! - [`trainer`]: a small two-head student trained with MIL plus distillation.
//! - [`evaluation`]: frame-level AUC, box IoU and TIoU.
//! - [`localization`]: threshold + morphology + connected components.
//! - [`pipeline`]: file-based stages, the synthetic benchmark and the demo.
//!
//! Runnable examples for each stage live under `examples/`.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attention;
pub mod cli;
pub mod distillation;
mod error;
pub mod evaluation;
pub mod event_model;
pub mod framing;
pub mod localization;
pub mod pipeline;
pub mod sampling;
pub mod simulator;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
