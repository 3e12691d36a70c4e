//! File-based pipeline stages, the synthetic benchmark and the demo.

mod annotate;
pub mod benchmark;
mod config;
pub mod demo;
pub mod features;
pub mod stages;

pub use annotate::project_annotations;
pub use config::{PipelineConfig, TrainSection, RUN_CONFIG};
pub use demo::{run_demo, DemoReport, REPORT_FILE};
