//! Adaptive event-frame generation.
//!
//! Windows are centered every `stride_frames` source frames and extend
//! `half_window_frames` on either side, truncated so they never overlap.
//! Each window then gets an event budget from the sparsity coefficient
//! `sc = N_c / median`:
//!
//! ```text
//! budget = round(mean_fraction * mean + median / sc), clamped to [1, event_cap]
//! ```
//!
//! Dense windows are subsampled down to the budget; sparse ones borrow the
//! nearest events from neighbouring time until they reach it.

mod budget;
mod export;
mod raster;
mod windows;

pub use budget::{event_budget, Budget};
pub use export::{export_frames, load_frames, FRAME_META, FRAME_TENSOR};
pub use raster::{frame_events, rasterize};
pub use windows::{make_windows, Window};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BinningConfig {
    pub stride_frames: usize,
    pub half_window_frames: usize,
    /// Share of the mean window count in the base budget.
    pub mean_fraction: f64,
    pub event_cap: u64,
    /// When false every window keeps all of its own events (still capped).
    pub adaptive: bool,
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self {
            stride_frames: 16,
            half_window_frames: 8,
            mean_fraction: 0.1,
            event_cap: 10_000,
            adaptive: true,
        }
    }
}

impl BinningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride_frames == 0 {
            return Err(Error::Config("stride_frames must be >= 1".into()));
        }
        if !(self.mean_fraction > 0.0 && self.mean_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "mean_fraction {} not in (0, 1]",
                self.mean_fraction
            )));
        }
        if self.event_cap == 0 {
            return Err(Error::Config("event_cap must be >= 1".into()));
        }
        Ok(())
    }
}

/// One rasterized window.
#[derive(Debug, Clone, PartialEq)]
pub struct EventFrame {
    /// `height x width` event counts, polarity-agnostic.
    pub counts: Array2<u32>,
    /// `height x width` signed polarity sums.
    pub polarity: Array2<i32>,
    pub center_us: u64,
    pub start_us: u64,
    pub end_us: u64,
    /// Events inside `[start_us, end_us)`.
    pub raw_count: u64,
    /// Events actually accumulated into the grids.
    pub rendered_count: u64,
}

impl EventFrame {
    pub fn empty(height: usize, width: usize, window: &Window) -> Self {
        Self {
            counts: Array2::zeros((height, width)),
            polarity: Array2::zeros((height, width)),
            center_us: window.center_us,
            start_us: window.start_us,
            end_us: window.end_us,
            raw_count: 0,
            rendered_count: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub width: u32,
    pub height: u32,
    pub frames: Vec<EventFrame>,
    pub mean_raw: f64,
    pub median_raw: f64,
    /// Set when the median window count was zero and budgets fell back to
    /// the mean term alone.
    pub degenerate: bool,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn raw_counts(&self) -> Vec<u64> {
        self.frames.iter().map(|f| f.raw_count).collect()
    }

    pub fn rendered_counts(&self) -> Vec<u64> {
        self.frames.iter().map(|f| f.rendered_count).collect()
    }

    pub fn center_times(&self) -> Vec<u64> {
        self.frames.iter().map(|f| f.center_us).collect()
    }
}

pub(crate) fn mean_median(counts: &[u64]) -> (f64, f64) {
    if counts.is_empty() {
        return (0.0, 0.0);
    }
    let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };
    (mean, median)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_median() {
        assert_eq!(mean_median(&[3, 1, 2]), (2.0, 2.0));
        assert_eq!(mean_median(&[4, 1, 2, 9]), (4.0, 3.0));
        assert_eq!(mean_median(&[]), (0.0, 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(BinningConfig::default().validate().is_ok());
        let bad = BinningConfig {
            mean_fraction: 0.0,
            ..BinningConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = BinningConfig {
            stride_frames: 0,
            ..BinningConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
