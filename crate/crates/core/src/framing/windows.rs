use serde::{Deserialize, Serialize};

use super::BinningConfig;
use crate::event_model::EventStream;
use crate::{Error, Result};

/// Half-open window `[start_us, end_us)`. The last window of a stream also
/// takes events stamped exactly at the stream duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start_us: u64,
    pub end_us: u64,
    pub center_us: u64,
}

fn frame_us(frame: i64, fps: f64) -> i64 {
    (frame as f64 * 1e6 / fps).round() as i64
}

/// Windows centered on source frames `stride/2, stride/2 + stride, ...`.
///
/// Window `k` covers source frames `center - half ..= center + half`,
/// clipped to `[0, duration]`. Where neighbours overlap they are split at
/// the midpoint between their centers. A stream shorter than one stride
/// still yields one clipped window.
pub fn make_windows(stream: &EventStream, config: &BinningConfig) -> Result<Vec<Window>> {
    config.validate()?;
    let fps = stream.source_fps;
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(Error::Config(format!("source_fps {fps} must be positive")));
    }
    if stream.duration_us == 0 {
        return Err(Error::EmptyDuration);
    }
    let duration = stream.duration_us as i64;
    let stride = config.stride_frames as i64;
    let half = config.half_window_frames as i64;

    let mut windows: Vec<Window> = Vec::new();
    for k in 0.. {
        let center = k * stride + stride / 2;
        let center_us = frame_us(center, fps);
        if k > 0 && center_us >= duration {
            break;
        }
        let start = frame_us(center - half, fps).clamp(0, duration);
        let end = frame_us(center + half + 1, fps).clamp(0, duration);
        let center_us = if center_us >= end { (start + end) / 2 } else { center_us };
        windows.push(Window {
            start_us: start as u64,
            end_us: end as u64,
            center_us: center_us as u64,
        });
    }

    for k in 1..windows.len() {
        let (prev, next) = (windows[k - 1], windows[k]);
        if prev.end_us > next.start_us {
            let mid = (prev.center_us + next.center_us) / 2;
            let cut = mid.clamp(next.start_us, prev.end_us);
            windows[k - 1].end_us = cut;
            windows[k].start_us = cut;
        }
    }
    Ok(windows)
}
