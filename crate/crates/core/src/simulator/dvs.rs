use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::event_model::{Event, EventStream};
use crate::{Error, Result};

/// Threshold model parameters. Thresholds are in natural-log intensity units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub threshold_on: f64,
    pub threshold_off: f64,
    /// Standard deviation of the per-emission threshold jitter; 0 disables it.
    pub threshold_noise: f64,
    /// Intensities are clamped to at least this value before the log.
    pub intensity_floor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            threshold_on: 0.15,
            threshold_off: 0.15,
            threshold_noise: 0.03,
            intensity_floor: 1.0,
        }
    }
}

impl SimConfig {
    pub fn noiseless() -> Self {
        Self {
            threshold_noise: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_on > 0.0 && self.threshold_off > 0.0) {
            return Err(Error::Config("event thresholds must be positive".into()));
        }
        if !(self.threshold_noise >= 0.0) || !(self.intensity_floor > 0.0) {
            return Err(Error::Config(
                "threshold noise must be >= 0 and the intensity floor > 0".into(),
            ));
        }
        Ok(())
    }
}

// Jittered thresholds never drop below this fraction of the nominal value.
const MIN_THRESHOLD_FRACTION: f64 = 0.05;

/// Timestamp of source frame `frame`, rounded to the microsecond.
pub fn frame_time_us(frame: usize, fps: f64) -> u64 {
    (frame as f64 * 1e6 / fps).round() as u64
}

/// Converts intensity frames sampled at `fps` into events.
///
/// Between consecutive frames each pixel emits `floor(|dlog I| / threshold)`
/// events of polarity `sign(dlog I)`, spread evenly over the open
/// inter-frame interval. With jitter enabled every emission draws its own
/// threshold. The stream duration is `frames.len() / fps`.
pub fn frames_to_events(
    frames: &[Array2<f64>],
    fps: f64,
    config: &SimConfig,
    seed: u64,
) -> Result<EventStream> {
    config.validate()?;
    if frames.len() < 2 {
        return Err(Error::TooFewFrames(frames.len()));
    }
    let (h, w) = frames[0].dim();
    if frames.iter().any(|f| f.dim() != (h, w)) {
        return Err(Error::Shape("intensity frames differ in size".into()));
    }
    if frames.iter().any(|f| f.iter().any(|v| !(*v >= 0.0))) {
        return Err(Error::Config("intensities must be non-negative".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = (config.threshold_noise > 0.0)
        .then(|| Normal::new(0.0, config.threshold_noise).expect("finite std"));
    let floor = config.intensity_floor;

    let mut stream = EventStream::new(w as u32, h as u32, frame_time_us(frames.len(), fps), fps);
    let mut prev = frames[0].mapv(|v| v.max(floor).ln());
    let mut pending: Vec<Event> = Vec::new();
    for (f, frame) in frames.iter().enumerate().skip(1) {
        let next = frame.mapv(|v| v.max(floor).ln());
        let t0 = frame_time_us(f - 1, fps);
        let dt = frame_time_us(f, fps) - t0;
        pending.clear();
        for ((y, x), &l1) in next.indexed_iter() {
            let delta = l1 - prev[[y, x]];
            if delta == 0.0 {
                continue;
            }
            let (nominal, polarity) = if delta > 0.0 {
                (config.threshold_on, 1)
            } else {
                (config.threshold_off, -1)
            };
            let n = match &noise {
                None => (delta.abs() / nominal).floor() as u64,
                Some(normal) => {
                    let mut remaining = delta.abs();
                    let mut n = 0u64;
                    loop {
                        let th = (nominal + normal.sample(&mut rng)).max(MIN_THRESHOLD_FRACTION * nominal);
                        if remaining < th {
                            break;
                        }
                        remaining -= th;
                        n += 1;
                    }
                    n
                }
            };
            for k in 0..n {
                let t = t0 + (k + 1) * dt / (n + 1);
                pending.push(Event::new(t, x as u16, y as u16, polarity));
            }
        }
        pending.sort_by_key(|e| e.t);
        stream.events.extend_from_slice(&pending);
        prev = next;
    }
    Ok(stream)
}
