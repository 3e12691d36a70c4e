//! Core event types shared by every stage.
//!
//! Timestamps are integer microseconds. Polarity is stored as `+1` / `-1`
//! in an `i8` so that [`validate_stream`] can report malformed values read
//! from foreign sources instead of making them unrepresentable.

mod csv;
mod evs;

pub use self::csv::{read_csv_events, CsvStream};
pub use self::evs::{read_evs, write_evs, EVS_MAGIC};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: i8,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, polarity: i8) -> Self {
        Self { t, x, y, polarity }
    }
}

/// Time-ordered events from one sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    pub events: Vec<Event>,
    pub width: u32,
    pub height: u32,
    pub duration_us: u64,
    /// Frame rate of the video the events were derived from.
    pub source_fps: f64,
}

impl EventStream {
    pub fn new(width: u32, height: u32, duration_us: u64, source_fps: f64) -> Self {
        Self {
            events: Vec::new(),
            width,
            height,
            duration_us,
            source_fps,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Stable sort by timestamp. Returns `true` if the order changed.
    pub fn sort_stable(&mut self) -> bool {
        if self.is_sorted() {
            return false;
        }
        self.events.sort_by_key(|e| e.t);
        true
    }

    pub fn is_sorted(&self) -> bool {
        self.events.windows(2).all(|w| w[0].t <= w[1].t)
    }

    /// Index range of events with `start <= t < end`. Requires a sorted stream.
    pub fn range(&self, start: u64, end: u64) -> std::ops::Range<usize> {
        let lo = self.events.partition_point(|e| e.t < start);
        let hi = self.events.partition_point(|e| e.t < end);
        lo..hi.max(lo)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_stream(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `events[index].t` is smaller than its predecessor's.
    Unsorted { index: usize },
    OutOfBounds { index: usize, x: u16, y: u16 },
    BadPolarity { index: usize, value: i8 },
    AfterDuration { index: usize, t: u64 },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

/// Lists every invariant violation in `stream`. Never fails.
pub fn validate_stream(stream: &EventStream) -> ValidationReport {
    let mut violations = Vec::new();
    for (i, e) in stream.events.iter().enumerate() {
        if i > 0 && e.t < stream.events[i - 1].t {
            violations.push(Violation::Unsorted { index: i });
        }
        if u32::from(e.x) >= stream.width || u32::from(e.y) >= stream.height {
            violations.push(Violation::OutOfBounds {
                index: i,
                x: e.x,
                y: e.y,
            });
        }
        if e.polarity != 1 && e.polarity != -1 {
            violations.push(Violation::BadPolarity {
                index: i,
                value: e.polarity,
            });
        }
        if e.t > stream.duration_us {
            violations.push(Violation::AfterDuration { index: i, t: e.t });
        }
    }
    ValidationReport { violations }
}
