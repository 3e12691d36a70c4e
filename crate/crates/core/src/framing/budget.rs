use super::BinningConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub events: u64,
    /// The median was zero; only the mean term was used.
    pub degenerate: bool,
}

fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor().max(0.0) as u64
}

/// Per-window event budget from the window's raw count and the video's
/// mean and median window counts.
///
/// `mean_fraction * mean + median^2 / raw_count`, rounded half up and
/// clamped to `[1, event_cap]`. An empty window gets the cap.
pub fn event_budget(raw_count: u64, mean: f64, median: f64, config: &BinningConfig) -> Budget {
    let base = config.mean_fraction * mean;
    if median <= 0.0 {
        return Budget {
            events: round_half_up(base).min(config.event_cap),
            degenerate: true,
        };
    }
    let events = if raw_count == 0 {
        config.event_cap
    } else {
        let sc = raw_count as f64 / median;
        round_half_up(base + median / sc)
    };
    Budget {
        events: events.clamp(1, config.event_cap),
        degenerate: false,
    }
}
