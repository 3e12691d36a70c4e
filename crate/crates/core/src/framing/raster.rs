use rayon::prelude::*;

use super::budget::event_budget;
use super::windows::Window;
use super::{mean_median, BinningConfig, EventFrame, FrameSequence};
use crate::event_model::{Event, EventStream};
use crate::Result;

/// Index range of the events that belong to window `k`.
fn own_range(stream: &EventStream, windows: &[Window], k: usize) -> std::ops::Range<usize> {
    let w = windows[k];
    let end = if k + 1 == windows.len() && w.end_us == stream.duration_us {
        w.end_us + 1
    } else {
        w.end_us
    };
    stream.range(w.start_us, end)
}

/// Indices of the events rasterized into window `k`, in time order.
///
/// The first pass (raw counts, mean, median) is supplied by the caller so
/// windows can be processed independently.
fn select(stream: &EventStream, windows: &[Window], k: usize, mean: f64, median: f64, config: &BinningConfig) -> (usize, Vec<usize>) {
    let own = own_range(stream, windows, k);
    let raw = own.len();
    let budget = if config.adaptive {
        event_budget(raw as u64, mean, median, config).events
    } else {
        (raw as u64).min(config.event_cap)
    } as usize;

    if raw >= budget {
        // Evenly spaced by index; exactly `budget` events.
        let picked = (0..budget).map(|i| own.start + i * raw / budget).collect();
        return (raw, picked);
    }

    // Borrow the events closest in time on either side, bounded halfway
    // between this window's edges and the neighbouring centers.
    let w = windows[k];
    let left_limit = if k == 0 {
        0
    } else {
        (w.start_us + windows[k - 1].center_us) / 2
    };
    let right_limit = if k + 1 == windows.len() {
        stream.duration_us + 1
    } else {
        (w.end_us + windows[k + 1].center_us) / 2
    };
    let left = stream.range(left_limit, w.start_us);
    let right = own.end..stream.range(w.end_us, right_limit).end.max(own.end);

    let need = budget - raw;
    let mut extra = Vec::with_capacity(need);
    let (mut li, mut ri) = (left.end, right.start);
    while extra.len() < need {
        let l = (li > left.start).then(|| w.start_us - stream.events[li - 1].t);
        let r = (ri < right.end).then(|| stream.events[ri].t - w.end_us + 1);
        match (l, r) {
            (Some(dl), Some(dr)) if dl <= dr => {
                li -= 1;
                extra.push(li);
            }
            (Some(_), None) => {
                li -= 1;
                extra.push(li);
            }
            (_, Some(_)) => {
                extra.push(ri);
                ri += 1;
            }
            (None, None) => break,
        }
    }
    let mut picked: Vec<usize> = own.collect();
    picked.extend(extra);
    picked.sort_unstable();
    (raw, picked)
}

/// Rasterizes `windows` of `stream` with per-window event budgets.
///
/// Budgets use the mean and median raw count over all windows. Windows are
/// independent in the second pass and run on the rayon pool; the result
/// does not depend on scheduling.
pub fn rasterize(stream: &EventStream, windows: &[Window], config: &BinningConfig) -> Result<FrameSequence> {
    config.validate()?;
    let raw: Vec<u64> = (0..windows.len())
        .map(|k| own_range(stream, windows, k).len() as u64)
        .collect();
    let (mean, median) = mean_median(&raw);
    let (h, w) = (stream.height as usize, stream.width as usize);

    let frames = (0..windows.len())
        .into_par_iter()
        .map(|k| {
            let (raw_count, picked) = select(stream, windows, k, mean, median, config);
            let mut frame = EventFrame::empty(h, w, &windows[k]);
            frame.raw_count = raw_count as u64;
            for i in picked {
                let e = stream.events[i];
                let (x, y) = (e.x as usize, e.y as usize);
                if x < w && y < h {
                    frame.counts[[y, x]] += 1;
                    frame.polarity[[y, x]] += i32::from(e.polarity);
                    frame.rendered_count += 1;
                }
            }
            frame
        })
        .collect();

    Ok(FrameSequence {
        width: stream.width,
        height: stream.height,
        frames,
        mean_raw: mean,
        median_raw: median,
        degenerate: config.adaptive && !raw.is_empty() && median <= 0.0,
    })
}

/// The events [`rasterize`] would accumulate into window `k`.
pub fn frame_events(stream: &EventStream, windows: &[Window], k: usize, config: &BinningConfig) -> Vec<Event> {
    let raw: Vec<u64> = (0..windows.len())
        .map(|j| own_range(stream, windows, j).len() as u64)
        .collect();
    let (mean, median) = mean_median(&raw);
    select(stream, windows, k, mean, median, config)
        .1
        .into_iter()
        .map(|i| stream.events[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::make_windows;
    use super::*;

    fn cfg() -> BinningConfig {
        BinningConfig {
            stride_frames: 1,
            half_window_frames: 0,
            ..BinningConfig::default()
        }
    }

    /// `per_frame[k]` events spread inside frame k at 100 fps.
    fn stream_with(per_frame: &[usize]) -> EventStream {
        let mut s = EventStream::new(8, 8, per_frame.len() as u64 * 10_000, 100.0);
        for (k, &n) in per_frame.iter().enumerate() {
            for i in 0..n {
                let t = k as u64 * 10_000 + 1 + (i as u64 * 9_998) / n.max(1) as u64;
                s.events.push(Event::new(t, (i % 8) as u16, ((i / 8) % 8) as u16, if i % 3 == 0 { -1 } else { 1 }));
            }
        }
        s
    }

    #[test]
    fn budget_equal_to_raw_keeps_everything() {
        // Unclamped budget would be 1 + 10; the cap pins it to the raw count.
        let s = stream_with(&[10, 10, 10]);
        let c = BinningConfig { event_cap: 10, ..cfg() };
        let w = make_windows(&s, &c).unwrap();
        let seq = rasterize(&s, &w, &c).unwrap();
        for f in &seq.frames {
            assert_eq!(f.raw_count, 10);
            assert_eq!(f.rendered_count, 10);
        }
    }

    #[test]
    fn double_budget_keeps_every_second_event() {
        let s = stream_with(&[20, 20]);
        let c = BinningConfig { event_cap: 10, ..cfg() };
        let w = make_windows(&s, &c).unwrap();
        let kept = frame_events(&s, &w, 0, &c);
        let expect: Vec<Event> = s.events[..20].iter().step_by(2).copied().collect();
        assert_eq!(kept, expect);
    }

    #[test]
    fn empty_window_with_empty_neighbours() {
        let s = stream_with(&[0, 0, 0]);
        let w = make_windows(&s, &cfg()).unwrap();
        let seq = rasterize(&s, &w, &cfg()).unwrap();
        for f in &seq.frames {
            assert_eq!(f.rendered_count, 0);
            assert!(f.counts.iter().all(|&c| c == 0));
        }
    }

    #[test]
    fn sparse_window_borrows_nearest_neighbour_events() {
        // counts 30, 2, 30: mean 20.67, median 30.
        // middle budget = round(2.067 + 450) capped by what the limits allow.
        let s = stream_with(&[30, 2, 30]);
        let w = make_windows(&s, &cfg()).unwrap();
        let seq = rasterize(&s, &w, &cfg()).unwrap();
        let mid = &seq.frames[1];
        assert_eq!(mid.raw_count, 2);
        assert!(mid.rendered_count > 2);
        let borrowed = frame_events(&s, &w, 1, &cfg());
        // Only events within half a window of the edges are eligible.
        assert!(borrowed.iter().all(|e| e.t >= 5_000 && e.t < 25_000));
        assert_eq!(borrowed.len() as u64, mid.rendered_count);
    }

    #[test]
    fn grid_sums_match_rendered_counts() {
        let s = stream_with(&[50, 3, 120, 0, 7, 64]);
        for c in [cfg(), BinningConfig { event_cap: 20, ..cfg() }, BinningConfig { adaptive: false, ..cfg() }] {
            let w = make_windows(&s, &c).unwrap();
            let seq = rasterize(&s, &w, &c).unwrap();
            for f in &seq.frames {
                assert_eq!(f.counts.iter().map(|&v| v as u64).sum::<u64>(), f.rendered_count);
                assert!(f.rendered_count <= c.event_cap);
                for (cnt, pol) in f.counts.iter().zip(f.polarity.iter()) {
                    assert!(pol.unsigned_abs() <= *cnt);
                }
            }
        }
    }

    #[test]
    fn non_adaptive_keeps_own_events() {
        let s = stream_with(&[50, 3, 120]);
        let c = BinningConfig { adaptive: false, ..cfg() };
        let w = make_windows(&s, &c).unwrap();
        let seq = rasterize(&s, &w, &c).unwrap();
        assert_eq!(seq.rendered_counts(), vec![50, 3, 120]);
    }

    #[test]
    fn event_at_duration_lands_in_last_window() {
        let mut s = stream_with(&[1, 1]);
        s.events.push(Event::new(20_000, 0, 0, 1));
        let w = make_windows(&s, &cfg()).unwrap();
        let seq = rasterize(&s, &w, &cfg()).unwrap();
        assert_eq!(seq.raw_counts(), vec![1, 2]);
    }
}
