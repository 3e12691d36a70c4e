//! CSV interop: one `t_us,x,y,p` row per event, no header.

use std::io::Read;

use super::{Event, EventStream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsvStream {
    pub stream: EventStream,
    /// Set when the rows were not in time order and had to be sorted.
    pub resorted: bool,
}

/// Reads events for a `width` x `height` sensor. Polarity `0` maps to `-1`.
/// The stream duration is the last timestamp.
pub fn read_csv_events<R: Read>(
    source: R,
    width: u32,
    height: u32,
    source_fps: f64,
) -> Result<CsvStream> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(source);

    let mut events = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != 4 {
            return Err(Error::Row {
                row,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let field = |k: usize| -> Result<i64> {
            record[k].parse::<i64>().map_err(|e| Error::Row {
                row,
                message: format!("field {} {:?}: {e}", k + 1, &record[k]),
            })
        };
        let (t, x, y, p) = (field(0)?, field(1)?, field(2)?, field(3)?);
        if t < 0 || x < 0 || y < 0 {
            return Err(Error::Row {
                row,
                message: "negative timestamp or coordinate".into(),
            });
        }
        if x as u64 >= u64::from(width) || y as u64 >= u64::from(height) {
            return Err(Error::OutOfBounds {
                row,
                x: x as u64,
                y: y as u64,
                width,
                height,
            });
        }
        let polarity = match p {
            1 => 1,
            0 | -1 => -1,
            other => {
                return Err(Error::Row {
                    row,
                    message: format!("polarity {other} not in {{1, 0, -1}}"),
                })
            }
        };
        events.push(Event::new(t as u64, x as u16, y as u16, polarity));
    }

    let mut stream = EventStream::new(width, height, 0, source_fps);
    stream.events = events;
    let resorted = stream.sort_stable();
    stream.duration_us = stream.events.last().map_or(0, |e| e.t);
    Ok(CsvStream { stream, resorted })
}
