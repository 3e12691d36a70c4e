//! `EVS1` container.
//!
//! Little-endian layout:
//!
//! ```text
//! "EVS1" | u32 width | u32 height | u64 duration_us | f64 source_fps | u64 count
//!        | count x (u64 t_us | u16 x | u16 y | i8 polarity) | u32 crc32
//! ```
//!
//! The CRC covers every byte between the magic and the checksum itself.

use std::io::{Read, Write};

use super::{Event, EventStream};
use crate::{Error, Result};

pub const EVS_MAGIC: [u8; 4] = *b"EVS1";

const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8;
const EVENT_LEN: usize = 8 + 2 + 2 + 1;

/// Writes `stream` and returns the number of bytes written.
pub fn write_evs<W: Write>(stream: &EventStream, mut sink: W) -> Result<usize> {
    let mut payload = Vec::with_capacity(HEADER_LEN + EVENT_LEN * stream.len());
    payload.extend_from_slice(&stream.width.to_le_bytes());
    payload.extend_from_slice(&stream.height.to_le_bytes());
    payload.extend_from_slice(&stream.duration_us.to_le_bytes());
    payload.extend_from_slice(&stream.source_fps.to_le_bytes());
    payload.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    for e in &stream.events {
        payload.extend_from_slice(&e.t.to_le_bytes());
        payload.extend_from_slice(&e.x.to_le_bytes());
        payload.extend_from_slice(&e.y.to_le_bytes());
        payload.extend_from_slice(&e.polarity.to_le_bytes());
    }
    let crc = crc32fast::hash(&payload);
    sink.write_all(&EVS_MAGIC)?;
    sink.write_all(&payload)?;
    sink.write_all(&crc.to_le_bytes())?;
    Ok(EVS_MAGIC.len() + payload.len() + 4)
}

pub fn read_evs<R: Read>(mut source: R) -> Result<EventStream> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;

    if bytes.len() < 4 {
        return Err(Error::Truncated(format!("{} bytes, no magic", bytes.len())));
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != EVS_MAGIC {
        return Err(Error::BadMagic {
            expected: EVS_MAGIC,
            found,
        });
    }
    if bytes.len() < 4 + HEADER_LEN + 4 {
        return Err(Error::Truncated(format!(
            "{} bytes, header needs {}",
            bytes.len(),
            4 + HEADER_LEN + 4
        )));
    }

    let mut cur = Cursor::new(&bytes[4..4 + HEADER_LEN]);
    let width = u32::from_le_bytes(cur.take());
    let height = u32::from_le_bytes(cur.take());
    let duration_us = u64::from_le_bytes(cur.take());
    let source_fps = f64::from_le_bytes(cur.take());
    let count = u64::from_le_bytes(cur.take());

    let expected_len = (count as usize)
        .checked_mul(EVENT_LEN)
        .and_then(|n| n.checked_add(4 + HEADER_LEN + 4))
        .ok_or_else(|| Error::Truncated(format!("event count {count} overflows")))?;
    if bytes.len() < expected_len {
        return Err(Error::Truncated(format!(
            "{} events need {} bytes, file has {}",
            count,
            expected_len,
            bytes.len()
        )));
    }

    let payload = &bytes[4..expected_len - 4];
    let stored = u32::from_le_bytes(bytes[expected_len - 4..expected_len].try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }

    let mut cur = Cursor::new(&payload[HEADER_LEN..]);
    let events = (0..count)
        .map(|_| Event {
            t: u64::from_le_bytes(cur.take()),
            x: u16::from_le_bytes(cur.take()),
            y: u16::from_le_bytes(cur.take()),
            polarity: i8::from_le_bytes(cur.take()),
        })
        .collect();

    Ok(EventStream {
        events,
        width,
        height,
        duration_us,
        source_fps,
    })
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    // Callers check lengths up front.
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.buf[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }
}
