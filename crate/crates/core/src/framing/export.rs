//! On-disk frame sequences: one binary PGM per frame (counts clipped to
//! 255), a metadata CSV and the exact counts as a [`FrameTensor`].

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};
use ndarray::{s, Array3};

use super::{mean_median, EventFrame, FrameSequence};
use crate::tensor::FrameTensor;
use crate::{Error, Result};

pub const FRAME_TENSOR: &str = "frames.tensor";
pub const FRAME_META: &str = "frames.csv";

pub fn export_frames(seq: &FrameSequence, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (h, w) = (seq.height as usize, seq.width as usize);

    for (k, f) in seq.frames.iter().enumerate() {
        let pixels: Vec<u8> = f.counts.iter().map(|&c| c.min(255) as u8).collect();
        let file = BufWriter::new(File::create(dir.join(format!("frame_{k:05}.pgm")))?);
        PnmEncoder::new(file)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(&pixels, seq.width, seq.height, ExtendedColorType::L8)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }

    let mut meta = BufWriter::new(File::create(dir.join(FRAME_META))?);
    writeln!(meta, "center_time_us,raw_count,rendered_count,start_us,end_us")?;
    for f in &seq.frames {
        writeln!(
            meta,
            "{},{},{},{},{}",
            f.center_us, f.raw_count, f.rendered_count, f.start_us, f.end_us
        )?;
    }
    meta.flush()?;

    let mut counts = Array3::<u32>::zeros((seq.len(), h, w));
    let mut polarity = Array3::<i32>::zeros((seq.len(), h, w));
    for (k, f) in seq.frames.iter().enumerate() {
        counts.slice_mut(s![k, .., ..]).assign(&f.counts);
        polarity.slice_mut(s![k, .., ..]).assign(&f.polarity);
    }
    let tensor = FrameTensor { counts, polarity };
    let mut out = BufWriter::new(File::create(dir.join(FRAME_TENSOR))?);
    tensor.write(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Reloads a sequence written by [`export_frames`].
pub fn load_frames(dir: &Path) -> Result<FrameSequence> {
    let tensor_path = dir.join(FRAME_TENSOR);
    let meta_path = dir.join(FRAME_META);
    for p in [&tensor_path, &meta_path] {
        if !p.exists() {
            return Err(Error::MissingInput(p.clone()));
        }
    }
    let tensor = FrameTensor::read(File::open(&tensor_path)?)?;
    let (t, h, w) = tensor.counts.dim();

    let mut reader = csv::Reader::from_path(&meta_path)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let v: Vec<u64> = rec
            .iter()
            .map(|s| s.trim().parse::<u64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Row {
                row: i + 2,
                message: e.to_string(),
            })?;
        if v.len() != 5 {
            return Err(Error::Row {
                row: i + 2,
                message: format!("expected 5 fields, found {}", v.len()),
            });
        }
        rows.push(v);
    }
    if rows.len() != t {
        return Err(Error::Shape(format!("{} metadata rows for {t} frames", rows.len())));
    }

    let frames: Vec<EventFrame> = rows
        .iter()
        .enumerate()
        .map(|(k, v)| EventFrame {
            counts: tensor.counts.slice(s![k, .., ..]).to_owned(),
            polarity: tensor.polarity.slice(s![k, .., ..]).to_owned(),
            center_us: v[0],
            raw_count: v[1],
            rendered_count: v[2],
            start_us: v[3],
            end_us: v[4],
        })
        .collect();
    let raw: Vec<u64> = frames.iter().map(|f| f.raw_count).collect();
    let (mean_raw, median_raw) = mean_median(&raw);
    Ok(FrameSequence {
        width: w as u32,
        height: h as u32,
        frames,
        mean_raw,
        median_raw,
        degenerate: median_raw <= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{make_windows, rasterize, BinningConfig};
    use super::*;
    use crate::event_model::{Event, EventStream};

    #[test]
    fn export_and_reload() {
        let mut s = EventStream::new(5, 3, 320_000, 100.0);
        for i in 0..400u64 {
            s.events.push(Event::new(i * 800, (i % 5) as u16, (i % 3) as u16, if i % 2 == 0 { 1 } else { -1 }));
        }
        let cfg = BinningConfig::default();
        let seq = rasterize(&s, &make_windows(&s, &cfg).unwrap(), &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_frames(&seq, dir.path()).unwrap();

        let back = load_frames(dir.path()).unwrap();
        assert_eq!(back.frames, seq.frames);
        assert_eq!((back.mean_raw, back.median_raw), (seq.mean_raw, seq.median_raw));

        let pgm = fs::read(dir.path().join("frame_00000.pgm")).unwrap();
        assert!(pgm.starts_with(b"P5"));
        assert_eq!(&pgm[..11], b"P5\n5 3 255\n");
        assert_eq!(pgm.len(), 11 + 15);
    }

    #[test]
    fn missing_tensor_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_frames(dir.path()).unwrap_err();
        assert!(err.to_string().contains(FRAME_TENSOR));
    }
}
