//! Frame-level AUC, box IoU and TIoU, plus the score, label and box files.
//!
//! File formats (UTF-8 text):
//!
//! - scores: CSV `frame_index,score` with a header row
//! - labels: one `0` or `1` per line
//! - boxes: CSV `frame_index,x_min,y_min,x_max,y_max` with a header row;
//!   several rows per frame are allowed. `x_max`/`y_max` are exclusive.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Axis-aligned box in pixels with exclusive maxima.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl BBox {
    pub fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Self {
        debug_assert!(x_min < x_max && y_min < y_max, "degenerate box");
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.x_min < self.x_max && self.y_min < self.y_max
    }

    pub fn area(&self) -> u64 {
        u64::from(self.x_max.saturating_sub(self.x_min)) * u64::from(self.y_max.saturating_sub(self.y_min))
    }

    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let b = BBox {
            x_min: self.x_min.max(other.x_min),
            y_min: self.y_min.max(other.y_min),
            x_max: self.x_max.min(other.x_max),
            y_max: self.y_max.min(other.y_max),
        };
        b.is_valid().then_some(b)
    }

    pub fn union_hull(&self, other: &BBox) -> BBox {
        BBox {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }
}

/// Boxes keyed by frame index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxSet {
    frames: BTreeMap<usize, Vec<BBox>>,
}

impl BoxSet {
    pub fn push(&mut self, frame: usize, b: BBox) {
        self.frames.entry(frame).or_default().push(b);
    }

    pub fn get(&self, frame: usize) -> &[BBox] {
        self.frames.get(&frame).map_or(&[], Vec::as_slice)
    }

    /// Frames that carry at least one box, ascending.
    pub fn frames(&self) -> impl Iterator<Item = usize> + '_ {
        self.frames.iter().filter(|(_, v)| !v.is_empty()).map(|(&f, _)| f)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &BBox)> {
        self.frames.iter().flat_map(|(&f, v)| v.iter().map(move |b| (f, b)))
    }

    pub fn len(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "frame_index,x_min,y_min,x_max,y_max")?;
        for (f, b) in self.iter() {
            writeln!(sink, "{f},{},{},{},{}", b.x_min, b.y_min, b.x_max, b.y_max)?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R) -> Result<Self> {
        let mut out = BoxSet::default();
        for (row, rec) in csv_rows(source, "frame_index")? {
            if rec.len() != 5 {
                return Err(Error::Row {
                    row,
                    message: format!("expected 5 fields, found {}", rec.len()),
                });
            }
            let v: Vec<u64> = rec
                .iter()
                .map(|s| s.parse::<u64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Row {
                    row,
                    message: e.to_string(),
                })?;
            let b = BBox {
                x_min: v[1] as u32,
                y_min: v[2] as u32,
                x_max: v[3] as u32,
                y_max: v[4] as u32,
            };
            if !b.is_valid() {
                return Err(Error::Row {
                    row,
                    message: "box needs x_min < x_max and y_min < y_max".into(),
                });
            }
            out.push(v[0] as usize, b);
        }
        Ok(out)
    }
}

/// Scores with aligned binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores {
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
}

impl LabeledScores {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} scores vs {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Config("labels must be 0 or 1".into()));
        }
        Ok(Self { scores, labels })
    }

    pub fn extend(&mut self, other: &LabeledScores) {
        self.scores.extend_from_slice(&other.scores);
        self.labels.extend_from_slice(&other.labels);
    }
}

/// Mann-Whitney AUC: `P(s_pos > s_neg) + P(s_pos == s_neg) / 2` over all
/// positive/negative pairs, computed from mid-ranks in `O(n log n)`.
pub fn auc(data: &LabeledScores) -> Result<f64> {
    let n_pos = data.labels.iter().filter(|&&l| l == 1).count();
    let n_neg = data.labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..data.scores.len()).collect();
    order.sort_by(|&a, &b| data.scores[a].total_cmp(&data.scores[b]));

    // Sum of 1-based mid-ranks of the positives, doubled to stay integral.
    let mut rank_sum_x2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && data.scores[order[j]] == data.scores[order[i]] {
            j += 1;
        }
        let pos_in_group = order[i..j].iter().filter(|&&k| data.labels[k] == 1).count() as u128;
        rank_sum_x2 += pos_in_group * (i as u128 + 1 + j as u128);
        i = j;
    }
    let (p, n) = (n_pos as u128, n_neg as u128);
    let u_x2 = rank_sum_x2 - p * (p + 1);
    Ok(u_x2 as f64 / (2 * p * n) as f64)
}

pub fn frame_iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection(b).map_or(0, |i| i.area());
    let union = a.area() + b.area() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Mean over `anomalous_frames` of the best IoU between each ground-truth
/// box and any predicted box on the same frame. Frames without predictions
/// score 0. With several ground-truth boxes on a frame their best IoUs are
/// averaged.
pub fn tiou(pred: &BoxSet, gt: &BoxSet, anomalous_frames: &[usize]) -> Result<f64> {
    if anomalous_frames.is_empty() {
        return Err(Error::Config("TIoU needs at least one anomalous frame".into()));
    }
    let per_frame = per_frame_iou(pred, gt, anomalous_frames)?;
    Ok(per_frame.iter().sum::<f64>() / per_frame.len() as f64)
}

/// The per-frame terms that [`tiou`] averages.
pub fn per_frame_iou(pred: &BoxSet, gt: &BoxSet, anomalous_frames: &[usize]) -> Result<Vec<f64>> {
    anomalous_frames
        .iter()
        .map(|&f| {
            let truth = gt.get(f);
            if truth.is_empty() {
                return Err(Error::MissingGroundTruth(f));
            }
            let preds = pred.get(f);
            let total: f64 = truth
                .iter()
                .map(|g| preds.iter().map(|p| frame_iou(g, p)).fold(0.0, f64::max))
                .sum();
            Ok(total / truth.len() as f64)
        })
        .collect()
}

pub fn write_scores<W: Write>(scores: &[f64], mut sink: W) -> Result<()> {
    writeln!(sink, "frame_index,score")?;
    for (i, s) in scores.iter().enumerate() {
        writeln!(sink, "{i},{s}")?;
    }
    Ok(())
}

/// Reads a score file. Rows may come in any order but must cover
/// `0..n` exactly once.
pub fn read_scores<R: Read>(source: R) -> Result<Vec<f64>> {
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for (row, rec) in csv_rows(source, "frame_index")? {
        if rec.len() != 2 {
            return Err(Error::Row {
                row,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let idx = rec[0].parse::<usize>().map_err(|e| Error::Row {
            row,
            message: e.to_string(),
        })?;
        let score = rec[1].parse::<f64>().map_err(|e| Error::Row {
            row,
            message: e.to_string(),
        })?;
        rows.push((idx, score));
    }
    rows.sort_by_key(|r| r.0);
    for (expect, (idx, _)) in rows.iter().enumerate() {
        if *idx != expect {
            return Err(Error::Parse(format!(
                "score file frame indices are not 0..{}: found {idx} at position {expect}",
                rows.len()
            )));
        }
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}

pub fn write_labels<W: Write>(labels: &[u8], mut sink: W) -> Result<()> {
    for l in labels {
        writeln!(sink, "{l}")?;
    }
    Ok(())
}

pub fn read_labels<R: Read>(source: R) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "0" => out.push(0),
            "1" => out.push(1),
            other => {
                return Err(Error::Row {
                    row: i + 1,
                    message: format!("label {other:?} is not 0 or 1"),
                })
            }
        }
    }
    Ok(out)
}

/// Data rows of a headered CSV, with 1-based line numbers. The header is
/// recognised by its first field and may be absent.
fn csv_rows<R: Read>(source: R, header_first: &str) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if i == 0 && rec.get(0) == Some(header_first) {
            continue;
        }
        out.push((i + 1, rec.iter().map(str::to_owned).collect()));
    }
    Ok(out)
}
