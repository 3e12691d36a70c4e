//! Training-free spatial localization.
//!
//! For every frame whose anomaly score clears a threshold, the event map is
//! binarized, cleaned with a morphological opening followed by a closing,
//! and each remaining 8-connected component becomes a box. Nothing here is
//! learned or random.

use std::collections::VecDeque;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evaluation::{BBox, BoxSet};
use crate::framing::{EventFrame, FrameSequence};
use crate::{Error, Result};

pub type Mask = Array2<bool>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum MapThreshold {
    /// Keep cells with at least this fraction of the frame maximum.
    FractionOfMax(f64),
    /// Keep cells with at least this many events.
    Absolute(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventMap {
    Count,
    /// `|polarity sum|` per cell.
    PolarityMagnitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalizeConfig {
    /// Frames scoring at least this are localized.
    pub score_threshold: f64,
    pub threshold: MapThreshold,
    pub map: EventMap,
    /// Edge of the square structuring element; odd.
    pub kernel: usize,
    /// Components with fewer pixels are dropped.
    pub min_area: usize,
}

impl Default for LocalizeConfig {
    fn default() -> Self {
        Self {
            score_threshold: 0.5,
            threshold: MapThreshold::FractionOfMax(0.5),
            map: EventMap::Count,
            kernel: 3,
            min_area: 9,
        }
    }
}

impl LocalizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernel.is_multiple_of(2) {
            return Err(Error::Config(format!("kernel {} must be odd", self.kernel)));
        }
        match self.threshold {
            MapThreshold::FractionOfMax(f) if !(f > 0.0 && f <= 1.0) => {
                Err(Error::Config(format!("map fraction {f} not in (0, 1]")))
            }
            MapThreshold::Absolute(0) => Err(Error::Config("absolute map threshold must be >= 1".into())),
            _ => Ok(()),
        }
    }
}

pub fn binarize(frame: &EventFrame, config: &LocalizeConfig) -> Mask {
    let map: Array2<u32> = match config.map {
        EventMap::Count => frame.counts.clone(),
        EventMap::PolarityMagnitude => frame.polarity.mapv(i32::unsigned_abs),
    };
    let max = map.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Mask::from_elem(map.dim(), false);
    }
    match config.threshold {
        MapThreshold::FractionOfMax(f) => {
            let th = f * max as f64;
            map.mapv(|v| v > 0 && v as f64 >= th)
        }
        MapThreshold::Absolute(th) => map.mapv(|v| v >= th),
    }
}

/// Square-window erosion or dilation; cells outside the mask are background.
fn morph(mask: &Mask, kernel: usize, erode: bool) -> Mask {
    let r = (kernel / 2) as isize;
    let (h, w) = mask.dim();
    Mask::from_shape_fn((h, w), |(y, x)| {
        let mut hit_all = true;
        let mut hit_any = false;
        for dy in -r..=r {
            for dx in -r..=r {
                let (yy, xx) = (y as isize + dy, x as isize + dx);
                let v = yy >= 0 && xx >= 0 && (yy as usize) < h && (xx as usize) < w && mask[[yy as usize, xx as usize]];
                hit_all &= v;
                hit_any |= v;
            }
        }
        if erode {
            hit_all
        } else {
            hit_any
        }
    })
}

pub fn erode(mask: &Mask, kernel: usize) -> Mask {
    morph(mask, kernel, true)
}

pub fn dilate(mask: &Mask, kernel: usize) -> Mask {
    morph(mask, kernel, false)
}

pub fn open(mask: &Mask, kernel: usize) -> Mask {
    dilate(&erode(mask, kernel), kernel)
}

pub fn close(mask: &Mask, kernel: usize) -> Mask {
    erode(&dilate(mask, kernel), kernel)
}

/// Opening then closing with a `kernel x kernel` square.
pub fn morph_refine(mask: &Mask, config: &LocalizeConfig) -> Mask {
    close(&open(mask, config.kernel), config.kernel)
}

/// Tight boxes (exclusive maxima) of the 8-connected components with at
/// least `min_area` pixels, largest box first.
pub fn extract_boxes(mask: &Mask, config: &LocalizeConfig) -> Vec<BBox> {
    let (h, w) = mask.dim();
    let mut seen = Array2::from_elem((h, w), false);
    let mut boxes = Vec::new();
    let mut queue = VecDeque::new();
    for y0 in 0..h {
        for x0 in 0..w {
            if !mask[[y0, x0]] || seen[[y0, x0]] {
                continue;
            }
            seen[[y0, x0]] = true;
            queue.push_back((y0, x0));
            let (mut x_min, mut y_min, mut x_max, mut y_max) = (x0, y0, x0, y0);
            let mut area = 0usize;
            while let Some((y, x)) = queue.pop_front() {
                area += 1;
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
                for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        if mask[[ny, nx]] && !seen[[ny, nx]] {
                            seen[[ny, nx]] = true;
                            queue.push_back((ny, nx));
                        }
                    }
                }
            }
            if area >= config.min_area {
                boxes.push(BBox::new(x_min as u32, y_min as u32, x_max as u32 + 1, y_max as u32 + 1));
            }
        }
    }
    boxes.sort_by(|a, b| b.area().cmp(&a.area()).then((a.y_min, a.x_min).cmp(&(b.y_min, b.x_min))));
    boxes
}

/// Boxes for one frame: binarize, refine, extract.
pub fn localize_frame(frame: &EventFrame, config: &LocalizeConfig) -> Vec<BBox> {
    extract_boxes(&morph_refine(&binarize(frame, config), config), config)
}

/// Localizes every frame with `scores[i] >= score_threshold`.
pub fn localize_video(frames: &FrameSequence, scores: &[f64], config: &LocalizeConfig) -> Result<BoxSet> {
    config.validate()?;
    if frames.len() != scores.len() {
        return Err(Error::Shape(format!("{} frames vs {} scores", frames.len(), scores.len())));
    }
    let per_frame: Vec<Vec<BBox>> = frames
        .frames
        .par_iter()
        .zip(scores.par_iter())
        .map(|(f, &s)| if s >= config.score_threshold { localize_frame(f, config) } else { Vec::new() })
        .collect();
    let mut out = BoxSet::default();
    for (i, boxes) in per_frame.into_iter().enumerate() {
        for b in boxes {
            out.push(i, b);
        }
    }
    Ok(out)
}
