//! Hand-made per-frame descriptors, projected to a fixed width.
//!
//! These stand in for a learned frame encoder. A fixed random projection
//! spreads the descriptors over `dim` features; additive Gaussian noise
//! then makes a feature set harder to learn from, which is how a weaker
//! modality is emulated.

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::framing::FrameSequence;
use crate::{Error, Result};

pub const DESCRIPTORS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub dim: usize,
    /// Standard deviation of the additive feature noise.
    pub noise_std: f64,
    /// Seeds the projection matrix, shared by every video.
    pub projection_seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            dim: 16,
            noise_std: 0.0,
            projection_seed: 0,
        }
    }
}

/// `T x 5` descriptors: log activity relative to the video median, active
/// pixel fraction, spatial spread of the rendered events, polarity
/// imbalance and log events per pixel.
pub fn frame_descriptors(seq: &FrameSequence) -> Array2<f64> {
    let pixels = (seq.width as f64 * seq.height as f64).max(1.0);
    let mut out = Array2::zeros((seq.len(), DESCRIPTORS));
    for (k, f) in seq.frames.iter().enumerate() {
        let rendered = f.rendered_count as f64;
        let active = f.counts.iter().filter(|&&c| c > 0).count() as f64;
        let spread = if rendered > 0.0 {
            let (mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0);
            for ((y, x), &c) in f.counts.indexed_iter() {
                let c = c as f64;
                sx += c * x as f64;
                sy += c * y as f64;
                sxx += c * (x * x) as f64;
                syy += c * (y * y) as f64;
            }
            let vx = (sxx / rendered - (sx / rendered).powi(2)).max(0.0);
            let vy = (syy / rendered - (sy / rendered).powi(2)).max(0.0);
            (vx.sqrt() / seq.width as f64 + vy.sqrt() / seq.height as f64) / 2.0
        } else {
            0.0
        };
        let pol = if rendered > 0.0 {
            f.polarity.sum() as f64 / rendered
        } else {
            0.0
        };
        out[[k, 0]] = ((f.raw_count as f64 + 1.0) / (seq.median_raw + 1.0)).ln();
        out[[k, 1]] = active / pixels;
        out[[k, 2]] = spread;
        out[[k, 3]] = pol.abs();
        out[[k, 4]] = (1.0 + f.raw_count as f64 / pixels).ln();
    }
    out
}

/// `DESCRIPTORS x dim` projection with unit-variance Gaussian entries
/// scaled by `1 / sqrt(DESCRIPTORS)`.
pub fn projection(config: &FeatureConfig) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.projection_seed);
    let normal = Normal::new(0.0, 1.0 / (DESCRIPTORS as f64).sqrt()).expect("finite std");
    Array2::from_shape_fn((DESCRIPTORS, config.dim), |_| normal.sample(&mut rng))
}

/// `T x dim` features for one video; `noise_seed` drives the noise.
pub fn extract_features(seq: &FrameSequence, config: &FeatureConfig, noise_seed: u64) -> Result<Array2<f64>> {
    if config.dim == 0 {
        return Err(Error::Config("feature dim must be >= 1".into()));
    }
    if !(config.noise_std >= 0.0) {
        return Err(Error::Config("feature noise must be >= 0".into()));
    }
    let mut x = frame_descriptors(seq).dot(&projection(config));
    if config.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let normal = Normal::new(0.0, config.noise_std).expect("finite std");
        x.map_inplace(|v| *v += normal.sample(&mut rng));
    }
    Ok(x)
}

/// Column means and population standard deviations over the rows of all
/// matrices.
pub fn column_stats(mats: &[&Array2<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = mats.first().map_or(0, |m| m.ncols());
    let mut all = Array2::zeros((0, d));
    for m in mats {
        all.append(Axis(0), m.view()).expect("same width");
    }
    let mean = all.mean_axis(Axis(0)).map(|m| m.to_vec()).unwrap_or_default();
    let std = all.std_axis(Axis(0), 0.0).to_vec();
    (mean, std)
}

/// Standardizes columns in place; zero-variance columns are only centered.
pub fn standardize(m: &mut Array2<f64>, mean: &[f64], std: &[f64]) {
    for (j, mut col) in m.axis_iter_mut(Axis(1)).enumerate() {
        let s = if std[j] > 0.0 { std[j] } else { 1.0 };
        col.mapv_inplace(|v| (v - mean[j]) / s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::framing::{EventFrame, Window};

    fn seq(counts: &[u32]) -> FrameSequence {
        let frames = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let w = Window {
                    start_us: i as u64 * 10,
                    end_us: i as u64 * 10 + 10,
                    center_us: i as u64 * 10 + 5,
                };
                let mut f = EventFrame::empty(4, 4, &w);
                f.counts[[1, 1]] = c;
                f.polarity[[1, 1]] = c as i32;
                f.raw_count = c as u64;
                f.rendered_count = c as u64;
                f
            })
            .collect();
        FrameSequence {
            width: 4,
            height: 4,
            frames,
            mean_raw: 0.0,
            median_raw: 3.0,
            degenerate: false,
        }
    }

    #[test]
    fn descriptors_of_a_single_pixel() {
        let d = frame_descriptors(&seq(&[3, 0]));
        assert!((d[[0, 0]]).abs() < 1e-12);
        assert_eq!(d[[0, 1]], 1.0 / 16.0);
        assert_eq!(d[[0, 2]], 0.0);
        assert_eq!(d[[0, 3]], 1.0);
        assert!((d[[1, 0]] + 4f64.ln()).abs() < 1e-12);
        assert_eq!(d[[1, 1]], 0.0);
    }

    #[test]
    fn noise_is_seeded() {
        let s = seq(&[3, 5, 1]);
        let cfg = FeatureConfig {
            noise_std: 0.5,
            ..FeatureConfig::default()
        };
        let a = extract_features(&s, &cfg, 1).unwrap();
        assert_eq!(a, extract_features(&s, &cfg, 1).unwrap());
        assert_ne!(a, extract_features(&s, &cfg, 2).unwrap());
        assert_eq!(a.dim(), (3, 16));
    }

    #[test]
    fn standardized_columns() {
        let mut m = ndarray::array![[1.0, 5.0], [3.0, 5.0]];
        let (mean, std) = column_stats(&[&m]);
        standardize(&mut m, &mean, &std);
        assert_eq!(m, ndarray::array![[-1.0, 0.0], [1.0, 0.0]]);
    }
}
