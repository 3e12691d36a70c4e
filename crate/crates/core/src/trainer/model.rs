use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::attention::{apply_eda, eda_weights, normalize_timestamps, EdaConfig};
use crate::distillation::{LogitMatrix, ScoreSeries};
use crate::{Error, Result};

/// What the model sees for one video. Teacher outputs are deliberately not
/// part of this type.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoInput {
    /// `T x D` per-frame features.
    pub features: Array2<f64>,
    pub timestamps: Vec<u64>,
    /// Per-frame event densities; expected to sum to 1.
    pub density: Vec<f64>,
}

impl VideoInput {
    pub fn new(features: Array2<f64>, timestamps: Vec<u64>, density: Vec<f64>) -> Result<Self> {
        let v = Self {
            features,
            timestamps,
            density,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.features.nrows();
        if self.timestamps.len() != t || self.density.len() != t {
            return Err(Error::Shape(format!(
                "{t} feature rows, {} timestamps, {} densities",
                self.timestamps.len(),
                self.density.len()
            )));
        }
        if t == 0 {
            return Err(Error::Shape("video has no frames".into()));
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("features must be finite".into()));
        }
        if self.density.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::Config("densities must be non-negative".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Rows at `indices`, with densities renormalized over the subset
    /// (uniform if the subset carries no events).
    pub fn select(&self, indices: &[usize]) -> VideoInput {
        let mut density: Vec<f64> = indices.iter().map(|&i| self.density[i]).collect();
        let total: f64 = density.iter().sum();
        if total > 0.0 {
            density.iter_mut().for_each(|d| *d /= total);
        } else {
            density.fill(1.0 / indices.len().max(1) as f64);
        }
        VideoInput {
            features: self.features.select(Axis(0), indices),
            timestamps: indices.iter().map(|&i| self.timestamps[i]).collect(),
            density,
        }
    }
}

/// Linear anomaly-score head and linear class head on top of an optional
/// distance-decay attention layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub w_bin: Array1<f64>,
    pub b_bin: f64,
    /// `D x K`.
    pub w_cls: Array2<f64>,
    pub b_cls: Array1<f64>,
    /// `None` scores the raw features directly.
    pub eda: Option<EdaConfig>,
    /// Add the input features back after attention.
    pub residual: bool,
}

impl ToyModel {
    pub fn zeros(dim: usize, classes: usize, eda: Option<EdaConfig>) -> Self {
        Self {
            w_bin: Array1::zeros(dim),
            b_bin: 0.0,
            w_cls: Array2::zeros((dim, classes)),
            b_cls: Array1::zeros(classes),
            eda,
            residual: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.w_bin.len()
    }

    pub fn classes(&self) -> usize {
        self.b_cls.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (d, k) = self.w_cls.dim();
        if d != self.dim() || k != self.classes() {
            return Err(Error::Shape(format!(
                "w_bin has {} rows, w_cls is {d}x{k}, b_cls has {}",
                self.dim(),
                self.classes()
            )));
        }
        if k < 2 {
            return Err(Error::Shape(format!("need K >= 2 classes, got {k}")));
        }
        if self.params().iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        if let Some(eda) = &self.eda {
            eda.validate()?;
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.dim() * (1 + self.classes()) + 1 + self.classes()
    }

    /// Flattened as `w_bin, b_bin, w_cls (row-major), b_cls`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend(self.w_bin.iter());
        p.push(self.b_bin);
        p.extend(self.w_cls.iter());
        p.extend(self.b_cls.iter());
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.param_count(), "parameter vector length");
        let (d, k) = (self.dim(), self.classes());
        self.w_bin.iter_mut().zip(&p[..d]).for_each(|(w, v)| *w = *v);
        self.b_bin = p[d];
        self.w_cls.iter_mut().zip(&p[d + 1..d + 1 + d * k]).for_each(|(w, v)| *w = *v);
        self.b_cls.iter_mut().zip(&p[d + 1 + d * k..]).for_each(|(w, v)| *w = *v);
    }
}

/// Everything the loss needs from a forward pass.
#[derive(Debug, Clone)]
pub(crate) struct ForwardPass {
    pub enhanced: Array2<f64>,
    pub scores: Vec<f64>,
    pub logits: Array2<f64>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn forward_pass(model: &ToyModel, input: &VideoInput) -> Result<ForwardPass> {
    input.validate()?;
    if input.dim() != model.dim() {
        return Err(Error::Shape(format!(
            "features have {} columns, model expects {}",
            input.dim(),
            model.dim()
        )));
    }
    let enhanced = match &model.eda {
        Some(cfg) => {
            let t = normalize_timestamps(&input.timestamps);
            let w = eda_weights(&t, &input.density, cfg)?;
            apply_eda(input.features.view(), &w, model.residual)?
        }
        None => input.features.clone(),
    };
    let scores = enhanced.dot(&model.w_bin).mapv(|v| sigmoid(v + model.b_bin)).to_vec();
    let logits = enhanced.dot(&model.w_cls) + &model.b_cls;
    Ok(ForwardPass {
        enhanced,
        scores,
        logits,
    })
}

/// Anomaly scores and class logits for one video.
pub fn forward(model: &ToyModel, input: &VideoInput) -> Result<(ScoreSeries, LogitMatrix)> {
    let fp = forward_pass(model, input)?;
    Ok((ScoreSeries::new(fp.scores)?, LogitMatrix::new(fp.logits)?))
}

/// Anomaly scores only.
pub fn infer(model: &ToyModel, input: &VideoInput) -> Result<ScoreSeries> {
    ScoreSeries::new(forward_pass(model, input)?.scores)
}

/// Per-video inference over a batch; each video is scored independently.
pub fn infer_batch(model: &ToyModel, inputs: &[VideoInput]) -> Result<Vec<ScoreSeries>> {
    inputs.iter().map(|v| infer(model, v)).collect()
}
