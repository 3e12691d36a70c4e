//! Event-modulated distance-decay attention.
//!
//! A content-independent temporal kernel: token `j` contributes to token `i`
//! with weight
//!
//! ```text
//! w_ij = exp(-lambda * |t_i - t_j| / (d_j + eps)) / (sum_k exp(-lambda * |t_i - t_k| / (d_k + eps)) + eps)
//! ```
//!
//! where `t` are per-sequence normalized timestamps and `d` event densities.
//! Closer tokens and denser tokens receive more weight.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdaConfig {
    /// Decay rate, > 0.
    pub lambda: f64,
    /// Stability constant, > 0.
    pub eps: f64,
}

impl Default for EdaConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            eps: 1e-6,
        }
    }
}

impl EdaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !(self.eps > 0.0) {
            return Err(Error::Config(format!(
                "EDA needs lambda > 0 and eps > 0, got {} and {}",
                self.lambda, self.eps
            )));
        }
        Ok(())
    }
}

/// Row-stochastic-up-to-eps `T x T` weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights(pub Array2<f64>);

impl AttentionWeights {
    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.0.rows().into_iter().map(|r| r.sum()).collect()
    }
}

/// Maps timestamps affinely onto `[0, 1]`; a constant sequence maps to 0.
pub fn normalize_timestamps(t: &[u64]) -> Vec<f64> {
    let (Some(&lo), Some(&hi)) = (t.iter().min(), t.iter().max()) else {
        return Vec::new();
    };
    if hi == lo {
        return vec![0.0; t.len()];
    }
    let span = (hi - lo) as f64;
    t.iter().map(|&v| (v - lo) as f64 / span).collect()
}

/// Kernel weights for normalized timestamps `t` and densities `d`.
///
/// `eps` enters both each token's density term and the row normalizer,
/// exactly as in the formula above. `eps = 0` is accepted for analysis;
/// a zero-density token then only attends to itself and to tokens at the
/// same timestamp.
pub fn eda_weights(t: &[f64], d: &[f64], config: &EdaConfig) -> Result<AttentionWeights> {
    if t.len() != d.len() {
        return Err(Error::Shape(format!("{} timestamps vs {} densities", t.len(), d.len())));
    }
    if d.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Config("densities must be non-negative".into()));
    }
    let n = t.len();
    let mut w = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let mut mass = 0.0;
        for j in 0..n {
            let dist = (t[i] - t[j]).abs();
            let e = if dist == 0.0 {
                1.0
            } else {
                (-config.lambda * dist / (d[j] + config.eps)).exp()
            };
            w[[i, j]] = e;
            mass += e;
        }
        let norm = mass + config.eps;
        w.row_mut(i).mapv_inplace(|v| v / norm);
    }
    Ok(AttentionWeights(w))
}

/// `out_i = sum_j w_ij * x_j`, plus `x_i` itself when `residual` is set.
pub fn apply_eda(features: ArrayView2<'_, f64>, weights: &AttentionWeights, residual: bool) -> Result<Array2<f64>> {
    if weights.len() != features.nrows() || weights.0.ncols() != features.nrows() {
        return Err(Error::Shape(format!(
            "{}x{} weights vs {} feature rows",
            weights.0.nrows(),
            weights.0.ncols(),
            features.nrows()
        )));
    }
    let mut out = weights.0.dot(&features);
    if residual {
        out += &features;
    }
    Ok(out)
}
