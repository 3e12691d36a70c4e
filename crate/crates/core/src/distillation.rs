//! RGB-to-event distillation losses with analytic gradients.
//!
//! - [`kd_binary`]: mean squared error between student and teacher anomaly
//!   scores.
//! - [`kd_multiclass`]: `tau^2`-weighted mean KL divergence between
//!   temperature-scaled softmaxes of row-standardized logits. Standardizing
//!   both sides makes the loss blind to per-row shifts and positive scalings
//!   of either model's logits.
//!
//! The teacher is a constant: gradients are only taken w.r.t. the student.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Floor applied to student probabilities inside the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Per-frame anomaly confidences in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries(Vec<f64>);

impl ScoreSeries {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Config(format!("score {bad} outside [0, 1]")));
        }
        Ok(Self(scores))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `T x K` class logits, `K >= 2`, all finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitMatrix(Array2<f64>);

impl LogitMatrix {
    pub fn new(z: Array2<f64>) -> Result<Self> {
        if z.ncols() < 2 {
            return Err(Error::Shape(format!("need K >= 2 classes, got {}", z.ncols())));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("logits must be finite".into()));
        }
        Ok(Self(z))
    }

    pub fn view(&self) -> ndarray::ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KdConfig {
    /// Weight of the binary term.
    pub alpha: f64,
    /// Weight of the multi-class term.
    pub beta: f64,
    /// Softmax temperature.
    pub tau: f64,
    pub eps_std: f64,
}

impl Default for KdConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 9.0,
            tau: 2.0,
            eps_std: 1e-8,
        }
    }
}

impl KdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::Config("alpha and beta must be >= 0".into()));
        }
        if !(self.tau > 0.0) || !(self.eps_std >= 0.0) {
            return Err(Error::Config("tau must be > 0 and eps_std >= 0".into()));
        }
        Ok(())
    }

    pub fn enabled(&self) -> bool {
        self.alpha > 0.0 || self.beta > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad<G> {
    pub loss: f64,
    pub grad: G,
}

/// `(1/T) * sum (a_e - a_r)^2` and its gradient `2 (a_e - a_r) / T`.
pub fn kd_binary(student: &ScoreSeries, teacher: &ScoreSeries) -> Result<LossGrad<Vec<f64>>> {
    if student.len() != teacher.len() {
        return Err(Error::Shape(format!(
            "{} student scores vs {} teacher scores",
            student.len(),
            teacher.len()
        )));
    }
    let t = student.len().max(1) as f64;
    let diff: Vec<f64> = student.0.iter().zip(&teacher.0).map(|(e, r)| e - r).collect();
    Ok(LossGrad {
        loss: diff.iter().map(|d| d * d).sum::<f64>() / t,
        grad: diff.iter().map(|d| 2.0 * d / t).collect(),
    })
}

struct RowStats {
    mean: f64,
    std: f64,
}

fn row_stats(z: ArrayView1<'_, f64>) -> RowStats {
    let k = z.len() as f64;
    let mean = z.sum() / k;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
    RowStats { mean, std: var.sqrt() }
}

/// Per-row `(z - mean) / (std + eps_std)` with the population std.
pub fn standardize_logits(z: &LogitMatrix, eps_std: f64) -> LogitMatrix {
    let mut out = z.0.clone();
    for mut row in out.rows_mut() {
        let s = row_stats(row.view());
        let denom = s.std + eps_std;
        row.mapv_inplace(|v| if denom > 0.0 { (v - s.mean) / denom } else { 0.0 });
    }
    LogitMatrix(out)
}

fn softmax(u: &[f64]) -> Vec<f64> {
    let m = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = u.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Multi-class distillation loss and its gradient w.r.t. the student logits.
pub fn kd_multiclass(student: &LogitMatrix, teacher: &LogitMatrix, config: &KdConfig) -> Result<LossGrad<Array2<f64>>> {
    if student.dim() != teacher.dim() {
        return Err(Error::Shape(format!(
            "student logits {:?} vs teacher {:?}",
            student.dim(),
            teacher.dim()
        )));
    }
    let (t, k) = student.dim();
    let tau = config.tau;
    let scale = tau * tau / t.max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Array2::<f64>::zeros((t, k));

    for i in 0..t {
        let z = student.0.row(i);
        let stats = row_stats(z);
        let denom = stats.std + config.eps_std;
        let zhat: Vec<f64> = z
            .iter()
            .map(|v| if denom > 0.0 { (v - stats.mean) / denom } else { 0.0 })
            .collect();

        let zr = teacher.0.row(i);
        let rs = row_stats(zr);
        let rden = rs.std + config.eps_std;
        let p: Vec<f64> = softmax(
            &zr.iter()
                .map(|v| if rden > 0.0 { (v - rs.mean) / rden / tau } else { 0.0 })
                .collect::<Vec<_>>(),
        );
        let q = softmax(&zhat.iter().map(|v| v / tau).collect::<Vec<_>>());

        for c in 0..k {
            if p[c] > 0.0 {
                loss += scale * p[c] * (p[c].ln() - q[c].max(PROB_FLOOR).ln());
            }
        }

        // d/du of -sum_c p_c log max(q_c, floor), u = zhat / tau
        let live: Vec<bool> = q.iter().map(|&v| v > PROB_FLOOR).collect();
        let p_live: f64 = (0..k).filter(|&c| live[c]).map(|c| p[c]).sum();
        let g_hat: Vec<f64> = (0..k)
            .map(|m| {
                let du = q[m] * p_live - if live[m] { p[m] } else { 0.0 };
                scale * du / tau
            })
            .collect();

        // back through the standardization
        if denom > 0.0 {
            let g_mean = g_hat.iter().sum::<f64>() / k as f64;
            let coupling = if stats.std > 0.0 {
                let dot: f64 = (0..k).map(|c| g_hat[c] * (z[c] - stats.mean)).sum();
                dot / (k as f64 * stats.std * denom * denom)
            } else {
                0.0
            };
            for m in 0..k {
                grad[[i, m]] = (g_hat[m] - g_mean) / denom - coupling * (z[m] - stats.mean);
            }
        }
    }
    Ok(LossGrad { loss, grad })
}

/// `alpha * l_bin + beta * l_multi`.
pub fn kd_total(l_bin: f64, l_multi: f64, config: &KdConfig) -> f64 {
    config.alpha * l_bin + config.beta * l_multi
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn scores(v: &[f64]) -> ScoreSeries {
        ScoreSeries::new(v.to_vec()).unwrap()
    }

    #[test]
    fn binary_examples() {
        let a = scores(&[0.3, 0.9]);
        let r = kd_binary(&a, &a).unwrap();
        assert_eq!(r.loss, 0.0);
        assert!(r.grad.iter().all(|&g| g == 0.0));

        assert_eq!(kd_binary(&scores(&[0.0, 1.0]), &scores(&[1.0, 0.0])).unwrap().loss, 1.0);

        let r = kd_binary(&scores(&[0.7]), &scores(&[0.2])).unwrap();
        assert!((r.loss - 0.25).abs() < 1e-15);
        assert!((r.grad[0] - 1.0).abs() < 1e-15);

        assert!(kd_binary(&scores(&[0.1]), &scores(&[0.1, 0.2])).is_err());
        assert!(ScoreSeries::new(vec![1.5]).is_err());
    }

    #[test]
    fn standardize_examples() {
        let z = LogitMatrix::new(array![[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]]).unwrap();
        let s = standardize_logits(&z, 1e-8);
        let v = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((s.0[[0, 0]] + v).abs() < 1e-7);
        assert!(s.0[[0, 1]].abs() < 1e-15);
        assert!((s.0[[0, 2]] - v).abs() < 1e-7);
        assert!(s.0.row(1).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn standardize_shift_scale_invariance() {
        let z = array![[0.3, -1.2, 2.5, 0.0], [4.0, 4.5, -3.0, 1.0]];
        let a = standardize_logits(&LogitMatrix::new(z.clone()).unwrap(), 1e-8);
        let b = standardize_logits(&LogitMatrix::new(z.mapv(|v| 3.0 * v - 7.0)).unwrap(), 1e-8);
        assert!(a.0.iter().zip(b.0.iter()).all(|(x, y)| (x - y).abs() < 1e-6));
    }

    #[test]
    fn multiclass_identity_is_zero() {
        let z = LogitMatrix::new(array![[0.3, -1.2, 2.5], [4.0, 4.5, -3.0]]).unwrap();
        let r = kd_multiclass(&z, &z, &KdConfig::default()).unwrap();
        assert!(r.loss.abs() < 1e-12);
        assert!(r.grad.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn multiclass_two_class_example() {
        // standardized +-1, tempered gap 1: KL = (s(1) - s(-1)) * 1
        let zr = LogitMatrix::new(array![[1.0, 0.0]]).unwrap();
        let ze = LogitMatrix::new(array![[0.0, 1.0]]).unwrap();
        let r = kd_multiclass(&ze, &zr, &KdConfig::default()).unwrap();
        let s1 = 1.0 / (1.0 + (-1.0f64).exp());
        let expect = 4.0 * (2.0 * s1 - 1.0);
        assert!((r.loss - expect).abs() / expect < 1e-6, "{} vs {expect}", r.loss);
    }

    #[test]
    fn multiclass_shape_mismatch() {
        let a = LogitMatrix::new(Array2::zeros((2, 3))).unwrap();
        let b = LogitMatrix::new(Array2::zeros((2, 4))).unwrap();
        assert!(kd_multiclass(&a, &b, &KdConfig::default()).is_err());
        assert!(LogitMatrix::new(Array2::zeros((2, 1))).is_err());
    }

    #[test]
    fn total_examples() {
        let cfg = KdConfig::default();
        assert!((kd_total(0.25, 1.848_468_629, &cfg) - (0.025 + 9.0 * 1.848_468_629)).abs() < 1e-12);
        let off = KdConfig { alpha: 0.0, beta: 0.0, ..cfg.clone() };
        assert_eq!(kd_total(0.3, 2.0, &off), 0.0);
        assert_eq!(kd_total(0.0, 0.0, &cfg), 0.0);
    }
}
