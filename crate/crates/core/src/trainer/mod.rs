//! Toy student trained with MIL plus distillation.
//!
//! Per video the objective is
//!
//! ```text
//! L = L_mil + alpha * L_bin + beta * L_multi (+ class_weight * L_cls)
//! ```
//!
//! where `L_mil` is the BCE of the top-k mean frame score against the video
//! label, `L_bin` / `L_multi` are the distillation terms against a teacher's
//! outputs, and the optional `L_cls` is a video-level class cross-entropy on
//! the top-k mean class logits (used to give a teacher a meaningful class
//! head). Losses are averaged over each batch and parameters move by plain
//! gradient descent unless Adam is selected.

mod dataset;
mod mil;
mod model;

pub use dataset::{load_dataset, load_video, save_video, video_dirs, TEACHER_LOGITS, TEACHER_SCORES, VIDEO_FEATURES};
pub use mil::{mil_loss, top_k, top_k_indices, top_k_weights};
pub use model::{forward, infer, infer_batch, ToyModel, VideoInput};

use std::io::Write;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distillation::{kd_binary, kd_multiclass, KdConfig, LogitMatrix, ScoreSeries};
use crate::evaluation::{auc, LabeledScores};
use crate::sampling::{eds_sample, uniform_sample, DensityProfile, EdsConfig};
use crate::{Error, Result};
use model::forward_pass;

/// Frame-level outputs of a teacher for one video, aligned with its frames.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherOutputs {
    pub scores: ScoreSeries,
    pub logits: LogitMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingVideo {
    pub input: VideoInput,
    /// Video-level label, 0 or 1.
    pub label: u8,
    /// Frame labels, for evaluation only.
    pub frame_labels: Option<Vec<u8>>,
    pub teacher: Option<TeacherOutputs>,
    /// Video-level class index, used only by the class term.
    pub category: Option<usize>,
}

impl TrainingVideo {
    pub fn validate(&self) -> Result<()> {
        self.input.validate()?;
        let t = self.input.len();
        if self.label > 1 {
            return Err(Error::Config(format!("video label {} not in {{0, 1}}", self.label)));
        }
        if let Some(fl) = &self.frame_labels {
            if fl.len() != t {
                return Err(Error::Shape(format!("{} frame labels for {t} frames", fl.len())));
            }
        }
        if let Some(teacher) = &self.teacher {
            if teacher.scores.len() != t || teacher.logits.dim().0 != t {
                return Err(Error::Shape(format!(
                    "teacher has {} scores and {} logit rows for {t} frames",
                    teacher.scores.len(),
                    teacher.logits.dim().0
                )));
            }
        }
        Ok(())
    }

    /// Frames at `indices`; teacher outputs follow the same rows.
    pub fn select(&self, indices: &[usize]) -> Result<TrainingVideo> {
        Ok(TrainingVideo {
            input: self.input.select(indices),
            label: self.label,
            frame_labels: self.frame_labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
            teacher: match &self.teacher {
                Some(t) => Some(TeacherOutputs {
                    scores: ScoreSeries::new(indices.iter().map(|&i| t.scores.as_slice()[i]).collect())?,
                    logits: LogitMatrix::new(t.logits.view().select(Axis(0), indices))?,
                }),
                None => None,
            },
            category: self.category,
        })
    }
}

/// A video to evaluate: inputs plus frame labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalVideo {
    pub input: VideoInput,
    pub frame_labels: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameSampler {
    /// Every frame, every epoch.
    All,
    /// `sample_count` frames drawn uniformly.
    Uniform,
    /// `sample_count` frames drawn by density-aware sampling.
    Eds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub topk_fraction: f64,
    pub kd: KdConfig,
    pub seed: u64,
    pub sampler: FrameSampler,
    /// Nucleus threshold, quota split and `sample_count` for the samplers;
    /// its seed is ignored in favour of per-epoch seeds.
    pub eds: EdsConfig,
    /// Weight of the video-level class term; 0 disables it.
    pub class_weight: f64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-5,
            epochs: 10,
            batch_size: 128,
            topk_fraction: 1.0 / 16.0,
            kd: KdConfig::default(),
            seed: 0,
            sampler: FrameSampler::All,
            eds: EdsConfig::default(),
            class_weight: 0.0,
            optimizer: Optimizer::Sgd,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be > 0", self.learning_rate)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be >= 1".into()));
        }
        if !(self.topk_fraction > 0.0 && self.topk_fraction <= 1.0) {
            return Err(Error::Config(format!("top-k fraction {} not in (0, 1]", self.topk_fraction)));
        }
        if !(self.class_weight >= 0.0) {
            return Err(Error::Config("class_weight must be >= 0".into()));
        }
        self.kd.validate()?;
        self.eds.validate()
    }
}

/// Gradient of the objective, shaped like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrad {
    pub w_bin: Array1<f64>,
    pub b_bin: f64,
    pub w_cls: Array2<f64>,
    pub b_cls: Array1<f64>,
}

impl ModelGrad {
    fn zeros_like(model: &ToyModel) -> Self {
        Self {
            w_bin: Array1::zeros(model.dim()),
            b_bin: 0.0,
            w_cls: Array2::zeros(model.w_cls.dim()),
            b_cls: Array1::zeros(model.classes()),
        }
    }

    fn add_scaled(&mut self, other: &ModelGrad, s: f64) {
        self.w_bin.scaled_add(s, &other.w_bin);
        self.b_bin += s * other.b_bin;
        self.w_cls.scaled_add(s, &other.w_cls);
        self.b_cls.scaled_add(s, &other.b_cls);
    }

    /// Same layout as [`ToyModel::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut p = Vec::new();
        p.extend(self.w_bin.iter());
        p.push(self.b_bin);
        p.extend(self.w_cls.iter());
        p.extend(self.b_cls.iter());
        p
    }
}

/// Loss terms and gradient for one video.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub loss_mil: f64,
    /// Zero when the video has no teacher.
    pub loss_bin: f64,
    pub loss_multi: f64,
    pub loss_cls: f64,
    pub total: f64,
    pub grad: ModelGrad,
}

/// Objective of one (already sampled) video.
pub fn video_objective(model: &ToyModel, video: &TrainingVideo, config: &TrainConfig) -> Result<Objective> {
    let fp = forward_pass(model, &video.input)?;
    let t = fp.scores.len();
    let kd = &config.kd;

    let mil = mil_loss(&fp.scores, video.label, config.topk_fraction);
    let mut g_scores = mil.grad;
    let mut g_logits = Array2::<f64>::zeros(fp.logits.dim());
    let (mut loss_bin, mut loss_multi, mut loss_cls) = (0.0, 0.0, 0.0);

    if let Some(teacher) = &video.teacher {
        let student_scores = ScoreSeries::new(fp.scores.clone())?;
        let b = kd_binary(&student_scores, &teacher.scores)?;
        loss_bin = b.loss;
        let m = kd_multiclass(&LogitMatrix::new(fp.logits.clone())?, &teacher.logits, kd)?;
        loss_multi = m.loss;
        if kd.alpha > 0.0 {
            g_scores.iter_mut().zip(&b.grad).for_each(|(g, v)| *g += kd.alpha * v);
        }
        if kd.beta > 0.0 {
            g_logits.scaled_add(kd.beta, &m.grad);
        }
    } else if kd.enabled() {
        return Err(Error::MissingTeacher("teacher outputs".into()));
    }

    if config.class_weight > 0.0 {
        if let Some(c) = video.category {
            let k_cls = fp.logits.ncols();
            if c >= k_cls {
                return Err(Error::Config(format!("category {c} but only {k_cls} classes")));
            }
            let top = top_k_indices(&fp.scores, top_k(t, config.topk_fraction));
            let v = fp.logits.select(Axis(0), &top).mean_axis(Axis(0)).expect("k >= 1");
            let max = v.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let lse = max + v.mapv(|x| (x - max).exp()).sum().ln();
            loss_cls = lse - v[c];
            let mut g = v.mapv(|x| (x - lse).exp());
            g[c] -= 1.0;
            for &i in &top {
                g_logits.row_mut(i).scaled_add(config.class_weight / top.len() as f64, &g);
            }
        }
    }

    let g_pre = Array1::from_iter(g_scores.iter().zip(&fp.scores).map(|(g, s)| g * s * (1.0 - s)));
    let grad = ModelGrad {
        w_bin: fp.enhanced.t().dot(&g_pre),
        b_bin: g_pre.sum(),
        w_cls: fp.enhanced.t().dot(&g_logits),
        b_cls: g_logits.sum_axis(Axis(0)),
    };
    let total = mil.loss + kd.alpha * loss_bin + kd.beta * loss_multi + config.class_weight * loss_cls;
    Ok(Objective {
        loss_mil: mil.loss,
        loss_bin,
        loss_multi,
        loss_cls,
        total,
        grad,
    })
}

/// One row of the metrics log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss_mil: f64,
    pub loss_bin: f64,
    pub loss_multi: f64,
    /// Frame-level AUC on the evaluation videos; NaN when undefined.
    pub auc: f64,
}

pub fn write_metrics<W: Write>(log: &[EpochMetrics], mut sink: W) -> Result<()> {
    writeln!(sink, "epoch,loss_mil,loss_bin,loss_multi,auc")?;
    for m in log {
        writeln!(sink, "{},{},{},{},{}", m.epoch, m.loss_mil, m.loss_bin, m.loss_multi, m.auc)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: ToyModel,
    pub log: Vec<EpochMetrics>,
}

/// Seed for the frame sampler of `video` in `epoch`.
fn sampler_seed(seed: u64, epoch: usize, video: usize) -> u64 {
    let mut z = seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (video as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Frame indices fed to the model for `video` in `epoch`; strictly
/// increasing, so never duplicated.
pub fn training_frames(video: &VideoInput, config: &TrainConfig, epoch: usize, index: usize) -> Result<Vec<usize>> {
    let t = video.len();
    let seed = sampler_seed(config.seed, epoch, index);
    let picked = match config.sampler {
        FrameSampler::All => (0..t).collect(),
        FrameSampler::Uniform => uniform_sample(t, config.eds.sample_count, seed),
        FrameSampler::Eds => {
            let profile = DensityProfile {
                density: video.density.clone(),
                from_raw: true,
            };
            let cfg = EdsConfig { seed, ..config.eds.clone() };
            eds_sample(&profile, &cfg)?.indices
        }
    };
    debug_assert!(picked.windows(2).all(|w| w[0] < w[1]));
    Ok(picked)
}

/// Frame-level AUC of `model` over all frames of `videos`; NaN if only one
/// class is present.
pub fn evaluate_auc(model: &ToyModel, videos: &[EvalVideo]) -> Result<f64> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for v in videos {
        scores.extend(infer(model, &v.input)?.into_vec());
        labels.extend_from_slice(&v.frame_labels);
    }
    match auc(&LabeledScores::new(scores, labels)?) {
        Ok(a) => Ok(a),
        Err(Error::SingleClass) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

/// Trains `init` on `data`. AUC is logged on `eval` when given, otherwise on
/// the training videos that carry frame labels.
pub fn train(init: ToyModel, data: &[TrainingVideo], eval: Option<&[EvalVideo]>, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    init.validate()?;
    if data.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    for (i, v) in data.iter().enumerate() {
        v.validate()?;
        if config.kd.enabled() && v.teacher.is_none() {
            return Err(Error::MissingTeacher(format!("teacher outputs for training video {i}")));
        }
    }
    let fallback: Vec<EvalVideo> = data
        .iter()
        .filter_map(|v| {
            v.frame_labels.as_ref().map(|l| EvalVideo {
                input: v.input.clone(),
                frame_labels: l.clone(),
            })
        })
        .collect();
    let eval = eval.unwrap_or(&fallback);

    let mut model = init;
    let mut adam = AdamState::new(model.param_count());
    let mut log = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..config.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(sampler_seed(config.seed, epoch, usize::MAX));
        order.shuffle(&mut rng);
        let mut sums = [0.0f64; 3];
        for batch in order.chunks(config.batch_size) {
            let objectives: Vec<Objective> = batch
                .par_iter()
                .map(|&i| {
                    let frames = training_frames(&data[i].input, config, epoch, i)?;
                    video_objective(&model, &data[i].select(&frames)?, config)
                })
                .collect::<Result<_>>()?;
            let mut grad = ModelGrad::zeros_like(&model);
            let scale = 1.0 / batch.len() as f64;
            for o in &objectives {
                grad.add_scaled(&o.grad, scale);
                sums[0] += o.loss_mil;
                sums[1] += o.loss_bin;
                sums[2] += o.loss_multi;
            }
            step(&mut model, &grad, config, &mut adam);
        }
        let n = data.len() as f64;
        log.push(EpochMetrics {
            epoch: epoch + 1,
            loss_mil: sums[0] / n,
            loss_bin: sums[1] / n,
            loss_multi: sums[2] / n,
            auc: if eval.is_empty() { f64::NAN } else { evaluate_auc(&model, eval)? },
        });
    }
    Ok(TrainOutcome { model, log })
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamState {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

fn step(model: &mut ToyModel, grad: &ModelGrad, config: &TrainConfig, adam: &mut AdamState) {
    let g = grad.flatten();
    let mut p = model.params();
    let lr = config.learning_rate;
    match config.optimizer {
        Optimizer::Sgd => p.iter_mut().zip(&g).for_each(|(p, g)| *p -= lr * g),
        Optimizer::Adam { beta1, beta2, eps } => {
            adam.t += 1;
            let c1 = 1.0 - beta1.powi(adam.t);
            let c2 = 1.0 - beta2.powi(adam.t);
            for i in 0..p.len() {
                adam.m[i] = beta1 * adam.m[i] + (1.0 - beta1) * g[i];
                adam.v[i] = beta2 * adam.v[i] + (1.0 - beta2) * g[i] * g[i];
                p[i] -= lr * (adam.m[i] / c1) / ((adam.v[i] / c2).sqrt() + eps);
            }
        }
    }
    model.set_params(&p);
}
