//! The standard synthetic benchmark and its ablation.
//!
//! Every video is a small textured scene with two moving objects. Half of
//! the videos contain one interval during which an object speeds up; the
//! category is 1 for a moderate and 2 for a strong speed-up. Videos are
//! simulated, framed, described and projected to features twice: a clean
//! copy feeds the teacher and a noisy copy feeds the student.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::annotate::project_annotations;
use super::features::{column_stats, extract_features, standardize, FeatureConfig};
use super::stages::FeatureNorm;
use super::PipelineConfig;
use crate::distillation::KdConfig;
use crate::evaluation::BoxSet;
use crate::framing::{make_windows, rasterize, BinningConfig, FrameSequence};
use crate::sampling::EdsConfig;
use crate::simulator::{frames_to_events, render_scene, AnomalySpec, Background, ObjectSpec, SceneSpec, Shape, SimConfig, TexturePattern};
use crate::trainer::{
    forward, train, EpochMetrics, EvalVideo, FrameSampler, TeacherOutputs, ToyModel, TrainConfig, TrainOutcome, TrainingVideo,
    VideoInput,
};
use crate::{Error, Result};

pub const CLASSES: usize = 3;

/// Settings specific to the benchmark; shared module settings come from
/// the surrounding [`PipelineConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub train_videos: usize,
    pub test_videos: usize,
    pub width: u32,
    pub height: u32,
    pub frames: usize,
    pub fps: f64,
    pub feature_dim: usize,
    /// Feature noise of the student; the teacher sees clean features.
    pub student_noise: f64,
    pub sample_count: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub teacher_epochs: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            train_videos: 20,
            test_videos: 8,
            width: 32,
            height: 32,
            frames: 1024,
            fps: 100.0,
            feature_dim: 16,
            student_noise: 1.0,
            sample_count: 16,
            learning_rate: 0.5,
            epochs: 60,
            teacher_epochs: 60,
        }
    }
}

/// One simulated and framed video with both feature copies.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedVideo {
    pub name: String,
    pub scene: SceneSpec,
    pub label: u8,
    pub category: usize,
    pub frames: FrameSequence,
    /// Same windows with every event kept.
    pub full_frames: FrameSequence,
    /// Event-frame labels.
    pub frame_labels: Vec<u8>,
    /// Event-frame ground-truth boxes.
    pub boxes: BoxSet,
    pub student: VideoInput,
    pub teacher: VideoInput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub train: Vec<PreparedVideo>,
    pub test: Vec<PreparedVideo>,
    /// Feature pipeline of the student view, with train-split statistics.
    pub student_norm: FeatureNorm,
    pub teacher_norm: FeatureNorm,
}

/// Scene `index` of the benchmark; odd indices carry an anomaly.
pub fn benchmark_scene(seed: u64, config: &BenchmarkConfig, index: usize) -> (SceneSpec, usize) {
    let seed = seed.wrapping_mul(1_000_003).wrapping_add(index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (config.width as f64, config.height as f64);
    let objects: Vec<ObjectSpec> = (0..2)
        .map(|_| {
            let size = rng.random_range(5..=8);
            let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let speed = rng.random_range(0.15..0.35);
            let bright = rng.random_bool(0.5);
            ObjectSpec {
                shape: if rng.random_bool(0.5) {
                    Shape::Rectangle { width: size, height: size }
                } else {
                    Shape::Disk { radius: size as f64 / 2.0 }
                },
                position: [rng.random_range(0.25 * w..0.75 * w), rng.random_range(0.25 * h..0.75 * h)],
                velocity: [speed * angle.cos(), speed * angle.sin()],
                contrast: if bright { rng.random_range(1.5..2.5) } else { rng.random_range(0.35..0.6) },
                texture: rng.random_range(0.2..0.4),
                pattern: TexturePattern::Noise,
            }
        })
        .collect();
    let mut anomalies = Vec::new();
    let mut category = 0;
    if index % 2 == 1 {
        let len = rng.random_range(config.frames / 10..=config.frames / 5);
        let start = rng.random_range(config.frames / 8..config.frames - len - config.frames / 8);
        let multiplier = rng.random_range(3.0..5.0);
        category = if multiplier < 4.0 { 1 } else { 2 };
        anomalies.push(AnomalySpec {
            start_frame: start,
            end_frame: start + len,
            object: rng.random_range(0..objects.len()),
            multiplier,
        });
    }
    let spec = SceneSpec {
        width: config.width,
        height: config.height,
        frames: config.frames,
        fps: config.fps,
        seed,
        background: Background {
            level: 100.0,
            texture: 0.3,
            block: 4,
        },
        objects,
        anomalies,
    };
    (spec, category)
}

/// A simulated scene framed twice over the same windows.
#[derive(Debug, Clone, PartialEq)]
pub struct FramedScene {
    /// Frames under the configured binning.
    pub frames: FrameSequence,
    /// Frames keeping every event of their window, for localization.
    pub full_frames: FrameSequence,
    /// Event-frame labels.
    pub labels: Vec<u8>,
    /// Event-frame ground-truth boxes.
    pub boxes: BoxSet,
}

pub fn simulate_and_frame(scene: &SceneSpec, sim: &SimConfig, binning: &BinningConfig) -> Result<FramedScene> {
    let rendered = render_scene(scene)?;
    let stream = frames_to_events(&rendered.frames, scene.fps, sim, scene.seed)?;
    let windows = make_windows(&stream, binning)?;
    let frames = rasterize(&stream, &windows, binning)?;
    let full = BinningConfig {
        adaptive: false,
        ..binning.clone()
    };
    let full_frames = rasterize(&stream, &windows, &full)?;
    let (labels, boxes) = project_annotations(&frames, &rendered.labels, &rendered.boxes, scene.fps);
    Ok(FramedScene {
        frames,
        full_frames,
        labels,
        boxes,
    })
}

fn features_of(v: &PreparedVideo, teacher_view: bool) -> &ndarray::Array2<f64> {
    if teacher_view {
        &v.teacher.features
    } else {
        &v.student.features
    }
}

fn density_of(seq: &FrameSequence) -> Vec<f64> {
    let raw = seq.raw_counts();
    let total: u64 = raw.iter().sum();
    if total == 0 {
        return vec![1.0 / raw.len().max(1) as f64; raw.len()];
    }
    raw.iter().map(|&n| n as f64 / total as f64).collect()
}

/// Builds every video. Features are standardized with statistics from the
/// training split only.
pub fn build_benchmark(pipeline: &PipelineConfig) -> Result<Benchmark> {
    let config = &pipeline.benchmark;
    let n = config.train_videos + config.test_videos;
    if config.train_videos == 0 || config.test_videos == 0 {
        return Err(Error::Config("benchmark needs train and test videos".into()));
    }
    let clean = FeatureConfig {
        dim: config.feature_dim,
        noise_std: 0.0,
        projection_seed: pipeline.seed,
    };
    let noisy = FeatureConfig {
        noise_std: config.student_noise,
        ..clean.clone()
    };
    let mut videos: Vec<PreparedVideo> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (scene, category) = benchmark_scene(pipeline.seed, config, i);
            let FramedScene {
                frames,
                full_frames,
                labels: frame_labels,
                boxes,
            } = simulate_and_frame(&scene, &pipeline.simulator, &pipeline.binning)?;
            let timestamps = frames.center_times();
            let density = density_of(&frames);
            let student = extract_features(&frames, &noisy, scene.seed ^ 0x5eed)?;
            let teacher = extract_features(&frames, &clean, 0)?;
            Ok(PreparedVideo {
                name: format!("video_{i:03}"),
                label: u8::from(!scene.anomalies.is_empty()),
                category,
                student: VideoInput::new(student, timestamps.clone(), density.clone())?,
                teacher: VideoInput::new(teacher, timestamps, density)?,
                scene,
                frames,
                full_frames,
                frame_labels,
                boxes,
            })
        })
        .collect::<Result<_>>()?;

    let mut test: Vec<PreparedVideo> = videos.split_off(config.train_videos);
    let mut train = videos;
    let mut norms = Vec::new();
    for (teacher_view, features) in [(false, noisy), (true, clean)] {
        let (mean, std) = column_stats(&train.iter().map(|v| features_of(v, teacher_view)).collect::<Vec<_>>());
        for v in train.iter_mut().chain(test.iter_mut()) {
            let m = if teacher_view { &mut v.teacher.features } else { &mut v.student.features };
            standardize(m, &mean, &std);
        }
        norms.push(FeatureNorm { features, mean, std });
    }
    let teacher_norm = norms.pop().expect("two views");
    let student_norm = norms.pop().expect("two views");
    Ok(Benchmark {
        train,
        test,
        student_norm,
        teacher_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variant {
    pub sampler: FrameSampler,
    pub eda: bool,
    pub kd: bool,
}

/// The four ablation rows in reporting order.
pub const ABLATION: [(&str, Variant); 4] = [
    (
        "baseline",
        Variant {
            sampler: FrameSampler::Uniform,
            eda: false,
            kd: false,
        },
    ),
    (
        "eds",
        Variant {
            sampler: FrameSampler::Eds,
            eda: false,
            kd: false,
        },
    ),
    (
        "eds_eda",
        Variant {
            sampler: FrameSampler::Eds,
            eda: true,
            kd: false,
        },
    ),
    (
        "eds_eda_kd",
        Variant {
            sampler: FrameSampler::Eds,
            eda: true,
            kd: true,
        },
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub variant: Variant,
    pub auc: f64,
    #[serde(skip)]
    pub log: Vec<EpochMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationResult {
    pub teacher: ToyModel,
    pub teacher_auc: f64,
    pub rows: Vec<AblationRow>,
    /// Model of the last (full) variant.
    pub student: ToyModel,
}

pub fn eval_set(videos: &[PreparedVideo], teacher_view: bool) -> Vec<EvalVideo> {
    videos
        .iter()
        .map(|v| EvalVideo {
            input: if teacher_view { v.teacher.clone() } else { v.student.clone() },
            frame_labels: v.frame_labels.clone(),
        })
        .collect()
}

/// The pipeline's training settings with the benchmark's step size, epoch
/// count and sample count, and distillation switched off.
fn base_train_config(pipeline: &PipelineConfig) -> TrainConfig {
    let bench = &pipeline.benchmark;
    TrainConfig {
        learning_rate: bench.learning_rate,
        epochs: bench.epochs,
        eds: EdsConfig {
            sample_count: bench.sample_count,
            ..pipeline.sampling.clone()
        },
        kd: KdConfig {
            alpha: 0.0,
            beta: 0.0,
            ..pipeline.distillation.clone()
        },
        ..pipeline.train_config()
    }
}

/// Trains the teacher on clean features of every frame, with a class term
/// so that its class head carries the video categories.
pub fn train_teacher(bench: &Benchmark, pipeline: &PipelineConfig) -> Result<(ToyModel, f64)> {
    let data: Vec<TrainingVideo> = bench
        .train
        .iter()
        .map(|v| TrainingVideo {
            input: v.teacher.clone(),
            label: v.label,
            frame_labels: Some(v.frame_labels.clone()),
            teacher: None,
            category: Some(v.category),
        })
        .collect();
    let tc = TrainConfig {
        epochs: pipeline.benchmark.teacher_epochs,
        sampler: FrameSampler::All,
        class_weight: 1.0,
        ..base_train_config(pipeline)
    };
    let test = eval_set(&bench.test, true);
    let init = ToyModel::zeros(pipeline.benchmark.feature_dim, CLASSES, Some(pipeline.attention.clone()));
    let out = train(init, &data, Some(&test), &tc)?;
    let auc = out.log.last().map_or(f64::NAN, |m| m.auc);
    Ok((out.model, auc))
}

/// Student training set; teacher outputs are attached when `teacher` is
/// given.
pub fn student_data(bench: &Benchmark, teacher: Option<&ToyModel>) -> Result<Vec<TrainingVideo>> {
    bench
        .train
        .iter()
        .map(|v| {
            let teacher = match teacher {
                Some(t) => {
                    let (scores, logits) = forward(t, &v.teacher)?;
                    Some(TeacherOutputs { scores, logits })
                }
                None => None,
            };
            Ok(TrainingVideo {
                input: v.student.clone(),
                label: v.label,
                frame_labels: Some(v.frame_labels.clone()),
                teacher,
                category: Some(v.category),
            })
        })
        .collect()
}

/// Trains one ablation variant from zero, logging AUC on the test split.
pub fn train_student(
    bench: &Benchmark,
    teacher: &ToyModel,
    variant: Variant,
    pipeline: &PipelineConfig,
) -> Result<TrainOutcome> {
    let data = student_data(bench, Some(teacher))?;
    let mut tc = base_train_config(pipeline);
    tc.sampler = variant.sampler;
    if variant.kd {
        tc.kd = pipeline.distillation.clone();
    }
    let eda = variant.eda.then(|| pipeline.attention.clone());
    let test = eval_set(&bench.test, false);
    train(ToyModel::zeros(pipeline.benchmark.feature_dim, CLASSES, eda), &data, Some(&test), &tc)
}

/// Teacher plus the four student variants; AUC is measured on the test
/// split after the last epoch.
pub fn run_ablation(bench: &Benchmark, pipeline: &PipelineConfig) -> Result<AblationResult> {
    let (teacher, teacher_auc) = train_teacher(bench, pipeline)?;
    let mut rows = Vec::new();
    let mut student = None;
    for (name, variant) in ABLATION {
        let out = train_student(bench, &teacher, variant, pipeline)?;
        rows.push(AblationRow {
            name: name.to_string(),
            variant,
            auc: out.log.last().map_or(f64::NAN, |m| m.auc),
            log: out.log,
        });
        student = Some(out.model);
    }
    Ok(AblationResult {
        teacher,
        teacher_auc,
        rows,
        student: student.expect("four variants"),
    })
}

/// A single textured rectangle drifting right over a textured background,
/// five times faster for frames 176..304. It never
/// reaches the sensor border. With `anomalous == false` it keeps its base
/// speed throughout.
pub fn planted_rectangle_scene(seed: u64, anomalous: bool) -> SceneSpec {
    let frames = 480;
    SceneSpec {
        width: 128,
        height: 48,
        frames,
        fps: 100.0,
        seed,
        background: Background {
            level: 100.0,
            texture: 0.3,
            block: 4,
        },
        objects: vec![ObjectSpec {
            shape: Shape::Rectangle { width: 12, height: 10 },
            position: [10.0, 24.0],
            velocity: [0.1, 0.0],
            contrast: 1.35,
            texture: 1.2,
            pattern: TexturePattern::Stripes,
        }],
        anomalies: if anomalous {
            vec![AnomalySpec {
                start_frame: 176,
                end_frame: 304,
                object: 0,
                multiplier: 5.0,
            }]
        } else {
            Vec::new()
        },
    }
}
