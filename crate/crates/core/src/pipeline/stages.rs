//! One function per pipeline stage. Each reads only its declared inputs,
//! writes only into its own output directory and records the resolved
//! configuration there.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::features::{extract_features, standardize, FeatureConfig};
use super::project_annotations;
use crate::attention::EdaConfig;
use crate::evaluation::{auc, read_labels, read_scores, tiou, write_labels, write_scores, BoxSet, LabeledScores};
use crate::event_model::{read_evs, write_evs};
use crate::framing::{export_frames, load_frames, make_windows, rasterize, FrameSequence};
use crate::localization::{binarize, localize_video, morph_refine};
use crate::sampling::{compute_density, eds_sample, SampleSet};
use crate::simulator::{frames_to_events, render_scene, SceneSpec};
use crate::trainer::{infer, load_dataset, train, write_metrics, ToyModel, TrainOutcome, VideoInput};
use crate::{Error, Result};

pub const EVENTS_FILE: &str = "events.evs";
pub const LABELS_FILE: &str = "labels.csv";
pub const BOXES_FILE: &str = "boxes.csv";
pub const SCENE_FILE: &str = "scene.toml";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const DENSITY_FILE: &str = "density.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const MODEL_FILE: &str = "model.json";
pub const METRICS_FILE: &str = "metrics.csv";
/// Feature normalization stored next to a dataset's video directories.
pub const FEATURE_NORM_FILE: &str = "features.json";

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// How raw frames become model features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNorm {
    pub features: FeatureConfig,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureNorm {
    pub fn identity(features: FeatureConfig) -> Self {
        Self {
            mean: vec![0.0; features.dim],
            std: vec![1.0; features.dim],
            features,
        }
    }

    /// Features, center times and raw-count densities of one framed video.
    pub fn video_input(&self, frames: &FrameSequence, noise_seed: u64) -> Result<VideoInput> {
        let mut x = extract_features(frames, &self.features, noise_seed)?;
        standardize(&mut x, &self.mean, &self.std);
        let density = match compute_density(frames, true) {
            Ok(p) => p.density,
            Err(Error::DegenerateDensity) => vec![1.0 / frames.len().max(1) as f64; frames.len()],
            Err(e) => return Err(e),
        };
        VideoInput::new(x, frames.center_times(), density)
    }
}

/// A trained model together with the feature pipeline it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringModel {
    pub model: ToyModel,
    pub norm: FeatureNorm,
}

impl ScoringModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        serde_json::to_writer_pretty(create(path)?, self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_reader(open(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulateSummary {
    pub events: usize,
    pub frames: usize,
    pub anomalous_frames: usize,
}

/// Renders `scene_path`, converts it to events and writes the stream,
/// source-frame labels, ground-truth boxes and a copy of the scene.
pub fn simulate(scene_path: &Path, config: &PipelineConfig, out: &Path) -> Result<SimulateSummary> {
    let scene = SceneSpec::from_path(scene_path)?;
    let rendered = render_scene(&scene)?;
    let stream = frames_to_events(&rendered.frames, scene.fps, &config.simulator, config.seed)?;
    config.write_into(out)?;
    write_evs(&stream, create(&out.join(EVENTS_FILE))?)?;
    write_labels(&rendered.labels, create(&out.join(LABELS_FILE))?)?;
    rendered.boxes.write_csv(create(&out.join(BOXES_FILE))?)?;
    fs::write(out.join(SCENE_FILE), scene.to_toml_string())?;
    Ok(SimulateSummary {
        events: stream.len(),
        frames: rendered.frames.len(),
        anomalous_frames: rendered.labels.iter().filter(|&&l| l == 1).count(),
    })
}

/// Frames the stream in `input`. Source-frame labels and boxes found next
/// to the stream are carried over to event frames.
pub fn frame(input: &Path, config: &PipelineConfig, out: &Path) -> Result<FrameSequence> {
    let stream = read_evs(open(&input.join(EVENTS_FILE))?)?;
    let windows = make_windows(&stream, &config.binning)?;
    let seq = rasterize(&stream, &windows, &config.binning)?;
    config.write_into(out)?;
    export_frames(&seq, out)?;
    let (labels_in, boxes_in) = (input.join(LABELS_FILE), input.join(BOXES_FILE));
    if labels_in.is_file() {
        let labels = read_labels(open(&labels_in)?)?;
        let boxes = if boxes_in.is_file() {
            BoxSet::read_csv(open(&boxes_in)?)?
        } else {
            BoxSet::default()
        };
        let (l, b) = project_annotations(&seq, &labels, &boxes, stream.source_fps);
        write_labels(&l, create(&out.join(LABELS_FILE))?)?;
        b.write_csv(create(&out.join(BOXES_FILE))?)?;
    }
    Ok(seq)
}

/// Density-aware sample of the frames in `frames_dir`. A request larger
/// than the sequence returns every frame with `truncated` set.
pub fn sample(frames_dir: &Path, config: &PipelineConfig, out: &Path) -> Result<SampleSet> {
    let seq = load_frames(frames_dir)?;
    let profile = compute_density(&seq, config.density_from_raw)?;
    let set = eds_sample(&profile, &config.sampling)?;
    config.write_into(out)?;
    set.write(create(&out.join(SAMPLES_FILE))?)?;
    let mut w = csv::Writer::from_writer(create(&out.join(DENSITY_FILE))?);
    w.write_record(["frame_index", "density"])?;
    for (i, d) in profile.density.iter().enumerate() {
        w.write_record([i.to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(set)
}

/// Trains on the dataset under `dataset`. With distillation enabled every
/// video must carry teacher files; the first missing one is reported.
pub fn train_stage(dataset: &Path, config: &PipelineConfig, out: &Path) -> Result<TrainOutcome> {
    let tc = config.train_config();
    tc.validate()?;
    let data = load_dataset(dataset, tc.kd.enabled())?;
    let first = data.first().ok_or_else(|| Error::MissingInput(dataset.to_path_buf()))?;
    let dim = first.input.dim();
    let classes = data
        .iter()
        .filter_map(|v| v.teacher.as_ref().map(|t| t.logits.dim().1))
        .next()
        .unwrap_or_else(|| data.iter().filter_map(|v| v.category).max().map_or(2, |c| (c + 1).max(2)));
    let norm_path = dataset.join(FEATURE_NORM_FILE);
    let norm = if norm_path.is_file() {
        serde_json::from_reader(open(&norm_path)?).map_err(|e| Error::Parse(format!("{}: {e}", norm_path.display())))?
    } else {
        FeatureNorm::identity(FeatureConfig {
            dim,
            ..config.features.clone()
        })
    };
    let eda: Option<EdaConfig> = config.train.use_eda.then(|| config.attention.clone());
    let outcome = train(ToyModel::zeros(dim, classes, eda), &data, None, &tc)?;
    config.write_into(out)?;
    ScoringModel {
        model: outcome.model.clone(),
        norm,
    }
    .save(&out.join(MODEL_FILE))?;
    write_metrics(&outcome.log, create(&out.join(METRICS_FILE))?)?;
    Ok(outcome)
}

/// Scores every frame in `frames_dir` with the model at `model_path`.
pub fn score(model_path: &Path, frames_dir: &Path, config: &PipelineConfig, out: &Path) -> Result<Vec<f64>> {
    let scoring = ScoringModel::load(model_path)?;
    let seq = load_frames(frames_dir)?;
    let input = scoring.norm.video_input(&seq, config.seed)?;
    let scores = infer(&scoring.model, &input)?.into_vec();
    config.write_into(out)?;
    write_scores(&scores, create(&out.join(SCORES_FILE))?)?;
    Ok(scores)
}

/// Boxes for the frames in `frames_dir` whose score clears the threshold.
/// With `dump_masks`, the refined mask of each such frame is written as
/// `masks/mask_NNNNN.pgm`.
pub fn localize(
    frames_dir: &Path,
    scores_path: &Path,
    config: &PipelineConfig,
    out: &Path,
    dump_masks: bool,
) -> Result<BoxSet> {
    let seq = load_frames(frames_dir)?;
    let scores = read_scores(open(scores_path)?)?;
    let boxes = localize_video(&seq, &scores, &config.localize)?;
    config.write_into(out)?;
    boxes.write_csv(create(&out.join(BOXES_FILE))?)?;
    if dump_masks {
        let dir = out.join("masks");
        fs::create_dir_all(&dir)?;
        for (k, f) in seq.frames.iter().enumerate() {
            if scores[k] < config.localize.score_threshold {
                continue;
            }
            let mask = morph_refine(&binarize(f, &config.localize), &config.localize);
            let (h, w) = mask.dim();
            let pixels: Vec<u8> = mask.iter().map(|&v| if v { 255 } else { 0 }).collect();
            let img = image::GrayImage::from_raw(w as u32, h as u32, pixels).expect("mask size");
            img.save_with_format(dir.join(format!("mask_{k:05}.pgm")), image::ImageFormat::Pnm)
                .map_err(|e| Error::Parse(e.to_string()))?;
        }
    }
    Ok(boxes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub auc: Option<f64>,
    pub tiou: Option<f64>,
}

/// Frame AUC of `scores` against `labels`, and TIoU of `pred` against `gt`
/// over the labeled frames when both box files are given.
pub fn eval(
    scores_path: &Path,
    labels_path: &Path,
    boxes: Option<(&Path, &Path)>,
    out: Option<&Path>,
) -> Result<EvalSummary> {
    let scores = read_scores(open(scores_path)?)?;
    let labels = read_labels(open(labels_path)?)?;
    let auc = match auc(&LabeledScores::new(scores, labels.clone())?) {
        Ok(a) => Some(a),
        Err(Error::SingleClass) => None,
        Err(e) => return Err(e),
    };
    let anomalous: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let tiou = match boxes {
        Some((pred, gt)) if !anomalous.is_empty() => {
            let pred = BoxSet::read_csv(open(pred)?)?;
            let gt = BoxSet::read_csv(open(gt)?)?;
            Some(tiou(&pred, &gt, &anomalous)?)
        }
        _ => None,
    };
    let summary = EvalSummary { auc, tiou };
    if let Some(out) = out {
        fs::create_dir_all(out)?;
        serde_json::to_writer_pretty(create(&out.join("eval.json"))?, &summary)
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    Ok(summary)
}
