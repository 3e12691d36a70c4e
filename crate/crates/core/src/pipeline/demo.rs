//! End-to-end run on the standard synthetic benchmark.
//!
//! Layout of the output directory:
//!
//! ```text
//! config.toml            resolved configuration
//! dataset/train/<video>  student features with teacher outputs
//! dataset/test/<video>   student features and frame labels
//! models/*.json          teacher and full student
//! metrics/*.csv          per-epoch log of every ablation variant
//! planted/<stage>/       file-based chain on the planted-rectangle scene
//! report.json            all metrics and the configuration
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::benchmark::{build_benchmark, planted_rectangle_scene, run_ablation, student_data, AblationRow};
use super::stages::{self, ScoringModel, BOXES_FILE, FEATURE_NORM_FILE, LABELS_FILE, SCENE_FILE, SCORES_FILE};
use super::PipelineConfig;
use crate::evaluation::{per_frame_iou, read_labels, tiou, BoxSet};
use crate::framing::load_frames;
use crate::localization::localize_video;
use crate::trainer::{save_video, write_metrics, TrainingVideo};
use crate::{Error, Result};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub event_frames: usize,
    pub anomalous_frames: usize,
    /// Frame AUC of the student's scores on this scene.
    pub auc: Option<f64>,
    /// TIoU of boxes gated by the student's scores.
    pub tiou: Option<f64>,
    /// TIoU of boxes gated by the ground-truth labels, which isolates the
    /// spatial part of localization.
    pub tiou_label_gated: f64,
    /// Share of anomalous frames whose label-gated IoU is at least 0.5.
    pub frames_iou_at_least_half: f64,
    /// Boxes predicted on the all-normal copy of the scene, gated by the
    /// student's scores.
    pub normal_scene_boxes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub seed: u64,
    pub teacher_auc: f64,
    pub ablation: Vec<AblationRow>,
    /// Test AUC of the full student.
    pub auc: f64,
    /// TIoU of the full student on the planted-rectangle scene.
    pub tiou: Option<f64>,
    pub localization: LocalizationReport,
    pub config: PipelineConfig,
}

impl DemoReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report always serializes")
    }
}

fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?)?;
    Ok(())
}

/// Runs the whole pipeline into `out` and writes `report.json`.
pub fn run_demo(config: &PipelineConfig, out: &Path) -> Result<DemoReport> {
    config.validate()?;
    config.write_into(out)?;

    let bench = build_benchmark(config)?;
    let ablation = run_ablation(&bench, config)?;

    let dataset = out.join("dataset");
    let train_dir = dataset.join("train");
    for (v, video) in bench.train.iter().zip(student_data(&bench, Some(&ablation.teacher))?) {
        save_video(&video, &train_dir.join(&v.name))?;
    }
    save_json(&bench.student_norm, &train_dir.join(FEATURE_NORM_FILE))?;
    for v in &bench.test {
        let video = TrainingVideo {
            input: v.student.clone(),
            label: v.label,
            frame_labels: Some(v.frame_labels.clone()),
            teacher: None,
            category: Some(v.category),
        };
        save_video(&video, &dataset.join("test").join(&v.name))?;
    }

    let models = out.join("models");
    fs::create_dir_all(&models)?;
    ScoringModel {
        model: ablation.teacher.clone(),
        norm: bench.teacher_norm.clone(),
    }
    .save(&models.join("teacher.json"))?;
    let student_path = models.join("student.json");
    ScoringModel {
        model: ablation.student.clone(),
        norm: bench.student_norm.clone(),
    }
    .save(&student_path)?;

    let metrics = out.join("metrics");
    fs::create_dir_all(&metrics)?;
    for row in &ablation.rows {
        write_metrics(&row.log, fs::File::create(metrics.join(format!("{}.csv", row.name)))?)?;
    }

    let localization = planted_chain(config, &student_path, &out.join("planted"))?;
    let report = DemoReport {
        seed: config.seed,
        teacher_auc: ablation.teacher_auc,
        auc: ablation.rows.last().map_or(f64::NAN, |r| r.auc),
        tiou: localization.tiou,
        ablation: ablation.rows,
        localization,
        config: config.clone(),
    };
    fs::write(out.join(REPORT_FILE), report.to_json())?;
    Ok(report)
}

/// simulate, frame, sample, score, localize and eval through files. The
/// scene is framed without budgets: localization needs every event of a
/// window.
fn planted_chain(config: &PipelineConfig, model: &Path, root: &Path) -> Result<LocalizationReport> {
    let mut cfg = config.clone();
    cfg.binning.adaptive = false;
    cfg.sampling.sample_count = config.benchmark.sample_count;

    fs::create_dir_all(root)?;
    let scene_path = root.join(SCENE_FILE);
    fs::write(&scene_path, planted_rectangle_scene(config.seed, true).to_toml_string())?;

    let (sim, frm, smp, scr, loc, evl) = (
        root.join("simulate"),
        root.join("frame"),
        root.join("sample"),
        root.join("score"),
        root.join("localize"),
        root.join("eval"),
    );
    stages::simulate(&scene_path, &cfg, &sim)?;
    let seq = stages::frame(&sim, &cfg, &frm)?;
    stages::sample(&frm, &cfg, &smp)?;
    stages::score(model, &frm, &cfg, &scr)?;
    stages::localize(&frm, &scr.join(SCORES_FILE), &cfg, &loc, false)?;
    let summary = stages::eval(
        &scr.join(SCORES_FILE),
        &frm.join(LABELS_FILE),
        Some((&loc.join(BOXES_FILE), &frm.join(BOXES_FILE))),
        Some(&evl),
    )?;

    let labels = read_labels(fs::File::open(frm.join(LABELS_FILE))?)?;
    let gt = BoxSet::read_csv(fs::File::open(frm.join(BOXES_FILE))?)?;
    let anomalous: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let gated: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let pred = localize_video(&load_frames(&frm)?, &gated, &cfg.localize)?;
    let ious = per_frame_iou(&pred, &gt, &anomalous)?;
    let good = ious.iter().filter(|&&v| v >= 0.5).count();

    let normal_dir = root.join("normal");
    let normal_scene = normal_dir.join(SCENE_FILE);
    fs::create_dir_all(&normal_dir)?;
    fs::write(&normal_scene, planted_rectangle_scene(config.seed, false).to_toml_string())?;
    stages::simulate(&normal_scene, &cfg, &normal_dir.join("simulate"))?;
    stages::frame(&normal_dir.join("simulate"), &cfg, &normal_dir.join("frame"))?;
    stages::score(model, &normal_dir.join("frame"), &cfg, &normal_dir.join("score"))?;
    let normal_boxes = stages::localize(
        &normal_dir.join("frame"),
        &normal_dir.join("score").join(SCORES_FILE),
        &cfg,
        &normal_dir.join("localize"),
        false,
    )?;

    Ok(LocalizationReport {
        event_frames: seq.len(),
        anomalous_frames: anomalous.len(),
        auc: summary.auc,
        tiou: summary.tiou,
        tiou_label_gated: tiou(&pred, &gt, &anomalous)?,
        frames_iou_at_least_half: good as f64 / anomalous.len().max(1) as f64,
        normal_scene_boxes: normal_boxes.len(),
    })
}
