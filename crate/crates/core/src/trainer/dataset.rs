//! One directory per video:
//!
//! ```text
//! features.tensor        T x D features
//! frames.csv             timestamp_us,density
//! video.toml             label (0/1), optional category
//! labels.csv             optional frame labels
//! teacher_scores.csv     optional teacher scores
//! teacher_logits.tensor  optional teacher logits, T x K
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{TeacherOutputs, TrainingVideo, VideoInput};
use crate::distillation::{LogitMatrix, ScoreSeries};
use crate::evaluation::{read_labels, read_scores, write_labels, write_scores};
use crate::tensor::RealTensor;
use crate::{Error, Result};

pub const VIDEO_FEATURES: &str = "features.tensor";
pub const TEACHER_SCORES: &str = "teacher_scores.csv";
pub const TEACHER_LOGITS: &str = "teacher_logits.tensor";
const FRAMES: &str = "frames.csv";
const META: &str = "video.toml";
const LABELS: &str = "labels.csv";

#[derive(Debug, Serialize, Deserialize)]
struct FrameRow {
    timestamp_us: u64,
    density: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct VideoMeta {
    label: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<usize>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

pub fn save_video(video: &TrainingVideo, dir: &Path) -> Result<()> {
    video.validate()?;
    fs::create_dir_all(dir)?;
    RealTensor::from_matrix(&video.input.features).write(BufWriter::new(File::create(dir.join(VIDEO_FEATURES))?))?;

    let mut w = csv::Writer::from_path(dir.join(FRAMES))?;
    for (&timestamp_us, &density) in video.input.timestamps.iter().zip(&video.input.density) {
        w.serialize(FrameRow { timestamp_us, density })?;
    }
    w.flush()?;

    let meta = VideoMeta {
        label: video.label,
        category: video.category,
    };
    fs::write(dir.join(META), toml::to_string(&meta).map_err(|e| Error::Parse(e.to_string()))?)?;

    if let Some(labels) = &video.frame_labels {
        write_labels(labels, BufWriter::new(File::create(dir.join(LABELS))?))?;
    }
    if let Some(t) = &video.teacher {
        write_scores(t.scores.as_slice(), BufWriter::new(File::create(dir.join(TEACHER_SCORES))?))?;
        RealTensor::from_matrix(&t.logits.view().to_owned()).write(BufWriter::new(File::create(dir.join(TEACHER_LOGITS))?))?;
    }
    Ok(())
}

/// Loads one video directory. With `require_teacher`, a missing teacher
/// file is reported by path.
pub fn load_video(dir: &Path, require_teacher: bool) -> Result<TrainingVideo> {
    let features = RealTensor::read(open(&dir.join(VIDEO_FEATURES))?)?.into_matrix();

    let mut timestamps = Vec::new();
    let mut density = Vec::new();
    let mut reader = csv::Reader::from_reader(open(&dir.join(FRAMES))?);
    for row in reader.deserialize() {
        let row: FrameRow = row?;
        timestamps.push(row.timestamp_us);
        density.push(row.density);
    }

    let meta: VideoMeta =
        toml::from_str(&fs::read_to_string(dir.join(META)).map_err(|_| Error::MissingInput(dir.join(META)))?)
            .map_err(|e| Error::Parse(format!("{}: {e}", dir.join(META).display())))?;

    let labels_path = dir.join(LABELS);
    let frame_labels = if labels_path.exists() {
        Some(read_labels(open(&labels_path)?)?)
    } else {
        None
    };

    let scores_path = dir.join(TEACHER_SCORES);
    let logits_path = dir.join(TEACHER_LOGITS);
    let teacher = match (scores_path.exists(), logits_path.exists()) {
        (true, true) => Some(TeacherOutputs {
            scores: ScoreSeries::new(read_scores(open(&scores_path)?)?)?,
            logits: LogitMatrix::new(RealTensor::read(open(&logits_path)?)?.into_matrix())?,
        }),
        (has_scores, _) if require_teacher => {
            let missing = if has_scores { logits_path } else { scores_path };
            return Err(Error::MissingTeacher(missing.display().to_string()));
        }
        _ => None,
    };

    let video = TrainingVideo {
        input: VideoInput::new(features, timestamps, density)?,
        label: meta.label,
        frame_labels,
        teacher,
        category: meta.category,
    };
    video.validate()?;
    Ok(video)
}

/// Subdirectories of `root` holding a feature tensor, sorted by name.
pub fn video_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.is_dir() {
        return Err(Error::MissingInput(root.to_path_buf()));
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(VIDEO_FEATURES).is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

pub fn load_dataset(root: &Path, require_teacher: bool) -> Result<Vec<TrainingVideo>> {
    video_dirs(root)?.iter().map(|d| load_video(d, require_teacher)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn video() -> TrainingVideo {
        TrainingVideo {
            input: VideoInput::new(array![[0.5, -1.25], [2.0, 0.1]], vec![7, 19], vec![0.25, 0.75]).unwrap(),
            label: 1,
            frame_labels: Some(vec![0, 1]),
            teacher: Some(TeacherOutputs {
                scores: ScoreSeries::new(vec![0.1, 0.9]).unwrap(),
                logits: LogitMatrix::new(array![[1.0, 0.0, -1.0], [0.2, 0.3, 0.1]]).unwrap(),
            }),
            category: Some(2),
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        save_video(&video(), &dir.path().join("v000")).unwrap();
        let back = load_dataset(dir.path(), true).unwrap();
        assert_eq!(back, vec![video()]);
    }

    #[test]
    fn missing_teacher_named_only_when_required() {
        let dir = tempfile::tempdir().unwrap();
        let v = dir.path().join("v");
        save_video(&video(), &v).unwrap();
        fs::remove_file(v.join(TEACHER_LOGITS)).unwrap();
        assert!(load_video(&v, false).unwrap().teacher.is_none());
        match load_video(&v, true) {
            Err(Error::MissingTeacher(p)) => assert!(p.ends_with(TEACHER_LOGITS)),
            other => panic!("{other:?}"),
        }
    }
}
