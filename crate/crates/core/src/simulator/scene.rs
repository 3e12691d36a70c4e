use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scene description, usually read from a TOML file:
///
/// ```toml
/// width = 64
/// height = 64
/// frames = 256
/// fps = 100.0
/// seed = 7
///
/// [background]
/// level = 100.0
/// texture = 0.3
///
/// [[object]]
/// shape = { kind = "rectangle", width = 10, height = 8 }
/// position = [20.0, 30.0]
/// velocity = [0.5, 0.0]
/// contrast = 1.8
///
/// [[anomaly]]
/// start_frame = 64
/// end_frame = 128
/// object = 0
/// multiplier = 4.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: u32,
    pub height: u32,
    pub frames: usize,
    #[serde(default = "default_fps")]
    pub fps: f64,
    /// Seeds the background and object textures.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub background: Background,
    #[serde(default, rename = "object")]
    pub objects: Vec<ObjectSpec>,
    #[serde(default, rename = "anomaly")]
    pub anomalies: Vec<AnomalySpec>,
}

fn default_fps() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub level: f64,
    /// Log-amplitude of the block texture; 0 gives a flat background.
    pub texture: f64,
    /// Texture block edge in pixels.
    pub block: u32,
}

impl Default for Background {
    fn default() -> Self {
        Self {
            level: 100.0,
            texture: 0.0,
            block: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Rectangle { width: u32, height: u32 },
    Disk { radius: f64 },
}

impl Shape {
    pub(crate) fn half_extent(&self) -> (f64, f64) {
        match *self {
            Shape::Rectangle { width, height } => (width as f64 / 2.0, height as f64 / 2.0),
            Shape::Disk { radius } => (radius, radius),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape: Shape,
    /// Initial center in pixels, `[x, y]`.
    pub position: [f64; 2],
    /// Pixels per frame, `[vx, vy]`. Objects bounce off the sensor border.
    pub velocity: [f64; 2],
    /// Object intensity relative to the background level.
    pub contrast: f64,
    /// Log-amplitude of a 1-pixel texture that moves with the object.
    #[serde(default)]
    pub texture: f64,
    #[serde(default)]
    pub pattern: TexturePattern,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TexturePattern {
    /// Independent value per pixel.
    #[default]
    Noise,
    /// One value per column, constant down each column.
    Stripes,
}

/// Frames `start_frame..end_frame` during which `object` moves
/// `multiplier` times faster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalySpec {
    pub start_frame: usize,
    pub end_frame: usize,
    pub object: usize,
    pub multiplier: f64,
}

impl SceneSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: SceneSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scene specs always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.width == 0 || self.height == 0 || self.width > 65_536 || self.height > 65_536 {
            return bad(format!("sensor {}x{} out of range", self.width, self.height));
        }
        if self.frames == 0 {
            return bad("scene needs at least one frame".into());
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return bad(format!("fps {} must be positive", self.fps));
        }
        if !(self.background.level > 0.0) || self.background.block == 0 {
            return bad("background level and block must be positive".into());
        }
        for (i, o) in self.objects.iter().enumerate() {
            let ok = match o.shape {
                Shape::Rectangle { width, height } => width > 0 && height > 0,
                Shape::Disk { radius } => radius > 0.0,
            };
            if !ok || !(o.contrast > 0.0) {
                return bad(format!("object {i}: empty shape or non-positive contrast"));
            }
        }
        for (i, a) in self.anomalies.iter().enumerate() {
            if a.start_frame >= a.end_frame || a.end_frame > self.frames {
                return bad(format!(
                    "anomaly {i}: interval [{}, {}) not inside [0, {})",
                    a.start_frame, a.end_frame, self.frames
                ));
            }
            if a.object >= self.objects.len() {
                return bad(format!("anomaly {i}: unknown object {}", a.object));
            }
            if !(a.multiplier > 1.0) {
                return bad(format!("anomaly {i}: multiplier {} must exceed 1", a.multiplier));
            }
        }
        Ok(())
    }

    pub fn is_anomalous(&self, frame: usize) -> bool {
        self.anomalies
            .iter()
            .any(|a| (a.start_frame..a.end_frame).contains(&frame))
    }
}
