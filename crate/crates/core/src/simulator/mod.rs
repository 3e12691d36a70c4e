//! Synthetic scenes and the log-intensity threshold event model.
//!
//! A [`SceneSpec`] describes a textured background with moving objects and
//! labeled anomaly intervals during which one object's velocity is
//! multiplied. [`render_scene`] produces intensity frames with per-frame
//! labels and ground-truth boxes; [`frames_to_events`] turns consecutive
//! frames into an [`EventStream`](crate::event_model::EventStream).

mod dvs;
mod render;
mod scene;

pub use dvs::{frame_time_us, frames_to_events, SimConfig};
pub use render::{render_scene, RenderedScene};
pub use scene::{AnomalySpec, Background, ObjectSpec, SceneSpec, Shape, TexturePattern};
