//! Renders a scene from TOML, converts it to events and writes an EVS file.
//!
//! `cargo run --release --example simulate_scene -- [scene.toml] [out.evs]`

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use evadkit::event_model::{read_evs, validate_stream, write_evs};
use evadkit::simulator::{frames_to_events, render_scene, SceneSpec, SimConfig};

fn main() -> evadkit::Result<()> {
    let mut args = std::env::args().skip(1);
    let scene_path = args
        .next()
        .map_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/planted.toml"), PathBuf::from);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("scene.evs"), PathBuf::from);

    let scene = SceneSpec::from_path(&scene_path)?;
    let rendered = render_scene(&scene)?;
    let stream = frames_to_events(&rendered.frames, scene.fps, &SimConfig::default(), scene.seed)?;
    let on = stream.events.iter().filter(|e| e.polarity > 0).count();
    println!(
        "{} frames -> {} events ({} ON, {} OFF) over {} us",
        rendered.frames.len(),
        stream.len(),
        on,
        stream.len() - on,
        stream.duration_us
    );
    println!("anomalous source frames: {}", rendered.labels.iter().filter(|&&l| l == 1).count());

    let bytes = write_evs(&stream, BufWriter::new(File::create(&out)?))?;
    let back = read_evs(File::open(&out)?)?;
    assert_eq!(back, stream);
    assert!(validate_stream(&back).is_empty());
    println!("wrote {bytes} bytes to {}", out.display());
    Ok(())
}
