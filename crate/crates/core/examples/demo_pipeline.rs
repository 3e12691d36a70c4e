//! Runs the full pipeline on the synthetic benchmark and prints the report.
//!
//! `cargo run --release --example demo_pipeline -- [out_dir] [seed]`

use std::path::PathBuf;

use evadkit::pipeline::{run_demo, PipelineConfig};

fn main() -> evadkit::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("evadkit-demo"), PathBuf::from);
    let mut config = PipelineConfig::default();
    if let Some(seed) = args.next() {
        config.seed = seed.parse().expect("seed must be an integer");
    }
    let report = run_demo(&config, &out)?;
    println!("teacher auc {:.4}", report.teacher_auc);
    for row in &report.ablation {
        println!("{:<12} auc {:.4}", row.name, row.auc);
    }
    let loc = &report.localization;
    println!(
        "planted scene: student auc {:?}, tiou {:?}, label-gated tiou {:.3}, frames with iou>=0.5 {:.2}",
        loc.auc, loc.tiou, loc.tiou_label_gated, loc.frames_iou_at_least_half
    );
    println!("report written to {}", out.join("report.json").display());
    Ok(())
}
