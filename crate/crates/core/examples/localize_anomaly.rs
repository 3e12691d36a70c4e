//! Localizes the speeding rectangle of the planted scene. Frames are gated
//! by ground-truth labels so only the spatial step is measured.

use evadkit::evaluation::{per_frame_iou, tiou};
use evadkit::framing::BinningConfig;
use evadkit::localization::{localize_video, LocalizeConfig};
use evadkit::pipeline::benchmark::{planted_rectangle_scene, simulate_and_frame};
use evadkit::simulator::SimConfig;

fn main() -> evadkit::Result<()> {
    let seed = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed must be an integer"));
    let scene = planted_rectangle_scene(seed, true);
    let framed = simulate_and_frame(&scene, &SimConfig::default(), &BinningConfig::default())?;

    let scores: Vec<f64> = framed.labels.iter().map(|&l| f64::from(l)).collect();
    let pred = localize_video(&framed.full_frames, &scores, &LocalizeConfig::default())?;
    let anomalous: Vec<usize> = (0..scores.len()).filter(|&i| framed.labels[i] == 1).collect();

    let ious = per_frame_iou(&pred, &framed.boxes, &anomalous)?;
    for (&k, iou) in anomalous.iter().zip(&ious) {
        let boxes: Vec<String> = pred
            .get(k)
            .iter()
            .map(|b| format!("[{},{} .. {},{}]", b.x_min, b.y_min, b.x_max, b.y_max))
            .collect();
        let truth = &framed.boxes.get(k)[0];
        println!(
            "frame {k:>2}: truth [{},{} .. {},{}], predicted {}, iou {iou:.3}",
            truth.x_min,
            truth.y_min,
            truth.x_max,
            truth.y_max,
            boxes.join(" ")
        );
    }
    println!("tiou = {:.4}", tiou(&pred, &framed.boxes, &anomalous)?);
    Ok(())
}
