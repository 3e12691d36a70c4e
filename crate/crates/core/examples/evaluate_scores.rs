//! Frame AUC and temporal IoU on hand-made predictions.

use evadkit::evaluation::{auc, frame_iou, tiou, BBox, BoxSet, LabeledScores};

fn main() -> evadkit::Result<()> {
    let labels = vec![0, 0, 1, 1, 1, 0];
    let scores = vec![0.1, 0.4, 0.35, 0.8, 0.9, 0.2];
    let data = LabeledScores::new(scores, labels.clone())?;
    println!("auc = {:.4}", auc(&data)?);

    let mut gt = BoxSet::default();
    let mut pred = BoxSet::default();
    for frame in 2..5 {
        gt.push(frame, BBox::new(10, 10, 19, 19));
    }
    pred.push(2, BBox::new(12, 10, 21, 19));
    pred.push(3, BBox::new(10, 10, 19, 19));
    // frame 4 missed entirely
    let anomalous: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    println!(
        "iou on frame 2 = {:.4}",
        frame_iou(&pred.get(2)[0], &gt.get(2)[0])
    );
    println!("tiou = {:.4}", tiou(&pred, &gt, &anomalous)?);
    Ok(())
}
