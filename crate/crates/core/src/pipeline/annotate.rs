use crate::evaluation::BoxSet;
use crate::framing::FrameSequence;
use crate::simulator::frame_time_us;

/// Event-frame labels and boxes from source-frame annotations.
///
/// An event frame takes the label and the boxes of the source frame at its
/// center time.
pub fn project_annotations(seq: &FrameSequence, labels: &[u8], boxes: &BoxSet, fps: f64) -> (Vec<u8>, BoxSet) {
    let times: Vec<u64> = (0..labels.len()).map(|f| frame_time_us(f, fps)).collect();
    let mut out_labels = Vec::with_capacity(seq.len());
    let mut out_boxes = BoxSet::default();
    for (k, frame) in seq.frames.iter().enumerate() {
        let center = times.partition_point(|&t| t <= frame.center_us).saturating_sub(1);
        let label = labels.get(center).copied().unwrap_or(0);
        out_labels.push(label);
        if label == 1 {
            for &b in boxes.get(center) {
                out_boxes.push(k, b);
            }
        }
    }
    (out_labels, out_boxes)
}
