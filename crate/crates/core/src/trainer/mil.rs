use crate::distillation::LossGrad;

/// Clamp for the video score inside the log.
const BCE_CLAMP: f64 = 1e-12;

/// `max(1, ceil(T * fraction))`.
pub fn top_k(t: usize, fraction: f64) -> usize {
    ((t as f64 * fraction).ceil() as usize).clamp(1, t.max(1))
}

/// Indices of the `k` highest scores; ties go to the lower index.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Per-frame weights of the top-k mean. Frames tied with the k-th largest
/// score share the remaining weight evenly, so an all-equal series spreads
/// the gradient over every frame instead of picking one arbitrarily.
pub fn top_k_weights(scores: &[f64], k: usize) -> Vec<f64> {
    let mut w = vec![0.0; scores.len()];
    if scores.is_empty() {
        return w;
    }
    let kth = scores[*top_k_indices(scores, k).last().expect("k >= 1")];
    let above = scores.iter().filter(|&&s| s > kth).count();
    let tied = scores.iter().filter(|&&s| s == kth).count();
    let share = (k - above) as f64 / tied as f64 / k as f64;
    for (wi, &s) in w.iter_mut().zip(scores) {
        if s > kth {
            *wi = 1.0 / k as f64;
        } else if s == kth {
            *wi = share;
        }
    }
    w
}

/// Binary cross-entropy of the top-k mean score against the video label,
/// with its gradient w.r.t. every frame score.
pub fn mil_loss(scores: &[f64], label: u8, fraction: f64) -> LossGrad<Vec<f64>> {
    let k = top_k(scores.len(), fraction);
    let weights = top_k_weights(scores, k);
    let v: f64 = weights.iter().zip(scores).map(|(w, s)| w * s).sum();
    let vc = v.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    let y = f64::from(label.min(1));
    let loss = -(y * vc.ln() + (1.0 - y) * (1.0 - vc).ln());
    let dv = if v == vc { -y / vc + (1.0 - y) / (1.0 - vc) } else { 0.0 };
    LossGrad {
        loss,
        grad: weights.into_iter().map(|w| w * dv).collect(),
    }
}
