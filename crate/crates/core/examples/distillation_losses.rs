//! Binary and multi-class distillation losses, and the effect of logit
//! standardization on a teacher with a different logit scale.

use evadkit::distillation::{kd_binary, kd_multiclass, kd_total, KdConfig, LogitMatrix, ScoreSeries};
use ndarray::array;

fn main() -> evadkit::Result<()> {
    let config = KdConfig::default();
    let student_scores = ScoreSeries::new(vec![0.2, 0.7, 0.9])?;
    let teacher_scores = ScoreSeries::new(vec![0.1, 0.8, 0.95])?;
    let bin = kd_binary(&student_scores, &teacher_scores)?;
    println!("binary loss {:.6}, gradient {:?}", bin.loss, bin.grad);

    let student = LogitMatrix::new(array![[1.0, 0.0, -1.0], [0.5, 1.5, 2.0]])?;
    let teacher = LogitMatrix::new(array![[0.0, 2.0, 1.0], [3.0, 0.0, 0.5]])?;
    let multi = kd_multiclass(&student, &teacher, &config)?;
    println!("multi-class loss {:.6}", multi.loss);

    // Scaling and shifting the teacher's logits leaves the loss unchanged.
    let loud = LogitMatrix::new(teacher.view().mapv(|v| 10.0 * v + 3.0))?;
    let same = kd_multiclass(&student, &loud, &config)?;
    println!("with a rescaled teacher  {:.6}", same.loss);

    println!(
        "weighted total (alpha {}, beta {}): {:.6}",
        config.alpha,
        config.beta,
        kd_total(bin.loss, multi.loss, &config)
    );
    Ok(())
}
