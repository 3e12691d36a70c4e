//! Trains a teacher on clean features, then a student on noisy ones with
//! and without distillation, on a reduced benchmark.

use evadkit::pipeline::benchmark::{build_benchmark, train_student, train_teacher, ABLATION};
use evadkit::pipeline::PipelineConfig;

fn main() -> evadkit::Result<()> {
    let mut config = PipelineConfig::default();
    config.benchmark.train_videos = 10;
    config.benchmark.test_videos = 4;
    let bench = build_benchmark(&config)?;
    let (teacher, teacher_auc) = train_teacher(&bench, &config)?;
    println!("teacher test auc {teacher_auc:.4}");

    for (name, variant) in ABLATION {
        let outcome = train_student(&bench, &teacher, variant, &config)?;
        let first = outcome.log.first().expect("at least one epoch");
        let last = outcome.log.last().expect("at least one epoch");
        println!(
            "{name:<12} mil loss {:.4} -> {:.4}, test auc {:.4}",
            first.loss_mil, last.loss_mil, last.auc
        );
    }
    Ok(())
}
