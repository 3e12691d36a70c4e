//! Splits frames into a dense nucleus and a sparse tail, then draws a
//! density-aware sample and compares it with a uniform one.

use evadkit::sampling::{eds_sample, nucleus_partition, uniform_sample, DensityProfile, EdsConfig, Provenance};

fn main() -> evadkit::Result<()> {
    // A quiet video with one burst of activity around frames 12..16.
    let counts: Vec<u64> = (0..40).map(|i| if (12..16).contains(&i) { 900 } else { 40 + (i % 7) * 10 }).collect();
    let profile = DensityProfile::from_counts(&counts, true)?;
    let config = EdsConfig {
        tau: 0.5,
        sample_count: 10,
        ..EdsConfig::default()
    };

    let part = nucleus_partition(&profile, config.tau);
    println!("nucleus: {} frames, tail: {} frames", part.high.len(), part.low.len());

    let set = eds_sample(&profile, &config)?;
    println!(
        "eds picks {:?} ({} high, {} low)",
        set.indices,
        set.count(Provenance::High),
        set.count(Provenance::Low)
    );
    println!("uniform picks {:?}", uniform_sample(counts.len(), config.sample_count, config.seed));

    let burst = |idx: &[usize]| idx.iter().filter(|i| (12..16).contains(*i)).count();
    println!(
        "burst frames covered: eds {}, uniform {}",
        burst(&set.indices),
        burst(&uniform_sample(counts.len(), config.sample_count, config.seed))
    );
    Ok(())
}
