//! Shows how the attention kernel spreads weight over time and how event
//! density widens a token's reach.

use evadkit::attention::{apply_eda, eda_weights, normalize_timestamps, EdaConfig};
use ndarray::Array2;

fn main() -> evadkit::Result<()> {
    let timestamps = [0u64, 100_000, 200_000, 300_000, 400_000];
    let t = normalize_timestamps(&timestamps);
    let config = EdaConfig { lambda: 4.0, ..EdaConfig::default() };

    for (label, d) in [
        ("uniform density", vec![0.2; 5]),
        ("dense middle frame", vec![0.05, 0.05, 0.8, 0.05, 0.05]),
    ] {
        let w = eda_weights(&t, &d, &config)?;
        println!("{label}: weights of the first token");
        let row: Vec<String> = w.0.row(0).iter().map(|v| format!("{v:.3}")).collect();
        println!("  [{}]", row.join(", "));
    }

    // Smooth a spike in a one-dimensional feature track.
    let x = Array2::from_shape_vec((5, 1), vec![0.0, 0.0, 1.0, 0.0, 0.0]).expect("5x1");
    let w = eda_weights(&t, &[0.2; 5], &config)?;
    let y = apply_eda(x.view(), &w, false)?;
    println!("smoothed spike: {:?}", y.column(0).iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    Ok(())
}
