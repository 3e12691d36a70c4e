//! Compares adaptive event budgets with plain fixed windows.

use evadkit::framing::{event_budget, make_windows, rasterize, BinningConfig};
use evadkit::pipeline::benchmark::planted_rectangle_scene;
use evadkit::simulator::{frames_to_events, render_scene, SimConfig};

fn main() -> evadkit::Result<()> {
    let scene = planted_rectangle_scene(3, true);
    let rendered = render_scene(&scene)?;
    let stream = frames_to_events(&rendered.frames, scene.fps, &SimConfig::default(), 3)?;

    let adaptive = BinningConfig::default();
    let windows = make_windows(&stream, &adaptive)?;
    let budgeted = rasterize(&stream, &windows, &adaptive)?;
    let full = rasterize(
        &stream,
        &windows,
        &BinningConfig {
            adaptive: false,
            ..adaptive.clone()
        },
    )?;

    println!("mean {:.1}, median {:.1} events per window", budgeted.mean_raw, budgeted.median_raw);
    println!("{:>5} {:>10} {:>7} {:>7} {:>9}", "frame", "center_us", "raw", "budget", "rendered");
    for (k, (a, f)) in budgeted.frames.iter().zip(&full.frames).enumerate() {
        let budget = event_budget(a.raw_count, budgeted.mean_raw, budgeted.median_raw, &adaptive);
        assert_eq!(f.rendered_count, f.raw_count.min(adaptive.event_cap));
        println!(
            "{k:>5} {:>10} {:>7} {:>7} {:>9}",
            a.center_us, a.raw_count, budget.events, a.rendered_count
        );
    }
    Ok(())
}
