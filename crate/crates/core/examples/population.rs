//! Emergent power distribution and mean PPV over a population of niches,
//! read from a scenario config.
//!
//! ```text
//! cargo run --release --example population -- crates/core/examples/configs/uniform_b.json
//! ```

use esslab::output::histogram_svg;
use esslab::scenarios::{run_scenario, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/uniform_b.json").into());
    let spec = ScenarioSpec::from_json(&std::fs::read_to_string(&path)?)?;
    for note in spec.notes() {
        println!("note: {note}");
    }
    let result = run_scenario(&spec)?;

    println!(
        "{} draws; weighted mean power {:.3}, mean PPV {:.3}",
        result.draws.len(),
        result.mean_power,
        result.mean_ppv
    );
    let h = &result.power_histogram;
    for (lo, m) in h.edges().iter().zip(&h.mass) {
        println!("  {lo:.2}  {:<50} {m:.3}", "#".repeat((m * 100.0).round() as usize));
    }
    println!("weighted vs unweighted total variation {:.3}", result.weighting_tv_distance);

    let svg = std::env::temp_dir().join("esslab_power_histogram.svg");
    std::fs::write(&svg, histogram_svg(h, "power at ESS", "power"))?;
    println!("histogram written to {}", svg.display());
    Ok(())
}
