//! Equilibrium power as the base rate of true hypotheses rises from 0 to 1:
//! a flat stretch at the minimal sample size, a steep rise, then saturation.
//!
//! ```text
//! cargo run --release --example base_rate_sweep
//! ```

use esslab::model::{sweep_b, SampleGrid};

fn main() -> Result<(), esslab::Error> {
    let b_grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    for (d, income) in [(0.5, 200.0), (1.0, 500.0)] {
        println!("d = {d}, IF = {income}");
        for (b, eq) in sweep_b(d, income, 0.05, None, &b_grid, SampleGrid::default())? {
            let bar = "#".repeat((eq.power_at_ess * 40.0).round() as usize);
            println!("  b {b:.2}  ESS {:>4}  power {:.3} {bar}", eq.ess, eq.power_at_ess);
        }
    }
    Ok(())
}
