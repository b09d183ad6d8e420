//! Profit curve and equilibrium sample size for a single niche.
//!
//! ```text
//! cargo run --release --example equilibrium -- 0.5 0.5 200
//! ```

use esslab::model::{profit_curve, ModelParams, SampleGrid};

fn main() -> Result<(), esslab::Error> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("number")).collect();
    let (b, d, income) = match args[..] {
        [b, d, i] => (b, d, i),
        _ => (0.5, 0.5, 200.0),
    };
    let p = ModelParams::new(b, d, income);
    let curve = profit_curve(&p, SampleGrid::default())?;
    let eq = curve.equilibrium();

    println!("b = {b}, d = {d}, IF = {income}");
    for i in (0..curve.len()).step_by(25) {
        println!("  s {:>4}  power {:.3}  profit {:>8.2}", curve.s_grid[i], curve.power[i], curve.profit[i]);
    }
    println!("ESS {} (power {:.3}, PPV {:.3}, profit {:.2})", eq.ess, eq.power_at_ess, eq.ppv_at_ess, eq.profit_at_ess);
    println!("SSS {}", eq.sss);
    // a fixed grant or fee shifts every profit value but not the optimum
    assert_eq!(curve.with_overhead(-50.0).equilibrium().ess, eq.ess);
    Ok(())
}
