//! Two-sample t-test power and TOST equivalence power across sample sizes.
//!
//! ```text
//! cargo run --release --example power_curve -- 0.5
//! ```

use esslab::numerics::{compute_power, compute_tost_power, PowerQuery, TostQuery};

fn main() -> Result<(), esslab::Error> {
    let d: f64 = std::env::args().nth(1).map_or(Ok(0.5), |a| a.parse()).expect("effect size");
    println!("{:>5} {:>10} {:>10}", "s", "power", "tost");
    for s in [4, 10, 20, 40, 64, 100, 200, 400] {
        let power = compute_power(&PowerQuery::two_sample(d, s, 0.05))?;
        let tost = compute_tost_power(&TostQuery { delta: d, s, alpha_cet: 0.05 })?;
        println!("{s:>5} {power:>10.4} {tost:>10.4}");
    }
    Ok(())
}
