//! How conditional equivalence testing changes incentives: with a TOST
//! stage on non-significant results, null findings become publishable and
//! the equilibrium moves to well-powered designs even at low base rates.
//!
//! ```text
//! cargo run --release --example equivalence_testing
//! ```

use esslab::model::{exact_two_stage_rates, sweep_b, total_publishable_rate_cet, CetParams, SampleGrid};

fn main() -> Result<(), esslab::Error> {
    let b_grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let grid = SampleGrid::default();
    let plain = sweep_b(0.5, 200.0, 0.05, None, &b_grid, grid)?;
    println!("{:>4} | {:>16} | {:>16} | {:>16}", "b", "NHST", "CET delta=0.5d", "CET delta=d");
    let half = sweep_b(0.5, 200.0, 0.05, Some(CetParams::new(0.5)), &b_grid, grid)?;
    let full = sweep_b(0.5, 200.0, 0.05, Some(CetParams::new(1.0)), &b_grid, grid)?;
    for ((p, h), f) in plain.iter().zip(&half).zip(&full) {
        let cell = |e: &esslab::EquilibriumResult| format!("{:>4} ppv {:.3}", e.ess, e.ppv_at_ess);
        println!("{:>4.1} | {:>16} | {:>16} | {:>16}", p.0, cell(&p.1), cell(&h.1), cell(&f.1));
    }

    // the publishable rate with independence-corrected second stage versus
    // the exact two-stage probability at one design
    let cet = CetParams::new(1.0);
    let corrected = total_publishable_rate_cet(0.5, 0.5, 70, 0.05, cet)?;
    let exact = exact_two_stage_rates(0.5, 0.5, 70, 0.05, Some(cet))?;
    println!("\nb = d = 0.5, s = 70: corrected rate {corrected:.4}, exact two-stage rate {:.4}", exact.total());
    Ok(())
}
