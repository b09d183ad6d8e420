//! Analytic power and publication rates checked against simulated studies.
//!
//! ```text
//! cargo run --release --example monte_carlo -- 200000
//! ```

use esslab::model::{exact_two_stage_rates, total_publishable_rate, CetParams, ModelParams};
use esslab::montecarlo::{simulate_pipeline, verify, SimSpec, VerifyLattice};

fn main() -> Result<(), esslab::Error> {
    let replicates: u64 = std::env::args().nth(1).map_or(200_000, |a| a.parse().expect("replicate count"));

    let report = verify(&VerifyLattice { replicates, tost_deltas: vec![0.5], ..VerifyLattice::default() })?;
    for p in &report.points {
        println!(
            "{:?} effect {:.1} s {:>3}: analytic {:.4} simulated {:.4} +- {:.4} {}",
            p.kind,
            p.effect,
            p.s,
            p.analytic,
            p.estimate,
            p.stderr,
            if p.pass { "" } else { "<-" }
        );
    }
    println!("{} of {} points outside 3 se; passed: {}", report.failures, report.points.len(), report.passed);

    let cet = CetParams::new(1.0);
    let spec =
        SimSpec::new(ModelParams::new(0.3, 0.5, 200.0).with_cet(cet), 1).at_sample_size(64).with_replicates(replicates);
    let sim = simulate_pipeline(&spec)?;
    let exact = exact_two_stage_rates(0.3, 0.5, 64, 0.05, Some(cet))?;
    println!("\npipeline at b 0.3, d 0.5, s 64");
    println!(
        "  significant: simulated {:.4}, analytic {:.4}",
        sim.tpr.rate,
        total_publishable_rate(0.3, 0.5, 64, 0.05)?
    );
    println!("  published with CET: simulated {:.4}, exact {:.4}", sim.tpr_cet.unwrap().rate, exact.total());
    Ok(())
}
