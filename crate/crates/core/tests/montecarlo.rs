use esslab::model::{
    exact_two_stage_rates, total_publishable_rate, total_publishable_rate_cet, CetParams, ModelParams,
};
use esslab::montecarlo::{simulate_pipeline, simulate_power, verify, SimEstimate, SimSpec, VerifyLattice};
use esslab::numerics::{compute_power, Design, PowerQuery};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn null_rejection_rate_is_alpha() {
    let est = simulate_power(0.0, 50, 0.05, Design::TwoSampleUnpaired, 200_000, 3).unwrap();
    assert!(est.agrees_with(0.05, 3.0), "{est:?}");
    assert_eq!(est.replicates, 200_000);
}

#[test]
fn saturated_power_is_one() {
    let est = simulate_power(2.0, 100, 0.05, Design::TwoSampleUnpaired, 20_000, 4).unwrap();
    assert_eq!(est.rate, 1.0);
    assert_eq!(est.stderr, 0.0);
}

#[test]
fn one_sample_simulation_matches_analytic() {
    let analytic = compute_power(&PowerQuery { d: 0.4, s: 30, alpha: 0.05, design: Design::OneSample }).unwrap();
    let est = simulate_power(0.4, 30, 0.05, Design::OneSample, 200_000, 5).unwrap();
    assert!(est.agrees_with(analytic, 3.0), "{analytic} vs {est:?}");
}

#[test]
fn estimates_are_deterministic_for_a_seed() {
    let a = simulate_power(0.5, 20, 0.05, Design::TwoSampleUnpaired, 50_000, 9).unwrap();
    let b = simulate_power(0.5, 20, 0.05, Design::TwoSampleUnpaired, 50_000, 9).unwrap();
    let c = simulate_power(0.5, 20, 0.05, Design::TwoSampleUnpaired, 50_000, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.rate, c.rate);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let spec = SimSpec::new(ModelParams::new(0.4, 0.6, 300.0).with_cet(CetParams::new(1.0)), 77)
        .at_sample_size(24)
        .with_replicates(30_001);
    let one = in_pool(1, || simulate_pipeline(&spec).unwrap());
    let three = in_pool(3, || simulate_pipeline(&spec).unwrap());
    let eight = in_pool(8, || simulate_pipeline(&spec).unwrap());
    assert_eq!(one, three);
    assert_eq!(one, eight);
}

#[test]
fn stderr_follows_the_binomial_formula() {
    let e = SimEstimate::from_counts(123, 1000);
    assert_eq!(e.stderr, (0.123f64 * 0.877 / 1000.0).sqrt());
}

#[test]
fn pipeline_without_true_effects_publishes_at_alpha() {
    let spec = SimSpec::new(ModelParams::new(0.0, 0.5, 200.0), 1).at_sample_size(30).with_replicates(200_000);
    let est = simulate_pipeline(&spec).unwrap();
    assert!(est.tpr.agrees_with(0.05, 3.0), "{:?}", est.tpr);
    assert_eq!(est.ppv.rate, 0.0);
    assert!(est.tpr_cet.is_none());
}

#[test]
fn pipeline_matches_publishable_rate() {
    let spec = SimSpec::new(ModelParams::new(0.5, 0.5, 200.0), 2).at_sample_size(64).with_replicates(200_000);
    let est = simulate_pipeline(&spec).unwrap();
    let analytic = total_publishable_rate(0.5, 0.5, 64, 0.05).unwrap();
    assert!((analytic - 0.425).abs() < 0.003);
    assert!(est.tpr.agrees_with(analytic, 3.0), "{analytic} vs {:?}", est.tpr);
}

#[test]
fn pipeline_defaults_to_the_equilibrium_size() {
    let p = ModelParams::new(0.5, 0.5, 200.0);
    let est = simulate_pipeline(&SimSpec::new(p, 3).with_replicates(10_000)).unwrap();
    assert_eq!(est.s, 44);
}

#[test]
fn equivalence_stage_only_adds_publications() {
    let spec = SimSpec::new(ModelParams::new(0.2, 0.5, 200.0).with_cet(CetParams::new(1.0)), 4)
        .at_sample_size(70)
        .with_replicates(100_000);
    let est = simulate_pipeline(&spec).unwrap();
    assert!(est.tpr_cet.unwrap().rate >= est.tpr.rate);
    assert_eq!(est.double_counted, 0);
}

#[test]
fn pipeline_matches_exact_two_stage_rates() {
    for (i, (b, d, s)) in [(0.5, 0.5, 70), (0.1, 0.3, 20), (0.3, 0.8, 10), (0.05, 0.2, 400)].into_iter().enumerate() {
        let cet = CetParams::new(1.0);
        let spec = SimSpec::new(ModelParams::new(b, d, 200.0).with_cet(cet), 20 + i as u64)
            .at_sample_size(s)
            .with_replicates(200_000);
        let est = simulate_pipeline(&spec).unwrap();
        let exact = exact_two_stage_rates(b, d, s, 0.05, Some(cet)).unwrap();
        let tpr_cet = est.tpr_cet.unwrap();
        assert!(tpr_cet.agrees_with(exact.total(), 3.0), "b {b} d {d} s {s}: {} vs {tpr_cet:?}", exact.total());
        assert!(est.ppv_cet.unwrap().agrees_with(exact.ppv(), 3.0));
    }
}

#[test]
fn independence_corrected_rate_departs_from_the_two_stage_procedure() {
    // NHST and TOST share one t statistic, so the product form misstates
    // the second-stage rate by far more than sampling error
    let cet = CetParams::new(1.0);
    let spec =
        SimSpec::new(ModelParams::new(0.5, 0.5, 200.0).with_cet(cet), 6).at_sample_size(70).with_replicates(200_000);
    let sim = simulate_pipeline(&spec).unwrap().tpr_cet.unwrap();
    let product = total_publishable_rate_cet(0.5, 0.5, 70, 0.05, cet).unwrap();
    let exact = exact_two_stage_rates(0.5, 0.5, 70, 0.05, Some(cet)).unwrap().total();
    assert!((sim.rate - exact).abs() < 0.005);
    assert!((sim.rate - product).abs() > 0.02, "{} vs {product}", sim.rate);
}

#[test]
fn verify_reports_every_point() {
    let lattice = VerifyLattice {
        d_values: vec![0.0, 0.5],
        s_values: vec![10, 40],
        tost_deltas: vec![0.5],
        replicates: 20_000,
        seed: 8,
        ..VerifyLattice::default()
    };
    let report = verify(&lattice).unwrap();
    assert_eq!(report.points.len(), 6);
    assert!(report.passed);
    assert!(verify(&VerifyLattice { replicates: 1000, ..lattice }).is_err());
}
