use esslab::model::{equilibrium, CetParams, ModelParams, SampleGrid};
use esslab::scenarios::{recipes, run_scenario, sample, DistributionSpec, ScenarioSpec};
use proptest::prelude::*;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn point_mass(b: f64, d: f64, inc: f64) -> ScenarioSpec {
    let c = |value| DistributionSpec::Constant { value };
    let mut spec = ScenarioSpec::new(c(b), c(d), c(inc), 1);
    spec.draws = 5;
    spec
}

#[test]
fn uniform_sample_mean() {
    let v = sample(&DistributionSpec::uniform(0.0, 1.0), 100_000, 1).unwrap();
    assert!((mean(&v) - 0.5).abs() < 0.005);
    assert!(v.iter().all(|x| (0.0..1.0).contains(x)));
}

#[test]
fn gamma_mean_before_clipping() {
    let unclipped = DistributionSpec::Gamma { k: 3.5, theta: 0.2, clip_lo: None, clip_hi: None };
    let v = sample(&unclipped, 200_000, 2).unwrap();
    assert!((mean(&v) - 0.7).abs() < 0.005, "{}", mean(&v));
}

#[test]
fn clipping_resamples_instead_of_piling_up_at_bounds() {
    let v = sample(&recipes::d_empirical(), 50_000, 3).unwrap();
    assert!(v.iter().all(|x| (0.1..=1.5).contains(x)));
    let at_bounds = v.iter().filter(|&&x| x == 0.1 || x == 1.5).count();
    assert_eq!(at_bounds, 0);
}

#[test]
fn scaled_beta_mean() {
    let v = sample(&recipes::if_high(), 100_000, 4).unwrap();
    let want = 1000.0 * 10.0 / 11.1;
    assert!((mean(&v) - want).abs() < 3.0, "{}", mean(&v));
}

#[test]
fn low_bimodal_mixture_is_mostly_low() {
    let v = sample(&recipes::b_low_bimodal(), 100_000, 5).unwrap();
    let low = v.iter().filter(|&&x| x < 0.5).count() as f64 / v.len() as f64;
    assert!((low - 0.9).abs() < 0.01, "{low}");
    let mid = v.iter().filter(|&&x| (0.4..0.6).contains(&x)).count() as f64 / v.len() as f64;
    assert!(mid < 0.01);
}

#[test]
fn samples_are_reproducible() {
    let a = sample(&recipes::b_bimodal(), 1000, 6).unwrap();
    assert_eq!(a, sample(&recipes::b_bimodal(), 1000, 6).unwrap());
    assert_ne!(a, sample(&recipes::b_bimodal(), 1000, 7).unwrap());
}

#[test]
fn point_mass_scenario_equals_equilibrium() {
    for cet in [None, Some(CetParams::new(1.0))] {
        let mut spec = point_mass(0.5, 0.5, 200.0);
        spec.cet = cet;
        let result = run_scenario(&spec).unwrap();
        let mut p = ModelParams::new(0.5, 0.5, 200.0);
        p.cet = cet;
        let eq = equilibrium(&p, SampleGrid::default()).unwrap();
        for r in &result.draws {
            assert_eq!((r.b, r.d, r.income_factor), (0.5, 0.5, 200.0));
            assert_eq!(r.ess, eq.ess);
            assert_eq!(r.power_at_ess, eq.power_at_ess);
            assert_eq!(r.power_cet_at_ess, eq.power_cet_at_ess);
            assert_eq!(r.tpr_at_ess, eq.tpr_at_ess);
            assert_eq!(r.ppv_at_ess, eq.ppv_at_ess);
            assert_eq!(r.weight, eq.tpr_at_ess / f64::from(eq.ess));
        }
        assert!((result.mean_ppv - eq.ppv_at_ess).abs() < 1e-15);
        assert!((result.mean_power - eq.power_at_ess).abs() < 1e-15);
    }
}

#[test]
fn uniform_base_rates_give_bimodal_power() {
    let spec = ScenarioSpec::new(recipes::b_uniform(), recipes::d_empirical(), recipes::if_uniform(), 11);
    let r = run_scenario(&spec).unwrap();
    let h = &r.power_histogram;
    assert!((h.mass.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let trough = h.mass_between(0.4, 0.8);
    assert!(trough < h.mass_between(0.0, 0.3));
    assert!(trough < h.mass_between(0.9, 1.0));
}

#[test]
fn draws_respect_supports_and_weights() {
    let spec = ScenarioSpec::new(recipes::b_high(), recipes::d_empirical(), recipes::if_low(), 12);
    let r = run_scenario(&spec).unwrap();
    assert_eq!(r.draws.len(), 1000);
    for d in &r.draws {
        assert!((0.0..=1.0).contains(&d.b));
        assert!((0.1..=1.5).contains(&d.d));
        assert!(d.income_factor > 0.0 && d.income_factor <= 1000.0);
        assert_eq!(d.weight, d.tpr_at_ess / f64::from(d.ess));
    }
    assert!(r.weighting_tv_distance >= 0.0 && r.weighting_tv_distance <= 1.0);
}

#[test]
fn scenario_is_reproducible() {
    let mut spec = ScenarioSpec::new(recipes::b_low(), recipes::d_empirical(), recipes::if_medium(), 13);
    spec.draws = 200;
    assert_eq!(run_scenario(&spec).unwrap(), run_scenario(&spec).unwrap());
}

#[test]
fn config_round_trips_through_json() {
    let spec = ScenarioSpec::new(recipes::b_low_bimodal(), recipes::d_empirical(), recipes::if_medium(), 14)
        .with_cet(CetParams::new(1.0))
        .with_name("low-bimodal");
    let text = serde_json::to_string(&spec).unwrap();
    assert_eq!(ScenarioSpec::from_json(&text).unwrap(), spec);
    assert!(spec.notes().iter().any(|n| n.contains("beta(10, 10)")));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn draws_stay_in_support(seed in any::<u64>(), lo in -5.0f64..5.0, width in 0.01f64..10.0) {
        let dist = DistributionSpec::mixture([
            (0.3, DistributionSpec::uniform(lo, lo + width)),
            (0.7, DistributionSpec::gamma_clipped(2.0, 0.5, 0.2, 3.0)),
        ]);
        let (a, b) = dist.support();
        let v = sample(&dist, 500, seed).unwrap();
        prop_assert!(v.iter().all(|x| *x >= a && *x <= b));
    }
}
