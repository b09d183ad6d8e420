//! Monte Carlo oracle: simulates actual studies on normal data and counts
//! test outcomes, giving empirical counterparts of every analytic rate.
//!
//! Replicate `i` draws all of its randomness from substream `(seed, i)`, and
//! tallies are integer counts, so results are bit-identical for any number
//! of worker threads.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{equilibrium, ModelParams, SampleGrid};
use crate::numerics::{central_t_quantile, Design, PreparedTTest, PreparedTost};
use crate::rng::{derive_seed, PolarNormal, Substreams};

pub const DEFAULT_REPLICATES: u64 = 1_000_000;
/// Smallest replicate count accepted for verification runs.
pub const MIN_REPLICATES: u64 = 10_000;
/// Absolute tolerance for floating-point error in analytic rates.
pub const ROUNDING_SLACK: f64 = 1e-12;
/// Replicates per parallel work unit.
const CHUNK: u64 = 4096;

/// An empirical rate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimEstimate {
    pub rate: f64,
    pub stderr: f64,
    pub replicates: u64,
}

impl SimEstimate {
    pub fn from_counts(hits: u64, replicates: u64) -> Self {
        if replicates == 0 {
            return Self { rate: f64::NAN, stderr: f64::NAN, replicates };
        }
        let n = replicates as f64;
        let rate = hits as f64 / n;
        Self { rate, stderr: (rate * (1.0 - rate) / n).sqrt(), replicates }
    }

    /// Whether `analytic` lies within `k` standard errors of the estimate.
    ///
    /// The standard error is the larger of the empirical one and the one
    /// implied by `analytic`; the latter keeps the check meaningful when the
    /// empirical rate is exactly 0 or 1. Differences below [`ROUNDING_SLACK`]
    /// count as agreement.
    pub fn agrees_with(&self, analytic: f64, k: f64) -> bool {
        let n = self.replicates as f64;
        let a = analytic.clamp(0.0, 1.0);
        let se_model = (a * (1.0 - a) / n).sqrt();
        (self.rate - analytic).abs() <= k * self.stderr.max(se_model) + ROUNDING_SLACK
    }
}

/// What to simulate with [`simulate_pipeline`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSpec {
    pub params: ModelParams,
    /// Per-group sample size; `None` simulates at the niche's ESS.
    pub s: Option<u32>,
    pub grid: SampleGrid,
    pub replicates: u64,
    pub seed: u64,
}

impl SimSpec {
    pub fn new(params: ModelParams, seed: u64) -> Self {
        Self { params, s: None, grid: SampleGrid::default(), replicates: DEFAULT_REPLICATES, seed }
    }

    pub fn at_sample_size(mut self, s: u32) -> Self {
        self.s = Some(s);
        self
    }

    pub fn with_replicates(mut self, replicates: u64) -> Self {
        self.replicates = replicates;
        self
    }
}

/// Summary statistics of one simulated study.
struct Study {
    /// Mean difference (treatment − control), or the mean for one sample.
    diff: f64,
    /// Pooled (or single-sample) standard deviation.
    sd: f64,
    /// Standard error multiplier: `√(2/s)` or `√(1/s)`.
    se_unit: f64,
}

impl Study {
    fn t(&self) -> f64 {
        self.diff / (self.sd * self.se_unit)
    }
}

fn mean_and_ss(rng: &mut ChaCha8Rng, normal: &mut PolarNormal, s: u32, shift: f64) -> (f64, f64) {
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 1..=s {
        let x = normal.sample(rng) + shift;
        let delta = x - mean;
        mean += delta / f64::from(k);
        m2 += delta * (x - mean);
    }
    (mean, m2)
}

fn run_study(rng: &mut ChaCha8Rng, s: u32, effect: f64, design: Design) -> Study {
    let mut normal = PolarNormal::new();
    match design {
        Design::TwoSampleUnpaired => {
            let (m0, ss0) = mean_and_ss(rng, &mut normal, s, 0.0);
            let (m1, ss1) = mean_and_ss(rng, &mut normal, s, effect);
            let df = 2.0 * f64::from(s) - 2.0;
            Study { diff: m1 - m0, sd: ((ss0 + ss1) / df).sqrt(), se_unit: (2.0 / f64::from(s)).sqrt() }
        }
        Design::OneSample => {
            let (m, ss) = mean_and_ss(rng, &mut normal, s, effect);
            Study { diff: m, sd: (ss / (f64::from(s) - 1.0)).sqrt(), se_unit: (1.0 / f64::from(s)).sqrt() }
        }
    }
}

/// Sum `tally(rng)` over replicates in parallel, one substream per replicate.
fn tally<const N: usize, F>(replicates: u64, seed: u64, f: F) -> [u64; N]
where
    F: Fn(&mut ChaCha8Rng) -> [u64; N] + Sync,
{
    let streams = Substreams::new(seed);
    let chunks = replicates.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = [0u64; N];
            for i in c * CHUNK..((c + 1) * CHUNK).min(replicates) {
                let mut rng = streams.stream(i);
                let hit = f(&mut rng);
                for (a, h) in acc.iter_mut().zip(hit) {
                    *a += h;
                }
            }
            acc
        })
        .reduce(
            || [0u64; N],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

fn check_common(s: u32, alpha: f64, replicates: u64) -> Result<()> {
    if s < 2 {
        return Err(Error::param("s", f64::from(s), "s >= 2"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", alpha, "0 < alpha < 1"));
    }
    if replicates == 0 {
        return Err(Error::param("replicates", 0.0, "replicates >= 1"));
    }
    Ok(())
}

/// Empirical rejection rate of the two-sided t-test at level `alpha` when
/// the groups differ by `d` standard deviations.
pub fn simulate_power(d: f64, s: u32, alpha: f64, design: Design, replicates: u64, seed: u64) -> Result<SimEstimate> {
    check_common(s, alpha, replicates)?;
    if !d.is_finite() {
        return Err(Error::param("d", d, "finite d"));
    }
    let test = PreparedTTest::new(design, s, alpha)?;
    let [hits] = tally(replicates, seed, |rng| {
        let t = run_study(rng, s, d, design).t();
        [u64::from(t.abs() > test.critical)]
    });
    Ok(SimEstimate::from_counts(hits, replicates))
}

/// Empirical rate at which TOST with bounds `±delta` (in units of the
/// observed pooled SD) declares equivalence when the true effect is 0.
pub fn simulate_tost_power(delta: f64, s: u32, alpha_cet: f64, replicates: u64, seed: u64) -> Result<SimEstimate> {
    check_common(s, alpha_cet, replicates)?;
    if !(delta > 0.0) {
        return Err(Error::param("delta", delta, "delta > 0"));
    }
    let df = 2.0 * f64::from(s) - 2.0;
    let critical = central_t_quantile(1.0 - alpha_cet, df)?;
    let [hits] = tally(replicates, seed, |rng| {
        let st = run_study(rng, s, 0.0, Design::TwoSampleUnpaired);
        [u64::from(tost_declares(&st, delta, critical))]
    });
    Ok(SimEstimate::from_counts(hits, replicates))
}

fn tost_declares(st: &Study, delta: f64, critical: f64) -> bool {
    let se = st.sd * st.se_unit;
    let bound = delta * st.sd;
    let t_lower = (st.diff + bound) / se;
    let t_upper = (st.diff - bound) / se;
    t_lower > critical && t_upper < -critical
}

/// Empirical rates from simulating the publication pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineEstimate {
    pub s: u32,
    /// Fraction of studies with a significant NHST result.
    pub tpr: SimEstimate,
    /// Fraction of significant results whose effect is real.
    pub ppv: SimEstimate,
    /// Fraction published under CET (significant, or equivalent after a
    /// non-significant NHST).
    pub tpr_cet: Option<SimEstimate>,
    /// Fraction of CET publications that are correct (true positives and
    /// true negatives).
    pub ppv_cet: Option<SimEstimate>,
    /// Replicates counted both as significant and as equivalent. Always 0.
    pub double_counted: u64,
}

/// Simulate studies through NHST and, when the niche has CET settings,
/// through the conditional equivalence test on non-significant outcomes.
///
/// Each replicate draws whether the effect is real (probability `b`),
/// simulates two groups of size `s` (or the niche's ESS), and records the
/// outcome.
pub fn simulate_pipeline(spec: &SimSpec) -> Result<PipelineEstimate> {
    let p = spec.params;
    p.validate()?;
    let s = match spec.s {
        Some(s) => s,
        None => equilibrium(&p, spec.grid)?.ess,
    };
    check_common(s, p.alpha, spec.replicates)?;
    let test = PreparedTTest::new(Design::TwoSampleUnpaired, s, p.alpha)?;
    let tost = match p.cet {
        Some(c) => Some((PreparedTost::new(s, c.alpha_cet)?, c.delta_frac * p.d)),
        None => None,
    };

    // [significant, significant & real, equivalent, equivalent & null, both]
    let counts = tally(spec.replicates, spec.seed, |rng| {
        let real = rng.random::<f64>() < p.b;
        let st = run_study(rng, s, if real { p.d } else { 0.0 }, Design::TwoSampleUnpaired);
        let significant = st.t().abs() > test.critical;
        let mut out = [0u64; 5];
        if significant {
            out[0] = 1;
            out[1] = u64::from(real);
        }
        if let Some((tost, delta)) = &tost {
            let equivalent = tost_declares(&st, *delta, tost.critical);
            if !significant && equivalent {
                out[2] = 1;
                out[3] = u64::from(!real);
            }
            out[4] = u64::from(significant && out[2] == 1);
        }
        out
    });
    let [sig, sig_real, eqv, eqv_null, both] = counts;
    let n = spec.replicates;
    Ok(PipelineEstimate {
        s,
        tpr: SimEstimate::from_counts(sig, n),
        ppv: SimEstimate::from_counts(sig_real, sig),
        tpr_cet: tost.map(|_| SimEstimate::from_counts(sig + eqv, n)),
        ppv_cet: tost.map(|_| SimEstimate::from_counts(sig_real + eqv_null, sig + eqv)),
        double_counted: both,
    })
}

/// Lattice of (effect, sample size) points checked by [`verify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyLattice {
    pub d_values: Vec<f64>,
    pub s_values: Vec<u32>,
    /// Equivalence bounds for TOST checks; empty skips them.
    #[serde(default)]
    pub tost_deltas: Vec<f64>,
    pub alpha: f64,
    pub alpha_cet: f64,
    pub replicates: u64,
    pub seed: u64,
}

impl Default for VerifyLattice {
    fn default() -> Self {
        Self {
            d_values: vec![0.0, 0.2, 0.5, 0.8, 1.2],
            s_values: vec![4, 10, 20, 64, 200],
            tost_deltas: Vec::new(),
            alpha: 0.05,
            alpha_cet: 0.05,
            replicates: DEFAULT_REPLICATES,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Power,
    TostPower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyPoint {
    pub kind: CheckKind,
    /// Effect size (power) or equivalence bound (TOST).
    pub effect: f64,
    pub s: u32,
    pub analytic: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub abs_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub replicates: u64,
    pub seed: u64,
    pub alpha: f64,
    /// Allowed deviation in standard errors.
    pub sigma_rule: f64,
    pub points: Vec<VerifyPoint>,
    pub failures: usize,
    pub max_failure_fraction: f64,
    pub passed: bool,
}

/// Compare analytic power against simulation at every lattice point.
/// The report passes when at most 5% of points deviate by more than
/// three standard errors.
pub fn verify(lattice: &VerifyLattice) -> Result<VerifyReport> {
    if lattice.replicates < MIN_REPLICATES {
        return Err(Error::param("replicates", lattice.replicates as f64, "replicates >= 10000"));
    }
    let mut jobs: Vec<(CheckKind, f64, u32)> = Vec::new();
    for &d in &lattice.d_values {
        for &s in &lattice.s_values {
            jobs.push((CheckKind::Power, d, s));
        }
    }
    for &delta in &lattice.tost_deltas {
        for &s in &lattice.s_values {
            jobs.push((CheckKind::TostPower, delta, s));
        }
    }
    let mut points = Vec::with_capacity(jobs.len());
    for (idx, (kind, effect, s)) in jobs.into_iter().enumerate() {
        let seed = derive_seed(lattice.seed, idx as u64);
        let (analytic, est) = match kind {
            CheckKind::Power => (
                crate::numerics::compute_power(&crate::numerics::PowerQuery::two_sample(effect, s, lattice.alpha))?,
                simulate_power(effect, s, lattice.alpha, Design::TwoSampleUnpaired, lattice.replicates, seed)?,
            ),
            CheckKind::TostPower => (
                crate::numerics::compute_tost_power(&crate::numerics::TostQuery {
                    delta: effect,
                    s,
                    alpha_cet: lattice.alpha_cet,
                })?,
                simulate_tost_power(effect, s, lattice.alpha_cet, lattice.replicates, seed)?,
            ),
        };
        points.push(VerifyPoint {
            kind,
            effect,
            s,
            analytic,
            estimate: est.rate,
            stderr: est.stderr,
            abs_error: (est.rate - analytic).abs(),
            pass: est.agrees_with(analytic, 3.0),
        });
    }
    let failures = points.iter().filter(|p| !p.pass).count();
    let max_failure_fraction = 0.05;
    let passed = (failures as f64) <= max_failure_fraction * points.len() as f64;
    Ok(VerifyReport {
        replicates: lattice.replicates,
        seed: lattice.seed,
        alpha: lattice.alpha,
        sigma_rule: 3.0,
        points,
        failures,
        max_failure_fraction,
        passed,
    })
}
