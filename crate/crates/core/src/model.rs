//! The economic model: publishable rates, profit over a sample-size grid,
//! and extraction of the equilibrium sample size.
//!
//! For a niche with base rate of true effects `b`, effect size `d` and
//! income factor `IF` (sample pairs purchasable per publication):
//!
//! ```text
//! TPR(s)     = α(1−b) + (1−β(s))·b
//! TPR_CET(s) = TPR(s) + α_CET·b·β(s) + (1−β_CET(s,Δ))·(1−b)·(1−α)
//! Profit(s)  = IF·TPR(s) − s
//! ```
//!
//! ESS is the first grid point maximizing profit; SSS the first grid point
//! whose power is nearest 0.8.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Design, PreparedTTest, PreparedTost};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_ALPHA_CET: f64 = 0.05;
/// Power level defining the "scientifically appropriate" sample size.
pub const SSS_TARGET_POWER: f64 = 0.8;

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_alpha_cet() -> f64 {
    DEFAULT_ALPHA_CET
}

/// Conditional equivalence testing: non-significant studies are re-tested
/// with TOST against `±delta_frac·d` and published when equivalence holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CetParams {
    pub delta_frac: f64,
    #[serde(default = "default_alpha_cet")]
    pub alpha_cet: f64,
}

impl CetParams {
    pub fn new(delta_frac: f64) -> Self {
        Self { delta_frac, alpha_cet: DEFAULT_ALPHA_CET }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_frac > 0.0) || !self.delta_frac.is_finite() {
            return Err(Error::param("delta_frac", self.delta_frac, "delta_frac > 0"));
        }
        if !(self.alpha_cet > 0.0 && self.alpha_cet < 1.0) {
            return Err(Error::param("alpha_cet", self.alpha_cet, "0 < alpha_cet < 1"));
        }
        Ok(())
    }
}

/// One scientific niche.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub b: f64,
    pub d: f64,
    #[serde(rename = "if")]
    pub income_factor: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub cet: Option<CetParams>,
}

impl ModelParams {
    pub fn new(b: f64, d: f64, income_factor: f64) -> Self {
        Self { b, d, income_factor, alpha: DEFAULT_ALPHA, cet: None }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_cet(mut self, cet: CetParams) -> Self {
        self.cet = Some(cet);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::param("b", self.b, "0 <= b <= 1"));
        }
        if !(self.d > 0.0) || !self.d.is_finite() {
            return Err(Error::param("d", self.d, "d > 0"));
        }
        if !(self.income_factor > 0.0) || !self.income_factor.is_finite() {
            return Err(Error::param("if", self.income_factor, "IF > 0"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", self.alpha, "0 < alpha < 1"));
        }
        if let Some(cet) = &self.cet {
            cet.validate()?;
        }
        Ok(())
    }

    /// Equivalence bound `Δ = delta_frac · d`, when CET is enabled.
    pub fn delta(&self) -> Option<f64> {
        self.cet.map(|c| c.delta_frac * self.d)
    }
}

/// Per-group sample sizes `s_min, s_min+2, …, ≤ s_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub s_min: u32,
    pub s_max: u32,
}

impl Default for SampleGrid {
    fn default() -> Self {
        Self { s_min: 4, s_max: 998 }
    }
}

impl SampleGrid {
    pub const STEP: u32 = 2;

    pub fn new(s_min: u32, s_max: u32) -> Result<Self> {
        let grid = Self { s_min, s_max };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_min < 2 {
            return Err(Error::param("s_min", f64::from(self.s_min), "s_min >= 2"));
        }
        if self.s_max < self.s_min {
            return Err(Error::param("s_max", f64::from(self.s_max), "s_max >= s_min"));
        }
        Ok(())
    }

    pub fn sizes(&self) -> Vec<u32> {
        (self.s_min..=self.s_max).step_by(Self::STEP as usize).collect()
    }
}

/// Publication outcome rates for one sample size, split by truth and sign.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PublishRates {
    pub false_positive: f64,
    pub true_positive: f64,
    /// True effect published as an equivalence finding (CET only).
    pub false_negative: f64,
    /// Null effect published as an equivalence finding (CET only).
    pub true_negative: f64,
}

impl PublishRates {
    /// Rates without equivalence testing.
    pub fn nhst(b: f64, alpha: f64, power: f64) -> Self {
        Self { false_positive: alpha * (1.0 - b), true_positive: power * b, ..Self::default() }
    }

    /// Rates with conditional equivalence testing, using the independence
    /// correction factors `β` and `1 − α` for the second stage.
    pub fn cet(b: f64, alpha: f64, power: f64, alpha_cet: f64, power_tost: f64) -> Self {
        Self {
            false_negative: alpha_cet * b * (1.0 - power),
            true_negative: power_tost * (1.0 - b) * (1.0 - alpha),
            ..Self::nhst(b, alpha, power)
        }
    }

    pub fn total(&self) -> f64 {
        self.false_positive + self.true_positive + self.false_negative + self.true_negative
    }

    /// Published findings that are true: true positives plus true negatives.
    pub fn true_published(&self) -> f64 {
        self.true_positive + self.true_negative
    }

    pub fn ppv(&self) -> f64 {
        self.true_published() / self.total()
    }
}

/// Total publishable rate without CET, `α(1−b) + (1−β(s))·b`.
pub fn total_publishable_rate(b: f64, d: f64, s: u32, alpha: f64) -> Result<f64> {
    let p = ModelParams::new(b, d, 1.0).with_alpha(alpha);
    p.validate()?;
    let power = PreparedTTest::new(Design::TwoSampleUnpaired, s, alpha)?.power(d)?;
    Ok(PublishRates::nhst(b, alpha, power).total())
}

/// Total publishable rate with CET.
pub fn total_publishable_rate_cet(b: f64, d: f64, s: u32, alpha: f64, cet: CetParams) -> Result<f64> {
    let p = ModelParams::new(b, d, 1.0).with_alpha(alpha).with_cet(cet);
    p.validate()?;
    let power = PreparedTTest::new(Design::TwoSampleUnpaired, s, alpha)?.power(d)?;
    let power_tost = PreparedTost::new(s, cet.alpha_cet)?.power(cet.delta_frac * d)?;
    Ok(PublishRates::cet(b, alpha, power, cet.alpha_cet, power_tost).total())
}

/// Exact publication rates of the two-stage procedure (NHST, then TOST on
/// non-significant outcomes) for the unpaired design.
///
/// Both stages are functions of the one t statistic `T`: significance is
/// `|T| > t_{1−α/2}`, equivalence is `|T| < Δ√(s/2) − t_{1−α_CET}`. The
/// equivalence-and-not-significant event is therefore `|T| < m` with
/// `m = min(Δ√(s/2) − t_{1−α_CET}, t_{1−α/2})`, with no independence
/// assumption between stages. Without CET this coincides with
/// [`PublishRates::nhst`].
pub fn exact_two_stage_rates(b: f64, d: f64, s: u32, alpha: f64, cet: Option<CetParams>) -> Result<PublishRates> {
    let mut p = ModelParams::new(b, d, 1.0).with_alpha(alpha);
    p.cet = cet;
    p.validate()?;
    let test = PreparedTTest::new(Design::TwoSampleUnpaired, s, alpha)?;
    let power = test.power(d)?;
    let mut rates = PublishRates::nhst(b, alpha, power);
    if let Some(cet) = cet {
        let tost = PreparedTost::new(s, cet.alpha_cet)?;
        let m = tost.acceptance_half_width(cet.delta_frac * d).min(test.critical);
        if m > 0.0 {
            let ncp = d * test.scale;
            let inside = |ncp: f64| -> Result<f64> {
                let hi = crate::numerics::noncentral_t_cdf(m, test.df, ncp)?;
                let lo = crate::numerics::noncentral_t_cdf(-m, test.df, ncp)?;
                Ok((hi - lo).max(0.0))
            };
            rates.true_negative = inside(0.0)? * (1.0 - b);
            rates.false_negative = inside(ncp)? * b;
        }
    }
    Ok(rates)
}

/// Power, publishable rate, income and profit at every grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfitCurve {
    pub s_grid: Vec<u32>,
    pub power: Vec<f64>,
    pub power_cet: Option<Vec<f64>>,
    pub tpr: Vec<f64>,
    /// Rate of published findings that are true (numerator of PPV).
    pub true_rate: Vec<f64>,
    pub income: Vec<f64>,
    pub profit: Vec<f64>,
}

impl ProfitCurve {
    pub fn len(&self) -> usize {
        self.s_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_grid.is_empty()
    }

    /// First index attaining maximal profit.
    pub fn ess_index(&self) -> usize {
        first_argmax(&self.profit)
    }

    /// First index whose power is nearest [`SSS_TARGET_POWER`].
    pub fn sss_index(&self) -> usize {
        let gaps: Vec<f64> = self.power.iter().map(|p| -(p - SSS_TARGET_POWER).abs()).collect();
        first_argmax(&gaps)
    }

    pub fn ppv(&self, i: usize) -> f64 {
        self.true_rate[i] / self.tpr[i]
    }

    /// The same curve with a constant `overhead` added to income (and so to
    /// profit) at every grid point.
    pub fn with_overhead(&self, overhead: f64) -> ProfitCurve {
        let mut out = self.clone();
        for (inc, prof) in out.income.iter_mut().zip(out.profit.iter_mut()) {
            *inc += overhead;
            *prof += overhead;
        }
        out
    }

    pub fn equilibrium(&self) -> EquilibriumResult {
        let i = self.ess_index();
        EquilibriumResult {
            ess: self.s_grid[i],
            sss: self.s_grid[self.sss_index()],
            power_at_ess: self.power[i],
            power_cet_at_ess: self.power_cet.as_ref().map(|v| v[i]),
            tpr_at_ess: self.tpr[i],
            ppv_at_ess: self.ppv(i),
            profit_at_ess: self.profit[i],
        }
    }
}

/// Index of the first maximum; ties resolve to the smallest index.
pub fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Outcome at the profit-maximizing sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub ess: u32,
    pub sss: u32,
    pub power_at_ess: f64,
    pub power_cet_at_ess: Option<f64>,
    pub tpr_at_ess: f64,
    pub ppv_at_ess: f64,
    pub profit_at_ess: f64,
}

/// Prepared t-tests (and TOSTs) for every point of a sample grid at fixed
/// significance levels. Critical values are the expensive part of a power
/// evaluation, so they are computed once and shared across niches.
#[derive(Debug, Clone)]
pub struct GridEvaluator {
    grid: SampleGrid,
    sizes: Vec<u32>,
    alpha: f64,
    tests: Vec<PreparedTTest>,
    tosts: Option<Vec<PreparedTost>>,
}

impl GridEvaluator {
    pub fn new(grid: SampleGrid, alpha: f64, alpha_cet: Option<f64>) -> Result<Self> {
        grid.validate()?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param("alpha", alpha, "0 < alpha < 1"));
        }
        let sizes = grid.sizes();
        let tests = sizes
            .par_iter()
            .map(|&s| PreparedTTest::new(Design::TwoSampleUnpaired, s, alpha))
            .collect::<Result<Vec<_>, _>>()?;
        let tosts = match alpha_cet {
            Some(a) => {
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::param("alpha_cet", a, "0 < alpha_cet < 1"));
                }
                Some(sizes.par_iter().map(|&s| PreparedTost::new(s, a)).collect::<Result<Vec<_>, _>>()?)
            }
            None => None,
        };
        Ok(Self { grid, sizes, alpha, tests, tosts })
    }

    /// Evaluator matching the levels of `p`.
    pub fn for_params(grid: SampleGrid, p: &ModelParams) -> Result<Self> {
        Self::new(grid, p.alpha, p.cet.map(|c| c.alpha_cet))
    }

    pub fn grid(&self) -> SampleGrid {
        self.grid
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn power_curve(&self, d: f64) -> Result<Vec<f64>> {
        Ok(self.tests.iter().map(|t| t.power(d)).collect::<Result<Vec<_>, _>>()?)
    }

    fn tost_tests(&self, alpha_cet: f64) -> Result<&[PreparedTost]> {
        match &self.tosts {
            Some(v) if v.first().is_none_or(|t| t.alpha_cet == alpha_cet) => Ok(v),
            _ => Err(Error::Config(format!("grid evaluator was not prepared for alpha_cet = {alpha_cet}"))),
        }
    }

    pub fn tost_curve(&self, delta: f64, alpha_cet: f64) -> Result<Vec<f64>> {
        Ok(self.tost_tests(alpha_cet)?.iter().map(|t| t.power(delta)).collect::<Result<Vec<_>, _>>()?)
    }

    fn check(&self, p: &ModelParams) -> Result<()> {
        p.validate()?;
        if p.alpha != self.alpha {
            return Err(Error::Config(format!(
                "grid evaluator was prepared for alpha = {}, not {}",
                self.alpha, p.alpha
            )));
        }
        Ok(())
    }

    pub fn profit_curve(&self, p: &ModelParams) -> Result<ProfitCurve> {
        self.check(p)?;
        let power = self.power_curve(p.d)?;
        let power_cet = match p.cet {
            Some(c) => Some(self.tost_curve(c.delta_frac * p.d, c.alpha_cet)?),
            None => None,
        };
        Ok(self.assemble(p, power, power_cet))
    }

    /// Profit curve from precomputed power curves (which depend on `d` and
    /// the levels only, not on `b` or `IF`).
    fn assemble(&self, p: &ModelParams, power: Vec<f64>, power_cet: Option<Vec<f64>>) -> ProfitCurve {
        let n = self.sizes.len();
        let mut tpr = Vec::with_capacity(n);
        let mut true_rate = Vec::with_capacity(n);
        let mut income = Vec::with_capacity(n);
        let mut profit = Vec::with_capacity(n);
        for i in 0..n {
            let rates = match (&power_cet, p.cet) {
                (Some(pc), Some(c)) => PublishRates::cet(p.b, p.alpha, power[i], c.alpha_cet, pc[i]),
                _ => PublishRates::nhst(p.b, p.alpha, power[i]),
            };
            let t = rates.total();
            let inc = p.income_factor * t;
            tpr.push(t);
            true_rate.push(rates.true_published());
            income.push(inc);
            profit.push(inc - f64::from(self.sizes[i]));
        }
        ProfitCurve { s_grid: self.sizes.clone(), power, power_cet, tpr, true_rate, income, profit }
    }

    pub fn equilibrium(&self, p: &ModelParams) -> Result<EquilibriumResult> {
        Ok(self.profit_curve(p)?.equilibrium())
    }
}

/// Profit curve over `grid` for one niche.
pub fn profit_curve(p: &ModelParams, grid: SampleGrid) -> Result<ProfitCurve> {
    GridEvaluator::for_params(grid, p)?.profit_curve(p)
}

/// ESS, SSS and the rates at ESS for one niche.
pub fn equilibrium(p: &ModelParams, grid: SampleGrid) -> Result<EquilibriumResult> {
    Ok(profit_curve(p, grid)?.equilibrium())
}

/// Model input varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVar {
    #[serde(rename = "b")]
    B,
    #[serde(rename = "d")]
    D,
    #[serde(rename = "if")]
    IncomeFactor,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::B => "b",
            SweepVar::D => "d",
            SweepVar::IncomeFactor => "if",
        }
    }

    fn apply(self, base: &ModelParams, value: f64) -> ModelParams {
        let mut p = *base;
        match self {
            SweepVar::B => p.b = value,
            SweepVar::D => p.d = value,
            SweepVar::IncomeFactor => p.income_factor = value,
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub result: EquilibriumResult,
}

/// Equilibrium for each value of one varied input, other inputs fixed at
/// `base`. Rows keep the order of `values`.
pub fn sweep(base: &ModelParams, vary: SweepVar, values: &[f64], grid: SampleGrid) -> Result<Vec<SweepRow>> {
    let params: Vec<ModelParams> = values.iter().map(|&v| vary.apply(base, v)).collect();
    for p in &params {
        p.validate()?;
    }
    let eval = GridEvaluator::for_params(grid, base)?;
    // power depends on d only, so b and IF sweeps share one pair of curves
    let shared = match vary {
        SweepVar::D => None,
        _ => {
            let power = eval.power_curve(base.d)?;
            let power_cet = match base.cet {
                Some(c) => Some(eval.tost_curve(c.delta_frac * base.d, c.alpha_cet)?),
                None => None,
            };
            Some((power, power_cet))
        }
    };
    params
        .par_iter()
        .zip(values.par_iter())
        .map(|(p, &value)| {
            let curve = match &shared {
                Some((power, power_cet)) => eval.assemble(p, power.clone(), power_cet.clone()),
                None => eval.profit_curve(p)?,
            };
            Ok(SweepRow { value, result: curve.equilibrium() })
        })
        .collect()
}

/// Equilibrium as a function of the base rate `b`.
pub fn sweep_b(
    d: f64,
    income_factor: f64,
    alpha: f64,
    cet: Option<CetParams>,
    b_grid: &[f64],
    grid: SampleGrid,
) -> Result<Vec<(f64, EquilibriumResult)>> {
    let mut base = ModelParams::new(b_grid.first().copied().unwrap_or(0.0), d, income_factor).with_alpha(alpha);
    base.cet = cet;
    let mut rows = sweep(&base, SweepVar::B, b_grid, grid)?;
    rows.sort_by(|x, y| x.value.total_cmp(&y.value));
    Ok(rows.into_iter().map(|r| (r.value, r.result)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_matches_reference_range() {
        let s = SampleGrid::default().sizes();
        assert_eq!(s.len(), 498);
        assert_eq!(s[0], 4);
        assert_eq!(*s.last().unwrap(), 998);
        assert!(s.windows(2).all(|w| w[1] == w[0] + 2));
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(first_argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(first_argmax(&[5.0, 5.0]), 0);
    }

    #[test]
    fn params_validation_names_the_bound() {
        let err = ModelParams::new(1.5, 0.5, 200.0).validate().unwrap_err();
        assert!(err.to_string().contains("0 <= b <= 1"), "{err}");
        assert!(ModelParams::new(0.5, 0.0, 200.0).validate().is_err());
        assert!(ModelParams::new(0.5, 0.5, 0.0).validate().is_err());
        assert!(ModelParams::new(0.5, 0.5, 10.0).with_alpha(1.0).validate().is_err());
        assert!(ModelParams::new(0.5, 0.5, 10.0).with_cet(CetParams::new(0.0)).validate().is_err());
    }

    #[test]
    fn grid_rejects_degenerate_bounds() {
        assert!(SampleGrid::new(1, 10).is_err());
        assert!(SampleGrid::new(10, 8).is_err());
        assert_eq!(SampleGrid::new(5, 9).unwrap().sizes(), vec![5, 7, 9]);
    }

    #[test]
    fn b_zero_profit_is_alpha_income_minus_cost() {
        let curve = profit_curve(&ModelParams::new(0.0, 0.5, 200.0), SampleGrid::default()).unwrap();
        for (s, p) in curve.s_grid.iter().zip(&curve.profit) {
            assert!((p - (10.0 - f64::from(*s))).abs() < 1e-12);
        }
        let eq = curve.equilibrium();
        assert_eq!(eq.ess, 4);
        assert_eq!(eq.ppv_at_ess, 0.0);
    }

    #[test]
    fn curve_identities_hold_exactly() {
        let p = ModelParams::new(0.37, 0.6, 420.0).with_cet(CetParams::new(0.5));
        let c = profit_curve(&p, SampleGrid::default()).unwrap();
        for i in 0..c.len() {
            assert_eq!(c.income[i], p.income_factor * c.tpr[i]);
            assert_eq!(c.profit[i], c.income[i] - f64::from(c.s_grid[i]));
        }
    }

    #[test]
    fn rates_cet_reduce_to_nhst_terms() {
        let r = PublishRates::cet(0.0, 0.05, 0.3, 0.05, 0.7);
        assert!((r.total() - (0.05 + 0.95 * 0.7)).abs() < 1e-15);
        let r = PublishRates::cet(1.0, 0.05, 0.3, 0.05, 0.7);
        assert!((r.total() - (0.3 + 0.05 * 0.7)).abs() < 1e-15);
        assert_eq!(r.true_negative, 0.0);
    }

    #[test]
    fn evaluator_rejects_mismatched_alpha() {
        let eval = GridEvaluator::new(SampleGrid::new(4, 20).unwrap(), 0.05, None).unwrap();
        let p = ModelParams::new(0.5, 0.5, 100.0).with_alpha(0.01);
        assert!(matches!(eval.profit_curve(&p), Err(Error::Config(_))));
        let p = ModelParams::new(0.5, 0.5, 100.0).with_cet(CetParams::new(1.0));
        assert!(matches!(eval.profit_curve(&p), Err(Error::Config(_))));
    }
}
