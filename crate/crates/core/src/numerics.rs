//! Power engine for t-tests and two one-sided tests (TOST).
//!
//! Power of the two-sided t-test comes from the noncentral t distribution,
//! evaluated with the Poisson-mixture series of incomplete-beta terms summed
//! outward from the Poisson mode in both directions. Everything here is
//! computed from first principles; see [`crate::special`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::{beta_inc, ln_gamma, normal_cdf};

/// Truncation threshold for the noncentral t series remainder bound.
const NCT_EPS: f64 = 1e-12;
/// Hard cap on series terms in each direction from the mode.
const NCT_MAX_TERMS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
}

/// Experimental design of the t-test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// Two independent groups of `s` observations each.
    #[default]
    TwoSampleUnpaired,
    /// One group of `s` observations tested against zero.
    OneSample,
}

impl Design {
    /// Degrees of freedom and the noncentrality-per-unit-effect for size `s`.
    pub fn df_and_scale(self, s: u32) -> (f64, f64) {
        let s = f64::from(s);
        match self {
            Design::TwoSampleUnpaired => (2.0 * s - 2.0, (s / 2.0).sqrt()),
            Design::OneSample => (s - 1.0, s.sqrt()),
        }
    }
}

/// A single power question: effect `d`, per-group size `s`, level `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerQuery {
    pub d: f64,
    pub s: u32,
    pub alpha: f64,
    pub design: Design,
}

impl PowerQuery {
    pub fn two_sample(d: f64, s: u32, alpha: f64) -> Self {
        Self { d, s, alpha, design: Design::TwoSampleUnpaired }
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(NumericsError::Domain("alpha must lie in (0, 1)"));
        }
        if self.s < 2 {
            return Err(NumericsError::Domain("s must be at least 2"));
        }
        if !(self.d >= 0.0) || !self.d.is_finite() {
            return Err(NumericsError::Domain("d must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Equivalence-test question: symmetric bounds `±delta` (Cohen's d units),
/// per-group size `s`, level `alpha_cet` for each one-sided test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TostQuery {
    pub delta: f64,
    pub s: u32,
    pub alpha_cet: f64,
}

impl TostQuery {
    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(NumericsError::Domain("delta must be finite and > 0"));
        }
        if !(self.alpha_cet > 0.0 && self.alpha_cet < 1.0) {
            return Err(NumericsError::Domain("alpha_cet must lie in (0, 1)"));
        }
        if self.s < 2 {
            return Err(NumericsError::Domain("s must be at least 2"));
        }
        Ok(())
    }
}

fn check_df(df: f64) -> Result<(), NumericsError> {
    if !(df > 0.0) || !df.is_finite() {
        return Err(NumericsError::Domain("degrees of freedom must be finite and > 0"));
    }
    Ok(())
}

/// CDF of Student's t with `df` degrees of freedom.
pub fn central_t_cdf(t: f64, df: f64) -> Result<f64, NumericsError> {
    check_df(df)?;
    if t.is_nan() {
        return Err(NumericsError::Domain("t must not be NaN"));
    }
    if t.is_infinite() {
        return Ok(if t > 0.0 { 1.0 } else { 0.0 });
    }
    let t2 = t * t;
    // tail = P(T > |t|) = I_{df/(df+t^2)}(df/2, 1/2) / 2
    let x = df / (df + t2);
    let y = t2 / (df + t2);
    let tail = 0.5 * beta_inc(df / 2.0, 0.5, x, y)?;
    Ok(if t >= 0.0 { 1.0 - tail } else { tail })
}

fn central_t_density(t: f64, df: f64) -> f64 {
    let ln_c = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_c - (df + 1.0) / 2.0 * (t * t / df).ln_1p()).exp()
}

/// Quantile of Student's t: the `t` with `central_t_cdf(t, df) = p`.
pub fn central_t_quantile(p: f64, df: f64) -> Result<f64, NumericsError> {
    check_df(df)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(NumericsError::Domain("quantile probability must lie in (0, 1)"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p < 0.5 {
        return Ok(-central_t_quantile(1.0 - p, df)?);
    }
    // bracket [lo, hi] with cdf(lo) < p <= cdf(hi)
    let mut lo = 0.0;
    let mut hi = 1.0;
    while central_t_cdf(hi, df)? < p {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(NumericsError::NoConvergence("t quantile bracketing"));
        }
    }
    // safeguarded Newton
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = central_t_cdf(t, df)? - p;
        if f < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let step = f / central_t_density(t, df);
        let mut next = t - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-15 * t.abs().max(1.0) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        t = next;
    }
    Ok(t)
}

/// CDF of the noncentral t distribution, `P(T <= t)` for `T ~ t'(df, ncp)`.
///
/// Absolute error is below `1e-10` across the parameter range used for
/// power analysis.
pub fn noncentral_t_cdf(t: f64, df: f64, ncp: f64) -> Result<f64, NumericsError> {
    check_df(df)?;
    if t.is_nan() {
        return Err(NumericsError::Domain("t must not be NaN"));
    }
    if !ncp.is_finite() {
        return Err(NumericsError::Domain("noncentrality must be finite"));
    }
    if t == f64::INFINITY {
        return Ok(1.0);
    }
    if t == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if ncp == 0.0 {
        return central_t_cdf(t, df);
    }
    if t < 0.0 {
        // F(t; df, ncp) = 1 - F(-t; df, -ncp)
        let upper = nct_cdf_nonneg(-t, df, -ncp)?;
        return Ok((1.0 - upper).clamp(0.0, 1.0));
    }
    Ok(nct_cdf_nonneg(t, df, ncp)?.clamp(0.0, 1.0))
}

/// Upper tail `P(T > t)` of the noncentral t.
fn noncentral_t_sf(t: f64, df: f64, ncp: f64) -> Result<f64, NumericsError> {
    // P(T > t; ncp) = P(-T < -t) = F(-t; df, -ncp)
    noncentral_t_cdf(-t, df, -ncp)
}

/// Series for `t >= 0`:
/// `F = Φ(-δ) + ½ Σ_j [P_j I_x(j+½, ν/2) + δ/√2 · Q_j I_x(j+1, ν/2)]`
/// with `x = t²/(t²+ν)`, `P_j` Poisson(δ²/2) weights and
/// `Q_j = e^{-δ²/2} (δ²/2)^j / Γ(j + 3/2)`.
///
/// Summation starts at the Poisson mode `k` and runs down to `j = 0`, then
/// up until the remaining Poisson mass bounds the tail below [`NCT_EPS`].
fn nct_cdf_nonneg(t: f64, df: f64, ncp: f64) -> Result<f64, NumericsError> {
    let phi_neg = normal_cdf(-ncp);
    if t == 0.0 {
        return Ok(phi_neg);
    }
    let t2 = t * t;
    let x = t2 / (t2 + df);
    let y = df / (t2 + df);
    let b = df / 2.0;
    let lambda = ncp * ncp / 2.0;
    let k = lambda.floor();
    let ln_lambda_k = if k == 0.0 { 0.0 } else { k * lambda.ln() };

    let a0 = k + 0.5;
    let c0 = k + 1.0;
    let p_k = (-lambda + ln_lambda_k - ln_gamma(k + 1.0)).exp();
    let q_k = (-lambda + ln_lambda_k - ln_gamma(k + 1.5)).exp();
    let ibeta_p = beta_inc(a0, b, x, y)?;
    let ibeta_q = beta_inc(c0, b, x, y)?;
    let (ln_x, ln_y) = (x.ln(), y.ln());
    // g(a) = Γ(a+b) / (Γ(a+1) Γ(b)) x^a y^b, so that I_x(a+1, b) = I_x(a, b) - g(a)
    let g = |a: f64| (ln_gamma(a + b) - ln_gamma(a + 1.0) - ln_gamma(b) + a * ln_x + b * ln_y).exp();
    let g_p = g(a0);
    let g_q = g(c0);

    let ncp_scale = ncp / std::f64::consts::SQRT_2;
    let mut sum = p_k * ibeta_p + ncp_scale * q_k * ibeta_q;
    let mut poisson_mass = p_k;

    // backward: j = k-1, ..., 0
    {
        let (mut pw, mut qw) = (p_k, q_k);
        let (mut ip, mut iq) = (ibeta_p, ibeta_q);
        let (mut gp, mut gq) = (g_p, g_q);
        let mut j = k;
        while j >= 1.0 {
            let (a, c) = (j + 0.5, j + 1.0);
            // g(a-1) = g(a) a / ((a + b - 1) x)
            gp *= a / ((a + b - 1.0) * x);
            gq *= c / ((c + b - 1.0) * x);
            ip += gp;
            iq += gq;
            pw *= j / lambda;
            qw *= (j + 0.5) / lambda;
            sum += pw * ip + ncp_scale * qw * iq;
            poisson_mass += pw;
            j -= 1.0;
        }
    }

    // forward: j = k+1, k+2, ...
    let bound_scale = 1.0 + ncp.abs() / std::f64::consts::SQRT_2;
    let (mut pw, mut qw) = (p_k, q_k);
    let (mut ip, mut iq) = (ibeta_p, ibeta_q);
    let (mut gp, mut gq) = (g_p, g_q);
    let mut j = k;
    for _ in 0..NCT_MAX_TERMS {
        let (a, c) = (j + 0.5, j + 1.0);
        ip -= gp;
        iq -= gq;
        gp *= x * (a + b) / (a + 1.0);
        gq *= x * (c + b) / (c + 1.0);
        pw *= lambda / (j + 1.0);
        qw *= lambda / (j + 1.5);
        sum += pw * ip + ncp_scale * qw * iq;
        poisson_mass += pw;
        j += 1.0;
        // I_x(a, b) decreases in a, so the tail is bounded by the unseen
        // Poisson mass times the current incomplete-beta factors
        let remaining = (1.0 - poisson_mass).max(0.0);
        if remaining * bound_scale * ip.abs().max(iq.abs()) <= NCT_EPS {
            return Ok(phi_neg + 0.5 * sum);
        }
    }
    Err(NumericsError::NoConvergence("noncentral t series"))
}

/// A two-sided t-test with its critical value precomputed, so that power
/// can be evaluated for many effect sizes at one sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparedTTest {
    pub design: Design,
    pub s: u32,
    pub alpha: f64,
    pub df: f64,
    pub scale: f64,
    pub critical: f64,
}

impl PreparedTTest {
    pub fn new(design: Design, s: u32, alpha: f64) -> Result<Self, NumericsError> {
        PowerQuery { d: 0.0, s, alpha, design }.validate()?;
        let (df, scale) = design.df_and_scale(s);
        let critical = central_t_quantile(1.0 - alpha / 2.0, df)?;
        Ok(Self { design, s, alpha, df, scale, critical })
    }

    /// Two-sided rejection probability at true standardized effect `d`,
    /// clamped to `[alpha, 1]`.
    pub fn power(&self, d: f64) -> Result<f64, NumericsError> {
        if !(d >= 0.0) || !d.is_finite() {
            return Err(NumericsError::Domain("d must be finite and >= 0"));
        }
        let ncp = d * self.scale;
        let upper = noncentral_t_sf(self.critical, self.df, ncp)?;
        let lower = noncentral_t_cdf(-self.critical, self.df, ncp)?;
        Ok((upper + lower).clamp(self.alpha, 1.0))
    }
}

/// Two one-sided tests with bounds in Cohen's d units, for the unpaired
/// equal-n design, with the one-sided critical value precomputed.
///
/// Bounds scale with the observed pooled SD, so both one-sided statistics
/// are shifts of the ordinary t statistic `T = d̂·√(s/2)`:
/// equivalence is declared iff `|T| < Δ√(s/2) − t_{1−α, 2s−2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparedTost {
    pub s: u32,
    pub alpha_cet: f64,
    pub df: f64,
    pub scale: f64,
    pub critical: f64,
}

impl PreparedTost {
    pub fn new(s: u32, alpha_cet: f64) -> Result<Self, NumericsError> {
        TostQuery { delta: 1.0, s, alpha_cet }.validate()?;
        let (df, scale) = Design::TwoSampleUnpaired.df_and_scale(s);
        let critical = central_t_quantile(1.0 - alpha_cet, df)?;
        Ok(Self { s, alpha_cet, df, scale, critical })
    }

    /// Half-width of the acceptance region for the t statistic, `Δ√(s/2) − t_crit`.
    /// Equivalence is impossible when this is not positive.
    pub fn acceptance_half_width(&self, delta: f64) -> f64 {
        delta * self.scale - self.critical
    }

    /// Probability of declaring equivalence when the true effect is zero.
    pub fn power(&self, delta: f64) -> Result<f64, NumericsError> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(NumericsError::Domain("delta must be finite and > 0"));
        }
        let h = self.acceptance_half_width(delta);
        if h <= 0.0 {
            return Ok(0.0);
        }
        // P(|T| < h) = 1 - 2 P(T > h), formed from the tail to avoid cancellation
        let tail = 1.0 - central_t_cdf(h, self.df)?;
        Ok((1.0 - 2.0 * tail).clamp(0.0, 1.0))
    }
}

/// Power `1 − β` of the two-sided t-test.
pub fn compute_power(q: &PowerQuery) -> Result<f64, NumericsError> {
    q.validate()?;
    PreparedTTest::new(q.design, q.s, q.alpha)?.power(q.d)
}

/// Power `1 − β_CET` of the TOST equivalence test when the true effect is 0.
pub fn compute_tost_power(q: &TostQuery) -> Result<f64, NumericsError> {
    q.validate()?;
    PreparedTost::new(q.s, q.alpha_cet)?.power(q.delta)
}
