//! Populations of research niches: sample `(b, d, IF)` from distribution
//! recipes, find each niche's ESS, and aggregate the power and PPV that
//! would appear in the literature.
//!
//! Each niche is weighted by `TPR/ESS`: a niche with half the ESS runs twice
//! as many studies, of which a fraction `TPR` get published.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CetParams, GridEvaluator, ModelParams, SampleGrid, DEFAULT_ALPHA};
use crate::rng::{derive_seed, Substreams};

/// Current scenario config schema identifier.
pub const SCENARIO_SCHEMA: &str = "esslab.scenario.v1";
/// Attempts allowed when resampling a clipped gamma draw.
const CLIP_MAX_ATTEMPTS: usize = 1_000_000;

/// A recipe for sampling one model input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    /// Point mass.
    Constant {
        value: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `scale · Beta(a, b)`.
    Beta {
        a: f64,
        b: f64,
        #[serde(default = "unit_scale")]
        scale: f64,
    },
    /// Gamma with shape `k` and scale `theta`, restricted to
    /// `[clip_lo, clip_hi]` by redrawing out-of-range values.
    Gamma {
        k: f64,
        theta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clip_lo: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        clip_hi: Option<f64>,
    },
    Mixture {
        components: Vec<MixtureComponent>,
    },
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub dist: DistributionSpec,
}

impl DistributionSpec {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        Self::Uniform { lo, hi }
    }

    pub fn beta(a: f64, b: f64, scale: f64) -> Self {
        Self::Beta { a, b, scale }
    }

    pub fn gamma_clipped(k: f64, theta: f64, lo: f64, hi: f64) -> Self {
        Self::Gamma { k, theta, clip_lo: Some(lo), clip_hi: Some(hi) }
    }

    pub fn mixture(parts: impl IntoIterator<Item = (f64, DistributionSpec)>) -> Self {
        Self::Mixture {
            components: parts.into_iter().map(|(weight, dist)| MixtureComponent { weight, dist }).collect(),
        }
    }

    /// Smallest closed interval containing every draw.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Constant { value } => (*value, *value),
            Self::Uniform { lo, hi } => (*lo, *hi),
            Self::Beta { scale, .. } => (0.0, *scale),
            Self::Gamma { clip_lo, clip_hi, .. } => (clip_lo.unwrap_or(0.0), clip_hi.unwrap_or(f64::INFINITY)),
            Self::Mixture { components } => components.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, c| {
                let (lo, hi) = c.dist.support();
                (acc.0.min(lo), acc.1.max(hi))
            }),
        }
    }

    /// Whether draws can never be zero or negative.
    fn strictly_positive(&self) -> bool {
        match self {
            Self::Constant { value } => *value > 0.0,
            Self::Uniform { lo, .. } => *lo > 0.0,
            Self::Beta { .. } | Self::Gamma { .. } => self.support().0 >= 0.0,
            Self::Mixture { components } => components.iter().all(|c| c.dist.strictly_positive()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler().map(|_| ())
    }

    fn sampler(&self) -> Result<Sampler> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, v, "finite value"))
            }
        };
        Ok(match self {
            Self::Constant { value } => {
                finite("value", *value)?;
                Sampler::Constant(*value)
            }
            Self::Uniform { lo, hi } => {
                finite("lo", *lo)?;
                finite("hi", *hi)?;
                if !(lo < hi) {
                    return Err(Error::param("hi", *hi, "uniform lo < hi"));
                }
                Sampler::Uniform(*lo, *hi)
            }
            Self::Beta { a, b, scale } => {
                if !(*a > 0.0 && a.is_finite()) {
                    return Err(Error::param("a", *a, "beta a > 0"));
                }
                if !(*b > 0.0 && b.is_finite()) {
                    return Err(Error::param("b", *b, "beta b > 0"));
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::param("scale", *scale, "beta scale > 0"));
                }
                let dist = Beta::new(*a, *b).map_err(|e| Error::Config(format!("beta({a}, {b}): {e}")))?;
                Sampler::Beta(dist, *scale)
            }
            Self::Gamma { k, theta, clip_lo, clip_hi } => {
                if !(*k > 0.0 && k.is_finite()) {
                    return Err(Error::param("k", *k, "gamma k > 0"));
                }
                if !(*theta > 0.0 && theta.is_finite()) {
                    return Err(Error::param("theta", *theta, "gamma theta > 0"));
                }
                let lo = clip_lo.unwrap_or(0.0);
                let hi = clip_hi.unwrap_or(f64::INFINITY);
                if lo.is_nan() || hi.is_nan() || !(lo < hi) || lo < 0.0 {
                    return Err(Error::param("clip_hi", hi, "0 <= clip_lo < clip_hi"));
                }
                let dist = Gamma::new(*k, *theta).map_err(|e| Error::Config(format!("gamma({k}, {theta}): {e}")))?;
                Sampler::Gamma(dist, lo, hi)
            }
            Self::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::Config("mixture needs at least one component".into()));
                }
                let mut total = 0.0;
                let mut parts = Vec::with_capacity(components.len());
                for c in components {
                    if !(c.weight > 0.0 && c.weight.is_finite()) {
                        return Err(Error::param("weight", c.weight, "mixture weight > 0"));
                    }
                    total += c.weight;
                    parts.push((total, c.dist.sampler()?));
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::param("weight", total, "mixture weights sum to 1 within 1e-12"));
                }
                Sampler::Mixture(parts)
            }
        })
    }
}

enum Sampler {
    Constant(f64),
    Uniform(f64, f64),
    Beta(Beta<f64>, f64),
    Gamma(Gamma<f64>, f64, f64),
    /// Cumulative weight and component.
    Mixture(Vec<(f64, Sampler)>),
}

impl Sampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        Ok(match self {
            Sampler::Constant(v) => *v,
            Sampler::Uniform(lo, hi) => lo + (hi - lo) * rng.random::<f64>(),
            Sampler::Beta(dist, scale) => scale * dist.sample(rng),
            Sampler::Gamma(dist, lo, hi) => {
                for _ in 0..CLIP_MAX_ATTEMPTS {
                    let x = dist.sample(rng);
                    if x >= *lo && x <= *hi {
                        return Ok(x);
                    }
                }
                return Err(Error::Config(format!("gamma clip window [{lo}, {hi}] holds too little mass to sample")));
            }
            Sampler::Mixture(parts) => {
                let u = rng.random::<f64>() * parts.last().map_or(1.0, |p| p.0);
                let idx = parts.iter().position(|(cum, _)| u < *cum).unwrap_or(parts.len() - 1);
                return parts[idx].1.draw(rng);
            }
        })
    }
}

/// `n` draws from `dist`; draw `i` uses substream `(seed, i)`.
pub fn sample(dist: &DistributionSpec, n: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = dist.sampler()?;
    let streams = Substreams::new(seed);
    (0..n).into_par_iter().map(|i| sampler.draw(&mut streams.stream(i as u64))).collect()
}

/// Distribution recipes for the empirical parameter ranges.
pub mod recipes {
    use super::DistributionSpec;

    /// Effect sizes: gamma(k = 3.5, θ = 0.2) restricted to `[0.1, 1.5]`.
    pub fn d_empirical() -> DistributionSpec {
        DistributionSpec::gamma_clipped(3.5, 0.2, 0.1, 1.5)
    }

    pub fn b_uniform() -> DistributionSpec {
        DistributionSpec::uniform(0.0, 1.0)
    }

    /// Mostly exploratory research, values around 0.1.
    pub fn b_low() -> DistributionSpec {
        DistributionSpec::beta(1.1, 10.0, 1.0)
    }

    pub fn b_high() -> DistributionSpec {
        DistributionSpec::beta(10.0, 1.1, 1.0)
    }

    /// Equal mix of exploratory and confirmatory fields.
    pub fn b_bimodal() -> DistributionSpec {
        DistributionSpec::mixture([(0.5, b_low()), (0.5, b_high())])
    }

    /// 90% exploratory, 10% confirmatory.
    pub fn b_low_bimodal() -> DistributionSpec {
        DistributionSpec::mixture([(0.9, b_low()), (0.1, b_high())])
    }

    pub fn if_uniform() -> DistributionSpec {
        DistributionSpec::uniform(100.0, 1000.0)
    }

    pub fn if_low() -> DistributionSpec {
        DistributionSpec::beta(1.1, 10.0, 1000.0)
    }

    /// Symmetric middle case; beta(10, 10) is the symmetric member of the
    /// `{1.1, 10}` parameter family.
    pub fn if_medium() -> DistributionSpec {
        DistributionSpec::beta(10.0, 10.0, 1000.0)
    }

    pub fn if_high() -> DistributionSpec {
        DistributionSpec::beta(10.0, 1.1, 1000.0)
    }

    /// Named base-rate recipes.
    pub fn b_recipes() -> Vec<(&'static str, DistributionSpec)> {
        vec![("uniform", b_uniform()), ("bimodal", b_bimodal()), ("low", b_low()), ("low_bimodal", b_low_bimodal())]
    }

    /// Named income-factor recipes.
    pub fn if_recipes() -> Vec<(&'static str, DistributionSpec)> {
        vec![("uniform", if_uniform()), ("low", if_low()), ("medium", if_medium()), ("high", if_high())]
    }
}

fn default_draws() -> usize {
    1000
}

fn default_bins() -> usize {
    20
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_grid() -> SampleGrid {
    SampleGrid::default()
}

fn default_schema() -> String {
    SCENARIO_SCHEMA.to_string()
}

/// A population of niches to sample and evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default = "default_schema")]
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dist_b: DistributionSpec,
    pub dist_d: DistributionSpec,
    pub dist_if: DistributionSpec,
    #[serde(default = "default_draws")]
    pub draws: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub cet: Option<CetParams>,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    #[serde(default = "default_grid")]
    pub grid: SampleGrid,
}

impl ScenarioSpec {
    pub fn new(dist_b: DistributionSpec, dist_d: DistributionSpec, dist_if: DistributionSpec, seed: u64) -> Self {
        Self {
            schema: default_schema(),
            name: None,
            dist_b,
            dist_d,
            dist_if,
            draws: default_draws(),
            seed,
            alpha: DEFAULT_ALPHA,
            cet: None,
            histogram_bins: default_bins(),
            grid: SampleGrid::default(),
        }
    }

    pub fn with_cet(mut self, cet: CetParams) -> Self {
        self.cet = Some(cet);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Parse and validate a JSON config.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCENARIO_SCHEMA {
            return Err(Error::Config(format!("unsupported schema {:?}, expected {SCENARIO_SCHEMA:?}", self.schema)));
        }
        self.dist_b.validate()?;
        self.dist_d.validate()?;
        self.dist_if.validate()?;
        if !self.dist_d.strictly_positive() {
            return Err(Error::Config("dist_d must only produce values > 0".into()));
        }
        if !self.dist_if.strictly_positive() {
            return Err(Error::Config("dist_if must only produce values > 0".into()));
        }
        if self.draws == 0 {
            return Err(Error::param("draws", 0.0, "draws >= 1"));
        }
        if self.histogram_bins == 0 {
            return Err(Error::param("histogram_bins", 0.0, "histogram_bins >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", self.alpha, "0 < alpha < 1"));
        }
        if let Some(c) = &self.cet {
            c.validate()?;
        }
        self.grid.validate()
    }

    /// Annotations about how recipes were interpreted, for output metadata.
    pub fn notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if self.dist_if == recipes::if_medium() {
            notes.push(
                "medium IF distribution realized as 1000 x beta(10, 10), the symmetric member of the (1.1, 10) family"
                    .to_string(),
            );
        }
        if self.cet.is_some() {
            notes.push(
                "TOST bounds are in observed pooled-SD units; power_cet is exact (central t), no intersection bound"
                    .to_string(),
            );
        }
        notes
    }
}

/// One sampled niche at its equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DrawRecord {
    pub b: f64,
    pub d: f64,
    #[serde(rename = "if")]
    pub income_factor: f64,
    pub ess: u32,
    pub power_at_ess: f64,
    pub power_cet_at_ess: Option<f64>,
    pub tpr_at_ess: f64,
    pub ppv_at_ess: f64,
    /// Literature abundance weight, `tpr_at_ess / ess`.
    pub weight: f64,
}

/// Normalized histogram over `[lo, hi]` with equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub mass: Vec<f64>,
}

impl Histogram {
    /// Bin `values` with `weights` over `[0, 1]` and normalize to unit mass.
    pub fn unit_interval(bins: usize, values: &[f64], weights: &[f64]) -> Self {
        let mut mass = vec![0.0; bins];
        let mut total = 0.0;
        for (v, w) in values.iter().zip(weights) {
            let idx = ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
            mass[idx] += w;
            total += w;
        }
        if total > 0.0 {
            for m in &mut mass {
                *m /= total;
            }
        }
        Self { lo: 0.0, hi: 1.0, mass }
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.mass.len() as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.mass.len()).map(|i| self.lo + i as f64 * self.bin_width()).collect()
    }

    /// Mass of bins whose centers lie in `[lo, hi]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let w = self.bin_width();
        self.mass
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let c = self.lo + (*i as f64 + 0.5) * w;
                c >= lo && c <= hi
            })
            .map(|(_, m)| m)
            .sum()
    }

    /// Total variation distance to another histogram on the same bins.
    pub fn total_variation(&self, other: &Histogram) -> f64 {
        0.5 * self.mass.iter().zip(&other.mass).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub draws: Vec<DrawRecord>,
    /// TPR/ESS-weighted distribution of power at ESS.
    pub power_histogram: Histogram,
    pub power_cet_histogram: Option<Histogram>,
    pub unweighted_power_histogram: Histogram,
    /// Total variation between weighted and unweighted power histograms.
    pub weighting_tv_distance: f64,
    pub mean_ppv: f64,
    pub mean_power: f64,
    pub mean_power_cet: Option<f64>,
}

fn weighted_mean(values: impl Iterator<Item = f64>, weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    values.zip(weights).map(|(v, w)| v * w).sum::<f64>() / total
}

/// Sample niches, solve each for its equilibrium and aggregate.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioResult> {
    spec.validate()?;
    let eval = GridEvaluator::new(spec.grid, spec.alpha, spec.cet.map(|c| c.alpha_cet))?;
    let bs = sample(&spec.dist_b, spec.draws, derive_seed(spec.seed, 1))?;
    let ds = sample(&spec.dist_d, spec.draws, derive_seed(spec.seed, 2))?;
    let ifs = sample(&spec.dist_if, spec.draws, derive_seed(spec.seed, 3))?;

    let draws = (0..spec.draws)
        .into_par_iter()
        .map(|i| {
            let mut p = ModelParams::new(bs[i].clamp(0.0, 1.0), ds[i], ifs[i]).with_alpha(spec.alpha);
            p.cet = spec.cet;
            let eq = eval.equilibrium(&p)?;
            Ok(DrawRecord {
                b: p.b,
                d: p.d,
                income_factor: p.income_factor,
                ess: eq.ess,
                power_at_ess: eq.power_at_ess,
                power_cet_at_ess: eq.power_cet_at_ess,
                tpr_at_ess: eq.tpr_at_ess,
                ppv_at_ess: eq.ppv_at_ess,
                weight: eq.tpr_at_ess / f64::from(eq.ess),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let weights: Vec<f64> = draws.iter().map(|r| r.weight).collect();
    let ones = vec![1.0; draws.len()];
    let powers: Vec<f64> = draws.iter().map(|r| r.power_at_ess).collect();
    let power_histogram = Histogram::unit_interval(spec.histogram_bins, &powers, &weights);
    let unweighted_power_histogram = Histogram::unit_interval(spec.histogram_bins, &powers, &ones);
    let cet_powers: Option<Vec<f64>> = draws.iter().map(|r| r.power_cet_at_ess).collect();
    Ok(ScenarioResult {
        weighting_tv_distance: power_histogram.total_variation(&unweighted_power_histogram),
        power_cet_histogram: cet_powers.as_ref().map(|v| Histogram::unit_interval(spec.histogram_bins, v, &weights)),
        mean_ppv: weighted_mean(draws.iter().map(|r| r.ppv_at_ess), &weights),
        mean_power: weighted_mean(powers.iter().copied(), &weights),
        mean_power_cet: cet_powers.map(|v| weighted_mean(v.into_iter(), &weights)),
        power_histogram,
        unweighted_power_histogram,
        draws,
    })
}
