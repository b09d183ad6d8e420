//! Serialization of results: CSV tables, JSON documents and small SVG plots.
//!
//! All floating-point output is rounded to 12 significant digits so that
//! reruns diff cleanly. CSV headers are a stable contract.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{EquilibriumResult, ModelParams, ProfitCurve, SampleGrid, SweepRow, SweepVar};
use crate::scenarios::{Histogram, ScenarioResult, ScenarioSpec};

pub const SIGNIFICANT_DIGITS: usize = 12;
pub const SWEEP_HEADER: &str = "vary,ess,sss,power,power_cet,tpr,ppv,profit";
pub const ESS_HEADER: &str = "b,d,if,alpha,ess,sss,power,power_cet,tpr,ppv,profit";
pub const SCENARIO_HEADER: &str = "draw,b,d,if,ess,power,power_cet,tpr,ppv,weight";
pub const SUMMARY_SCHEMA: &str = "esslab.scenario-summary.v1";

/// Round to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest decimal form of `x` after rounding.
pub fn fmt_num(x: f64) -> String {
    format!("{}", round_sig(x))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with every float rounded.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Config(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&round_value(v)).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Flat record printed by `esslab ess`.
#[derive(Debug, Clone, Serialize)]
pub struct EssRecord {
    pub b: f64,
    pub d: f64,
    #[serde(rename = "if")]
    pub income_factor: f64,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_cet: Option<f64>,
    pub ess: u32,
    pub sss: u32,
    pub power: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_cet: Option<f64>,
    pub tpr: f64,
    pub ppv: f64,
    pub profit: f64,
}

impl EssRecord {
    pub fn new(p: &ModelParams, eq: &EquilibriumResult) -> Self {
        Self {
            b: p.b,
            d: p.d,
            income_factor: p.income_factor,
            alpha: p.alpha,
            delta_frac: p.cet.map(|c| c.delta_frac),
            alpha_cet: p.cet.map(|c| c.alpha_cet),
            ess: eq.ess,
            sss: eq.sss,
            power: eq.power_at_ess,
            power_cet: eq.power_cet_at_ess,
            tpr: eq.tpr_at_ess,
            ppv: eq.ppv_at_ess,
            profit: eq.profit_at_ess,
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{ESS_HEADER}\n{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_num(self.b),
            fmt_num(self.d),
            fmt_num(self.income_factor),
            fmt_num(self.alpha),
            self.ess,
            self.sss,
            fmt_num(self.power),
            fmt_opt(self.power_cet),
            fmt_num(self.tpr),
            fmt_num(self.ppv),
            fmt_num(self.profit),
        )
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let e = &r.result;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_num(r.value),
            e.ess,
            e.sss,
            fmt_num(e.power_at_ess),
            fmt_opt(e.power_cet_at_ess),
            fmt_num(e.tpr_at_ess),
            fmt_num(e.ppv_at_ess),
            fmt_num(e.profit_at_ess),
        ));
    }
    out
}

#[derive(Serialize)]
struct SweepJsonRow {
    vary: f64,
    ess: u32,
    sss: u32,
    power: f64,
    power_cet: Option<f64>,
    tpr: f64,
    ppv: f64,
    profit: f64,
}

#[derive(Serialize)]
struct SweepJson<'a> {
    vary: &'a str,
    rows: Vec<SweepJsonRow>,
}

pub fn sweep_json(vary: SweepVar, rows: &[SweepRow]) -> Result<String> {
    to_json(&SweepJson {
        vary: vary.name(),
        rows: rows
            .iter()
            .map(|r| SweepJsonRow {
                vary: r.value,
                ess: r.result.ess,
                sss: r.result.sss,
                power: r.result.power_at_ess,
                power_cet: r.result.power_cet_at_ess,
                tpr: r.result.tpr_at_ess,
                ppv: r.result.ppv_at_ess,
                profit: r.result.profit_at_ess,
            })
            .collect(),
    })
}

pub fn scenario_csv(result: &ScenarioResult) -> String {
    let mut out = String::from(SCENARIO_HEADER);
    out.push('\n');
    for (i, r) in result.draws.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            i,
            fmt_num(r.b),
            fmt_num(r.d),
            fmt_num(r.income_factor),
            r.ess,
            fmt_num(r.power_at_ess),
            fmt_opt(r.power_cet_at_ess),
            fmt_num(r.tpr_at_ess),
            fmt_num(r.ppv_at_ess),
            fmt_num(r.weight),
        ));
    }
    out
}

#[derive(Serialize)]
struct HistogramJson<'a> {
    edges: Vec<f64>,
    weighted: &'a [f64],
    unweighted: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    weighted_cet: Option<&'a [f64]>,
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    schema: &'static str,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<&'a str>,
    seed: u64,
    draws: usize,
    alpha: f64,
    cet: Option<crate::model::CetParams>,
    grid: GridJson,
    mean_ppv: f64,
    mean_power: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_power_cet: Option<f64>,
    weighting: &'static str,
    weighting_tv_distance: f64,
    power_histogram: HistogramJson<'a>,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct GridJson {
    s_min: u32,
    s_max: u32,
    step: u32,
}

impl From<SampleGrid> for GridJson {
    fn from(g: SampleGrid) -> Self {
        Self { s_min: g.s_min, s_max: g.s_max, step: SampleGrid::STEP }
    }
}

pub fn scenario_summary_json(spec: &ScenarioSpec, result: &ScenarioResult) -> Result<String> {
    to_json(&SummaryJson {
        schema: SUMMARY_SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        name: spec.name.as_deref(),
        seed: spec.seed,
        draws: spec.draws,
        alpha: spec.alpha,
        cet: spec.cet,
        grid: spec.grid.into(),
        mean_ppv: result.mean_ppv,
        mean_power: result.mean_power,
        mean_power_cet: result.mean_power_cet,
        weighting: "tpr_at_ess / ess",
        weighting_tv_distance: result.weighting_tv_distance,
        power_histogram: HistogramJson {
            edges: result.power_histogram.edges(),
            weighted: &result.power_histogram.mass,
            unweighted: &result.unweighted_power_histogram.mass,
            weighted_cet: result.power_cet_histogram.as_ref().map(|h| h.mass.as_slice()),
        },
        notes: spec.notes(),
    })
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const MARGIN: f64 = 56.0;

fn svg_frame(title: &str, x_label: &str, y_label: &str, x_range: (f64, f64), y_range: (f64, f64)) -> String {
    let (x0, x1) = (MARGIN, SVG_W - MARGIN / 2.0);
    let (y0, y1) = (SVG_H - MARGIN, MARGIN / 2.0);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>\n",
        SVG_W / 2.0,
        escape(title),
        (x0 + x1) / 2.0,
        SVG_H - 12.0,
        escape(x_label),
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label),
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x_range.0 + f * (x_range.1 - x_range.0);
        let yv = y_range.0 + f * (y_range.1 - y_range.0);
        let px = x0 + f * (x1 - x0);
        let py = y0 + f * (y1 - y0);
        s.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            y0 + 16.0,
            fmt_tick(xv),
            x0 - 6.0,
            py + 4.0,
            fmt_tick(yv),
        ));
    }
    s
}

fn fmt_tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    format!("{r}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Bar chart of a histogram's mass.
pub fn histogram_svg(h: &Histogram, title: &str, x_label: &str) -> String {
    let top = h.mass.iter().copied().fold(0.0, f64::max).max(1e-12);
    let y_max = (top * 10.0).ceil() / 10.0;
    let mut s = svg_frame(title, x_label, "weighted fraction", (h.lo, h.hi), (0.0, y_max));
    let (x0, x1) = (MARGIN, SVG_W - MARGIN / 2.0);
    let (y0, y1) = (SVG_H - MARGIN, MARGIN / 2.0);
    let bw = (x1 - x0) / h.mass.len() as f64;
    for (i, m) in h.mass.iter().enumerate() {
        let height = (m / y_max) * (y0 - y1);
        s.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#4a6fa5\" stroke=\"white\"/>\n",
            x0 + i as f64 * bw,
            y0 - height,
            bw,
            height
        ));
    }
    s.push_str("</svg>\n");
    s
}

/// Polyline plot of `ys` against `xs`.
pub fn line_svg(xs: &[f64], ys: &[f64], title: &str, x_label: &str, y_label: &str) -> String {
    let lo = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut xa, mut xb) = (lo(xs), hi(xs));
    let (mut ya, mut yb) = (lo(ys).min(0.0), hi(ys));
    if !(xb > xa) {
        xa -= 0.5;
        xb += 0.5;
    }
    if !(yb > ya) {
        ya -= 0.5;
        yb += 0.5;
    }
    let mut s = svg_frame(title, x_label, y_label, (xa, xb), (ya, yb));
    let (x0, x1) = (MARGIN, SVG_W - MARGIN / 2.0);
    let (y0, y1) = (SVG_H - MARGIN, MARGIN / 2.0);
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            format!("{:.2},{:.2}", x0 + (x - xa) / (xb - xa) * (x1 - x0), y0 - (y - ya) / (yb - ya) * (y0 - y1))
        })
        .collect();
    s.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"{}\"/>\n</svg>\n",
        pts.join(" ")
    ));
    s
}

/// Profit against sample size.
pub fn profit_svg(curve: &ProfitCurve, title: &str) -> String {
    let xs: Vec<f64> = curve.s_grid.iter().map(|&s| f64::from(s)).collect();
    line_svg(&xs, &curve.profit, title, "sample size per group (s)", "profit (MU)")
}
