//! The `esslab` command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error, 3 internal numeric failure. Only the requested payload goes to
//! stdout; diagnostics go to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::model::{profit_curve, sweep, CetParams, ModelParams, SampleGrid, SweepVar, DEFAULT_ALPHA_CET};
use crate::montecarlo::{verify, VerifyLattice, DEFAULT_REPLICATES};
use crate::output;
use crate::scenarios::{run_scenario, ScenarioSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "ESSLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "esslab", version, about = "Equilibrium sample sizes under publication incentives")]
pub struct Cli {
    /// Seed for stochastic subcommands (overrides a config's seed)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format; each subcommand has its own default
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the payload here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Smallest per-group sample size on the grid
    #[arg(long, global = true)]
    pub s_min: Option<u32>,
    /// Largest per-group sample size on the grid
    #[arg(long, global = true)]
    pub s_max: Option<u32>,
    /// Type-1 error rate of the significance test
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Args)]
pub struct CetArgs {
    /// Enable conditional equivalence testing with bound Δ = FRAC·d
    #[arg(long, value_name = "FRAC")]
    pub cet_delta: Option<f64>,
    /// Type-1 error of each one-sided equivalence test
    #[arg(long, requires = "cet_delta")]
    pub alpha_cet: Option<f64>,
}

impl CetArgs {
    fn params(&self) -> Option<CetParams> {
        self.cet_delta
            .map(|delta_frac| CetParams { delta_frac, alpha_cet: self.alpha_cet.unwrap_or(DEFAULT_ALPHA_CET) })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium sample size and rates for one niche
    Ess {
        #[arg(long)]
        b: f64,
        #[arg(long)]
        d: f64,
        /// Income factor: sample pairs purchasable per publication
        #[arg(long = "if", value_name = "IF")]
        income_factor: f64,
        #[command(flatten)]
        cet: CetArgs,
    },
    /// Equilibrium across a grid of one varied input
    Sweep {
        #[arg(long, value_enum)]
        vary: VaryArg,
        /// Values as START:STOP:STEP (inclusive) or a comma list
        #[arg(long)]
        grid: String,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long = "if", value_name = "IF")]
        income_factor: Option<f64>,
        #[command(flatten)]
        cet: CetArgs,
    },
    /// Sample a population of niches from a JSON config
    Scenario {
        config: PathBuf,
        /// Also write the JSON summary here
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Also write the weighted power histogram as SVG here
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Check analytic power against Monte Carlo simulation
    Verify {
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        replicates: u64,
        /// Comma list of effect sizes
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.2, 0.5, 0.8, 1.2])]
        d_values: Vec<f64>,
        /// Comma list of per-group sample sizes
        #[arg(long, value_delimiter = ',', default_values_t = [4, 10, 20, 64, 200])]
        s_values: Vec<u32>,
        /// Comma list of TOST equivalence bounds to check as well
        #[arg(long, value_delimiter = ',')]
        tost_deltas: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_ALPHA_CET)]
        alpha_cet: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VaryArg {
    B,
    D,
    If,
}

impl From<VaryArg> for SweepVar {
    fn from(v: VaryArg) -> Self {
        match v {
            VaryArg::B => SweepVar::B,
            VaryArg::D => SweepVar::D,
            VaryArg::If => SweepVar::IncomeFactor,
        }
    }
}

/// Parse `START:STOP:STEP` (inclusive of STOP) or `v1,v2,...`; result sorted.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Config(format!("malformed grid {spec:?}: {why}"));
    let mut values = if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("expected numbers"))?;
        let [start, stop, step] = parts[..] else {
            return Err(bad("expected START:STOP:STEP"));
        };
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(bad("need STEP > 0 and START <= STOP"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        if n > 1_000_000 {
            return Err(bad("too many points"));
        }
        (0..=n).map(|i| output::round_sig(start + i as f64 * step)).collect::<Vec<_>>()
    } else {
        spec.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad("expected numbers")))
            .collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad("no finite values"));
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

struct Context {
    grid: SampleGrid,
    alpha: Option<f64>,
    format: Option<Format>,
    out: Option<PathBuf>,
    seed: Option<u64>,
}

impl Context {
    fn emit(&self, payload: &str) -> Result<()> {
        match &self.out {
            Some(path) => write_file(path, payload),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(payload.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|source| Error::Io { path: "<stdout>".into(), source })
            }
        }
    }
}

fn write_file(path: &Path, payload: &str) -> Result<()> {
    std::fs::write(path, payload).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn configure_threads() {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                // fails only if a pool already exists, which is fine
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("esslab: ignoring {THREADS_ENV}={v:?}, expected a positive integer"),
        }
    }
}

/// Run the CLI on `args` (including the program name); returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("esslab: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let defaults = SampleGrid::default();
    let grid = SampleGrid::new(cli.s_min.unwrap_or(defaults.s_min), cli.s_max.unwrap_or(defaults.s_max))?;
    let ctx = Context { grid, alpha: cli.alpha, format: cli.format, out: cli.out, seed: cli.seed };
    match cli.command {
        Command::Ess { b, d, income_factor, cet } => cmd_ess(&ctx, b, d, income_factor, cet.params()),
        Command::Sweep { vary, grid, b, d, income_factor, cet } => {
            cmd_sweep(&ctx, vary.into(), &grid, b, d, income_factor, cet.params())
        }
        Command::Scenario { config, summary, svg } => cmd_scenario(&ctx, &config, summary.as_deref(), svg.as_deref()),
        Command::Verify { replicates, d_values, s_values, tost_deltas, alpha_cet } => {
            let lattice = VerifyLattice {
                d_values,
                s_values,
                tost_deltas,
                alpha: ctx.alpha.unwrap_or(crate::model::DEFAULT_ALPHA),
                alpha_cet,
                replicates,
                seed: ctx.seed.unwrap_or(VerifyLattice::default().seed),
            };
            cmd_verify(&ctx, &lattice)
        }
    }
}

fn model_params(ctx: &Context, b: f64, d: f64, income_factor: f64, cet: Option<CetParams>) -> Result<ModelParams> {
    let mut p = ModelParams::new(b, d, income_factor);
    if let Some(a) = ctx.alpha {
        p.alpha = a;
    }
    p.cet = cet;
    p.validate()?;
    Ok(p)
}

fn cmd_ess(ctx: &Context, b: f64, d: f64, income_factor: f64, cet: Option<CetParams>) -> Result<i32> {
    let p = model_params(ctx, b, d, income_factor, cet)?;
    let curve = profit_curve(&p, ctx.grid)?;
    let record = output::EssRecord::new(&p, &curve.equilibrium());
    let payload = match ctx.format.unwrap_or(Format::Json) {
        Format::Json => output::to_json(&record)?,
        Format::Csv => record.to_csv(),
        Format::Svg => {
            output::profit_svg(&curve, &format!("profit, b={b} d={d} IF={income_factor}; ESS={}", record.ess))
        }
    };
    ctx.emit(&payload)?;
    Ok(EXIT_OK)
}

fn cmd_sweep(
    ctx: &Context,
    vary: SweepVar,
    grid_spec: &str,
    b: Option<f64>,
    d: Option<f64>,
    income_factor: Option<f64>,
    cet: Option<CetParams>,
) -> Result<i32> {
    let values = parse_grid(grid_spec)?;
    let need = |name: &'static str, v: Option<f64>, varied: bool| -> Result<f64> {
        match (v, varied) {
            (_, true) => Ok(values[0]),
            (Some(x), false) => Ok(x),
            (None, false) => Err(Error::Config(format!("--{name} is required unless it is the varied input"))),
        }
    };
    let base = model_params(
        ctx,
        need("b", b, vary == SweepVar::B)?,
        need("d", d, vary == SweepVar::D)?,
        need("if", income_factor, vary == SweepVar::IncomeFactor)?,
        cet,
    )?;
    let rows = sweep(&base, vary, &values, ctx.grid)?;
    let payload = match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => output::sweep_csv(&rows),
        Format::Json => output::sweep_json(vary, &rows)?,
        Format::Svg => {
            let ys: Vec<f64> = rows.iter().map(|r| r.result.power_at_ess).collect();
            output::line_svg(&values, &ys, "power at ESS", vary.name(), "power")
        }
    };
    ctx.emit(&payload)?;
    Ok(EXIT_OK)
}

fn cmd_scenario(ctx: &Context, config: &Path, summary: Option<&Path>, svg: Option<&Path>) -> Result<i32> {
    let text =
        std::fs::read_to_string(config).map_err(|source| Error::Io { path: config.display().to_string(), source })?;
    let mut spec = ScenarioSpec::from_json(&text)?;
    if let Some(seed) = ctx.seed {
        spec.seed = seed;
    }
    if let Some(a) = ctx.alpha {
        spec.alpha = a;
    }
    let defaults = SampleGrid::default();
    if ctx.grid != defaults {
        spec.grid = ctx.grid;
    }
    spec.validate()?;
    let result = run_scenario(&spec)?;
    let svg_text = || output::histogram_svg(&result.power_histogram, "power at ESS (TPR/ESS weighted)", "power");
    let payload = match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => output::scenario_csv(&result),
        Format::Json => output::scenario_summary_json(&spec, &result)?,
        Format::Svg => svg_text(),
    };
    ctx.emit(&payload)?;
    if let Some(path) = summary {
        write_file(path, &output::scenario_summary_json(&spec, &result)?)?;
    }
    if let Some(path) = svg {
        write_file(path, &svg_text())?;
    }
    eprintln!(
        "esslab: {} draws, mean power {:.3}, mean PPV {:.3}",
        result.draws.len(),
        result.mean_power,
        result.mean_ppv
    );
    Ok(EXIT_OK)
}

fn cmd_verify(ctx: &Context, lattice: &VerifyLattice) -> Result<i32> {
    if ctx.format.is_some_and(|f| f != Format::Json) {
        return Err(Error::Config("verify only emits JSON".into()));
    }
    let report = verify(lattice)?;
    ctx.emit(&output::to_json(&report)?)?;
    eprintln!("esslab: {} of {} lattice points outside 3 standard errors", report.failures, report.points.len());
    Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}
