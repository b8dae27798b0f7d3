//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input (validation, I/O, parse),
//! 2 follower solver non-convergence, 64 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cost_model::cost_breakdown;
use crate::error::{Error, Result};
use crate::experiments::{
    compare_with, price_sweep_with, write_comparison_csv, write_sweep_csv, AtoPrice,
};
use crate::follower::{verify_nash, SolverOptions};
use crate::leader::{solve_stackelberg_with, SearchOptions, StackelbergSolution};
use crate::scenario::{calibration, generate_scenario, Scenario, ScenarioSpec, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Optional JSON file supplying defaults for any subcommand; flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub scenario: Option<PathBuf>,
    pub spec: Option<ScenarioSpec>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub sweep_step: Option<f64>,
    pub tol: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub grid_step: Option<f64>,
    pub refine_tol: Option<f64>,
    pub ato_price: Option<AtoPrice>,
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: CliConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario.is_some() && self.spec.is_some() {
            return Err(Error::InvalidArgument {
                name: "config",
                reason: "give either `scenario` or `spec`, not both".into(),
            });
        }
        if let Some(step) = self.sweep_step {
            if !(step > 0.0) {
                return Err(Error::InvalidArgument {
                    name: "sweep_step",
                    reason: format!("must be > 0, got {step}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "stackelberg-offload",
    version,
    about = "Uniform-price Stackelberg offloading solver"
)]
struct Cli {
    /// JSON file with default settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct Source {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "defaults")]
    scenario: Option<PathBuf>,
    /// Generate the 8-user default scenario instead of reading one.
    #[arg(long)]
    defaults: bool,
    /// Seed for `--defaults`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
struct Tuning {
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// Coarse price grid of the revenue search, cents.
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    refine_tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a scenario from a spec file (or the defaults) and write it as JSON.
    GenScenario {
        #[arg(long, conflicts_with = "defaults")]
        spec: Option<PathBuf>,
        #[arg(long)]
        defaults: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the default scenario spec as JSON.
    DefaultSpec {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the per-user cost coefficients.
    Breakdown {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the Stackelberg price and follower equilibrium.
    Solve {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Revenue and demand over the price grid, as CSV.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ALP / ATO / Stackelberg comparison as CSV plus a JSON report.
    Compare {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        tuning: Tuning,
        /// Flat price for the all-offload baseline; defaults to the solved price.
        #[arg(long)]
        ato_price: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON report path; defaults to the CSV path with a `.json` extension.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Debug, Serialize)]
struct SolutionFile<'a> {
    schema_version: u32,
    #[serde(flatten)]
    solution: &'a StackelbergSolution,
    max_deviation_gain: f64,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_INVALID,
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(RunError::Run(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

enum RunError {
    Usage(String),
    Run(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Run(e)
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, bytes)?;
            log::info!("wrote {}", path.display());
        }
        None => io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text.into_bytes())
}

struct Context {
    cfg: CliConfig,
}

impl Context {
    fn out_path(&self, out: Option<PathBuf>, default_name: Option<&str>) -> Option<PathBuf> {
        match (out, &self.cfg.output_dir) {
            (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
            (Some(p), _) => Some(p),
            (None, Some(dir)) => default_name.map(|n| dir.join(n)),
            (None, None) => None,
        }
    }

    fn scenario(&self, src: Source) -> Result<Scenario, RunError> {
        let seed = src.seed.or(self.cfg.seed);
        if let Some(path) = src.scenario {
            return Ok(Scenario::load(&path)?);
        }
        if src.defaults {
            let seed = seed.unwrap_or(calibration::DEFAULT_SEED);
            return Ok(generate_scenario(&ScenarioSpec::defaults(), seed)?);
        }
        if let Some(path) = &self.cfg.scenario {
            return Ok(Scenario::load(path)?);
        }
        if let Some(spec) = &self.cfg.spec {
            let seed = seed.unwrap_or(calibration::DEFAULT_SEED);
            return Ok(generate_scenario(spec, seed)?);
        }
        Err(RunError::Usage(
            "no scenario: pass --scenario <file>, --defaults, or a config with `scenario`/`spec`"
                .into(),
        ))
    }

    fn search(&self, t: &Tuning) -> SearchOptions {
        let d = SearchOptions::default();
        SearchOptions {
            grid_step: t.grid_step.or(self.cfg.grid_step).unwrap_or(d.grid_step),
            refine_tol: t.refine_tol.or(self.cfg.refine_tol).unwrap_or(d.refine_tol),
            solver: SolverOptions {
                tol: t.tol.or(self.cfg.tol).unwrap_or(d.solver.tol),
                max_sweeps: t
                    .max_sweeps
                    .or(self.cfg.max_sweeps)
                    .unwrap_or(d.solver.max_sweeps),
            },
        }
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    let cfg = match &cli.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    let ctx = Context { cfg };

    match cli.command {
        Command::GenScenario {
            spec,
            defaults,
            seed,
            out,
        } => {
            let spec = match (spec, defaults, &ctx.cfg.spec) {
                (Some(path), _, _) => {
                    serde_json::from_str(&fs::read_to_string(path).map_err(Error::from)?)
                        .map_err(Error::from)?
                }
                (None, true, _) => ScenarioSpec::defaults(),
                (None, false, Some(spec)) => spec.clone(),
                (None, false, None) => {
                    return Err(RunError::Usage(
                        "gen-scenario needs --spec <file> or --defaults".into(),
                    ))
                }
            };
            let seed = seed
                .or(ctx.cfg.seed)
                .ok_or_else(|| RunError::Usage("gen-scenario needs --seed <u64>".into()))?;
            let scenario = generate_scenario(&spec, seed)?;
            let out = ctx.out_path(out, Some("scenario.json"));
            emit(out.as_deref(), &json_bytes(&scenario)?)?;
        }
        Command::DefaultSpec { out } => {
            let out = ctx.out_path(out, Some("spec.json"));
            emit(out.as_deref(), &json_bytes(&ScenarioSpec::defaults())?)?;
        }
        Command::Breakdown { source, out } => {
            let scenario = ctx.scenario(source)?;
            let bd = cost_breakdown(&scenario)?;
            let out = ctx.out_path(out, None);
            emit(out.as_deref(), &json_bytes(&bd)?)?;
        }
        Command::Solve {
            source,
            tuning,
            out,
        } => {
            let scenario = ctx.scenario(source)?;
            let opts = ctx.search(&tuning);
            let bd = cost_breakdown(&scenario)?;
            let solution = solve_stackelberg_with(&bd, &scenario.price_bounds, &opts)?;
            log::info!(
                "price {} cents, revenue {} cents, regime {}",
                solution.price_cents,
                solution.revenue_cents,
                solution.regime
            );
            let file = SolutionFile {
                schema_version: SCHEMA_VERSION,
                max_deviation_gain: verify_nash(
                    &solution.equilibrium,
                    solution.price_cents,
                    &bd,
                    1e-3,
                ),
                solution: &solution,
            };
            let out = ctx.out_path(out, None);
            emit(out.as_deref(), &json_bytes(&file)?)?;
        }
        Command::Sweep {
            source,
            tuning,
            step,
            out,
        } => {
            let scenario = ctx.scenario(source)?;
            let opts = ctx.search(&tuning);
            let step = step.or(ctx.cfg.sweep_step).unwrap_or(1.0);
            let bd = cost_breakdown(&scenario)?;
            let rows = price_sweep_with(&bd, &scenario.price_bounds, step, &opts)?;
            let mut buf = Vec::new();
            write_sweep_csv(&rows, &mut buf)?;
            let out = ctx.out_path(out, Some("sweep.csv"));
            emit(out.as_deref(), &buf)?;
            if let Some(bad) = rows
                .iter()
                .find(|r| r.regime == crate::experiments::RowRegime::NotConverged)
            {
                return Err(RunError::Run(Error::NonConvergence {
                    price: bad.price_cents,
                    sweeps: opts.solver.max_sweeps,
                    residual: f64::NAN,
                    last: bad.alphas.clone(),
                }));
            }
        }
        Command::Compare {
            source,
            tuning,
            ato_price,
            out,
            json,
        } => {
            let scenario = ctx.scenario(source)?;
            let opts = ctx.search(&tuning);
            let policy = match ato_price {
                Some(p) => AtoPrice::Fixed(p),
                None => ctx.cfg.ato_price.unwrap_or_default(),
            };
            let report = compare_with(&scenario, policy, &opts)?;
            let mut buf = Vec::new();
            write_comparison_csv(&report, &mut buf)?;
            let out = ctx.out_path(out, Some("compare.csv"));
            emit(out.as_deref(), &buf)?;
            let json = ctx
                .out_path(json, None)
                .or_else(|| out.as_ref().map(|p| p.with_extension("json")));
            if let Some(path) = json {
                emit(Some(&path), &json_bytes(&report)?)?;
            }
        }
    }
    Ok(())
}
