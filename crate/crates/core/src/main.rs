use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::warn;

use stagefreq::hazard::CovariateRef;
use stagefreq::pipeline::{self, Artifacts, RunConfig, StructureChoice};
use stagefreq::uq::Measure;
use stagefreq::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "stagefreq", version, about = "Bayesian frequency analysis of annual-maxima river stage")]
struct Cli {
    /// Base seed for every sampling stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving all outputs.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate and align a stage record with a seasonal climate index.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Dataset file name, written under the output directory.
        #[arg(long)]
        out: Option<String>,
    },
    /// Change-point and trend screening.
    Assess {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Sample one posterior ensemble.
    Fit {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        chain: ChainArgs,
        /// gauss-wide, gauss-narrow, uniform or gauss:<variance>.
        #[arg(long)]
        prior: Option<String>,
        /// stationary, nonstationary or auto.
        #[arg(long)]
        structure: Option<StructureChoice>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Return-level curve and survival functions from an ensemble.
    Levels {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        hazard: HazardArgs,
        #[arg(long)]
        ensemble: Option<PathBuf>,
    },
    /// Recurrence of stationary design levels under a nonstationary ensemble.
    Equivalent {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        hazard: HazardArgs,
        /// Nonstationary ensemble.
        #[arg(long)]
        ensemble: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        stationary_level: Option<f64>,
        #[arg(long)]
        stationary_ensemble: Option<PathBuf>,
    },
    /// Prior / structure / parameter decomposition of return-level uncertainty.
    Sensitivity {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        hazard: HazardArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Ingest, assess, fit every cell, levels, equivalents and sensitivity.
    Report {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        hazard: HazardArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long)]
    stage: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Aligned dataset written by `ingest`.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Inclusive covariate month window, e.g. 6:11.
    #[arg(long, value_parser = parse_months)]
    months: Option<(u8, u8)>,
    #[arg(long)]
    min_length: Option<usize>,
}

#[derive(Args, Debug)]
struct ChainArgs {
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Write every n-th retained draw.
    #[arg(long)]
    thin: Option<usize>,
}

#[derive(Args, Debug)]
struct HazardArgs {
    /// Comma-separated return periods in years.
    #[arg(long, value_delimiter = ',')]
    periods: Option<Vec<f64>>,
    /// last-year, mean, or a fixed covariate value.
    #[arg(long, allow_negative_numbers = true)]
    covariate_ref: Option<CovariateRef>,
    #[arg(long)]
    credible_mass: Option<f64>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Repeatable: range, variance.
    #[arg(long)]
    measure: Vec<Measure>,
    /// Comma-separated prior menu.
    #[arg(long, value_delimiter = ',')]
    priors: Option<Vec<String>>,
    #[arg(long)]
    parameter_scenarios: Option<usize>,
}

fn parse_months(s: &str) -> std::result::Result<(u8, u8), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected START:END, got '{s}'"))?;
    let a: u8 = a.trim().parse().map_err(|_| format!("bad start month '{a}'"))?;
    let b: u8 = b.trim().parse().map_err(|_| format!("bad end month '{b}'"))?;
    Ok((a, b))
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl InputArgs {
    fn apply(self, c: &mut RunConfig) {
        if self.stage.is_some() {
            c.stage = self.stage;
        }
        if self.index.is_some() {
            c.index = self.index;
        }
        if self.meta.is_some() {
            c.meta = self.meta;
        }
        if self.dataset.is_some() {
            c.dataset = self.dataset;
        }
        set(&mut c.months, self.months);
        set(&mut c.min_length, self.min_length);
    }
}

impl ChainArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.iterations, self.iterations);
        set(&mut c.burn_in, self.burn_in);
        set(&mut c.thin, self.thin);
    }
}

impl HazardArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.periods, self.periods);
        set(&mut c.covariate_ref, self.covariate_ref);
        set(&mut c.credible_mass, self.credible_mass);
    }
}

impl GridArgs {
    fn apply(self, c: &mut RunConfig) {
        if !self.measure.is_empty() {
            c.measures = self.measure;
        }
        set(&mut c.priors, self.priors);
        set(&mut c.parameter_scenarios, self.parameter_scenarios);
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn finish(name: &str, artifacts: Artifacts, config: &RunConfig) -> Result<()> {
    for w in &artifacts.warnings {
        warn!("{w}");
    }
    let manifest = artifacts.commit(name, config)?;
    for f in &manifest.outputs {
        eprintln!("{}", config.out_dir.join(f).display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut c = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut c.seed, cli.seed.map(Some));
    set(&mut c.out_dir, cli.out_dir);

    match cli.command {
        Command::Ingest { input, out } => {
            input.apply(&mut c);
            let mut artifacts = pipeline::cmd_ingest(&c)?;
            if let Some(name) = out {
                artifacts.rename("dataset.json", &name);
            }
            finish("ingest", artifacts, &c)
        }
        Command::Assess { input, alpha } => {
            input.apply(&mut c);
            set(&mut c.alpha, alpha);
            let (assessment, artifacts) = pipeline::cmd_assess(&c)?;
            print_json(&assessment)?;
            finish("assess", artifacts, &c)
        }
        Command::Fit { input, chain, prior, structure, alpha } => {
            input.apply(&mut c);
            chain.apply(&mut c);
            set(&mut c.prior, prior);
            set(&mut c.structure, structure);
            set(&mut c.alpha, alpha);
            let (ensemble, artifacts) = pipeline::cmd_fit(&c)?;
            eprintln!(
                "{} draws, acceptance {:.3}",
                ensemble.len(),
                ensemble.acceptance_rate
            );
            finish("fit", artifacts, &c)
        }
        Command::Levels { input, hazard, ensemble } => {
            input.apply(&mut c);
            hazard.apply(&mut c);
            if ensemble.is_some() {
                c.ensemble = ensemble;
            }
            let (curve, artifacts) = pipeline::cmd_levels(&c)?;
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            print!("{}", String::from_utf8_lossy(&buf));
            finish("levels", artifacts, &c)
        }
        Command::Equivalent { input, hazard, ensemble, stationary_level, stationary_ensemble } => {
            input.apply(&mut c);
            hazard.apply(&mut c);
            if ensemble.is_some() {
                c.ensemble = ensemble;
            }
            if stationary_level.is_some() {
                c.stationary_level = stationary_level;
            }
            if stationary_ensemble.is_some() {
                c.stationary_ensemble = stationary_ensemble;
            }
            let (entries, artifacts) = pipeline::cmd_equivalent(&c)?;
            print_json(&entries)?;
            finish("equivalent", artifacts, &c)
        }
        Command::Sensitivity { input, hazard, grid, chain } => {
            input.apply(&mut c);
            hazard.apply(&mut c);
            grid.apply(&mut c);
            chain.apply(&mut c);
            let (report, artifacts) = pipeline::cmd_sensitivity(&c)?;
            print!("{}", String::from_utf8_lossy(&report.to_csv()?));
            finish("sensitivity", artifacts, &c)
        }
        Command::Report { input, hazard, grid, chain, alpha } => {
            input.apply(&mut c);
            hazard.apply(&mut c);
            grid.apply(&mut c);
            chain.apply(&mut c);
            set(&mut c.alpha, alpha);
            let artifacts = pipeline::cmd_report(&c)?;
            finish("report", artifacts, &c)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
