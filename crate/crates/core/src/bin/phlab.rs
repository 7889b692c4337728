use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phlab::lab::{run_experiment, ExperimentConfig, Format};
use phlab::Error;

#[derive(Parser)]
#[command(
    name = "phlab",
    version,
    about = "Numerical laboratory for partially hyperbolic maps"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    #[command(flatten)]
    common: Common,
}

#[derive(clap::Args)]
struct Common {
    /// Built-in map: cat3, L, H, F, skew, identity.
    #[arg(long, global = true)]
    map: Option<String>,
    /// TOML experiment file; flags given here override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Output directory; without it only the check lines are printed.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Map sanity: inverse, deck commutation, volume, contact form, splitting invariance.
    Verify,
    /// Lyapunov exponents along sampled orbits.
    Exponents,
    /// Partial hyperbolicity certificate and plane-field Hölder exponent.
    Regularity,
    /// Template functional equation and bootstrap series.
    Templates,
    /// Twisted cocycle obstructions on periodic orbits and coboundary fit.
    Fh,
    /// Pullback ratio, density identity and Reeb field.
    Contact,
    /// su-quadrilateral gap sweep.
    Sugap,
    /// Rotation-number experiment for the Heisenberg family.
    Heisenberg,
}

impl Verb {
    fn name(self) -> &'static str {
        match self {
            Verb::Verify => "verify",
            Verb::Exponents => "exponents",
            Verb::Regularity => "regularity",
            Verb::Templates => "templates",
            Verb::Fh => "fh",
            Verb::Contact => "contact",
            Verb::Sugap => "sugap",
            Verb::Heisenberg => "heisenberg",
        }
    }
}

fn config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::for_pipeline(
            cli.verb.name(),
            c.map.as_deref().unwrap_or("F"),
            c.seed.unwrap_or(1),
        )?,
    };
    cfg.experiment.pipeline = cli.verb.name().into();
    if c.config.is_some() {
        if let Some(m) = &c.map {
            cfg.map = phlab::lab::MapSection {
                name: Some(m.clone()),
                ..Default::default()
            };
        }
    }
    if let Some(s) = c.seed {
        cfg.experiment.seed = s;
    }
    if let Some(n) = c.samples {
        cfg.sampling.samples = n;
    }
    if let Some(f) = c.format {
        cfg.output.format = f;
    }
    if let Some(o) = &c.out {
        cfg.output.dir = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("phlab: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("phlab: {e}");
            return ExitCode::from(if e.is_usage() { 2 } else { 3 });
        }
    };
    for c in &report.checks {
        println!("{}", c.line());
    }
    if let Some(dir) = cfg.out_dir() {
        match report.write(&dir, cfg.output.format) {
            Ok(files) => {
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
            }
            Err(e) => {
                eprintln!("phlab: {e}");
                return ExitCode::from(2);
            }
        }
    }
    ExitCode::from(report.outcome().code() as u8)
}
