mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use thermoflow::{Error, Result};

use config::ExperimentConfig;
use output::{sha256_hex, Output};

#[derive(Parser, Debug)]
#[command(name = "thermoflow", version, about = "Thermodynamic realization of flow-invariant measures")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, env = "THERMOFLOW_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Cylinder depth of `f_A` and the measure tables.
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    max_power_iters: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate admissible words of the subshift.
    Sft,
    /// Topological pressure of a potential.
    Pressure,
    /// Root of P(-ρ g) = 0.
    Rho,
    /// Gibbs measure tables.
    Gibbs,
    /// Build and check the Markov partition.
    Partition,
    /// Itineraries, round trips and cocycle traces.
    Code,
    /// Realize the leafwise measure family.
    Realize,
    /// Numerical checks of the realized family.
    Verify {
        #[command(subcommand)]
        check: Check,
    },
    /// Smooth invariant-volume approximation on a grid.
    Volume {
        /// Stem of a vector field (stem.bin + stem.json).
        #[arg(long)]
        x0: Option<PathBuf>,
        /// Stem of a scalar field.
        #[arg(long)]
        h0: Option<PathBuf>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
    },
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Check {
    RadonNikodym,
    Holonomy,
    Telescoping,
    DeformedCocycle,
    RhoOne,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sft => "sft",
            Command::Pressure => "pressure",
            Command::Rho => "rho",
            Command::Gibbs => "gibbs",
            Command::Partition => "partition",
            Command::Code => "code",
            Command::Realize => "realize",
            Command::Verify { check } => match check {
                Check::RadonNikodym => "verify radon-nikodym",
                Check::Holonomy => "verify holonomy",
                Check::Telescoping => "verify telescoping",
                Check::DeformedCocycle => "verify deformed-cocycle",
                Check::RhoOne => "verify rho-one",
            },
            Command::Volume { .. } => "volume",
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.tol {
        cfg.tol = Some(v);
    }
    if let Some(v) = cli.depth {
        cfg.depth = v;
    }
    if let Some(v) = cli.samples {
        cfg.samples = v;
    }
    if let Some(v) = cli.max_power_iters {
        cfg.max_power_iters = v;
    }
    if let Some(v) = cli.threads {
        cfg.threads = Some(v);
    }
    if let Some(v) = &cli.out {
        cfg.out = Some(v.clone());
    }
    if let Command::Volume { grid, dim, .. } = &cli.command {
        if let Some(g) = grid {
            cfg.grid = *g;
        }
        if let Some(d) = dim {
            cfg.dim = *d;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The resolved configuration without settings that cannot
/// change the results (output location, thread count).
fn canonical(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        out: None,
        threads: None,
        ..cfg.clone()
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("thermoflow-out"));
    let mut out = Output::new(&dir)?;
    let name = cli.command.name();
    let outcome = match cli.command {
        Command::Sft => commands::sft(&cfg, &mut out),
        Command::Pressure => commands::pressure(&cfg, &mut out),
        Command::Rho => commands::rho(&cfg, &mut out),
        Command::Gibbs => commands::gibbs(&cfg, &mut out),
        Command::Partition => commands::partition(&cfg, &mut out),
        Command::Code => commands::code(&cfg, &mut out),
        Command::Realize => commands::realize_cmd(&cfg, &mut out),
        Command::Verify { check } => match check {
            Check::RadonNikodym => commands::verify_rn(&cfg, &mut out),
            Check::Holonomy => commands::verify_holonomy(&cfg, &mut out),
            Check::Telescoping => commands::verify_telescoping(&cfg, &mut out),
            Check::DeformedCocycle => commands::verify_deformed(&cfg, &mut out),
            Check::RhoOne => commands::verify_rho_one(&cfg, &mut out),
        },
        Command::Volume { x0, h0, .. } => commands::volume(&cfg, x0, h0, &mut out),
    }?;
    let resolved = canonical(&cfg);
    out.json("config.json", &resolved)?;
    let hash = sha256_hex(serde_json::to_string(&resolved)?.as_bytes());
    let manifest = out.finish(name, hash, outcome.system_hash, cfg.seed, outcome.summary)?;
    println!("{}", serde_json::to_string_pretty(&manifest.summary)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion)
                || e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    ExitCode::from(2)
                } else {
                    ExitCode::SUCCESS
                };
            }
            eprintln!("{}", json!({ "error": "usage", "message": e.to_string().trim() }));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
