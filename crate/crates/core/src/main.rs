use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cdil::learners::LearnerKind;
use cdil::split::{self, Protocol};
use cdil::{io, pipeline, synth};

#[derive(Parser)]
#[command(name = "cdil", version, about = "Composite-domain incremental learning benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of an experiment and print the summary table.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        protocol: Option<Protocol>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        learner: Option<LearnerKind>,
        #[arg(long)]
        seed: Option<u64>,
        /// Run trials sequentially.
        #[arg(long)]
        deterministic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic stream as a manifest plus feature files.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the fold assignment of every session as CSV.
    Split {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-aggregate a report directory from its per-trial files.
    Report {
        #[arg(long = "in")]
        dir: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { config, protocol, k, learner, seed, deterministic, out } => {
            let mut cfg = io::load_config(&config)
                .with_context(|| format!("loading config {}", config.display()))?;
            if let Some(p) = protocol {
                cfg.protocol = p;
            }
            if let Some(k) = k {
                cfg.k = k;
            }
            if let Some(l) = learner {
                cfg.learner = l;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.deterministic |= deterministic;
            if out.is_some() {
                cfg.out = out;
            }
            cfg.validate()?;
            let report = pipeline::run_experiment(&cfg)?;
            print!("{}", report.table(&format!("{} / {}", cfg.learner, cfg.protocol)));
            if let Some(out) = &cfg.out {
                log::info!("report written to {}", out.display());
            }
        }
        Command::Synth { spec, out } => {
            let spec = io::load_synth_spec(&spec)
                .with_context(|| format!("loading synthetic spec {}", spec.display()))?;
            let seq = synth::generate_stream(&spec)?;
            let manifest = io::write_stream(&seq, &out, "synthetic")?;
            log::info!("wrote {}", manifest.display());
        }
        Command::Split { config, out } => {
            let cfg = io::load_config(&config)
                .with_context(|| format!("loading config {}", config.display()))?;
            let seq = cfg.load_sequence()?;
            let assignments = split::partition_sequence(&seq, cfg.protocol, cfg.k, cfg.seed)?;
            io::write_assignments_csv(&seq, &assignments, &out)?;
            log::info!("wrote {}", out.display());
        }
        Command::Report { dir } => {
            let report = io::reaggregate(&dir)
                .with_context(|| format!("reading trials under {}", dir.display()))?;
            let label = match (report.config.get("learner"), report.config.get("protocol")) {
                (Some(l), Some(p)) => format!("{} / {}", l.as_str().unwrap_or("?"), p.as_str().unwrap_or("?")),
                _ => dir.display().to_string(),
            };
            print!("{}", report.table(&label));
        }
    }
    Ok(())
}
