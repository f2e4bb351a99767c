//! `dles` — runs DNS-aided LES experiments and prints the summary error
//! table. Exit codes: 0 success, 2 configuration error, 3 numerical abort.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;

use dles_core::experiment::{emit_table, run_experiment, ExperimentConfig};

/// Runs a DNS-aided LES experiment and writes its CSV outputs.
///
/// Settings come from desk-scale defaults, then the config file, then the
/// flags below; later sources win. The config file is flat `key=value` text
/// (keys: experiment, nu, n_dns, n_les, filter, closures, seeds, t_warmup,
/// t_end, cfl, output_dir, snapshot_every; `#` starts a comment).
#[derive(Parser)]
#[command(name = "dles", version)]
struct Cli {
    /// Experiment to run: burgers, ns3d or spectral1d.
    #[arg(long)]
    experiment: Option<String>,

    /// Config file with key=value lines; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Seeds as a comma list (0,4,7) or half-open range (0..20).
    #[arg(long)]
    seeds: Option<String>,

    /// Directory for CSV outputs and snapshots.
    #[arg(long)]
    output_dir: Option<PathBuf>,

    /// Write field snapshots every N production steps (0 disables).
    #[arg(long)]
    snapshots: Option<usize>,

    /// Override any config key, e.g. --set nu=1e-3 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn overrides_from(cli: &Cli) -> anyhow::Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    if let Some(experiment) = &cli.experiment {
        pairs.push(("experiment".to_string(), experiment.clone()));
    }
    if let Some(seeds) = &cli.seeds {
        pairs.push(("seeds".to_string(), seeds.clone()));
    }
    if let Some(dir) = &cli.output_dir {
        pairs.push(("output_dir".to_string(), dir.display().to_string()));
    }
    if let Some(every) = cli.snapshots {
        pairs.push(("snapshot_every".to_string(), every.to_string()));
    }
    for kv in &cli.set {
        let (key, value) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let file_text = match &cli.config {
        Some(path) => Some(
            fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?,
        ),
        None => None,
    };
    let overrides = overrides_from(cli)?;
    let cfg = ExperimentConfig::from_sources(file_text.as_deref(), &overrides)?;

    eprintln!(
        "dles: {} with {} seed(s) -> {}",
        cfg.experiment.name(),
        cfg.seeds.len(),
        cfg.output_dir.display()
    );
    let records = run_experiment(&cfg)?;
    let (text, csv) = emit_table(&records);
    fs::write(cfg.output_dir.join("table.csv"), &csv)?;
    print!("{text}");
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e:#}");
        let code = match e.downcast_ref::<dles_core::Error>() {
            Some(dles_core::Error::NonFinite { .. }) => 3,
            _ => 2,
        };
        std::process::exit(code);
    }
}
