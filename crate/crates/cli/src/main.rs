use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rep_core::harness::seeds::instance_seed;
use rep_core::harness::{mcnemar_exact_one_sided, run_experiment, CERTIFIER_TARGET};
use rep_core::problems::generate;
use rep_core::samplers::rng_from_seed;
use rep_core::{certify, CertifierTolerances, DVector, ExperimentConfig, Family, InstanceFile};

#[derive(Parser)]
#[command(
    name = "rep-opt",
    version,
    about = "Random exploration on top of descent oracles: experiments and certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a paired base/augmented experiment from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Write one CSV per run under `<output_dir>/trajectories/`.
        #[arg(long)]
        save_trajectories: bool,
        /// Overrides `master_seed` from the config.
        #[arg(long)]
        master_seed: Option<u64>,
    },
    /// Certify d-stationarity of a point for a stored instance.
    Certify {
        #[arg(long)]
        family: Family,
        /// Instance JSON as written by `generate`.
        #[arg(long)]
        instance: PathBuf,
        /// JSON array of coordinates, or numbers separated by whitespace or commas.
        #[arg(long)]
        point: PathBuf,
        /// Seed for sampled LTS completions.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// One-sided exact McNemar p-value.
    Mcnemar {
        #[arg(long)]
        wins: u64,
        #[arg(long)]
        losses: u64,
    },
    /// Write the instance a config generates for a given index.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        instance_id: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

/// Exit status classes.
enum Failure {
    Config(anyhow::Error),
    Run(anyhow::Error),
}

impl Failure {
    fn from_core(e: rep_core::Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.into())
        } else {
            Failure::Run(e.into())
        }
    }
}

fn config_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::from_path(path).map_err(Failure::from_core)
}

fn parse_point(text: &str) -> anyhow::Result<Vec<f64>> {
    if let Ok(values) = serde_json::from_str::<Vec<f64>>(text) {
        return Ok(values);
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("not a number: `{s}`")))
        .collect()
}

fn cmd_run(
    config: &Path,
    output_dir: Option<PathBuf>,
    save_trajectories: bool,
    master_seed: Option<u64>,
) -> Result<(), Failure> {
    let mut cfg = load_config(config)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = Some(dir);
    }
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from("rep-output"));
    }
    cfg.save_trajectories |= save_trajectories;
    if let Some(seed) = master_seed {
        cfg.master_seed = seed;
    }
    let report = run_experiment(&cfg).map_err(Failure::from_core)?;
    let s = &report.summary;
    println!("family           {}", s.family);
    println!("instances        {}/{} completed", s.completed, s.attempted);
    println!("win/tie/loss     {}", s.wtl());
    println!("mcnemar p        {:.3e}", s.mcnemar_p);
    println!("non-d-stat       base {} aug {}", s.non_dstat_base, s.non_dstat_aug);
    println!("certified point  {CERTIFIER_TARGET}");
    println!("output           {}", cfg.output_dir.as_ref().expect("set above").display());
    if s.monotonicity_violations + s.budget_violations > 0 {
        return Err(Failure::Run(anyhow::anyhow!(
            "invariant violations: {} monotonicity, {} step budget",
            s.monotonicity_violations,
            s.budget_violations
        )));
    }
    if let Some((id, err)) = s.failures.first() {
        return Err(Failure::Run(anyhow::anyhow!(
            "{} instance(s) failed; first: instance {id}: {err}",
            s.failures.len()
        )));
    }
    Ok(())
}

fn cmd_certify(family: Family, instance: &Path, point: &Path, seed: u64) -> Result<(), Failure> {
    let text = fs::read_to_string(instance).with_context(|| instance.display().to_string()).map_err(config_err)?;
    let file = InstanceFile::from_json(&text).map_err(Failure::from_core)?;
    if file.family != family {
        return Err(config_err(anyhow::anyhow!("instance is `{}`, not `{family}`", file.family)));
    }
    let problem = file.to_problem().map_err(Failure::from_core)?;
    let text = fs::read_to_string(point).with_context(|| point.display().to_string()).map_err(config_err)?;
    let x = DVector::from_vec(parse_point(&text).map_err(config_err)?);
    let report = certify(&problem, &x, &CertifierTolerances::default(), seed).map_err(Failure::from_core)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Failure::Run(e.into()))?);
    Ok(())
}

fn cmd_generate(config: &Path, instance_id: u64, output: &Path) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let seed = instance_seed(cfg.master_seed, instance_id);
    let problem = generate(&cfg.generator, &mut rng_from_seed(seed)).map_err(Failure::from_core)?.instance;
    let file = InstanceFile::from_problem(&problem, Some(seed), Some(&cfg.generator));
    let json = file.to_json().map_err(Failure::from_core)?;
    fs::write(output, json + "\n").with_context(|| output.display().to_string()).map_err(Failure::Run)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output_dir, save_trajectories, master_seed } => {
            cmd_run(&config, output_dir, save_trajectories, master_seed)
        }
        Command::Certify { family, instance, point, seed } => cmd_certify(family, &instance, &point, seed),
        Command::Mcnemar { wins, losses } => {
            println!("{:e}", mcnemar_exact_one_sided(wins, losses));
            Ok(())
        }
        Command::Generate { config, instance_id, output } => cmd_generate(&config, instance_id, &output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
