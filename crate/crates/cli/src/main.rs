use std::path::PathBuf;
use std::process::ExitCode;

use bohmscat::config::{default_output_dir, parse_config, ExperimentConfig};
use bohmscat::experiment::{self, error_exit_code, EXIT_CONFIG, EXIT_RUNTIME};
use bohmscat::Result;
use clap::Parser;

/// Bohmian exit statistics for multi-particle scattering experiments.
#[derive(Debug, Parser)]
#[command(name = "bohmscat", version)]
struct Args {
    /// Experiment config (TOML, or JSON such as a previous summary.json).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(experiment::PRESETS))]
    preset: Option<String>,
    /// Sampler seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Validate and print the execution plan without computing.
    #[arg(long)]
    dry_run: bool,
}

fn load(args: &Args) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => parse_config(path)?,
        (None, Some(name)) => experiment::preset(name)?,
        (None, None) => {
            return Err(bohmscat::Error::Config(vec!["either --config or --preset is required".into()]))
        }
    };
    if let Some(seed) = args.seed {
        cfg.sampler.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(args: &Args, cfg: &ExperimentConfig) -> Result<i32> {
    let out = args.out.clone().unwrap_or_else(default_output_dir);
    if args.dry_run {
        let plan = experiment::plan_text(cfg)?;
        print!("{plan}");
        experiment::write_atomic(&out, "plan.txt", &plan)?;
        return Ok(0);
    }
    let report = experiment::run(cfg)?;
    experiment::write_outputs(&report, &out)?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if !report.abort_budget_ok {
        println!("FAIL abort budget exceeded");
    }
    println!("results written to {}", out.display());
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME as u8);
        }
    }
    match execute(&args, &cfg) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
