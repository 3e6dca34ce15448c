//! Command-line driver for the experiment pipeline.
//!
//! Exit codes: 0 on success, 2 when the experiment itself fails (for example
//! an empty catalogue), 1 on usage, configuration or I/O errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sensible_space::runner::{self, stages, ExperimentConfig};
use sensible_space::Error;

#[derive(Parser)]
#[command(name = "simulate", version, about = "Learn sensible rigid displacements and rescale proprioception")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: episodes, metric, embedding, report
    Run(Common),
    /// Episode loop only; writes the environment and the φ catalogue
    Phi(Common),
    /// Distance matrix from a persisted catalogue
    Metric(Common),
    /// SMACOF embedding from a persisted distance matrix
    Embed(Common),
    /// Isometry report and plot tables from persisted artifacts
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; omitted fields take their default values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's output_dir, else ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Draw a fresh environment every K episodes
    #[arg(long, value_name = "K")]
    regenerate_every: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf), Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.regenerate_every.is_some() {
            cfg.regenerate_every = self.regenerate_every;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        cfg.output_dir = Some(out.clone());
        cfg.validate()?;
        Ok((cfg, out))
    }
}

fn execute(cmd: &Command) -> Result<(), Error> {
    match cmd {
        Command::Run(c) => {
            let (cfg, out) = c.resolve()?;
            let o = runner::run_experiment(&cfg)?;
            println!(
                "{} of {} episodes extracted; r(P,x) = {:.6}, r(p,x) = {:.6}, max residual = {:.4}",
                o.report.episode_success_count,
                cfg.n_episodes,
                o.report.pearson_r,
                o.report.rho_baseline_r,
                o.report.max_affine_residual
            );
            println!("artifacts in {}", out.display());
        }
        Command::Phi(c) => {
            let (cfg, out) = c.resolve()?;
            let run = stages::phi(&cfg, &out)?;
            println!("{} of {} episodes extracted", run.success_count(), cfg.n_episodes);
        }
        Command::Metric(c) => {
            let (cfg, out) = c.resolve()?;
            let (m, ax) = stages::metric(&cfg, &out)?;
            println!(
                "{:.1}% of entries defined; {} triangle violation(s) in {} triples",
                100.0 * m.defined_fraction(),
                ax.triangle_violations,
                ax.defined_triples
            );
        }
        Command::Embed(c) => {
            let (cfg, out) = c.resolve()?;
            let e = stages::embed(&cfg, &out)?;
            println!(
                "STRESS1 {:.6} after {} iteration(s), converged: {}",
                e.final_stress(),
                e.iterations,
                e.converged
            );
        }
        Command::Report(c) => {
            let (cfg, out) = c.resolve()?;
            let r = stages::report(&cfg, &out)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Experiment(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
