//! Runs the whole seeded experiment and writes every artifact.
//!
//! ```text
//! cargo run --release --example full_experiment -- [OUT_DIR] [SEED]
//! ```

use std::path::PathBuf;

use sensible_space::runner::{run_experiment, ExperimentConfig};

fn main() -> sensible_space::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/example".into()));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);

    let cfg = ExperimentConfig {
        seed,
        output_dir: Some(out.clone()),
        ..ExperimentConfig::default()
    };
    let o = run_experiment(&cfg)?;

    println!(
        "episodes: {} extracted of {}",
        o.report.episode_success_count, cfg.n_episodes
    );
    println!(
        "metric: {:.1}% defined, {} / {} triangle violations at slack {}",
        100.0 * o.matrix.defined_fraction(),
        o.axioms.triangle_violations,
        o.axioms.defined_triples,
        o.axioms.tri_slack
    );
    println!(
        "embedding: STRESS1 {:.4}, {} iteration(s)",
        o.embedding.final_stress(),
        o.embedding.iterations
    );
    println!("{}", serde_json::to_string_pretty(&o.report)?);
    println!("artifacts written to {}", out.display());
    Ok(())
}
