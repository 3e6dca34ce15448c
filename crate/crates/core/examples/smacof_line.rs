//! Recovers points on a line from their pairwise distances with 1D SMACOF,
//! with and without missing entries.

use sensible_space::embed::{classical_init, normalize_embedding, smacof_1d, stress1, SmacofOptions};
use sensible_space::metric::DistanceMatrix;
use sensible_space::stats::pearson;

fn main() -> sensible_space::Result<()> {
    let xs: Vec<f64> = (0..=100).map(|i| (i as f64 / 100.0).powf(1.5)).collect();
    let sample: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let mut m = DistanceMatrix::from_fn(sample.clone(), |i, j| (xs[i] - xs[j]).abs());

    // knock out a band of long-range entries
    for i in 0..=100 {
        for j in (i + 60)..=100 {
            m.clear(i, j);
        }
    }
    println!("{:.1}% of entries defined", 100.0 * m.defined_fraction());

    let init = classical_init(&m)?;
    println!("initial STRESS1 {:.3e}", stress1(&m, &init)?);
    let e = normalize_embedding(&smacof_1d(&m, &init, SmacofOptions::default())?, &sample)?;
    println!(
        "final STRESS1 {:.3e} after {} iteration(s); r with true positions {:.12}",
        e.final_stress(),
        e.iterations,
        pearson(&e.coords, &xs).unwrap().abs()
    );
    Ok(())
}
