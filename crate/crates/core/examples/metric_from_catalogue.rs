//! Builds a φ catalogue from every admissible displacement in one environment,
//! turns it into the μ distance matrix and checks the metric axioms.

use sensible_space::agent::{scan, BodyModel};
use sensible_space::metric::{build_distance_matrix, check_metric_axioms};
use sensible_space::phi::{generate_rich_environment, match_coincidences, PhiCatalogue};

fn main() -> sensible_space::Result<()> {
    let body = BodyModel::default();
    let (env, _) = generate_rich_environment(3, 5, (-4.0, 5.0), &body, 0.002, 0.95)?;
    let base = scan(&env, &body)?;

    let mut cat = PhiCatalogue::default();
    for (id, k) in (-90..=90).step_by(5).filter(|k| *k != 0).enumerate() {
        let d = k as f64 * 0.01;
        let moved = scan(&env.shifted(d), &body)?;
        let mut phi = match_coincidences(&base, &moved, id as u64, 0.002)?;
        phi.true_d = Some(d);
        cat.push(phi);
    }

    let m = build_distance_matrix(&cat, 0.01)?;
    let axioms = check_metric_axioms(&m, 0.02);
    println!(
        "{} functions, {:.1}% of entries defined",
        cat.len(),
        100.0 * m.defined_fraction()
    );
    println!("{}", serde_json::to_string_pretty(&axioms)?);
    for j in [10, 30, 50, 70, 90] {
        println!("mu(0.00, {:.2}) = {:?}", m.sample[j], m.get(0, j));
    }
    Ok(())
}
