//! One displacement episode: scan, shift by d, rescan, extract φ and compare
//! it with the analytic displacement function.

use sensible_space::agent::{ground_truth_phi, scan, singular_proprioception, BodyModel};
use sensible_space::phi::{detect_change, generate_rich_environment, match_coincidences};

fn main() -> sensible_space::Result<()> {
    let body = BodyModel::default();
    let (env, _) = generate_rich_environment(11, 5, (-4.0, 5.0), &body, 0.002, 0.95)?;
    let d = 0.3;
    let before = scan(&env, &body)?;
    let after = scan(&env.shifted(d), &body)?;
    assert!(detect_change(&before, &after, 0.05)?);

    let phi = match_coincidences(&before, &after, 0, 0.002)?;
    let errors: Vec<f64> = phi
        .pairs()
        .iter()
        .filter_map(|pr| ground_truth_phi(d, pr.p).map(|g| (g - pr.p_prime).abs()))
        .collect();
    let worst = errors.iter().copied().fold(0.0, f64::max);
    println!(
        "d = {d}: {} coincidences over p in {:?}, norm {:.4}, worst error vs analytic {:.5}",
        phi.len(),
        phi.domain(),
        phi.norm(),
        worst
    );

    println!("interruptions (jumps > 0.01) near singular values {:?}:", singular_proprioception());
    for w in phi.pairs().windows(2) {
        let (dp, dq) = (w[1].p - w[0].p, w[1].p_prime - w[0].p_prime);
        if dp.max(dq) > 0.01 {
            println!(
                "  ({:.3}, {:.3}) -> ({:.3}, {:.3})",
                w[0].p, w[0].p_prime, w[1].p, w[1].p_prime
            );
        }
    }
    Ok(())
}
