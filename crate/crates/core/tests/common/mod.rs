#![allow(dead_code)]

use sensible_space::agent::{ground_truth_phi, scan, BodyModel, Scan};
use sensible_space::phi::{generate_rich_environment, match_coincidences, PhiFunction};
use sensible_space::world::Environment;

pub const TOL_REL: f64 = 0.002;
pub const REACH: f64 = 0.95;

pub fn rich_env(seed: u64) -> Environment {
    generate_rich_environment(seed, 5, (-4.0, 5.0), &BodyModel::default(), TOL_REL, REACH)
        .unwrap()
        .0
}

pub fn scans(env: &Environment, d: f64) -> (Scan, Scan) {
    let body = BodyModel::default();
    (scan(env, &body).unwrap(), scan(&env.shifted(d), &body).unwrap())
}

pub fn extract(env: &Environment, d: f64) -> PhiFunction {
    let (a, b) = scans(env, d);
    let mut phi = match_coincidences(&a, &b, 0, TOL_REL).unwrap();
    phi.true_d = Some(d);
    phi
}

/// Fraction of φ's pairs whose p′ is within `tol` of the analytic displacement.
pub fn oracle_agreement(phi: &PhiFunction, d: f64, tol: f64) -> f64 {
    let ok = phi
        .pairs()
        .iter()
        .filter(|pr| ground_truth_phi(d, pr.p).is_some_and(|g| (g - pr.p_prime).abs() <= tol))
        .count();
    ok as f64 / phi.len() as f64
}

/// Largest graph jump `max(|Δp|, |Δp′|)` between consecutive pairs located
/// within `radius` of `s` on the chosen axis.
pub fn jump_near(phi: &PhiFunction, s: f64, radius: f64, on_p_axis: bool) -> Option<f64> {
    phi.pairs()
        .windows(2)
        .filter(|w| {
            let (a, b) = if on_p_axis {
                (w[0].p, w[1].p)
            } else {
                (w[0].p_prime, w[1].p_prime)
            };
            (a - s).abs() <= radius || (b - s).abs() <= radius || (a <= s && s <= b)
        })
        .map(|w| (w[1].p - w[0].p).max(w[1].p_prime - w[0].p_prime))
        .reduce(f64::max)
}

/// The 20 fixed displacements ±0.05, ±0.10, …, ±0.50.
pub fn fixed_displacements() -> Vec<f64> {
    (1..=10)
        .flat_map(|k| [k as f64 * 0.05, -(k as f64) * 0.05])
        .collect()
}

pub fn line_sample(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}
