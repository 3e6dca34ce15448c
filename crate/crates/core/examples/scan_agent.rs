//! Scans an environment and shows how unevenly proprioception samples space.

use sensible_space::agent::{pmap_inv, pmap_slope, scan, BodyModel};
use sensible_space::world::Environment;

fn main() -> sensible_space::Result<()> {
    let body = BodyModel::default();
    let env = Environment::new([-0.2, 0.15, 0.6, 1.1, 1.7]);
    let s = scan(&env, &body)?;
    println!("{} samples, max excitation {:.4}", s.len(), s.max_excitation());

    println!("{:>6} {:>8} {:>8} {:>8} {:>8}", "p", "x", "dp/dx", "s1", "s2");
    for e in s.entries.iter().step_by(50) {
        let x = pmap_inv(e.p)?;
        println!(
            "{:>6.3} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            e.p,
            x,
            pmap_slope(x),
            e.s[0],
            e.s[1]
        );
    }

    // physical distance covered by one grid step, largest near the flat points
    let widest = s
        .entries
        .windows(2)
        .map(|w| (pmap_inv(w[1].p).unwrap() - pmap_inv(w[0].p).unwrap(), w[0].p))
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    println!("widest step in x: {:.4} near p = {:.3}", widest.0, widest.1);
    Ok(())
}
