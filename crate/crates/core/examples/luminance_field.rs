//! Draws a seeded five-source environment and prints its luminance profile
//! before and after a rigid shift.

use sensible_space::world::{generate_environment, shift_environment};

fn main() -> sensible_space::Result<()> {
    let env = generate_environment(7, 5, -4.0, 5.0)?;
    println!("{}", serde_json::to_string(&env)?);

    let moved = shift_environment(&env, 0.3);
    println!("{:>6} {:>10} {:>10}", "x", "before", "after");
    for i in 0..=20 {
        let x = -0.5 + 0.1 * i as f64;
        println!("{x:>6.2} {:>10.5} {:>10.5}", env.luminance(x), moved.luminance(x));
    }
    // shifting by d moves every feature d to the right
    let x = 0.42;
    assert!((moved.luminance(x) - env.luminance(x - 0.3)).abs() < 1e-12);
    Ok(())
}
