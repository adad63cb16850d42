//! Monte Carlo random walk of a point particle between isotropic scatterers.
//!
//! cargo run --release --example random_walk

use spinflow::transport::{chapman_enskog_d, mean_square_displacement, random_walk_d, MediumParams};

fn main() -> spinflow::Result<()> {
    for d in [2, 3] {
        let medium = MediumParams::new(d, 1.0, 1.0)?;
        let mc = random_walk_d(&medium, 100_000, 100.0, 42)?;
        println!(
            "d={d}: D = {:.5} +- {:.5} (Chapman-Enskog {:.5})",
            mc.d,
            mc.uncertainty.unwrap_or(0.0),
            chapman_enskog_d(&medium).d
        );
    }

    // ballistic to diffusive crossover
    let medium = MediumParams::new(3, 1.0, 1.0)?;
    let times = [0.01, 0.1, 1.0, 10.0, 50.0];
    let msd = mean_square_displacement(&medium, 50_000, &times, 1);
    println!("\n{:>8} {:>12} {:>12}", "t", "<r^2>", "exact");
    for (t, r2) in times.iter().zip(msd) {
        let exact = 2.0 * (t - 1.0 + (-t).exp());
        println!("{t:>8} {r2:>12.5} {exact:>12.5}");
    }
    Ok(())
}
