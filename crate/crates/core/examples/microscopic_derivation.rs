//! Relaxation rates from microscopic models: classical field noise and an
//! exactly evolved spin coupled to a spin-1/2 impurity.
//!
//! cargo run --example microscopic_derivation

use spinflow::angular_momentum::TwiceJ;
use spinflow::spin_relax::{microscopic_check_classical, microscopic_check_quantum};

fn main() -> spinflow::Result<()> {
    println!("quantum impurity, relative residual vs J dt");
    for twice in [1, 2, 3] {
        let mut prev: Option<f64> = None;
        for jdt in [0.04, 0.02, 0.01, 0.005] {
            let c = microscopic_check_quantum(1.0, jdt, TwiceJ::new(twice))?;
            let ratio = prev.map(|p| format!("{:.3}", p / c.relative)).unwrap_or_default();
            println!("  2s={twice} J dt={jdt:<6} gamma dt={:.3e} rel={:.3e} {ratio}", c.gamma_dt, c.relative);
            prev = Some(c.relative);
        }
    }

    println!("\nclassical field noise");
    for dt in [1e-3, 5e-4] {
        let r = microscopic_check_classical(TwiceJ::new(1), 1.0, 0.1, dt)?;
        println!("  dt={dt:<7} residual={r:.3e}");
    }
    Ok(())
}
