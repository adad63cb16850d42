//! Spin polarization transmitted through a diffusive medium with spin-flip
//! scattering.
//!
//! cargo run --release --example spin_transmission

use spinflow::angular_momentum::TwiceJ;
use spinflow::spin_diffusion::{spin_walk, transmitted_polarization, SpinMediumParams};
use spinflow::transport::MediumParams;

fn main() -> spinflow::Result<()> {
    let medium = MediumParams::new(3, 1.0, 10.0)?;
    for twice in [1, 2, 5] {
        let p = SpinMediumParams::new(medium, 0.1, TwiceJ::new(twice))?;
        println!("2s = {twice}: D0 = {:.5}, lambda_sf = {:.4}, tau1 = {:.3}", p.d0(), p.lambda_sf(), p.tau1());
        for l in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let out = transmitted_polarization(&p, l * p.lambda_sf())?;
            println!("   L = {l:>3} lambda_sf: p_up = {:.5}  p_down = {:.5}  pi = {:.5}", out.p_up, out.p_down, out.pi);
        }
    }

    let p = SpinMediumParams::new(medium, 0.1, TwiceJ::new(1))?;
    let mc = spin_walk(&p, 100_000, p.tau1(), 3)?;
    println!(
        "\nMonte Carlo spin walkers at t = tau1: pi = {:.5} +- {:.5} (exact {:.5})",
        mc.orientation,
        mc.orientation_stderr,
        (-1.0f64).exp()
    );
    Ok(())
}
