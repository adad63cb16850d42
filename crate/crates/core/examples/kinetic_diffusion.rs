//! Kinetic isotropisation and diffusion from the decay of a Fourier mode.
//!
//! cargo run --example kinetic_diffusion

use std::sync::Arc;

use spinflow::transport::{
    chapman_enskog_d, fourier_decay_d, fourier_mode_evolution, measure_isotropisation_rate, AngularGrid, Dimension,
    KineticState, MediumParams,
};

fn main() -> spinflow::Result<()> {
    let medium = MediumParams::new(3, 1.0, 2.0)?;
    let grid = Arc::new(AngularGrid::uniform(Dimension::Three, 200)?);
    let rate = measure_isotropisation_rate(&medium, grid.clone(), 5.0 * medium.tau_el(), 0.05 * medium.tau_el())?;
    println!("isotropisation rate {rate:.6} (gamma_el = {})", medium.gamma_el);

    let ce = chapman_enskog_d(&medium).d;
    println!("\n{:>8} {:>12} {:>12}", "q l_el", "D fourier", "rel. dev");
    for ql in [0.01, 0.05, 0.1, 0.2] {
        let d = fourier_decay_d(&medium, ql, 400)?.d;
        println!("{ql:>8} {d:>12.6} {:>12.2e}", d / ce - 1.0);
    }
    println!("Chapman-Enskog D = {ce:.6}");

    let q = 0.05 / medium.mean_free_path();
    let state = KineticState::isotropic(grid, [0.0, 0.0, q], 1.0);
    let series = fourier_mode_evolution(&state, &medium, 10.0 * medium.tau_el())?;
    println!("\nmax continuity residual {:.1e}", series.max_continuity_residual());
    for s in series.samples.iter().step_by(40) {
        println!("  t={:>6.2} |n|={:.8} Im j={:+.3e}", s.t, s.n.norm(), s.j_parallel.im);
    }
    Ok(())
}
