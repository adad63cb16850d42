//! Weak-localization correction with spin-flip dephasing.
//!
//! cargo run --example weak_localization

use spinflow::angular_momentum::TwiceJ;
use spinflow::weak_loc::{channel_weights, coherence_times, wl_correction, WLParams};

fn main() -> spinflow::Result<()> {
    let half = TwiceJ::new(1);
    println!("weights {:?}", channel_weights(half));
    println!("tau_c / tau_sf {:?}", coherence_times(half, 1.0)?);

    println!("\nspin-less, d = 2");
    for l_phi in [1e2, 1e3, 1e4] {
        let r = wl_correction(&WLParams::new(2, 1.0, 1.0).with_l_phi(l_phi))?;
        println!("  L_phi = {l_phi:>7}: dD/D0 = {:.6}", r.delta_d_over_d0);
    }

    println!("\nelectrons, d = 3, L_phi = 1e3");
    for tau_sf in [1e4, 1e2, 1.0] {
        let p = WLParams::new(3, 1.0, 1.0).with_l_phi(1e3).with_spin_flip(half, tau_sf);
        let r = wl_correction(&p)?;
        let parts: Vec<String> = r
            .per_channel
            .iter()
            .map(|c| format!("K={} {:+.5}", c.k, c.contribution))
            .collect();
        println!("  tau_sf = {tau_sf:>6}: dD/D0 = {:+.6}  [{}]", r.delta_d_over_d0, parts.join(", "));
    }

    match wl_correction(&WLParams::new(1, 1.0, 1.0)) {
        Err(e) => println!("\nno cutoff in d = 1: {e}"),
        Ok(r) => println!("\nunexpected result {}", r.delta_d_over_d0),
    }
    Ok(())
}
