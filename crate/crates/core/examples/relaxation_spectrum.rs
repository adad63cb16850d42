//! Spectrum of the isotropic spin-relaxation Lindbladian.
//!
//! cargo run --example relaxation_spectrum

use spinflow::angular_momentum::TwiceJ;
use spinflow::spin_relax::{exact_eigenvalues, verify_spectrum, RelaxationModel};

fn main() -> spinflow::Result<()> {
    println!("{:>5} {:>12} {:>22}  degeneracies", "2s", "tau1", "max rel. error");
    for twice in 1..=10 {
        let model = RelaxationModel::new(TwiceJ::new(twice), 1.0)?;
        let check = verify_spectrum(&model)?;
        println!(
            "{twice:>5} {:>12.6} {:>22.3e}  {:?}",
            model.tau1(),
            check.max_relative_error(),
            check.degeneracies
        );
    }

    let electron = RelaxationModel::new(TwiceJ::new(1), 1.0)?;
    for ev in exact_eigenvalues(&electron) {
        println!("s = 1/2, K = {}: lambda = {:.6} (x{})", ev.k, ev.value, ev.degeneracy);
    }
    Ok(())
}
