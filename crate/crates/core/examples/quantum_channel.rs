//! Finite-time relaxation channels, Kraus operators and Choi matrices.
//!
//! cargo run --example quantum_channel

use spinflow::angular_momentum::TwiceJ;
use spinflow::spin_relax::{lindbladian, qubit_kraus, relaxation_channel, RelaxationModel};

fn main() -> spinflow::Result<()> {
    let model = RelaxationModel::new(TwiceJ::new(1), 1.0)?;
    let gen = lindbladian(&model)?;
    println!("{:>6} {:>14} {:>14} {:>14}", "t", "choi min", "trace resid", "kraus - exp");
    for t in [0.0, 0.25, 1.0, 4.0] {
        let (map, report) = relaxation_channel(&model, t)?;
        let kraus = qubit_kraus(&model, t)?;
        println!(
            "{t:>6} {:>14.3e} {:>14.3e} {:>14.3e}",
            report.choi_min_eigenvalue,
            report.trace_preserving,
            kraus.superop.max_abs_diff(&map)
        );
    }

    // running the semigroup backwards is not completely positive
    let (_, backwards) = relaxation_channel(&model, -0.5)?;
    println!("\nt = -0.5: Choi min eigenvalue {:.4} (cptp: {})", backwards.choi_min_eigenvalue, backwards.is_cptp(1e-12));
    assert!(gen.propagator(-0.5).is_err());

    for twice in [2, 3, 4] {
        let m = RelaxationModel::new(TwiceJ::new(twice), 1.0)?;
        let (_, r) = relaxation_channel(&m, 1.0)?;
        println!("2s = {twice}: cptp {} (Choi min {:.3e})", r.is_cptp(1e-12), r.choi_min_eigenvalue);
    }
    Ok(())
}
