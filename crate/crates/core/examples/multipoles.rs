//! State multipoles of a polarized spin and their independent decay.
//!
//! cargo run --example multipoles

use spinflow::angular_momentum::TwiceJ;
use spinflow::liouville::SpinOperator;
use spinflow::spin_relax::{lindbladian, multipole_decay, RelaxationModel};
use spinflow::tensor_ops::{build_tensor_basis, check_ito_commutators, decompose};

fn main() -> spinflow::Result<()> {
    let j = TwiceJ::new(3);
    let basis = build_tensor_basis(j)?;
    println!("spin {j}: {} tensor operators", basis.len());
    println!("orthonormality residual {:.1e}", basis.orthonormality_residual());
    println!("commutator residual     {:.1e}", check_ito_commutators(&basis)?);

    let rho0 = SpinOperator::basis_projector(j, 0);
    let weights = decompose(&rho0, &basis)?.rank_weights();
    println!("\nrank weights of |3/2, 3/2>: {weights:.4?}");

    let model = RelaxationModel::new(j, 0.5)?;
    let gen = lindbladian(&model)?;
    for t in [0.5, 2.0, 8.0] {
        let closed = multipole_decay(&model, &rho0, t)?;
        let dense = spinflow::evolve(&gen, &rho0, t)?;
        let w = decompose(&closed, &basis)?.rank_weights();
        println!("t = {t:>4}: weights {w:.4?}  |closed - expm| = {:.1e}", closed.distance(&dense));
    }
    Ok(())
}
