//! Spin relaxation, diffusive transport and weak localization.
//!
//! The crate builds the isotropic spin-relaxation Lindbladian for any spin
//! `s`, decomposes it with irreducible tensor operators, solves the
//! Boltzmann-Lorentz equation for elastic point scatterers, combines both
//! into diffusive spin transport, and evaluates weak-localization corrections
//! dephased by spin-flip scattering. Closed forms are paired with independent
//! numerical routes (dense diagonalization, matrix exponentials, kinetic ODEs,
//! Monte Carlo walks, quadrature) so that each result can be cross-checked.
//!
//! Units: `ħ = 1` throughout. Spin bases are ordered by descending `m`.
//!
//! See the `examples/` directory for one runnable program per capability.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angular_momentum;
pub mod cli;
mod error;
pub mod liouville;
pub mod spin_diffusion;
pub mod spin_relax;
pub mod tensor_ops;
pub mod transport;
pub mod weak_loc;

pub use angular_momentum::{clebsch_gordan, normalized_spin, spin_matrices, TwiceJ};
pub use error::{Error, Result};
pub use liouville::{evolve, liouvillian, superop_spectrum, LiouvilleVec, SpinOperator, SuperOp};
pub use tensor_ops::TensorOpBasis;

use nalgebra::DMatrix;
/// Complex scalar used throughout.
pub type Complex64 = nalgebra::Complex<f64>;

/// Dense complex matrix used for operators and superoperators.
pub type CMatrix = DMatrix<Complex64>;

#[inline]
pub(crate) fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Frobenius norm of a complex matrix.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry modulus of `a - a†`.
pub(crate) fn hermiticity_residual(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}
