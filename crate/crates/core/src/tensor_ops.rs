//! Irreducible tensor operators `T^K_Q`, state multipoles and the rank
//! projectors `𝒯^(K)` on Liouville space.

use crate::angular_momentum::{cg_value, spin_matrices, TwiceJ};
use crate::error::{Error, Result};
use crate::liouville::{vectorize, SpinOperator, SuperOp};
use crate::{c64, frobenius, CMatrix, Complex64};

/// Flat storage index of `(K, Q)`.
fn slot(k: u32, q: i32) -> usize {
    (k * k) as usize + (q + k as i32) as usize
}

/// The orthonormal basis `{T^K_Q}` with `K = 0..=2s`, `Q = -K..=K`.
#[derive(Debug, Clone)]
pub struct TensorOpBasis {
    twice_s: TwiceJ,
    ops: Vec<SpinOperator>,
}

impl TensorOpBasis {
    pub fn twice_s(&self) -> TwiceJ {
        self.twice_s
    }

    pub fn max_rank(&self) -> u32 {
        self.twice_s.twice()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn get(&self, k: u32, q: i32) -> &SpinOperator {
        assert!(k <= self.max_rank() && q.unsigned_abs() <= k, "(K, Q) = ({k}, {q}) out of range");
        &self.ops[slot(k, q)]
    }

    /// All `(K, Q)` labels in storage order.
    pub fn labels(&self) -> impl Iterator<Item = (u32, i32)> {
        let max = self.max_rank();
        (0..=max).flat_map(|k| (-(k as i32)..=k as i32).map(move |q| (k, q)))
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u32, i32), &SpinOperator)> {
        self.labels().zip(self.ops.iter())
    }

    /// Largest deviation of the Gram matrix `tr{(T^K_Q)† T^K'_Q'}` from identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (a, ta) in self.ops.iter().enumerate() {
            for (b, tb) in self.ops.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((ta.inner(tb) - c64(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Largest `‖(T^K_Q)† - (-1)^Q T^K_{-Q}‖`.
    pub fn conjugation_residual(&self) -> f64 {
        self.iter()
            .map(|((k, q), t)| {
                let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                frobenius(&(t.matrix.adjoint() - &self.get(k, -q).matrix * c64(sign, 0.0)))
            })
            .fold(0.0, f64::max)
    }
}

/// Builds `T^K_Q = Σ_{m,m'} (-1)^(s-m) ⟨s m'; s -m | K Q⟩ |s m'⟩⟨s m|`.
pub fn build_tensor_basis(twice_s: TwiceJ) -> Result<TensorOpBasis> {
    let twice_s = TwiceJ::spin(twice_s.twice())?;
    let d = twice_s.dim();
    let ts = twice_s.twice() as i32;
    let max = twice_s.twice();
    let mut ops = Vec::with_capacity(d * d);
    for k in 0..=max {
        let rank = TwiceJ::new(2 * k);
        for q in -(k as i32)..=(k as i32) {
            let mut matrix = CMatrix::zeros(d, d);
            for col in 0..d {
                let tm = twice_s.twice_m(col);
                let tmp = tm + 2 * q;
                if tmp.abs() > ts {
                    continue;
                }
                let row = twice_s.index_of(tmp);
                let cg = cg_value(twice_s, twice_s, tmp, -tm, rank, 2 * q)?;
                let sign = if ((ts - tm) / 2) % 2 == 0 { 1.0 } else { -1.0 };
                matrix[(row, col)] = c64(sign * cg, 0.0);
            }
            ops.push(SpinOperator { twice_s, matrix });
        }
    }
    Ok(TensorOpBasis { twice_s, ops })
}

/// Largest residual of the ladder relations
/// `[J_±, T^K_Q] = sqrt(K(K+1) - Q(Q±1)) T^K_{Q±1}` and `[J_z, T^K_Q] = Q T^K_Q`
/// with `J_± = S_x ± i S_y`.
pub fn check_ito_commutators(basis: &TensorOpBasis) -> Result<f64> {
    let spins = spin_matrices(basis.twice_s())?;
    let (jp, jm, jz) = (spins.raising(), spins.lowering(), spins.z.clone());
    let comm = |a: &CMatrix, b: &CMatrix| a * b - b * a;
    let mut worst = 0.0f64;
    for ((k, q), t) in basis.iter() {
        let kk = k as f64 * (k as f64 + 1.0);
        let qf = q as f64;

        let mut expect_up = CMatrix::zeros(t.dim(), t.dim());
        if q < k as i32 {
            expect_up = &basis.get(k, q + 1).matrix * c64((kk - qf * (qf + 1.0)).sqrt(), 0.0);
        }
        worst = worst.max(frobenius(&(comm(&jp, &t.matrix) - expect_up)));

        let mut expect_down = CMatrix::zeros(t.dim(), t.dim());
        if q > -(k as i32) {
            expect_down = &basis.get(k, q - 1).matrix * c64((kk - qf * (qf - 1.0)).sqrt(), 0.0);
        }
        worst = worst.max(frobenius(&(comm(&jm, &t.matrix) - expect_down)));

        worst = worst.max(frobenius(&(comm(&jz, &t.matrix) - &t.matrix * c64(qf, 0.0))));
    }
    Ok(worst)
}

/// State multipoles `ρ_KQ = tr{(T^K_Q)† ρ}`.
#[derive(Debug, Clone)]
pub struct MultipoleDecomposition {
    pub twice_s: TwiceJ,
    components: Vec<Complex64>,
}

impl MultipoleDecomposition {
    pub fn get(&self, k: u32, q: i32) -> Complex64 {
        self.components[slot(k, q)]
    }

    pub fn set(&mut self, k: u32, q: i32, value: Complex64) {
        self.components[slot(k, q)] = value;
    }

    pub fn components(&self) -> &[Complex64] {
        &self.components
    }

    /// Sum of `|ρ_KQ|²` over `Q` for each rank.
    pub fn rank_weights(&self) -> Vec<f64> {
        let max = self.twice_s.twice();
        (0..=max)
            .map(|k| (-(k as i32)..=k as i32).map(|q| self.get(k, q).norm_sqr()).sum())
            .collect()
    }
}

pub fn decompose(rho: &SpinOperator, basis: &TensorOpBasis) -> Result<MultipoleDecomposition> {
    if rho.twice_s != basis.twice_s() {
        return Err(Error::DimensionMismatch {
            expected: basis.twice_s().dim(),
            got: rho.dim(),
        });
    }
    let components = basis.ops.iter().map(|t| t.inner(rho)).collect();
    Ok(MultipoleDecomposition {
        twice_s: rho.twice_s,
        components,
    })
}

/// `Σ ρ_KQ T^K_Q`.
pub fn recompose(multipoles: &MultipoleDecomposition, basis: &TensorOpBasis) -> Result<SpinOperator> {
    if multipoles.twice_s != basis.twice_s() {
        return Err(Error::DimensionMismatch {
            expected: basis.twice_s().dim(),
            got: multipoles.twice_s.dim(),
        });
    }
    let d = basis.twice_s().dim();
    let mut matrix = CMatrix::zeros(d, d);
    for (c, t) in multipoles.components.iter().zip(&basis.ops) {
        matrix += &t.matrix * *c;
    }
    Ok(SpinOperator {
        twice_s: basis.twice_s(),
        matrix,
    })
}

/// The rank projectors `𝒯^(K) = Σ_Q |KQ)(KQ|` for `K = 0..=2s`.
pub fn rank_projectors(basis: &TensorOpBasis) -> Vec<SuperOp> {
    let twice_s = basis.twice_s();
    let n = twice_s.dim() * twice_s.dim();
    (0..=basis.max_rank())
        .map(|k| {
            let mut matrix = CMatrix::zeros(n, n);
            for q in -(k as i32)..=(k as i32) {
                let v = vectorize(basis.get(k, q)).coeffs;
                matrix += &v * v.adjoint();
            }
            SuperOp { twice_s, matrix }
        })
        .collect()
}

/// `(KQ|𝓛|KQ) = tr{(T^K_Q)† 𝓛 T^K_Q}`.
pub fn project_superop(op: &SuperOp, basis: &TensorOpBasis, k: u32, q: i32) -> Complex64 {
    let t = basis.get(k, q);
    t.inner(&op.apply(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular_momentum::spin_matrices;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spin_half_low_ranks() {
        let j = TwiceJ::new(1);
        let basis = build_tensor_basis(j).unwrap();
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        let t00 = &basis.get(0, 0).matrix;
        assert!((t00[(0, 0)] - c64(r2, 0.0)).norm() < 1e-15);
        assert!((t00[(1, 1)] - c64(r2, 0.0)).norm() < 1e-15);
        assert!(t00[(0, 1)].norm() == 0.0);
        // T¹₀ = σ_z / √2
        let t10 = &basis.get(1, 0).matrix;
        assert!((t10[(0, 0)] - c64(r2, 0.0)).norm() < 1e-15);
        assert!((t10[(1, 1)] + c64(r2, 0.0)).norm() < 1e-15);
        assert_eq!(basis.len(), 4);
        assert!(basis.orthonormality_residual() < 1e-15);
    }

    #[test]
    fn vector_operators_are_scaled_spins() {
        for twice in 1..=10u32 {
            let j = TwiceJ::new(twice);
            let basis = build_tensor_basis(j).unwrap();
            let spins = spin_matrices(j).unwrap();
            let cs = j.casimir() * j.dim() as f64 / 3.0;
            for q in -1..=1 {
                let expected = spins.spherical(q) * c64(1.0 / cs.sqrt(), 0.0);
                assert!(frobenius(&(&basis.get(1, q).matrix - expected)) < 1e-13, "2s={twice} Q={q}");
            }
        }
    }

    #[test]
    fn basis_invariants() {
        for twice in 0..=10u32 {
            let j = TwiceJ::new(twice);
            let basis = build_tensor_basis(j).unwrap();
            assert_eq!(basis.len(), j.dim() * j.dim());
            assert!(basis.orthonormality_residual() < 1e-12);
            assert!(basis.conjugation_residual() < 1e-12);
            for ((k, _), t) in basis.iter() {
                if k >= 1 {
                    assert!(t.trace().norm() < 1e-13);
                }
            }
            let t00 = &basis.get(0, 0).matrix;
            let expected = CMatrix::identity(j.dim(), j.dim()) * c64(1.0 / (j.dim() as f64).sqrt(), 0.0);
            assert!(frobenius(&(t00 - expected)) < 1e-14);
        }
    }

    #[test]
    fn ito_commutators() {
        let half = build_tensor_basis(TwiceJ::new(1)).unwrap();
        assert!(check_ito_commutators(&half).unwrap() < 1e-13);
        let five = build_tensor_basis(TwiceJ::new(10)).unwrap();
        assert!(check_ito_commutators(&five).unwrap() < 1e-12);
        // The scalar operator commutes with every generator exactly.
        let spins = spin_matrices(TwiceJ::new(10)).unwrap();
        let t00 = &five.get(0, 0).matrix;
        for g in spins.components() {
            assert_eq!(frobenius(&(g * t00 - t00 * g)), 0.0);
        }
    }

    #[test]
    fn maximally_mixed_is_pure_monopole() {
        for twice in 0..=6u32 {
            let j = TwiceJ::new(twice);
            let basis = build_tensor_basis(j).unwrap();
            let dec = decompose(&SpinOperator::maximally_mixed(j), &basis).unwrap();
            assert!((dec.get(0, 0) - c64(1.0 / (j.dim() as f64).sqrt(), 0.0)).norm() < 1e-14);
            for ((k, q), _) in basis.iter().skip(1) {
                assert!(dec.get(k, q).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn spin_up_multipoles() {
        let j = TwiceJ::new(1);
        let basis = build_tensor_basis(j).unwrap();
        let up = SpinOperator::basis_projector(j, 0);
        let dec = decompose(&up, &basis).unwrap();
        let r2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((dec.get(0, 0) - c64(r2, 0.0)).norm() < 1e-15);
        assert!((dec.get(1, 0) - c64(r2, 0.0)).norm() < 1e-15);
        assert!(dec.get(1, 1).norm() < 1e-15 && dec.get(1, -1).norm() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let basis = build_tensor_basis(TwiceJ::new(2)).unwrap();
        let rho = SpinOperator::maximally_mixed(TwiceJ::new(1));
        assert!(matches!(decompose(&rho, &basis), Err(Error::DimensionMismatch { .. })));
    }

    proptest! {
        #[test]
        fn decompose_recompose_round_trip(seed in any::<u64>(), twice in 0u32..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let j = TwiceJ::new(twice);
            let d = j.dim();
            let a = CMatrix::from_fn(d, d, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let op = SpinOperator::new(j, a).unwrap();
            let basis = build_tensor_basis(j).unwrap();
            let back = recompose(&decompose(&op, &basis).unwrap(), &basis).unwrap();
            prop_assert!(back.distance(&op) < 1e-12);

            // Hermitian source: ρ_{K,-Q} = (-1)^Q ρ_KQ*
            let h = SpinOperator::new(j, (&op.matrix + op.matrix.adjoint()) * c64(0.5, 0.0)).unwrap();
            let dec = decompose(&h, &basis).unwrap();
            for (k, q) in basis.labels() {
                let sign = if q.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                prop_assert!((dec.get(k, -q) - dec.get(k, q).conj() * sign).norm() < 1e-12);
            }
            let back = recompose(&dec, &basis).unwrap();
            prop_assert!(back.hermiticity_residual() < 1e-12);
        }
    }

    #[test]
    fn projectors_resolve_identity() {
        for twice in 0..=5u32 {
            let j = TwiceJ::new(twice);
            let basis = build_tensor_basis(j).unwrap();
            let proj = rank_projectors(&basis);
            let mut sum = SuperOp::zeros(j);
            for (k, pk) in proj.iter().enumerate() {
                sum.matrix += &pk.matrix;
                let rank = pk.matrix.trace().re;
                assert!((rank - (2 * k + 1) as f64).abs() < 1e-12);
                for (kp, pkp) in proj.iter().enumerate() {
                    let prod = pk.compose(pkp);
                    let expected = if k == kp { pk.clone() } else { SuperOp::zeros(j) };
                    assert!(prod.max_abs_diff(&expected) < 1e-12);
                }
            }
            assert!(sum.max_abs_diff(&SuperOp::identity(j)) < 1e-12);
        }
    }
}
