//! Liouville space: operators as vectors, superoperators as matrices.
//!
//! An operator `A` on the `d`-dimensional spin space is vectorized row-major
//! over the descending-`m` basis, `vec(A)[(s-m)·d + (s-n)] = ⟨m|A|n⟩`, so the
//! dyad `|m⟩⟨n|` is basis vector `|mn)`. With this convention the map
//! `X ↦ A X B` has matrix `A ⊗ Bᵀ`.
//!
//! Two sign conventions coexist and are kept apart on purpose:
//! * [`liouvillian`] returns the plain commutator map `ℒ = [H, ·]`; unitary
//!   motion is `∂ₜρ = -iℒρ`. Use [`SuperOp::unitary_generator`] to get the
//!   generator `-iℒ`.
//! * Dissipative Lindbladians `ℒ̄` are generators already, `∂ₜρ = ℒ̄ρ`, with
//!   spectrum in the closed left half plane.
//!
//! [`evolve`] always exponentiates a generator: `ρ(t) = exp(G t) ρ(0)`.

use std::cmp::Ordering;

use nalgebra::{DVector, Schur, SymmetricEigen};

use crate::angular_momentum::TwiceJ;
use crate::error::{Error, Result};
use crate::{c64, frobenius, hermiticity_residual, CMatrix, Complex64};

/// Tolerance for accepting a Hamiltonian as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A dense operator on the `(2s+1)`-dimensional spin space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperator {
    pub twice_s: TwiceJ,
    pub matrix: CMatrix,
}

impl SpinOperator {
    pub fn new(twice_s: TwiceJ, matrix: CMatrix) -> Result<Self> {
        let d = twice_s.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(SpinOperator { twice_s, matrix })
    }

    pub fn identity(twice_s: TwiceJ) -> Self {
        let d = twice_s.dim();
        SpinOperator {
            twice_s,
            matrix: CMatrix::identity(d, d),
        }
    }

    /// The maximally mixed state `𝟙/d`.
    pub fn maximally_mixed(twice_s: TwiceJ) -> Self {
        let d = twice_s.dim();
        SpinOperator {
            twice_s,
            matrix: CMatrix::identity(d, d) * c64(1.0 / d as f64, 0.0),
        }
    }

    /// The projector `|s, m⟩⟨s, m|` for basis row `index`.
    pub fn basis_projector(twice_s: TwiceJ, index: usize) -> Self {
        let d = twice_s.dim();
        let mut matrix = CMatrix::zeros(d, d);
        matrix[(index, index)] = c64(1.0, 0.0);
        SpinOperator { twice_s, matrix }
    }

    /// The dyad `|m⟩⟨n|` for basis rows `(row, col)`.
    pub fn dyad(twice_s: TwiceJ, row: usize, col: usize) -> Self {
        let d = twice_s.dim();
        let mut matrix = CMatrix::zeros(d, d);
        matrix[(row, col)] = c64(1.0, 0.0);
        SpinOperator { twice_s, matrix }
    }

    pub fn dim(&self) -> usize {
        self.twice_s.dim()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn adjoint(&self) -> Self {
        SpinOperator {
            twice_s: self.twice_s,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.matrix)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * c64(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.min()
    }

    /// Trace scalar product `tr(A† B)`.
    pub fn inner(&self, other: &SpinOperator) -> Complex64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn distance(&self, other: &SpinOperator) -> f64 {
        frobenius(&(&self.matrix - &other.matrix))
    }
}

/// An operator written as a vector of dyad coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleVec {
    pub twice_s: TwiceJ,
    pub coeffs: DVector<Complex64>,
}

impl LiouvilleVec {
    pub fn new(twice_s: TwiceJ, coeffs: DVector<Complex64>) -> Result<Self> {
        let n = twice_s.dim() * twice_s.dim();
        if coeffs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: coeffs.len(),
            });
        }
        Ok(LiouvilleVec { twice_s, coeffs })
    }

    /// Index of the dyad `|m⟩⟨n|` given basis rows of `m` and `n`.
    pub fn index(twice_s: TwiceJ, row: usize, col: usize) -> usize {
        row * twice_s.dim() + col
    }

    /// `Σ conj(a_i) b_i`, equal to `tr(A† B)` for the underlying operators.
    pub fn inner(&self, other: &LiouvilleVec) -> Complex64 {
        self.coeffs.dotc(&other.coeffs)
    }
}

/// Row-major vectorization of an operator.
pub fn vectorize(op: &SpinOperator) -> LiouvilleVec {
    let d = op.dim();
    let mut coeffs = DVector::zeros(d * d);
    for r in 0..d {
        for c in 0..d {
            coeffs[r * d + c] = op.matrix[(r, c)];
        }
    }
    LiouvilleVec {
        twice_s: op.twice_s,
        coeffs,
    }
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &LiouvilleVec) -> SpinOperator {
    let d = v.twice_s.dim();
    let matrix = CMatrix::from_fn(d, d, |r, c| v.coeffs[r * d + c]);
    SpinOperator {
        twice_s: v.twice_s,
        matrix,
    }
}

/// A linear map on Liouville space.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp {
    pub twice_s: TwiceJ,
    pub matrix: CMatrix,
}

impl SuperOp {
    pub fn new(twice_s: TwiceJ, matrix: CMatrix) -> Result<Self> {
        let n = twice_s.dim() * twice_s.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(SuperOp { twice_s, matrix })
    }

    pub fn identity(twice_s: TwiceJ) -> Self {
        let n = twice_s.dim() * twice_s.dim();
        SuperOp {
            twice_s,
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn zeros(twice_s: TwiceJ) -> Self {
        let n = twice_s.dim() * twice_s.dim();
        SuperOp {
            twice_s,
            matrix: CMatrix::zeros(n, n),
        }
    }

    /// The map `X ↦ A X B`.
    pub fn sandwich(left: &SpinOperator, right: &SpinOperator) -> Self {
        SuperOp {
            twice_s: left.twice_s,
            matrix: left.matrix.kronecker(&right.matrix.transpose()),
        }
    }

    /// Tabulates an arbitrary linear operator map column by column.
    pub fn from_map<F>(twice_s: TwiceJ, map: F) -> Self
    where
        F: Fn(&SpinOperator) -> SpinOperator,
    {
        let d = twice_s.dim();
        let mut matrix = CMatrix::zeros(d * d, d * d);
        for r in 0..d {
            for c in 0..d {
                let image = vectorize(&map(&SpinOperator::dyad(twice_s, r, c)));
                matrix.set_column(r * d + c, &image.coeffs);
            }
        }
        SuperOp { twice_s, matrix }
    }

    pub fn apply(&self, op: &SpinOperator) -> SpinOperator {
        let v = vectorize(op);
        devectorize(&LiouvilleVec {
            twice_s: self.twice_s,
            coeffs: &self.matrix * v.coeffs,
        })
    }

    pub fn apply_vec(&self, v: &LiouvilleVec) -> LiouvilleVec {
        LiouvilleVec {
            twice_s: self.twice_s,
            coeffs: &self.matrix * &v.coeffs,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &SuperOp) -> SuperOp {
        SuperOp {
            twice_s: self.twice_s,
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn scale(&self, factor: Complex64) -> SuperOp {
        SuperOp {
            twice_s: self.twice_s,
            matrix: &self.matrix * factor,
        }
    }

    /// `-i ℒ` for a commutator map `ℒ`, i.e. the generator of `∂ₜρ = -iℒρ`.
    pub fn unitary_generator(&self) -> SuperOp {
        self.scale(c64(0.0, -1.0))
    }

    /// `exp(self · t)` for `t ≥ 0`.
    pub fn propagator(&self, t: f64) -> Result<SuperOp> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.exp_unchecked(t))
    }

    /// `exp(self · t)` for any real `t`, including the backward direction
    /// that need not be a physical channel.
    pub fn exp_unchecked(&self, t: f64) -> SuperOp {
        SuperOp {
            twice_s: self.twice_s,
            matrix: (&self.matrix * c64(t, 0.0)).exp(),
        }
    }

    /// Largest `|Σ_m M_{mm, m'n'} - δ_{m'n'}|`: zero for trace-preserving maps.
    pub fn trace_preservation_residual(&self) -> f64 {
        self.trace_residual_against(1.0)
    }

    /// Largest `|Σ_m M_{mm, m'n'}|`: zero for trace-annihilating generators.
    pub fn trace_annihilation_residual(&self) -> f64 {
        self.trace_residual_against(0.0)
    }

    fn trace_residual_against(&self, diag: f64) -> f64 {
        let d = self.twice_s.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                let col = r * d + c;
                let sum: Complex64 = (0..d).map(|m| self.matrix[(m * d + m, col)]).sum();
                let target = if r == c { diag } else { 0.0 };
                worst = worst.max((sum - c64(target, 0.0)).norm());
            }
        }
        worst
    }

    pub fn distance(&self, other: &SuperOp) -> f64 {
        frobenius(&(&self.matrix - &other.matrix))
    }

    pub fn max_abs_diff(&self, other: &SuperOp) -> f64 {
        (&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// The commutator superoperator `ℒ = [H, ·]`,
/// `ℒ_{mn,m'n'} = H_{mm'}δ_{nn'} - H_{n'n}δ_{mm'}`.
pub fn liouvillian(hamiltonian: &SpinOperator) -> Result<SuperOp> {
    let residual = hamiltonian.hermiticity_residual();
    if residual > HERMITIAN_TOL {
        return Err(Error::NotHermitian(residual));
    }
    Ok(commutator_map(hamiltonian))
}

/// `X ↦ [A, X]` without any Hermiticity requirement on `A`.
pub fn commutator_map(a: &SpinOperator) -> SuperOp {
    let d = a.dim();
    let id = CMatrix::identity(d, d);
    SuperOp {
        twice_s: a.twice_s,
        matrix: a.matrix.kronecker(&id) - id.kronecker(&a.matrix.transpose()),
    }
}

/// Eigen-decomposition of a superoperator.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<Complex64>,
    pub vectors: Vec<LiouvilleVec>,
}

fn order(a: &Complex64, b: &Complex64) -> Ordering {
    b.re
        .partial_cmp(&a.re)
        .unwrap_or(Ordering::Equal)
        .then(a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal))
}

/// Full dense eigen-decomposition, sorted by real part descending and then by
/// imaginary part ascending.
///
/// Hermitian matrices go through the Hermitian eigensolver; everything else
/// through a complex Schur form followed by triangular back substitution.
pub fn superop_spectrum(op: &SuperOp) -> Result<Spectrum> {
    let n = op.matrix.nrows();
    let scale = frobenius(&op.matrix).max(1.0);
    let mut pairs: Vec<(Complex64, DVector<Complex64>)> =
        if hermiticity_residual(&op.matrix) <= 1e-13 * scale {
            let eig = SymmetricEigen::try_new(op.matrix.clone(), 1e-15, 0)
                .ok_or_else(|| Error::Computation("Hermitian eigensolver did not converge".into()))?;
            (0..n)
                .map(|k| (c64(eig.eigenvalues[k], 0.0), eig.eigenvectors.column(k).into_owned()))
                .collect()
        } else {
            general_eigenpairs(&op.matrix)?
        };
    pairs.sort_by(|a, b| order(&a.0, &b.0));
    let (values, vectors) = pairs
        .into_iter()
        .map(|(value, coeffs)| {
            (
                value,
                LiouvilleVec {
                    twice_s: op.twice_s,
                    coeffs,
                },
            )
        })
        .unzip();
    Ok(Spectrum { values, vectors })
}

/// Eigenvalues only, same ordering as [`superop_spectrum`].
pub fn superop_eigenvalues(op: &SuperOp) -> Result<Vec<Complex64>> {
    let scale = frobenius(&op.matrix).max(1.0);
    let mut values: Vec<Complex64> = if hermiticity_residual(&op.matrix) <= 1e-13 * scale {
        let eig = SymmetricEigen::try_new(op.matrix.clone(), 1e-15, 0)
            .ok_or_else(|| Error::Computation("Hermitian eigensolver did not converge".into()))?;
        eig.eigenvalues.iter().map(|&v| c64(v, 0.0)).collect()
    } else {
        let schur = Schur::try_new(op.matrix.clone(), 1e-15, 0)
            .ok_or_else(|| Error::Computation("Schur decomposition did not converge".into()))?;
        let (_, t) = schur.unpack();
        (0..t.nrows()).map(|k| t[(k, k)]).collect()
    };
    values.sort_by(order);
    Ok(values)
}

fn general_eigenpairs(m: &CMatrix) -> Result<Vec<(Complex64, DVector<Complex64>)>> {
    let n = m.nrows();
    let schur = Schur::try_new(m.clone(), 1e-15, 0)
        .ok_or_else(|| Error::Computation("Schur decomposition did not converge".into()))?;
    let (q, t) = schur.unpack();
    let tiny = f64::EPSILON * frobenius(&t).max(1.0);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut x = DVector::<Complex64>::zeros(n);
        x[k] = c64(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = c64(0.0, 0.0);
            for l in (j + 1)..=k {
                acc += t[(j, l)] * x[l];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < tiny {
                denom = c64(tiny, 0.0);
            }
            x[j] = -acc / denom;
        }
        let v = &q * x;
        let norm = v.norm();
        out.push((lambda, v / c64(norm, 0.0)));
    }
    Ok(out)
}

/// `ρ(t) = exp(G t) ρ(0)` for a generator `G` and `t ≥ 0`.
pub fn evolve(generator: &SuperOp, rho0: &SpinOperator, t: f64) -> Result<SpinOperator> {
    if rho0.twice_s != generator.twice_s {
        return Err(Error::DimensionMismatch {
            expected: generator.twice_s.dim(),
            got: rho0.dim(),
        });
    }
    Ok(generator.propagator(t)?.apply(rho0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular_momentum::spin_matrices;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_operator(twice_s: TwiceJ, rng: &mut ChaCha8Rng) -> SpinOperator {
        let d = twice_s.dim();
        let matrix = CMatrix::from_fn(d, d, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        SpinOperator { twice_s, matrix }
    }

    fn random_hermitian(twice_s: TwiceJ, rng: &mut ChaCha8Rng) -> SpinOperator {
        let a = random_operator(twice_s, rng);
        SpinOperator {
            twice_s,
            matrix: (&a.matrix + a.matrix.adjoint()) * c64(0.5, 0.0),
        }
    }

    #[test]
    fn identity_vectorizes_to_dyad_diagonal() {
        let v = vectorize(&SpinOperator::identity(TwiceJ::new(1)));
        let expected = [1.0, 0.0, 0.0, 1.0];
        for (z, e) in v.coeffs.iter().zip(expected) {
            assert_eq!(*z, c64(e, 0.0));
        }
    }

    #[test]
    fn pauli_vectors_are_orthogonal() {
        let s = spin_matrices(TwiceJ::new(1)).unwrap();
        let sx = SpinOperator::new(TwiceJ::new(1), &s.x * c64(2.0, 0.0)).unwrap();
        let sy = SpinOperator::new(TwiceJ::new(1), &s.y * c64(2.0, 0.0)).unwrap();
        assert!(vectorize(&sx).inner(&vectorize(&sy)).norm() < 1e-15);
        // Oracle: tr(σx σy) = tr(i σz) = 0 computed by matrix product.
        assert!((sx.matrix.adjoint() * &sy.matrix).trace().norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn vectorization_round_trip_and_inner_product(seed in any::<u64>(), twice in 0u32..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let j = TwiceJ::new(twice);
            let a = random_operator(j, &mut rng);
            let b = random_operator(j, &mut rng);
            prop_assert_eq!(devectorize(&vectorize(&a)), a.clone());
            let direct = (a.matrix.adjoint() * &b.matrix).trace();
            prop_assert!((vectorize(&a).inner(&vectorize(&b)) - direct).norm() < 1e-12);
        }

        #[test]
        fn sandwich_matches_operator_map(seed in any::<u64>(), twice in 0u32..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let j = TwiceJ::new(twice);
            let (a, b, x) = (random_operator(j, &mut rng), random_operator(j, &mut rng), random_operator(j, &mut rng));
            let lhs = SuperOp::sandwich(&a, &b).apply(&x);
            let rhs = &a.matrix * &x.matrix * &b.matrix;
            prop_assert!(frobenius(&(lhs.matrix - rhs)) < 1e-12);
        }

        #[test]
        fn liouvillian_acts_as_commutator(seed in any::<u64>(), twice in 0u32..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let j = TwiceJ::new(twice);
            let h = random_hermitian(j, &mut rng);
            let x = random_operator(j, &mut rng);
            let l = liouvillian(&h).unwrap();
            let expected = &h.matrix * &x.matrix - &x.matrix * &h.matrix;
            prop_assert!(frobenius(&(l.apply(&x).matrix - expected)) < 1e-12);
        }
    }

    #[test]
    fn liouvillian_elementwise_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let j = TwiceJ::new(2);
        let h = random_hermitian(j, &mut rng);
        let l = liouvillian(&h).unwrap();
        let d = j.dim();
        for m in 0..d {
            for n in 0..d {
                for mp in 0..d {
                    for np in 0..d {
                        let mut e = c64(0.0, 0.0);
                        if n == np {
                            e += h.matrix[(m, mp)];
                        }
                        if m == mp {
                            e -= h.matrix[(np, n)];
                        }
                        assert!((l.matrix[(m * d + n, mp * d + np)] - e).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn liouvillian_spectrum_spin_half_field() {
        let s = spin_matrices(TwiceJ::new(1)).unwrap();
        let h = SpinOperator::new(TwiceJ::new(1), s.z.clone()).unwrap();
        let values = superop_eigenvalues(&liouvillian(&h).unwrap()).unwrap();
        let re: Vec<f64> = values.iter().map(|z| z.re).collect();
        assert_eq!(re.len(), 4);
        assert!((re[0] - 1.0).abs() < 1e-14);
        assert!(re[1].abs() < 1e-14 && re[2].abs() < 1e-14);
        assert!((re[3] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_hamiltonian_gives_zero() {
        let l = liouvillian(&SpinOperator::identity(TwiceJ::new(3))).unwrap();
        assert!(frobenius(&l.matrix) == 0.0);
        let values = superop_eigenvalues(&l).unwrap();
        assert!(values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_operator(TwiceJ::new(2), &mut rng);
        assert!(matches!(liouvillian(&a), Err(Error::NotHermitian(_))));
    }

    /// Spectrum of `[H, ·]` equals all pairwise level differences.
    #[test]
    fn liouvillian_spectrum_matches_transition_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for twice in 1..=7u32 {
            let j = TwiceJ::new(twice);
            let h = random_hermitian(j, &mut rng);
            let levels = SymmetricEigen::new(h.matrix.clone()).eigenvalues;
            let mut expected: Vec<f64> = Vec::new();
            for a in levels.iter() {
                for b in levels.iter() {
                    expected.push(a - b);
                }
            }
            expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let got = superop_eigenvalues(&liouvillian(&h).unwrap()).unwrap();
            for (g, e) in got.iter().zip(&expected) {
                assert!((g.re - e).abs() < 1e-10 && g.im.abs() < 1e-10, "{g} vs {e}");
            }
        }
    }

    #[test]
    fn diagonal_hamiltonian_spectrum_brute_force() {
        let eps = [0.3, -1.7, 2.2];
        let j = TwiceJ::new(2);
        let h = SpinOperator::new(
            j,
            CMatrix::from_diagonal(&DVector::from_iterator(3, eps.iter().map(|&e| c64(e, 0.0)))),
        )
        .unwrap();
        let mut expected: Vec<f64> = eps.iter().flat_map(|a| eps.iter().map(move |b| a - b)).collect();
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let got = superop_eigenvalues(&liouvillian(&h).unwrap()).unwrap();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g.re - e).abs() < 1e-13);
        }
    }

    #[test]
    fn general_spectrum_eigenvectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let j = TwiceJ::new(2);
        let n = 9;
        let m = CMatrix::from_fn(n, n, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let op = SuperOp::new(j, m.clone()).unwrap();
        let spec = superop_spectrum(&op).unwrap();
        for (lambda, v) in spec.values.iter().zip(&spec.vectors) {
            let r = &m * &v.coeffs - &v.coeffs * *lambda;
            assert!(r.norm() < 1e-10, "residual {}", r.norm());
        }
        for w in spec.values.windows(2) {
            assert!(w[0].re >= w[1].re);
        }
    }

    #[test]
    fn hermitian_superop_has_real_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 16;
        let a = CMatrix::from_fn(n, n, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let herm = (&a + a.adjoint()) * c64(0.5, 0.0);
        let op = SuperOp::new(TwiceJ::new(3), herm.clone()).unwrap();
        let spec = superop_spectrum(&op).unwrap();
        // Oracle: the general Schur route on the same matrix, then compare.
        let general = general_eigenpairs(&herm).unwrap();
        let mut other: Vec<f64> = general.iter().map(|p| p.0.re).collect();
        other.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (v, o) in spec.values.iter().zip(other) {
            assert_eq!(v.im, 0.0);
            assert!((v.re - o).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_time_is_identity_and_negative_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let j = TwiceJ::new(2);
        let h = random_hermitian(j, &mut rng);
        let g = liouvillian(&h).unwrap().unitary_generator();
        let rho = SpinOperator::maximally_mixed(j);
        assert!(evolve(&g, &rho, 0.0).unwrap().distance(&rho) < 1e-15);
        assert!(matches!(evolve(&g, &rho, -1.0), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn unitary_evolution_matches_schrodinger_picture() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let j = TwiceJ::new(3);
        let h = random_hermitian(j, &mut rng);
        let rho = random_hermitian(j, &mut rng);
        let t = 0.7;
        let g = liouvillian(&h).unwrap().unitary_generator();
        let u = (&h.matrix * c64(0.0, -t)).exp();
        let expected = &u * &rho.matrix * u.adjoint();
        let got = evolve(&g, &rho, t).unwrap();
        assert!(frobenius(&(got.matrix - expected)) < 1e-12);
    }

    #[test]
    fn semigroup_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let j = TwiceJ::new(2);
        let h = random_hermitian(j, &mut rng);
        let g = liouvillian(&h).unwrap().unitary_generator();
        let rho = random_hermitian(j, &mut rng);
        let once = evolve(&g, &rho, 1.3).unwrap();
        let twice = evolve(&g, &evolve(&g, &rho, 0.5).unwrap(), 0.8).unwrap();
        assert!(once.distance(&twice) < 1e-10);
    }
}
