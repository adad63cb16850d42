//! Exact Clebsch-Gordan coefficients and spin matrices.
//!
//! Every angular momentum `j` and projection `m` is carried as twice its
//! value so that half-integers stay integral. Spin matrices use the
//! descending-`m` basis: row/column 0 is `|s, s⟩`, the last one `|s, -s⟩`.
//! Phases follow Condon-Shortley.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::{c64, CMatrix};

/// Largest supported `2s` (s = 20, Liouville dimension 1681).
pub const MAX_TWICE_S: u32 = 40;

/// An angular momentum stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct TwiceJ(u32);

impl TwiceJ {
    pub const fn new(twice: u32) -> Self {
        TwiceJ(twice)
    }

    /// Spin `s = j` from a float; must be a non-negative multiple of 1/2.
    pub fn from_f64(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !(twice >= 0.0) || (twice - twice.round()).abs() > 1e-12 {
            return Err(Error::InvalidQuantumNumbers(format!(
                "{j} is not a non-negative half-integer"
            )));
        }
        Ok(TwiceJ(twice.round() as u32))
    }

    /// Twice-valued spin checked against [`MAX_TWICE_S`].
    pub fn spin(twice: u32) -> Result<Self> {
        if twice > MAX_TWICE_S {
            return Err(Error::SpinOutOfRange {
                twice_s: twice,
                max: MAX_TWICE_S,
            });
        }
        Ok(TwiceJ(twice))
    }

    pub const fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Hilbert-space dimension `2j + 1`.
    pub const fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// `j(j+1)`.
    pub fn casimir(self) -> f64 {
        let j = self.value();
        j * (j + 1.0)
    }

    /// Twice the projection `m` of basis row `index` (descending order).
    pub fn twice_m(self, index: usize) -> i32 {
        self.0 as i32 - 2 * index as i32
    }

    /// Basis row of the projection with twice-value `twice_m`.
    pub fn index_of(self, twice_m: i32) -> usize {
        ((self.0 as i32 - twice_m) / 2) as usize
    }
}

impl fmt::Display for TwiceJ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// An exact value of the form `sign * sqrt(square)` with rational `square`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedSqrt {
    pub negative: bool,
    pub square: BigRational,
}

impl SignedSqrt {
    pub fn zero() -> Self {
        SignedSqrt {
            negative: false,
            square: BigRational::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.square.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        let mag = self.square.to_f64().unwrap_or(f64::NAN).sqrt();
        if self.negative {
            -mag
        } else {
            mag
        }
    }

    /// Exact product; the result is again of the form `±sqrt(rational)`.
    pub fn mul(&self, other: &SignedSqrt) -> SignedSqrt {
        SignedSqrt {
            negative: self.negative != other.negative,
            square: &self.square * &other.square,
        }
    }
}

impl fmt::Display for SignedSqrt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let sign = if self.negative { "-" } else { "" };
        write!(f, "{sign}sqrt({})", self.square)
    }
}

/// A Clebsch-Gordan coefficient `⟨j1 m1; j2 m2 | J M⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CgCoefficient {
    pub j1: TwiceJ,
    pub j2: TwiceJ,
    pub j: TwiceJ,
    pub m1: i32,
    pub m2: i32,
    pub m: i32,
    pub exact: SignedSqrt,
    pub value: f64,
}

fn factorial_table() -> &'static Vec<BigUint> {
    static TABLE: OnceLock<Vec<BigUint>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(4 * MAX_TWICE_S as usize + 8);
        let mut acc = BigUint::one();
        table.push(acc.clone());
        for n in 1..(4 * MAX_TWICE_S as usize + 8) {
            acc *= n;
            table.push(acc.clone());
        }
        table
    })
}

fn factorial(n: i64) -> BigInt {
    debug_assert!(n >= 0);
    let table = factorial_table();
    match table.get(n as usize) {
        Some(f) => BigInt::from(f.clone()),
        None => {
            let mut acc = BigInt::from(table.last().unwrap().clone());
            for k in table.len()..=(n as usize) {
                acc *= k;
            }
            acc
        }
    }
}

fn check_projection(j: TwiceJ, m: i32, name: &str) -> Result<()> {
    let tj = j.twice() as i32;
    if (tj - m).rem_euclid(2) != 0 {
        return Err(Error::InvalidQuantumNumbers(format!(
            "{name}: projection 2m={m} has different parity from 2j={tj}"
        )));
    }
    if m.abs() > tj {
        return Err(Error::InvalidQuantumNumbers(format!(
            "{name}: |2m|={} exceeds 2j={tj}",
            m.abs()
        )));
    }
    Ok(())
}

/// Exact Clebsch-Gordan coefficient from the Racah closed-form sum.
///
/// Arguments are twice-valued; the coefficient is zero whenever
/// `m1 + m2 != M` or the triangle rule fails.
pub fn clebsch_gordan(
    j1: TwiceJ,
    j2: TwiceJ,
    m1: i32,
    m2: i32,
    j: TwiceJ,
    m: i32,
) -> Result<CgCoefficient> {
    check_projection(j1, m1, "j1")?;
    check_projection(j2, m2, "j2")?;
    check_projection(j, m, "J")?;
    let exact = racah(j1, j2, m1, m2, j, m);
    let value = exact.to_f64();
    Ok(CgCoefficient {
        j1,
        j2,
        j,
        m1,
        m2,
        m,
        exact,
        value,
    })
}

/// Float rendering of the Clebsch-Gordan coefficient.
pub fn cg_value(j1: TwiceJ, j2: TwiceJ, m1: i32, m2: i32, j: TwiceJ, m: i32) -> Result<f64> {
    clebsch_gordan(j1, j2, m1, m2, j, m).map(|c| c.value)
}

fn racah(j1: TwiceJ, j2: TwiceJ, m1: i32, m2: i32, j: TwiceJ, m: i32) -> SignedSqrt {
    let (a, b, c) = (j1.twice() as i64, j2.twice() as i64, j.twice() as i64);
    let (m1, m2, m) = (m1 as i64, m2 as i64, m as i64);
    if m1 + m2 != m || c < (a - b).abs() || c > a + b || (a + b + c) % 2 != 0 {
        return SignedSqrt::zero();
    }
    // Half-sums below are all integers once the parity checks passed.
    let h = |x: i64| x / 2;
    let delta_num = factorial(h(a + b - c)) * factorial(h(a - b + c)) * factorial(h(-a + b + c));
    let delta_den = factorial(h(a + b + c) + 1);
    let proj_num = factorial(h(a + m1))
        * factorial(h(a - m1))
        * factorial(h(b + m2))
        * factorial(h(b - m2))
        * factorial(h(c + m))
        * factorial(h(c - m));
    let prefactor = BigRational::new(BigInt::from(c + 1) * delta_num * proj_num, delta_den);

    let k_min = 0.max(h(b - c - m1)).max(h(a - c + m2));
    let k_max = h(a + b - c).min(h(a - m1)).min(h(b + m2));
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = factorial(k)
            * factorial(h(a + b - c) - k)
            * factorial(h(a - m1) - k)
            * factorial(h(b + m2) - k)
            * factorial(h(c - b + m1) + k)
            * factorial(h(c - a - m2) + k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return SignedSqrt::zero();
    }
    SignedSqrt {
        negative: sum.is_negative(),
        square: prefactor * &sum * &sum,
    }
}

/// Cartesian spin matrices in the descending-`m` basis.
#[derive(Debug, Clone)]
pub struct SpinMatrices {
    pub twice_s: TwiceJ,
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

impl SpinMatrices {
    pub fn components(&self) -> [&CMatrix; 3] {
        [&self.x, &self.y, &self.z]
    }

    /// `S_+ = S_x + i S_y`.
    pub fn raising(&self) -> CMatrix {
        &self.x + &self.y * c64(0.0, 1.0)
    }

    /// `S_- = S_x - i S_y`.
    pub fn lowering(&self) -> CMatrix {
        &self.x - &self.y * c64(0.0, 1.0)
    }

    /// Spherical components `S_0 = S_z`, `S_{±1} = ∓(S_x ± i S_y)/√2`.
    pub fn spherical(&self, q: i32) -> CMatrix {
        match q {
            0 => self.z.clone(),
            1 => self.raising() * c64(-std::f64::consts::FRAC_1_SQRT_2, 0.0),
            -1 => self.lowering() * c64(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            _ => panic!("spherical component {q} out of range"),
        }
    }

    /// `S_x² + S_y² + S_z²`.
    pub fn square(&self) -> CMatrix {
        &self.x * &self.x + &self.y * &self.y + &self.z * &self.z
    }
}

/// Spin matrices from the ladder construction, `ħ = 1`.
pub fn spin_matrices(twice_s: TwiceJ) -> Result<SpinMatrices> {
    let twice_s = TwiceJ::spin(twice_s.twice())?;
    let d = twice_s.dim();
    let s = twice_s.value();
    let mut plus = CMatrix::zeros(d, d);
    let mut z = CMatrix::zeros(d, d);
    for i in 0..d {
        let m = twice_s.twice_m(i) as f64 / 2.0;
        z[(i, i)] = c64(m, 0.0);
        if i > 0 {
            // S_+ |m⟩ = sqrt(s(s+1) - m(m+1)) |m+1⟩, and |m+1⟩ sits at row i-1.
            plus[(i - 1, i)] = c64((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
    }
    let minus = plus.adjoint();
    let x = (&plus + &minus) * c64(0.5, 0.0);
    let y = (&plus - &minus) * c64(0.0, -0.5);
    Ok(SpinMatrices { twice_s, x, y, z })
}

/// Normalized spin operators `Ŝ_i = S_i / sqrt(s(s+1))` with `Σ Ŝ_i² = 1`.
pub fn normalized_spin(twice_s: TwiceJ) -> Result<SpinMatrices> {
    if twice_s.twice() == 0 {
        return Err(Error::Degenerate(
            "spin 0 has no normalized spin operator".into(),
        ));
    }
    let mut spins = spin_matrices(twice_s)?;
    let scale = c64(1.0 / twice_s.casimir().sqrt(), 0.0);
    spins.x *= scale;
    spins.y *= scale;
    spins.z *= scale;
    Ok(spins)
}

/// Identity of the given dimension.
pub fn identity(d: usize) -> CMatrix {
    DMatrix::identity(d, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frobenius;

    fn half() -> TwiceJ {
        TwiceJ::new(1)
    }

    #[test]
    fn singlet_coefficients() {
        let c = clebsch_gordan(half(), half(), 1, -1, TwiceJ::new(0), 0).unwrap();
        assert!(!c.exact.negative);
        assert!((c.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let c = clebsch_gordan(half(), half(), -1, 1, TwiceJ::new(0), 0).unwrap();
        assert!(c.exact.negative);
        assert_eq!(c.exact.square, BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn spin_one_scalar_coupling() {
        // ⟨1 1; 1 -1 | 0 0⟩ = (-1)^(s-m)/sqrt(2s+1) with s = m = 1.
        let one = TwiceJ::new(2);
        let c = cg_value(one, one, 2, -2, TwiceJ::new(0), 0).unwrap();
        assert!((c - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let c = cg_value(one, one, 0, 0, TwiceJ::new(0), 0).unwrap();
        assert!((c + 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn selection_rules_give_zero() {
        let one = TwiceJ::new(2);
        assert_eq!(cg_value(one, one, 2, 0, TwiceJ::new(2), 0).unwrap(), 0.0);
        assert_eq!(cg_value(one, one, 0, 0, TwiceJ::new(6), 0).unwrap(), 0.0);
    }

    #[test]
    fn parity_mismatch_is_rejected() {
        let err = clebsch_gordan(half(), half(), 0, 0, TwiceJ::new(0), 0).unwrap_err();
        assert!(matches!(err, Error::InvalidQuantumNumbers(_)));
        let err = clebsch_gordan(half(), half(), 3, -1, TwiceJ::new(2), 2).unwrap_err();
        assert!(matches!(err, Error::InvalidQuantumNumbers(_)));
    }

    #[test]
    fn stretched_state_is_positive() {
        for a in 0..6u32 {
            for b in 0..6u32 {
                let mut c = (a as i32 - b as i32).unsigned_abs();
                while c <= a + b {
                    // ⟨j1 j1; j2 (J - j1) | J J⟩ > 0
                    let m2 = c as i32 - a as i32;
                    if m2.abs() <= b as i32 {
                        let v = cg_value(TwiceJ::new(a), TwiceJ::new(b), a as i32, m2, TwiceJ::new(c), c as i32)
                            .unwrap();
                        assert!(v > 0.0, "{a} {b} {c}: {v}");
                    }
                    c += 2;
                }
            }
        }
    }

    #[test]
    fn pauli_for_spin_half() {
        let s = spin_matrices(half()).unwrap();
        assert!((s.x[(0, 1)] - c64(0.5, 0.0)).norm() < 1e-15);
        assert!((s.y[(0, 1)] - c64(0.0, -0.5)).norm() < 1e-15);
        assert!((s.z[(1, 1)] - c64(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn spin_one_z() {
        let s = spin_matrices(TwiceJ::new(2)).unwrap();
        let expect = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c64(1.0, 0.0),
            c64(0.0, 0.0),
            c64(-1.0, 0.0),
        ]));
        assert!(frobenius(&(&s.z - expect)) < 1e-15);
    }

    #[test]
    fn casimir_trace() {
        for t in 0..=20 {
            let j = TwiceJ::new(t);
            let s = spin_matrices(j).unwrap();
            // Oracle: Σ_m s(s+1) over 2s+1 states.
            let expected = j.casimir() * j.dim() as f64;
            assert!((s.square().trace().re - expected).abs() < 1e-10 * expected.max(1.0));
        }
    }

    #[test]
    fn commutators_and_ladders() {
        let i = c64(0.0, 1.0);
        for t in 0..=20 {
            let s = spin_matrices(TwiceJ::new(t)).unwrap();
            let comm = |a: &CMatrix, b: &CMatrix| a * b - b * a;
            assert!(frobenius(&(comm(&s.x, &s.y) - &s.z * i)) < 1e-13);
            assert!(frobenius(&(comm(&s.y, &s.z) - &s.x * i)) < 1e-13);
            assert!(frobenius(&(comm(&s.z, &s.x) - &s.y * i)) < 1e-13);
            let (p, m) = (s.raising(), s.lowering());
            assert!(frobenius(&(comm(&s.z, &p) - &p)) < 1e-13);
            assert!(frobenius(&(comm(&s.z, &m) + &m)) < 1e-13);
        }
    }

    #[test]
    fn normalized_spin_identity() {
        for t in 1..=12 {
            let s = normalized_spin(TwiceJ::new(t)).unwrap();
            let d = TwiceJ::new(t).dim();
            assert!(frobenius(&(s.square() - identity(d))) < 1e-14);
        }
        let s = normalized_spin(half()).unwrap();
        assert!((s.x[(0, 1)].re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(normalized_spin(TwiceJ::new(0)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn spin_limit() {
        assert!(TwiceJ::spin(40).is_ok());
        assert!(matches!(TwiceJ::spin(41), Err(Error::SpinOutOfRange { .. })));
        assert_eq!(TwiceJ::from_f64(1.5).unwrap(), TwiceJ::new(3));
        assert!(TwiceJ::from_f64(0.3).is_err());
    }
}
