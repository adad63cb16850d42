//! Diffusion of a spin carrier that also undergoes isotropic spin flips.
//!
//! Elastic and spin-flip rates add, so the diffusion constant is built from
//! the total rate while each spin multipole sector `K` relaxes with
//! `γ_K = γ_sf K(K+1) / (2 s(s+1))` on top of the diffusive decay.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::angular_momentum::{normalized_spin, spin_matrices, TwiceJ};
use crate::error::{Error, Result};
use crate::liouville::{vectorize, SpinOperator, SuperOp};
use crate::spin_relax::{multipole_decay_with, RelaxationModel};
use crate::tensor_ops::{build_tensor_basis, decompose};
use crate::transport::{mean_and_stderr, walk, walker_rng, MediumParams};
use crate::{c64, CMatrix, Complex64};

/// A diffusing spin `s` with elastic rate `γ_el` and spin-flip rate `γ_sf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinMediumParams {
    pub medium: MediumParams,
    pub gamma_sf: f64,
    pub twice_s: TwiceJ,
}

impl SpinMediumParams {
    pub fn new(medium: MediumParams, gamma_sf: f64, twice_s: TwiceJ) -> Result<Self> {
        let twice_s = TwiceJ::spin(twice_s.twice())?;
        if twice_s.twice() == 0 {
            return Err(Error::InvalidParameter("spin must be at least 1/2".into()));
        }
        if !(gamma_sf >= 0.0 && gamma_sf.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spin-flip rate must be non-negative and finite, got {gamma_sf}"
            )));
        }
        Ok(SpinMediumParams { medium, gamma_sf, twice_s })
    }

    /// Matthiessen sum `γ = γ_el + γ_sf`.
    pub fn total_rate(&self) -> f64 {
        self.medium.gamma_el + self.gamma_sf
    }

    pub fn tau(&self) -> f64 {
        1.0 / self.total_rate()
    }

    /// `D₀ = v² τ / d` with the total scattering time.
    pub fn d0(&self) -> f64 {
        self.medium.speed * self.medium.speed * self.tau() / self.medium.dim.get() as f64
    }

    pub fn tau_sf(&self) -> f64 {
        1.0 / self.gamma_sf
    }

    /// Spin relaxation length `λ_sf = √(2 D₀ τ_sf)`.
    pub fn lambda_sf(&self) -> f64 {
        (2.0 * self.d0() * self.tau_sf()).sqrt()
    }

    /// `γ_K = γ_sf K(K+1) / (2 s(s+1))`.
    pub fn gamma_k(&self, k: u32) -> f64 {
        let kk = k as f64 * (k as f64 + 1.0);
        self.gamma_sf * kk / (2.0 * self.twice_s.casimir())
    }

    /// Orientation lifetime `τ₁ = 1/γ_1 = s(s+1)/γ_sf`.
    pub fn tau1(&self) -> f64 {
        1.0 / self.gamma_k(1)
    }

    fn relaxation(&self) -> Option<RelaxationModel> {
        (self.gamma_sf > 0.0).then_some(RelaxationModel {
            twice_s: self.twice_s,
            gamma_s: self.gamma_sf,
        })
    }
}

/// `n_q^(K)(t) / n_q^(K)(0) = exp(-D₀q²t - γ_K t)`.
pub fn sector_density(params: &SpinMediumParams, k: u32, q: f64, t: f64) -> Result<Complex64> {
    if k > params.twice_s.twice() {
        return Err(Error::InvalidQuantumNumbers(format!(
            "rank {k} exceeds 2s = {}",
            params.twice_s.twice()
        )));
    }
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let rate = params.d0() * q * q + params.gamma_k(k);
    Ok(c64((-rate * t).exp(), 0.0))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SectorTerm {
    #[serde(rename = "K")]
    pub k: u32,
    #[serde(rename = "gamma_K")]
    pub gamma_k: f64,
    /// Amplitude of this sector in `p_↑(t) = Σ_K weight_K e^{-γ_K t}`.
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Transmission {
    #[serde(rename = "L")]
    pub length: f64,
    pub t: f64,
    #[serde(rename = "D0")]
    pub d0: f64,
    pub tau1: f64,
    pub p_up: f64,
    pub p_down: f64,
    pub pi: f64,
    pub per_sector: Vec<SectorTerm>,
}

/// Fully polarized state `|s, s⟩⟨s, s|`.
pub fn polarized_state(twice_s: TwiceJ) -> SpinOperator {
    SpinOperator::basis_projector(twice_s, 0)
}

/// Spin state after diffusing through a length `L`, taking the transmission
/// time as `t = L² / (2 D₀)`, starting from `|s, s⟩`.
pub fn transmitted_polarization(params: &SpinMediumParams, length: f64) -> Result<Transmission> {
    if !(length >= 0.0 && length.is_finite()) {
        return Err(Error::InvalidParameter(format!("length must be non-negative, got {length}")));
    }
    let d0 = params.d0();
    let t = length * length / (2.0 * d0);
    let j = params.twice_s;
    let basis = build_tensor_basis(j)?;
    let rho0 = polarized_state(j);
    let rho = match params.relaxation() {
        Some(model) => multipole_decay_with(&model, &basis, &rho0, t)?,
        None => rho0.clone(),
    };
    let d = j.dim();
    let p_up = rho.matrix[(0, 0)].re;
    let p_down = rho.matrix[(d - 1, d - 1)].re;

    let multipoles = decompose(&rho0, &basis)?;
    let per_sector = (0..=j.twice())
        .map(|k| SectorTerm {
            k,
            gamma_k: params.gamma_k(k),
            weight: (multipoles.get(k, 0) * basis.get(k, 0).matrix[(0, 0)]).re,
        })
        .collect();
    Ok(Transmission {
        length,
        t,
        d0,
        tau1: params.tau1(),
        p_up,
        p_down,
        pi: (p_up - p_down) / (p_up + p_down),
        per_sector,
    })
}

/// Full spin state at time `t` after starting from `|s, s⟩`.
pub fn spin_state(params: &SpinMediumParams, t: f64) -> Result<SpinOperator> {
    let rho0 = polarized_state(params.twice_s);
    match params.relaxation() {
        Some(model) => {
            let basis = build_tensor_basis(params.twice_s)?;
            multipole_decay_with(&model, &basis, &rho0, t)
        }
        None if t >= 0.0 => Ok(rho0),
        None => Err(Error::NegativeTime(t)),
    }
}

/// Normalized orientation `⟨S_z⟩ / s`.
pub fn orientation(rho: &SpinOperator) -> f64 {
    let sz = &spin_matrices(rho.twice_s).expect("validated spin").z;
    (sz * &rho.matrix).trace().re / rho.twice_s.value()
}

/// Born-averaged action of one spin-flip collision on the carrier spin,
/// `ρ ↦ Σ_ij c_ij Ŝ_i ρ Ŝ_j` with the impurity-spin trace `c_ij = ½ tr(τ_i τ_j)`.
pub fn spinflip_channel(twice_s: TwiceJ) -> Result<SuperOp> {
    let carrier = normalized_spin(twice_s)?;
    let impurity = spin_matrices(TwiceJ::new(1))?;
    let pauli: Vec<CMatrix> = impurity.components().iter().map(|m| *m * c64(2.0, 0.0)).collect();
    let ops = carrier.components();
    let mut out = SuperOp::zeros(twice_s);
    for i in 0..3 {
        for j in 0..3 {
            let c = (&pauli[i] * &pauli[j]).trace() * 0.5;
            if c.norm() == 0.0 {
                continue;
            }
            let left = SpinOperator { twice_s, matrix: ops[i].clone() };
            let right = SpinOperator { twice_s, matrix: ops[j].clone() };
            out.matrix += SuperOp::sandwich(&left, &right).matrix * c;
        }
    }
    Ok(out)
}

/// Spin-flip generator `γ_sf (𝒱 - 1)` built from the collision channel.
pub fn spinflip_superoperator(twice_s: TwiceJ, gamma_sf: f64) -> Result<SuperOp> {
    let channel = spinflip_channel(twice_s)?;
    let mut gen = channel.matrix - SuperOp::identity(twice_s).matrix;
    gen *= c64(gamma_sf, 0.0);
    Ok(SuperOp { twice_s, matrix: gen })
}

/// Monte Carlo estimate of the spin orientation carried by random walkers.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpinWalkEstimate {
    pub t: f64,
    /// Mean of `⟨S_z⟩ / s` over walkers (equals π for s = ½).
    pub orientation: f64,
    pub orientation_stderr: f64,
    /// Mean squared displacement at `t`.
    pub msd: f64,
    pub mean_flips: f64,
}

/// Random walkers scattering at the total rate; each event is a spin flip
/// with probability `γ_sf/γ`, applying [`spinflip_channel`] to the walker's
/// density matrix. Reproducible for a given seed.
pub fn spin_walk(params: &SpinMediumParams, n_walkers: usize, t: f64, seed: u64) -> Result<SpinWalkEstimate> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if n_walkers < 2 {
        return Err(Error::InvalidParameter("need at least two walkers".into()));
    }
    let j = params.twice_s;
    let channel = spinflip_channel(j)?;
    let sz = spin_matrices(j)?.z;
    let rho0 = vectorize(&polarized_state(j)).coeffs;
    let d = j.dim();
    let p_flip = params.gamma_sf / params.total_rate();
    let dim = params.medium.dim;
    let speed = params.medium.speed;
    let rate = params.total_rate();
    let s = j.value();

    let per_walker: Vec<(f64, f64, u32)> = (0..n_walkers)
        .into_par_iter()
        .map(|w| {
            let mut rng = walker_rng(seed, w as u64);
            let mut flips = 0u32;
            let mut r2 = 0.0;
            walk(
                dim,
                speed,
                rate,
                &[t],
                &mut rng,
                |rng| {
                    if rng.random::<f64>() < p_flip {
                        flips += 1;
                    }
                },
                |_, v| r2 = v,
            );
            let mut v = rho0.clone();
            for _ in 0..flips {
                v = &channel.matrix * v;
            }
            let sz_mean: f64 = (0..d).map(|m| sz[(m, m)].re * v[m * d + m].re).sum();
            (sz_mean / s, r2, flips)
        })
        .collect();

    let orient: Vec<f64> = per_walker.iter().map(|p| p.0).collect();
    let (orientation, orientation_stderr) = mean_and_stderr(&orient);
    let n = n_walkers as f64;
    Ok(SpinWalkEstimate {
        t,
        orientation,
        orientation_stderr,
        msd: per_walker.iter().map(|p| p.1).sum::<f64>() / n,
        mean_flips: per_walker.iter().map(|p| p.2 as f64).sum::<f64>() / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::superop_eigenvalues;
    use crate::spin_relax::lindbladian;

    fn params(twice_s: u32, gamma_el: f64, gamma_sf: f64) -> SpinMediumParams {
        let medium = MediumParams::new(3, 1.0, gamma_el).unwrap();
        SpinMediumParams::new(medium, gamma_sf, TwiceJ::new(twice_s)).unwrap()
    }

    #[test]
    fn matthiessen() {
        let with = params(1, 2.0, 0.5);
        let without = params(1, 2.0, 0.0);
        assert!(with.d0() < without.d0());
        assert!((with.d0() * with.total_rate() - without.d0() * without.total_rate()).abs() < 1e-15);
        assert!((with.lambda_sf() - (2.0 * with.d0() / 0.5).sqrt()).abs() < 1e-15);
        assert!((with.tau1() - 0.75 / 0.5).abs() < 1e-15);
    }

    #[test]
    fn sector_density_limits() {
        let p = params(1, 1.0, 0.3);
        let t = 2.0;
        let q = 0.4;
        let k0 = sector_density(&p, 0, q, t).unwrap();
        assert!((k0.re - (-p.d0() * q * q * t).exp()).abs() < 1e-15);
        let k1 = sector_density(&p, 1, q, t).unwrap();
        let expected = (-p.d0() * q * q * t - 4.0 * 0.3 * t / 3.0).exp();
        assert!((k1.re - expected).abs() < 1e-15);
        let k1q0 = sector_density(&p, 1, 0.0, t).unwrap();
        assert!((k1q0.re - (-p.gamma_k(1) * t).exp()).abs() < 1e-15);
        assert!(sector_density(&p, 2, q, t).is_err());
    }

    #[test]
    fn transmission_limits() {
        for ts in 1..=6 {
            let p = params(ts, 10.0, 0.1);
            let near = transmitted_polarization(&p, 0.0).unwrap();
            assert!((near.p_up - 1.0).abs() < 1e-12);
            let far = transmitted_polarization(&p, 1e3).unwrap();
            let eq = 1.0 / TwiceJ::new(ts).dim() as f64;
            assert!((far.p_up - eq).abs() < 1e-10, "{ts}: {}", far.p_up);
            let sum: f64 = far.per_sector.iter().map(|s| s.weight).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn qubit_half_polarization() {
        let p = params(1, 1.0, 0.6);
        let t = p.tau1() * 2f64.ln();
        let length = (2.0 * p.d0() * t).sqrt();
        let out = transmitted_polarization(&p, length).unwrap();
        assert!((out.p_up - 0.75).abs() < 1e-12);
        assert!((out.pi - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sector_weights_match_leading_series() {
        for ts in 1..=8 {
            let j = TwiceJ::new(ts);
            let s = j.value();
            let out = transmitted_polarization(&params(ts, 1.0, 1.0), 0.5).unwrap();
            let w1 = 3.0 * s * s / (s * (s + 1.0) * (2.0 * s + 1.0));
            assert!((out.per_sector[0].weight - 1.0 / j.dim() as f64).abs() < 1e-12);
            assert!((out.per_sector[1].weight - w1).abs() < 1e-12);
            let series: f64 = out
                .per_sector
                .iter()
                .map(|sec| sec.weight * (-sec.gamma_k * out.t).exp())
                .sum();
            assert!((series - out.p_up).abs() < 1e-12);
        }
    }

    #[test]
    fn orientation_decays_with_tau1() {
        for ts in 1..=10 {
            let p = params(ts, 1.0, 0.7);
            for &t in &[0.0, 0.3, 1.0, 4.0] {
                let rho = spin_state(&p, t).unwrap();
                let diag: f64 = (0..rho.dim()).map(|i| rho.matrix[(i, i)].re).sum();
                assert!((diag - 1.0).abs() < 1e-12);
                assert!((orientation(&rho) - (-t / p.tau1()).exp()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn spinflip_generator_equals_lindbladian() {
        for ts in 1..=8 {
            let j = TwiceJ::new(ts);
            let gen = spinflip_superoperator(j, 0.9).unwrap();
            let lind = lindbladian(&RelaxationModel::new(j, 0.9).unwrap()).unwrap();
            assert!(gen.max_abs_diff(&lind) < 1e-13, "{ts}");
        }
    }

    #[test]
    fn spinflip_spectrum_for_qubit() {
        let gen = spinflip_superoperator(TwiceJ::new(1), 1.0).unwrap();
        let ev = superop_eigenvalues(&gen).unwrap();
        assert!(ev[0].norm() < 1e-13);
        for v in &ev[1..] {
            assert!((v - c64(-4.0 / 3.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_flip_rate_keeps_polarization() {
        let p = params(1, 1.0, 0.0);
        let out = transmitted_polarization(&p, 10.0).unwrap();
        assert_eq!(out.p_up, 1.0);
        assert_eq!(out.pi, 1.0);
    }

    #[test]
    fn monte_carlo_orientation() {
        let p = params(1, 2.0, 0.5);
        let t = p.tau1();
        let mc = spin_walk(&p, 20_000, t, 5).unwrap();
        let exact = (-1.0f64).exp();
        assert!((mc.orientation - exact).abs() < 3.0 * mc.orientation_stderr);
        assert!((mc.mean_flips / (0.5 * t) - 1.0).abs() < 0.03);
        let again = spin_walk(&p, 20_000, t, 5).unwrap();
        assert_eq!(mc.orientation.to_bits(), again.orientation.to_bits());
    }
}
