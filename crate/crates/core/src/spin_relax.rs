//! Isotropic spin relaxation: the double-commutator Lindbladian
//! `ℒ̄ρ = -(γ_s/2) Σ_i [Ŝ_i, [Ŝ_i, ρ]]`, its exact rank-resolved spectrum,
//! the quantum channels it generates, and two microscopic derivations of the
//! short-time map used as numerical checks.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::angular_momentum::{normalized_spin, spin_matrices, TwiceJ};
use crate::error::{Error, Result};
use crate::liouville::{commutator_map, superop_eigenvalues, SpinOperator, SuperOp};
use crate::tensor_ops::{build_tensor_basis, decompose, project_superop, recompose, TensorOpBasis};
use crate::{c64, frobenius, CMatrix, Complex64};

/// Tolerance used to validate density matrices (Hermiticity, trace, positivity).
pub const DENSITY_TOL: f64 = 1e-12;
/// Eigenvalues below `-PSD_TOL` count as a positivity violation.
pub const PSD_TOL: f64 = 1e-10;
/// Relative clustering tolerance (times `γ_s`) for counting degeneracies.
pub const CLUSTER_TOL: f64 = 1e-8;

/// Spin `s` relaxing isotropically with rate `γ_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxationModel {
    pub twice_s: TwiceJ,
    pub gamma_s: f64,
}

impl RelaxationModel {
    pub fn new(twice_s: TwiceJ, gamma_s: f64) -> Result<Self> {
        let twice_s = TwiceJ::spin(twice_s.twice())?;
        if twice_s.twice() == 0 {
            return Err(Error::Degenerate("spin 0 has no relaxation dynamics".into()));
        }
        if !(gamma_s > 0.0 && gamma_s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "relaxation rate must be positive and finite, got {gamma_s}"
            )));
        }
        Ok(RelaxationModel { twice_s, gamma_s })
    }

    /// White-noise field model: `γ_s = s(s+1) ω₀² τ_c`.
    pub fn from_field_noise(twice_s: TwiceJ, omega0: f64, tau_c: f64) -> Result<Self> {
        Self::new(twice_s, twice_s.casimir() * omega0 * omega0 * tau_c)
    }

    /// Orientation lifetime `τ₁ = s(s+1)/γ_s`.
    pub fn tau1(&self) -> f64 {
        self.twice_s.casimir() / self.gamma_s
    }

    /// `λ_K = -γ_s K(K+1) / (2 s(s+1))`.
    pub fn eigenvalue(&self, k: u32) -> f64 {
        let kk = k as f64 * (k as f64 + 1.0);
        -self.gamma_s * kk / (2.0 * self.twice_s.casimir())
    }
}

/// Elementwise construction `ℒ̄_{mn,m'n'} = γ_s (Ŝ_{mm'}·Ŝ_{n'n} - δ_{mm'}δ_{nn'})`.
pub fn lindbladian(model: &RelaxationModel) -> Result<SuperOp> {
    let spins = normalized_spin(model.twice_s)?;
    let d = model.twice_s.dim();
    let n = d * d;
    let mut matrix = CMatrix::zeros(n, n);
    for m in 0..d {
        for nn in 0..d {
            for mp in 0..d {
                for np in 0..d {
                    let mut v: Complex64 = spins
                        .components()
                        .iter()
                        .map(|s| s[(m, mp)] * s[(np, nn)])
                        .sum();
                    if m == mp && nn == np {
                        v -= c64(1.0, 0.0);
                    }
                    matrix[(m * d + nn, mp * d + np)] = v * model.gamma_s;
                }
            }
        }
    }
    Ok(SuperOp {
        twice_s: model.twice_s,
        matrix,
    })
}

/// The same generator assembled from nested commutator superoperators.
pub fn lindbladian_double_commutator(model: &RelaxationModel) -> Result<SuperOp> {
    let spins = normalized_spin(model.twice_s)?;
    let mut out = SuperOp::zeros(model.twice_s);
    for s in spins.components() {
        let c = commutator_map(&SpinOperator {
            twice_s: model.twice_s,
            matrix: s.clone(),
        });
        out.matrix += &c.matrix * &c.matrix;
    }
    Ok(out.scale(c64(-model.gamma_s / 2.0, 0.0)))
}

/// One rank sector of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankEigenvalue {
    #[serde(rename = "K")]
    pub k: u32,
    pub value: f64,
    pub degeneracy: usize,
}

/// Closed-form spectrum `λ_K`, `K = 0..=2s`, each `(2K+1)`-fold.
pub fn exact_eigenvalues(model: &RelaxationModel) -> Vec<RankEigenvalue> {
    (0..=model.twice_s.twice())
        .map(|k| RankEigenvalue {
            k,
            value: model.eigenvalue(k),
            degeneracy: 2 * k as usize + 1,
        })
        .collect()
}

/// Groups sorted-descending real values into clusters of width `tol`.
pub fn cluster_eigenvalues(values: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut clusters: Vec<(f64, usize)> = Vec::new();
    for v in sorted {
        match clusters.last_mut() {
            Some((first, count)) if (*first - v).abs() <= tol => *count += 1,
            _ => clusters.push((v, 1)),
        }
    }
    clusters
}

/// Outcome of the three-way spectrum comparison.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumCheck {
    /// Dense eigenvalues vs. closed form, relative to `γ_s`.
    pub dense_error: f64,
    /// `(KQ|ℒ̄|KQ)` vs. closed form, relative to `γ_s`.
    pub projection_error: f64,
    /// Largest `‖ℒ̄ T^K_Q - λ_K T^K_Q‖ / γ_s`.
    pub eigenoperator_residual: f64,
    /// Largest spread of `(KQ|ℒ̄|KQ)` over `Q` at fixed `K`, relative to `γ_s`.
    pub q_spread: f64,
    /// Degeneracies counted from the dense spectrum.
    pub degeneracies: Vec<usize>,
}

impl SpectrumCheck {
    pub fn max_relative_error(&self) -> f64 {
        self.dense_error
            .max(self.projection_error)
            .max(self.eigenoperator_residual)
            .max(self.q_spread)
    }
}

/// Compares dense diagonalization, tensor-basis projections and the closed form.
pub fn verify_spectrum(model: &RelaxationModel) -> Result<SpectrumCheck> {
    let basis = build_tensor_basis(model.twice_s)?;
    verify_spectrum_with(model, &basis)
}

pub fn verify_spectrum_with(model: &RelaxationModel, basis: &TensorOpBasis) -> Result<SpectrumCheck> {
    let l = lindbladian(model)?;
    let dense = superop_eigenvalues(&l)?;
    let mut expected: Vec<f64> = exact_eigenvalues(model)
        .iter()
        .flat_map(|e| std::iter::repeat_n(e.value, e.degeneracy))
        .collect();
    expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let g = model.gamma_s;
    let dense_error = dense
        .iter()
        .zip(&expected)
        .map(|(z, e)| ((z.re - e).abs() + z.im.abs()) / g)
        .fold(0.0, f64::max);
    let re: Vec<f64> = dense.iter().map(|z| z.re).collect();
    let degeneracies = cluster_eigenvalues(&re, CLUSTER_TOL * g)
        .into_iter()
        .map(|(_, c)| c)
        .collect();

    let mut projection_error = 0.0f64;
    let mut eigenoperator_residual = 0.0f64;
    let mut q_spread = 0.0f64;
    for k in 0..=model.twice_s.twice() {
        let lambda = model.eigenvalue(k);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for q in -(k as i32)..=(k as i32) {
            let p = project_superop(&l, basis, k, q);
            projection_error = projection_error.max(((p.re - lambda).abs() + p.im.abs()) / g);
            lo = lo.min(p.re);
            hi = hi.max(p.re);
            let t = basis.get(k, q);
            let image = l.apply(t);
            eigenoperator_residual = eigenoperator_residual
                .max(frobenius(&(image.matrix - &t.matrix * c64(lambda, 0.0))) / g);
        }
        q_spread = q_spread.max((hi - lo) / g);
    }
    Ok(SpectrumCheck {
        dense_error,
        projection_error,
        eigenoperator_residual,
        q_spread,
        degeneracies,
    })
}

/// Rejects operators that are not Hermitian, unit-trace and positive.
pub fn validate_density_matrix(rho: &SpinOperator) -> Result<()> {
    let h = rho.hermiticity_residual();
    if h > DENSITY_TOL {
        return Err(Error::InvalidDensityMatrix(format!("not Hermitian (residual {h:e})")));
    }
    let tr = rho.trace();
    if (tr - c64(1.0, 0.0)).norm() > DENSITY_TOL {
        return Err(Error::InvalidDensityMatrix(format!("trace is {tr}, expected 1")));
    }
    let min = rho.min_eigenvalue();
    if min < -DENSITY_TOL {
        return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// Closed-form evolution `ρ(t) = Σ e^{λ_K t} ρ_KQ(0) T^K_Q`.
pub fn multipole_decay(model: &RelaxationModel, rho0: &SpinOperator, t: f64) -> Result<SpinOperator> {
    let basis = build_tensor_basis(model.twice_s)?;
    multipole_decay_with(model, &basis, rho0, t)
}

pub fn multipole_decay_with(
    model: &RelaxationModel,
    basis: &TensorOpBasis,
    rho0: &SpinOperator,
    t: f64,
) -> Result<SpinOperator> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if rho0.twice_s != model.twice_s {
        return Err(Error::DimensionMismatch {
            expected: model.twice_s.dim(),
            got: rho0.dim(),
        });
    }
    validate_density_matrix(rho0)?;
    let mut multipoles = decompose(rho0, basis)?;
    for k in 0..=model.twice_s.twice() {
        let factor = (model.eigenvalue(k) * t).exp();
        for q in -(k as i32)..=(k as i32) {
            let v = multipoles.get(k, q);
            multipoles.set(k, q, v * factor);
        }
    }
    recompose(&multipoles, basis)
}

/// Complete-positivity and trace-preservation verdicts of a channel.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CptpReport {
    pub trace_preserving: f64,
    pub choi_min_eigenvalue: f64,
}

impl CptpReport {
    pub fn is_cptp(&self, tp_tol: f64) -> bool {
        self.trace_preserving <= tp_tol && self.choi_min_eigenvalue >= -PSD_TOL
    }
}

/// A channel in operator-sum form together with its superoperator.
#[derive(Debug, Clone)]
pub struct ChannelSpec {
    pub kraus: Vec<SpinOperator>,
    pub superop: SuperOp,
    pub report: CptpReport,
    /// Largest entry of `Σ W_i† W_i - 𝟙`.
    pub kraus_completeness: f64,
}

impl ChannelSpec {
    pub fn from_kraus(kraus: Vec<SpinOperator>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty Kraus set".into()))?;
        let twice_s = first.twice_s;
        let d = twice_s.dim();
        let mut superop = SuperOp::zeros(twice_s);
        let mut completeness = CMatrix::zeros(d, d);
        for w in &kraus {
            if w.twice_s != twice_s {
                return Err(Error::DimensionMismatch { expected: d, got: w.dim() });
            }
            superop.matrix += SuperOp::sandwich(w, &w.adjoint()).matrix;
            completeness += w.matrix.adjoint() * &w.matrix;
        }
        completeness -= CMatrix::identity(d, d);
        let kraus_completeness = completeness.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let choi = choi_matrix(&superop);
        Ok(ChannelSpec {
            kraus,
            superop,
            report: CptpReport {
                trace_preserving: choi.trace_preservation_residual,
                choi_min_eigenvalue: choi.min_eigenvalue,
            },
            kraus_completeness,
        })
    }

    pub fn apply(&self, rho: &SpinOperator) -> SpinOperator {
        let mut out = CMatrix::zeros(rho.dim(), rho.dim());
        for w in &self.kraus {
            out += &w.matrix * &rho.matrix * w.matrix.adjoint();
        }
        SpinOperator {
            twice_s: rho.twice_s,
            matrix: out,
        }
    }
}

/// Finite-time Kraus operators of spin-½ relaxation:
/// `W₀ = sqrt(1+3e^{-t/τ₁})/2 · 𝟙`, `W_i = sqrt(1-e^{-t/τ₁})/2 · σ_i`.
pub fn qubit_kraus(model: &RelaxationModel, t: f64) -> Result<ChannelSpec> {
    if model.twice_s.twice() != 1 {
        return Err(Error::Unsupported(format!(
            "finite-time Kraus operators are only known for spin 1/2, got s = {}",
            model.twice_s
        )));
    }
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let decay = (-t / model.tau1()).exp();
    let spins = spin_matrices(model.twice_s)?;
    let a0 = (1.0 + 3.0 * decay).sqrt() / 2.0;
    let ai = (1.0 - decay).max(0.0).sqrt() / 2.0;
    let mut kraus = vec![SpinOperator {
        twice_s: model.twice_s,
        matrix: CMatrix::identity(2, 2) * c64(a0, 0.0),
    }];
    for s in spins.components() {
        // σ_i = 2 S_i
        kraus.push(SpinOperator {
            twice_s: model.twice_s,
            matrix: s * c64(2.0 * ai, 0.0),
        });
    }
    ChannelSpec::from_kraus(kraus)
}

/// Choi-Jamiołkowski matrix with its spectral verdicts.
#[derive(Debug, Clone)]
pub struct ChoiReport {
    /// `C_{(i a),(j b)} = Φ(|i⟩⟨j|)_{ab}`.
    pub matrix: CMatrix,
    pub min_eigenvalue: f64,
    pub trace_preservation_residual: f64,
}

/// Choi matrix `Σ_{ij} |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)` of a channel superoperator.
pub fn choi_matrix(channel: &SuperOp) -> ChoiReport {
    let d = channel.twice_s.dim();
    let n = d * d;
    let mut matrix = CMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            for a in 0..d {
                for b in 0..d {
                    matrix[(i * d + a, j * d + b)] = channel.matrix[(a * d + b, i * d + j)];
                }
            }
        }
    }
    let herm = (&matrix + matrix.adjoint()) * c64(0.5, 0.0);
    let min_eigenvalue = SymmetricEigen::new(herm).eigenvalues.min();
    ChoiReport {
        matrix,
        min_eigenvalue,
        trace_preservation_residual: channel.trace_preservation_residual(),
    }
}

/// `exp(ℒ̄ t)` as a channel with its CPTP verdicts. Negative `t` is accepted
/// here so that the failure of the backward map can be inspected.
pub fn relaxation_channel(model: &RelaxationModel, t: f64) -> Result<(SuperOp, CptpReport)> {
    let map = lindbladian(model)?.exp_unchecked(t);
    let choi = choi_matrix(&map);
    Ok((
        map,
        CptpReport {
            trace_preserving: choi.trace_preservation_residual,
            choi_min_eigenvalue: choi.min_eigenvalue,
        },
    ))
}

/// The one-step map `ρ ↦ (1-γΔt)ρ + γΔt Σ Ŝ_i ρ Ŝ_i`.
pub fn short_time_map(twice_s: TwiceJ, gamma_dt: f64) -> Result<SuperOp> {
    let spins = normalized_spin(twice_s)?;
    let mut out = SuperOp::identity(twice_s).scale(c64(1.0 - gamma_dt, 0.0));
    for s in spins.components() {
        let op = SpinOperator {
            twice_s,
            matrix: s.clone(),
        };
        out.matrix += SuperOp::sandwich(&op, &op).matrix * c64(gamma_dt, 0.0);
    }
    Ok(out)
}

fn worst_on_dyads(a: &SuperOp, b: &SuperOp) -> f64 {
    // Columns of a superoperator matrix are the images of the dyad basis.
    let diff = &a.matrix - &b.matrix;
    diff.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Compares the averaged classical-noise step with `exp(ℒ̄Δt)` on the full
/// dyad basis. The residual is second order in `γ_sΔt`.
pub fn microscopic_check_classical(twice_s: TwiceJ, omega0: f64, tau_c: f64, dt: f64) -> Result<f64> {
    let model = RelaxationModel::from_field_noise(twice_s, omega0, tau_c)?;
    let gamma_dt = model.gamma_s * dt;
    if dt < 0.0 {
        return Err(Error::NegativeTime(dt));
    }
    if gamma_dt >= 0.01 {
        return Err(Error::StepTooLarge(format!(
            "γ_s·Δt = {gamma_dt} must stay below 0.01"
        )));
    }
    let exact = lindbladian(&model)?.propagator(dt)?;
    let step = short_time_map(twice_s, gamma_dt)?;
    Ok(worst_on_dyads(&exact, &step))
}

/// Result of the spin + impurity-spin unitary check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuantumCheck {
    /// Largest `‖exact(E) - step(E)‖` over dyads `E`.
    pub absolute: f64,
    /// Largest `‖step(E) - E‖`, the size of the leading correction.
    pub leading: f64,
    /// `absolute / leading` (zero when both vanish).
    pub relative: f64,
    /// `γ_s Δt = s(s+1) (JΔt)²`.
    pub gamma_dt: f64,
}

/// Evolves `ρ ⊗ 𝟙₂/2` under `H = -J S·τ` for `Δt`, traces out the impurity
/// spin and compares with the short-time map at `γ_s = s(s+1)J²Δt`.
pub fn microscopic_check_quantum(coupling: f64, dt: f64, twice_s: TwiceJ) -> Result<QuantumCheck> {
    let twice_s = TwiceJ::spin(twice_s.twice())?;
    if twice_s.twice() == 0 {
        return Err(Error::Degenerate("spin 0 does not couple to the impurity".into()));
    }
    if dt < 0.0 {
        return Err(Error::NegativeTime(dt));
    }
    let jdt = coupling.abs() * dt;
    if jdt > 0.1 {
        return Err(Error::StepTooLarge(format!("J·Δt = {jdt} must stay at or below 0.1")));
    }
    let spins = spin_matrices(twice_s)?;
    let pauli = spin_matrices(TwiceJ::new(1))?;
    let d = twice_s.dim();
    let mut coupling_op = CMatrix::zeros(2 * d, 2 * d);
    for (s, tau) in spins.components().iter().zip(pauli.components()) {
        coupling_op += s.kronecker(&(tau * c64(2.0, 0.0)));
    }
    // U = exp(-i H Δt) with H = -J S·τ.
    let u = (&coupling_op * c64(0.0, coupling * dt)).exp();
    let half_identity = CMatrix::identity(2, 2) * c64(0.5, 0.0);

    let exact = SuperOp::from_map(twice_s, |e| {
        let full = &u * e.matrix.kronecker(&half_identity) * u.adjoint();
        let reduced = CMatrix::from_fn(d, d, |r, c| full[(2 * r, 2 * c)] + full[(2 * r + 1, 2 * c + 1)]);
        SpinOperator { twice_s, matrix: reduced }
    });
    let gamma_dt = twice_s.casimir() * jdt * jdt;
    let step = short_time_map(twice_s, gamma_dt)?;
    let absolute = worst_on_dyads(&exact, &step);
    let leading = worst_on_dyads(&step, &SuperOp::identity(twice_s));
    let relative = if leading == 0.0 { 0.0 } else { absolute / leading };
    Ok(QuantumCheck {
        absolute,
        leading,
        relative,
        gamma_dt,
    })
}
