//! Spin-less kinetic transport at fixed energy.
//!
//! The momentum direction distribution `f(n̂)` of a Fourier mode `q` obeys
//! `∂ₜf = -i v (q·n̂) f - γ_el (f - ⟨f⟩)` for isotropic point scatterers.
//! This module integrates that equation on an angular grid, extracts the
//! diffusion constant from the slow Fourier mode, and provides the
//! Chapman-Enskog closed form and a Monte Carlo random walk as independent
//! estimates of the same constant.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::{c64, Complex64};

/// Spatial dimension handled by the kinetic solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    pub fn new(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Dimension::Two),
            3 => Ok(Dimension::Three),
            _ => Err(Error::InvalidParameter(format!(
                "kinetic transport supports d = 2 or 3, got {d}"
            ))),
        }
    }

    pub fn get(self) -> usize {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }
}

/// Speed and elastic scattering rate of a disordered medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MediumParams {
    pub dim: Dimension,
    pub speed: f64,
    pub gamma_el: f64,
}

impl MediumParams {
    pub fn new(dim: usize, speed: f64, gamma_el: f64) -> Result<Self> {
        let dim = Dimension::new(dim)?;
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(Error::InvalidParameter(format!("speed must be positive, got {speed}")));
        }
        if !(gamma_el > 0.0 && gamma_el.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "elastic rate must be positive, got {gamma_el}"
            )));
        }
        Ok(MediumParams { dim, speed, gamma_el })
    }

    /// Golden-rule rate `γ_el = 2π ν n v₀²` from density of states `ν`,
    /// impurity density `n` and point-scatterer strength `v₀`.
    pub fn from_impurities(
        dim: usize,
        speed: f64,
        density_of_states: f64,
        impurity_density: f64,
        strength: f64,
    ) -> Result<Self> {
        Self::new(dim, speed, 2.0 * PI * density_of_states * impurity_density * strength * strength)
    }

    pub fn tau_el(&self) -> f64 {
        1.0 / self.gamma_el
    }

    pub fn mean_free_path(&self) -> f64 {
        self.speed / self.gamma_el
    }

    /// `D₀ = v ℓ_el / d`.
    pub fn diffusion_constant(&self) -> f64 {
        self.speed * self.mean_free_path() / self.dim.get() as f64
    }
}

/// Unit directions with positive weights summing to one.
#[derive(Debug, Clone)]
pub struct AngularGrid {
    pub dim: Dimension,
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl AngularGrid {
    /// Equally weighted near-uniform directions: evenly spaced angles in
    /// `d = 2`, a Fibonacci spiral on the sphere in `d = 3`.
    pub fn uniform(dim: Dimension, points: usize) -> Result<Self> {
        if points < 4 {
            return Err(Error::InvalidParameter(format!(
                "angular grid needs at least 4 points, got {points}"
            )));
        }
        let directions: Vec<[f64; 3]> = match dim {
            Dimension::Two => (0..points)
                .map(|k| {
                    let theta = 2.0 * PI * (k as f64 + 0.5) / points as f64;
                    [theta.cos(), theta.sin(), 0.0]
                })
                .collect(),
            Dimension::Three => {
                let golden = PI * (3.0 - 5f64.sqrt());
                (0..points)
                    .map(|k| {
                        let z = 1.0 - (2.0 * k as f64 + 1.0) / points as f64;
                        let r = (1.0 - z * z).sqrt();
                        let phi = golden * k as f64;
                        [r * phi.cos(), r * phi.sin(), z]
                    })
                    .collect()
            }
        };
        let weights = vec![1.0 / points as f64; points];
        Ok(AngularGrid { dim, directions, weights })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Angular average `⟨f⟩`.
    pub fn average(&self, f: &[Complex64]) -> Complex64 {
        f.iter().zip(&self.weights).map(|(v, w)| v * *w).sum()
    }
}

/// Default grid resolution used by the convenience drivers.
pub fn default_grid_points(dim: Dimension) -> usize {
    match dim {
        Dimension::Two => 64,
        Dimension::Three => 400,
    }
}

/// Angular distribution of one Fourier mode `q`.
#[derive(Debug, Clone)]
pub struct KineticState {
    pub grid: Arc<AngularGrid>,
    pub f: Vec<Complex64>,
    pub q: [f64; 3],
}

impl KineticState {
    /// Uniform distribution with density `n`.
    pub fn isotropic(grid: Arc<AngularGrid>, q: [f64; 3], density: f64) -> Self {
        let f = vec![c64(density, 0.0); grid.len()];
        KineticState { grid, f, q }
    }

    /// All weight in one direction, normalized to unit density.
    pub fn directed(grid: Arc<AngularGrid>, index: usize) -> Self {
        let mut f = vec![c64(0.0, 0.0); grid.len()];
        f[index] = c64(1.0 / grid.weights[index], 0.0);
        KineticState { grid, f, q: [0.0; 3] }
    }

    pub fn from_fn<F: Fn([f64; 3]) -> f64>(grid: Arc<AngularGrid>, q: [f64; 3], profile: F) -> Self {
        let f = grid.directions.iter().map(|&n| c64(profile(n), 0.0)).collect();
        KineticState { grid, f, q }
    }

    pub fn density(&self) -> Complex64 {
        self.grid.average(&self.f)
    }

    /// `j = v ⟨n̂ f⟩`.
    pub fn current(&self, speed: f64) -> [Complex64; 3] {
        let mut j = [c64(0.0, 0.0); 3];
        for ((n, f), w) in self.grid.directions.iter().zip(&self.f).zip(&self.grid.weights) {
            for a in 0..3 {
                j[a] += f * (n[a] * w * speed);
            }
        }
        j
    }

    /// `‖f - ⟨f⟩‖` with the grid weights.
    pub fn anisotropy_norm(&self) -> f64 {
        let avg = self.density();
        self.f
            .iter()
            .zip(&self.grid.weights)
            .map(|(v, w)| (v - avg).norm_sqr() * w)
            .sum::<f64>()
            .sqrt()
    }

    fn q_norm(&self) -> f64 {
        self.q.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

fn kinetic_rhs(state: &KineticState, medium: &MediumParams, f: &[Complex64]) -> Vec<Complex64> {
    let avg = state.grid.average(f);
    state
        .grid
        .directions
        .iter()
        .zip(f)
        .map(|(n, v)| {
            let qn = state.q[0] * n[0] + state.q[1] * n[1] + state.q[2] * n[2];
            v * c64(0.0, -medium.speed * qn) - (v - avg) * medium.gamma_el
        })
        .collect()
}

fn rk4_step(state: &KineticState, medium: &MediumParams, dt: f64) -> Vec<Complex64> {
    let y = &state.f;
    let axpy = |a: &[Complex64], b: &[Complex64], h: f64| -> Vec<Complex64> {
        a.iter().zip(b).map(|(x, k)| x + k * h).collect()
    };
    let k1 = kinetic_rhs(state, medium, y);
    let k2 = kinetic_rhs(state, medium, &axpy(y, &k1, dt / 2.0));
    let k3 = kinetic_rhs(state, medium, &axpy(y, &k2, dt / 2.0));
    let k4 = kinetic_rhs(state, medium, &axpy(y, &k3, dt));
    (0..y.len())
        .map(|i| y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0))
        .collect()
}

/// Largest `γ_el·dt` accepted by [`isotropise_step`].
pub const MAX_ISOTROPISE_STEP: f64 = 0.1;

/// One RK4 step of `∂ₜf = -γ_el (f - ⟨f⟩)` at `q = 0`.
pub fn isotropise_step(state: &KineticState, medium: &MediumParams, dt: f64) -> Result<KineticState> {
    if state.q_norm() != 0.0 {
        return Err(Error::InvalidParameter(
            "isotropisation steps are defined for the q = 0 mode only".into(),
        ));
    }
    if dt < 0.0 {
        return Err(Error::NegativeTime(dt));
    }
    if medium.gamma_el * dt > MAX_ISOTROPISE_STEP * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge(format!(
            "γ_el·dt = {} exceeds {MAX_ISOTROPISE_STEP}",
            medium.gamma_el * dt
        )));
    }
    Ok(KineticState {
        grid: state.grid.clone(),
        f: rk4_step(state, medium, dt),
        q: state.q,
    })
}

/// Decay rate of the anisotropic part of a directed initial distribution,
/// measured from the kinetic solver over `[0, t_end]` with step `dt`.
pub fn measure_isotropisation_rate(
    medium: &MediumParams,
    grid: Arc<AngularGrid>,
    t_end: f64,
    dt: f64,
) -> Result<f64> {
    let steps = (t_end / dt).round() as usize;
    if steps == 0 {
        return Err(Error::InsufficientRange("t_end shorter than one step".into()));
    }
    let mut state = KineticState::directed(grid, 0);
    let initial = state.anisotropy_norm();
    for _ in 0..steps {
        state = isotropise_step(&state, medium, dt)?;
    }
    Ok(-(state.anisotropy_norm() / initial).ln() / (steps as f64 * dt))
}

/// One sample of a Fourier-mode time series.
#[derive(Debug, Clone, Copy)]
pub struct FourierSample {
    pub t: f64,
    pub n: Complex64,
    /// Current component along `q̂` (the full current if `q = 0`, x-component).
    pub j_parallel: Complex64,
    /// `|∂ₜn + i q·j| / (γ_el |n|)`.
    pub continuity_residual: f64,
}

/// Time series of the density and current of one Fourier mode.
#[derive(Debug, Clone)]
pub struct FourierSeries {
    pub q: f64,
    pub dt: f64,
    pub samples: Vec<FourierSample>,
    /// Set when `q ℓ_el` leaves the hydrodynamic regime.
    pub warning: Option<String>,
}

impl FourierSeries {
    /// Least-squares slope of `-ln|n(t)|` over samples in `[t_from, t_to]`.
    pub fn fit_decay_rate(&self, t_from: f64, t_to: f64) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .samples
            .iter()
            .filter(|s| s.t >= t_from && s.t <= t_to)
            .map(|s| (s.t, s.n.norm().ln()))
            .collect();
        if pts.len() < 3 {
            return Err(Error::InsufficientRange(format!(
                "only {} samples inside [{t_from}, {t_to}]",
                pts.len()
            )));
        }
        Ok(-linear_fit(&pts).0)
    }

    pub fn max_continuity_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.continuity_residual).fold(0.0, f64::max)
    }
}

/// Ordinary least squares `y = slope·x + intercept`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Largest `q ℓ_el` treated as hydrodynamic without a warning.
pub const HYDRODYNAMIC_LIMIT: f64 = 0.2;

/// Integrates the Boltzmann-Lorentz equation for the mode carried by `state`
/// up to `t_end` with RK4 and step `min(0.05 τ_el, 0.05/(q v))`.
pub fn fourier_mode_evolution(
    state: &KineticState,
    medium: &MediumParams,
    t_end: f64,
) -> Result<FourierSeries> {
    if t_end <= 0.0 {
        return Err(Error::InsufficientRange(format!("t_end = {t_end} must be positive")));
    }
    let q = state.q_norm();
    let qv = q * medium.speed;
    let mut dt = 0.05 * medium.tau_el();
    if qv > 0.0 {
        dt = dt.min(0.05 / qv);
    }
    let steps = (t_end / dt).ceil() as usize;
    let dt = t_end / steps as f64;
    let q_hat = if q > 0.0 {
        [state.q[0] / q, state.q[1] / q, state.q[2] / q]
    } else {
        [1.0, 0.0, 0.0]
    };
    let qmfp = q * medium.mean_free_path();
    let warning = (qmfp > HYDRODYNAMIC_LIMIT).then(|| {
        format!("q·ℓ_el = {qmfp} is outside the hydrodynamic regime (≤ {HYDRODYNAMIC_LIMIT})")
    });

    let sample = |s: &KineticState, t: f64| {
        let n = s.density();
        let j = s.current(medium.speed);
        let dn: Complex64 = s.grid.average(&kinetic_rhs(s, medium, &s.f));
        let qj = j[0] * state.q[0] + j[1] * state.q[1] + j[2] * state.q[2];
        let scale = medium.gamma_el * n.norm();
        let continuity_residual = if scale > 0.0 {
            (dn + c64(0.0, 1.0) * qj).norm() / scale
        } else {
            0.0
        };
        FourierSample {
            t,
            n,
            j_parallel: j[0] * q_hat[0] + j[1] * q_hat[1] + j[2] * q_hat[2],
            continuity_residual,
        }
    };

    let mut current = state.clone();
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(sample(&current, 0.0));
    for k in 1..=steps {
        current.f = rk4_step(&current, medium, dt);
        samples.push(sample(&current, k as f64 * dt));
    }
    Ok(FourierSeries {
        q,
        dt,
        samples,
        warning,
    })
}

/// How a diffusion constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionMethod {
    ChapmanEnskog,
    FourierDecay,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiffusionResult {
    #[serde(rename = "D")]
    pub d: f64,
    pub method: DiffusionMethod,
    pub uncertainty: Option<f64>,
}

/// `D₀ = v² τ_el / d` for a monoenergetic distribution.
pub fn chapman_enskog_d(medium: &MediumParams) -> DiffusionResult {
    DiffusionResult {
        d: medium.diffusion_constant(),
        method: DiffusionMethod::ChapmanEnskog,
        uncertainty: None,
    }
}

/// Diffusion constant from the decay rate of an isotropic density
/// fluctuation at `q ℓ_el = q_mfp`, fitted on `[5 τ_el, 50 τ_el]`.
pub fn fourier_decay_d(medium: &MediumParams, q_mfp: f64, grid_points: usize) -> Result<DiffusionResult> {
    if !(q_mfp > 0.0) {
        return Err(Error::InvalidParameter(format!("q·ℓ_el must be positive, got {q_mfp}")));
    }
    let grid = Arc::new(AngularGrid::uniform(medium.dim, grid_points)?);
    let q = q_mfp / medium.mean_free_path();
    let state = KineticState::isotropic(grid, [q, 0.0, 0.0], 1.0);
    let tau = medium.tau_el();
    let series = fourier_mode_evolution(&state, medium, 50.0 * tau)?;
    let rate = series.fit_decay_rate(5.0 * tau, 50.0 * tau)?;
    Ok(DiffusionResult {
        d: rate / (q * q),
        method: DiffusionMethod::FourierDecay,
        uncertainty: None,
    })
}

/// Independent random stream for walker `index`.
pub(crate) fn walker_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniformly distributed unit vector.
pub(crate) fn random_direction<R: Rng>(dim: Dimension, rng: &mut R) -> [f64; 3] {
    match dim {
        Dimension::Two => {
            let theta = rng.random_range(0.0..2.0 * PI);
            [theta.cos(), theta.sin(), 0.0]
        }
        Dimension::Three => {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi = rng.random_range(0.0..2.0 * PI);
            let r = (1.0 - z * z).sqrt();
            [r * phi.cos(), r * phi.sin(), z]
        }
    }
}

/// A ballistic walker redirected isotropically at Poisson events of rate
/// `rate`. Calls `on_event` at each event and `record` at each requested
/// time with the squared displacement.
pub(crate) fn walk<R, E, F>(
    dim: Dimension,
    speed: f64,
    rate: f64,
    times: &[f64],
    rng: &mut R,
    mut on_event: E,
    mut record: F,
) where
    R: Rng,
    E: FnMut(&mut R),
    F: FnMut(usize, f64),
{
    let mut pos = [0.0f64; 3];
    let mut dir = random_direction(dim, rng);
    let mut t = 0.0;
    let mut next = 0usize;
    while next < times.len() {
        let flight: f64 = rng.sample::<f64, _>(Exp1) / rate;
        let t_event = t + flight;
        while next < times.len() && times[next] <= t_event {
            let dt = times[next] - t;
            let r2: f64 = (0..3).map(|a| (pos[a] + dir[a] * speed * dt).powi(2)).sum();
            record(next, r2);
            next += 1;
        }
        if next == times.len() {
            break;
        }
        for a in 0..3 {
            pos[a] += dir[a] * speed * flight;
        }
        t = t_event;
        on_event(rng);
        dir = random_direction(dim, rng);
    }
}

/// Mean squared displacement `⟨r²⟩(t)` of `n_walkers` random walkers at the
/// requested (ascending) times. Bitwise reproducible for a given seed
/// regardless of thread count.
pub fn mean_square_displacement(
    medium: &MediumParams,
    n_walkers: usize,
    times: &[f64],
    seed: u64,
) -> Vec<f64> {
    let per_walker: Vec<Vec<f64>> = (0..n_walkers)
        .into_par_iter()
        .map(|w| {
            let mut rng = walker_rng(seed, w as u64);
            let mut r2 = vec![0.0; times.len()];
            walk(medium.dim, medium.speed, medium.gamma_el, times, &mut rng, |_| {}, |i, v| r2[i] = v);
            r2
        })
        .collect();
    let mut sum = vec![0.0; times.len()];
    for r2 in &per_walker {
        for (s, v) in sum.iter_mut().zip(r2) {
            *s += v;
        }
    }
    sum.iter().map(|s| s / n_walkers as f64).collect()
}

/// Number of fit points used by [`random_walk_d`].
const FIT_POINTS: usize = 32;

/// Diffusion constant from the slope of `⟨r²⟩ = r₀² + 2 d D t` on
/// `[10 τ_el, t_end]`. The uncertainty is the standard error of the
/// per-walker slope estimates.
pub fn random_walk_d(medium: &MediumParams, n_walkers: usize, t_end: f64, seed: u64) -> Result<DiffusionResult> {
    let tau = medium.tau_el();
    if t_end < 20.0 * tau {
        return Err(Error::InsufficientRange(format!(
            "t_end = {t_end} must be at least 20 τ_el = {}",
            20.0 * tau
        )));
    }
    if n_walkers < 2 {
        return Err(Error::InvalidParameter("need at least two walkers".into()));
    }
    let t0 = 10.0 * tau;
    let times: Vec<f64> = (0..FIT_POINTS)
        .map(|k| t0 + (t_end - t0) * k as f64 / (FIT_POINTS - 1) as f64)
        .collect();
    let mean_t = times.iter().sum::<f64>() / times.len() as f64;
    let sxx: f64 = times.iter().map(|t| (t - mean_t).powi(2)).sum();
    let two_d = 2.0 * medium.dim.get() as f64;

    let estimates: Vec<f64> = (0..n_walkers)
        .into_par_iter()
        .map(|w| {
            let mut rng = walker_rng(seed, w as u64);
            let mut sxy = 0.0;
            walk(medium.dim, medium.speed, medium.gamma_el, &times, &mut rng, |_| {}, |i, r2| {
                sxy += (times[i] - mean_t) * r2;
            });
            sxy / sxx / two_d
        })
        .collect();
    let (mean, stderr) = mean_and_stderr(&estimates);
    Ok(DiffusionResult {
        d: mean,
        method: DiffusionMethod::MonteCarlo,
        uncertainty: Some(stderr),
    })
}

/// Sequential mean and standard error of the mean.
pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium(d: usize) -> MediumParams {
        MediumParams::new(d, 1.0, 1.0).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(MediumParams::new(1, 1.0, 1.0).is_err());
        assert!(MediumParams::new(3, 0.0, 1.0).is_err());
        assert!(MediumParams::new(3, 1.0, -1.0).is_err());
        let m = MediumParams::from_impurities(3, 1.0, 0.5, 2.0, 1.0).unwrap();
        assert!((m.gamma_el - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn grids_are_normalized_and_isotropic() {
        for (dim, n) in [(Dimension::Two, 16), (Dimension::Three, 72), (Dimension::Three, 400)] {
            let g = AngularGrid::uniform(dim, n).unwrap();
            assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for a in 0..3 {
                let m: f64 = g.directions.iter().zip(&g.weights).map(|(d, w)| d[a] * w).sum();
                assert!(m.abs() < 1e-2, "{dim:?} {n} first moment {m}");
            }
            let zz: f64 = g.directions.iter().zip(&g.weights).map(|(d, w)| d[2] * d[2] * w).sum();
            let xx: f64 = g.directions.iter().zip(&g.weights).map(|(d, w)| d[0] * d[0] * w).sum();
            match dim {
                Dimension::Two => assert!((xx - 0.5).abs() < 1e-14),
                Dimension::Three => assert!((zz - 1.0 / 3.0).abs() < 1e-4),
            }
        }
    }

    #[test]
    fn chapman_enskog_values() {
        assert!((chapman_enskog_d(&medium(3)).d - 1.0 / 3.0).abs() < 1e-15);
        let m = MediumParams::new(2, 2.0, 2.0).unwrap();
        assert!((chapman_enskog_d(&m).d - 1.0).abs() < 1e-15);
        let slow = MediumParams::new(3, 1.0, 0.5).unwrap();
        assert!((chapman_enskog_d(&slow).d - 2.0 * chapman_enskog_d(&medium(3)).d).abs() < 1e-15);
    }

    #[test]
    fn isotropic_state_is_fixed_point() {
        let m = medium(3);
        let grid = Arc::new(AngularGrid::uniform(Dimension::Three, 72).unwrap());
        let s = KineticState::isotropic(grid, [0.0; 3], 2.5);
        let next = isotropise_step(&s, &m, 0.1).unwrap();
        for v in &next.f {
            assert!((v - c64(2.5, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn isotropisation_matches_exponential_oracle() {
        let m = MediumParams::new(2, 1.0, 2.0).unwrap();
        let grid = Arc::new(AngularGrid::uniform(Dimension::Two, 32).unwrap());
        let s0 = KineticState::directed(grid, 3);
        let avg0 = s0.density();
        let dt = 0.05 * m.tau_el();
        let mut s = s0.clone();
        let steps = 100; // 5 τ_el
        for _ in 0..steps {
            s = isotropise_step(&s, &m, dt).unwrap();
            assert!((s.density() - avg0).norm() < 1e-12);
        }
        let t = steps as f64 * dt;
        let decay = (-m.gamma_el * t).exp();
        for (got, f0) in s.f.iter().zip(&s0.f) {
            let oracle = avg0 + (f0 - avg0) * decay;
            assert!((got - oracle).norm() <= 5e-3 * (f0 - avg0).norm() * decay + 1e-12);
        }
    }

    #[test]
    fn global_current_relaxes() {
        let m = medium(3);
        let grid = Arc::new(AngularGrid::uniform(Dimension::Three, 200).unwrap());
        let mut s = KineticState::from_fn(grid, [0.0; 3], |n| 1.0 + 0.5 * n[2]);
        let j0 = s.current(m.speed)[2];
        let dt = 0.05;
        for _ in 0..40 {
            s = isotropise_step(&s, &m, dt).unwrap();
        }
        let expected = j0 * (-2.0f64).exp();
        assert!((s.current(m.speed)[2] - expected).norm() < 1e-6 * j0.norm());
    }

    #[test]
    fn isotropisation_step_limits() {
        let m = medium(2);
        let grid = Arc::new(AngularGrid::uniform(Dimension::Two, 16).unwrap());
        let s = KineticState::isotropic(grid.clone(), [0.0; 3], 1.0);
        assert!(matches!(isotropise_step(&s, &m, 0.2), Err(Error::StepTooLarge(_))));
        let moving = KineticState::isotropic(grid, [0.1, 0.0, 0.0], 1.0);
        assert!(isotropise_step(&moving, &m, 0.01).is_err());
    }

    #[test]
    fn isotropisation_rate_for_grids() {
        for (dim, n) in [(Dimension::Two, 16), (Dimension::Two, 64), (Dimension::Three, 72), (Dimension::Three, 300)] {
            let m = MediumParams::new(dim.get(), 1.0, 3.0).unwrap();
            let grid = Arc::new(AngularGrid::uniform(dim, n).unwrap());
            let rate = measure_isotropisation_rate(&m, grid, 5.0 * m.tau_el(), 0.1 * m.tau_el()).unwrap();
            assert!((rate / m.gamma_el - 1.0).abs() < 1e-3, "{dim:?} {n}: {rate}");
        }
    }

    #[test]
    fn zero_q_density_is_constant() {
        let m = medium(3);
        let grid = Arc::new(AngularGrid::uniform(Dimension::Three, 72).unwrap());
        let s = KineticState::from_fn(grid, [0.0; 3], |n| 1.0 + n[0] + 0.3 * n[2] * n[2]);
        let series = fourier_mode_evolution(&s, &m, 5.0).unwrap();
        let n0 = series.samples[0].n;
        for smp in &series.samples {
            assert!((smp.n - n0).norm() < 1e-12);
        }
    }

    #[test]
    fn fourier_decay_and_continuity() {
        let m = medium(3);
        let grid = Arc::new(AngularGrid::uniform(Dimension::Three, 400).unwrap());
        let q = 0.01;
        let s = KineticState::isotropic(grid, [0.0, 0.0, q], 1.0);
        let series = fourier_mode_evolution(&s, &m, 50.0).unwrap();
        assert!(series.warning.is_none());
        assert!(series.max_continuity_residual() < 1e-10);
        let rate = series.fit_decay_rate(5.0, 50.0).unwrap();
        let expected = m.diffusion_constant() * q * q;
        assert!((rate / expected - 1.0).abs() < 1e-2, "{rate} vs {expected}");
    }

    #[test]
    fn discrepancy_grows_quadratically_in_q() {
        let m = medium(2);
        let d0 = m.diffusion_constant();
        let err = |q: f64| (fourier_decay_d(&m, q, 64).unwrap().d / d0 - 1.0).abs();
        let (e1, e2) = (err(0.1), err(0.2));
        assert!(err(0.01) < 1e-2);
        let ratio = e2 / e1;
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio} ({e1}, {e2})");
    }

    #[test]
    fn hydrodynamic_warning() {
        let m = medium(2);
        let grid = Arc::new(AngularGrid::uniform(Dimension::Two, 16).unwrap());
        let s = KineticState::isotropic(grid, [0.5, 0.0, 0.0], 1.0);
        let series = fourier_mode_evolution(&s, &m, 1.0).unwrap();
        assert!(series.warning.is_some());
    }

    #[test]
    fn ballistic_regime() {
        let m = medium(3);
        let times = [0.001, 0.002, 0.004];
        let msd = mean_square_displacement(&m, 20_000, &times, 7);
        for (t, r2) in times.iter().zip(msd) {
            assert!((r2 / (t * t) - 1.0).abs() < 5e-3, "{t}: {r2}");
        }
    }

    #[test]
    fn random_walk_reproducible_and_range_checked() {
        let m = medium(2);
        let a = random_walk_d(&m, 2_000, 40.0, 3).unwrap();
        let b = random_walk_d(&m, 2_000, 40.0, 3).unwrap();
        assert_eq!(a.d.to_bits(), b.d.to_bits());
        assert!(matches!(random_walk_d(&m, 2_000, 10.0, 3), Err(Error::InsufficientRange(_))));
    }

    #[test]
    fn random_walk_agrees_with_chapman_enskog() {
        for d in [2, 3] {
            let m = medium(d);
            let mc = random_walk_d(&m, 20_000, 100.0, 11).unwrap();
            let ce = chapman_enskog_d(&m).d;
            let se = mc.uncertainty.unwrap();
            assert!((mc.d - ce).abs() < 3.0 * se, "d={d}: {} ± {se} vs {ce}", mc.d);
        }
    }
}
