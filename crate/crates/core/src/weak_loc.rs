//! Weak-localization correction to the diffusion constant with spin-flip
//! dephasing.
//!
//! `ΔD/D₀ = -(1/πν) Σ_K w_K ∫_{q_min}^{q_max} d^dq/(2π)^d 1/(D₀q² + 1/τ_eff(K))`
//! with a hard ultraviolet cutoff `q_max = 1/ℓ_el`, an optional infrared
//! cutoff `q_min = 1/L_sys`, and `1/τ_eff(K) = 1/τ_c(K) + D₀/L_φ²`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::angular_momentum::TwiceJ;
use crate::error::{Error, Result};

/// Relative agreement demanded between closed form and quadrature.
pub const QUADRATURE_AGREEMENT: f64 = 1e-8;

/// `w_K = (-1)^{2s+K} (2K+1)/(2s+1)` for `K = 0..=2s`.
pub fn channel_weights(twice_s: TwiceJ) -> Vec<(u32, f64)> {
    let dim = twice_s.dim() as f64;
    (0..=twice_s.twice())
        .map(|k| {
            let sign = if (twice_s.twice() + k).is_multiple_of(2) { 1.0 } else { -1.0 };
            (k, sign * (2 * k + 1) as f64 / dim)
        })
        .collect()
}

/// `1/τ_c(K) = (2/τ_sf)(1 - K(K+1)/(4 s(s+1)))`; infinite for `s = 0` or
/// `τ_sf = ∞`.
pub fn coherence_times(twice_s: TwiceJ, tau_sf: f64) -> Result<Vec<(u32, f64)>> {
    if !(tau_sf > 0.0) {
        return Err(Error::InvalidParameter(format!("τ_sf must be positive, got {tau_sf}")));
    }
    let casimir = twice_s.casimir();
    Ok((0..=twice_s.twice())
        .map(|k| {
            if casimir == 0.0 || tau_sf.is_infinite() {
                return (k, f64::INFINITY);
            }
            let kk = k as f64 * (k as f64 + 1.0);
            let rate = (2.0 / tau_sf) * (1.0 - kk / (4.0 * casimir));
            (k, 1.0 / rate)
        })
        .collect())
}

/// Inputs of the weak-localization integral. `None` lengths and times are
/// infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WLParams {
    pub dim: usize,
    #[serde(rename = "D0")]
    pub d0: f64,
    pub nu: f64,
    pub l_el: f64,
    pub l_phi: Option<f64>,
    pub l_sys: Option<f64>,
    pub tau_sf: Option<f64>,
    pub twice_s: TwiceJ,
}

impl WLParams {
    /// Spin-less, cutoff-free parameters; add cutoffs with the setters.
    pub fn new(dim: usize, d0: f64, l_el: f64) -> Self {
        WLParams {
            dim,
            d0,
            nu: 1.0,
            l_el,
            l_phi: None,
            l_sys: None,
            tau_sf: None,
            twice_s: TwiceJ::new(0),
        }
    }

    pub fn with_l_phi(mut self, l_phi: f64) -> Self {
        self.l_phi = Some(l_phi);
        self
    }

    pub fn with_l_sys(mut self, l_sys: f64) -> Self {
        self.l_sys = Some(l_sys);
        self
    }

    pub fn with_spin_flip(mut self, twice_s: TwiceJ, tau_sf: f64) -> Self {
        self.twice_s = twice_s;
        self.tau_sf = Some(tau_sf);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidParameter(format!("d must be 1, 2 or 3, got {}", self.dim)));
        }
        TwiceJ::spin(self.twice_s.twice())?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && !v.is_nan() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("D0", self.d0)?;
        positive("nu", self.nu)?;
        positive("l_el", self.l_el)?;
        if self.l_el.is_infinite() {
            return Err(Error::InvalidParameter("l_el must be finite".into()));
        }
        for (name, v) in [("L_phi", self.l_phi), ("L_sys", self.l_sys)] {
            if let Some(v) = v {
                positive(name, v)?;
                if v <= self.l_el {
                    return Err(Error::InvalidParameter(format!(
                        "{name} = {v} must exceed l_el = {}",
                        self.l_el
                    )));
                }
            }
        }
        if let Some(t) = self.tau_sf {
            positive("tau_sf", t)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChannelTerm {
    #[serde(rename = "K")]
    pub k: u32,
    pub weight: f64,
    /// `None` when the channel has no spin dephasing.
    pub tau_c: Option<f64>,
    /// `w_K` times the prefactored integral.
    pub contribution: f64,
    /// Closed-form value of the bare q-integral.
    pub integral: f64,
    /// Quadrature value of the bare q-integral.
    pub integral_quadrature: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WLResult {
    pub delta_d_over_d0: f64,
    pub per_channel: Vec<ChannelTerm>,
    /// Largest relative closed-form/quadrature discrepancy over channels.
    pub quadrature_discrepancy: f64,
}

/// Closed form of `∫_{q_min<|q|<q_max} d^dq/(2π)^d 1/(D q² + D κ²)`.
pub fn q_integral_closed(dim: usize, d: f64, kappa: f64, qmin: f64, qmax: f64) -> f64 {
    match dim {
        1 if kappa == 0.0 => (1.0 / qmin - 1.0 / qmax) / (PI * d),
        1 => ((qmax / kappa).atan() - (qmin / kappa).atan()) / (PI * d * kappa),
        2 => ((qmax * qmax + kappa * kappa) / (qmin * qmin + kappa * kappa)).ln() / (4.0 * PI * d),
        3 if kappa == 0.0 => (qmax - qmin) / (2.0 * PI * PI * d),
        3 => ((qmax - qmin) - kappa * ((qmax / kappa).atan() - (qmin / kappa).atan())) / (2.0 * PI * PI * d),
        _ => f64::NAN,
    }
}

/// Adaptive quadrature of the same integral in the radial variable,
/// switching to `u = ln q` away from the origin.
pub fn q_integral_quadrature(dim: usize, d: f64, kappa: f64, qmin: f64, qmax: f64) -> Result<f64> {
    let shell = match dim {
        1 => 2.0 / (2.0 * PI),
        2 => 2.0 * PI / (4.0 * PI * PI),
        3 => 4.0 * PI / (8.0 * PI * PI * PI),
        _ => return Err(Error::InvalidParameter(format!("unsupported dimension {dim}"))),
    };
    let k2 = kappa * kappa;
    let radial = |q: f64| q.powi(dim as i32 - 1) / (d * (q * q + k2));
    let log_radial = |u: f64| {
        let q = u.exp();
        q.powi(dim as i32) / (d * (q * q + k2))
    };
    let tol = 1e-13;
    let mut total = 0.0;
    let mut lo = qmin;
    if qmin == 0.0 {
        let split = if kappa > 0.0 { kappa.min(qmax) } else { qmax };
        total += gauss_kronrod(&radial, 0.0, split, tol)?;
        lo = split;
    }
    if lo < qmax {
        total += gauss_kronrod(&log_radial, lo.ln(), qmax.ln(), tol)?;
    }
    Ok(shell * total)
}

#[allow(clippy::excessive_precision)]
const KRONROD_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * KRONROD_WEIGHTS[7];
    let mut gauss = fc * GAUSS_WEIGHTS[3];
    for i in 0..7 {
        let x = h * KRONROD_NODES[i];
        let pair = f(c - x) + f(c + x);
        kronrod += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive 7/15-point Gauss-Kronrod integration to relative
/// tolerance `rel_tol`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    const MAX_INTERVALS: usize = 2000;
    let (v, e) = kronrod15(f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    loop {
        let value: f64 = intervals.iter().map(|i| i.2).sum();
        let error: f64 = intervals.iter().map(|i| i.3).sum();
        if error <= rel_tol * value.abs() || error < f64::MIN_POSITIVE {
            return Ok(value);
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::Computation(format!(
                "quadrature did not converge: estimate {value}, error {error}"
            )));
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        for (l, h) in [(lo, mid), (mid, hi)] {
            let (v, e) = kronrod15(f, l, h);
            intervals.push((l, h, v, e));
        }
    }
}

/// Weak-localization correction, evaluated in closed form and checked
/// against quadrature channel by channel.
pub fn wl_correction(params: &WLParams) -> Result<WLResult> {
    params.validate()?;
    let qmax = 1.0 / params.l_el;
    let qmin = params.l_sys.map_or(0.0, |l| 1.0 / l);
    let phi_rate = params.l_phi.map_or(0.0, |l| params.d0 / (l * l));
    let weights = channel_weights(params.twice_s);
    let times = coherence_times(params.twice_s, params.tau_sf.unwrap_or(f64::INFINITY))?;
    let prefactor = -1.0 / (PI * params.nu);

    let mut per_channel = Vec::with_capacity(weights.len());
    let mut discrepancy: f64 = 0.0;
    for ((k, w), (_, tau_c)) in weights.into_iter().zip(times) {
        let rate = phi_rate + 1.0 / tau_c;
        if params.dim <= 2 && rate == 0.0 && qmin == 0.0 {
            return Err(Error::Divergent(format!(
                "the q-integral diverges at small q in d = {} for channel K = {k}: \
                 supply a finite L_phi, L_sys or tau_sf",
                params.dim
            )));
        }
        let kappa = (rate / params.d0).sqrt();
        let closed = q_integral_closed(params.dim, params.d0, kappa, qmin, qmax);
        let quad = q_integral_quadrature(params.dim, params.d0, kappa, qmin, qmax)?;
        let rel = (closed - quad).abs() / closed.abs();
        discrepancy = discrepancy.max(rel);
        if !(rel <= QUADRATURE_AGREEMENT) {
            return Err(Error::Computation(format!(
                "closed form {closed} and quadrature {quad} disagree for K = {k} (relative {rel:e})"
            )));
        }
        per_channel.push(ChannelTerm {
            k,
            weight: w,
            tau_c: tau_c.is_finite().then_some(tau_c),
            contribution: prefactor * w * closed,
            integral: closed,
            integral_quadrature: quad,
        });
    }
    Ok(WLResult {
        delta_d_over_d0: per_channel.iter().map(|c| c.contribution).sum(),
        per_channel,
        quadrature_discrepancy: discrepancy,
    })
}
