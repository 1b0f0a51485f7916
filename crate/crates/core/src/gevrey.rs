//! Gevrey-2 norms, the shrinking radius `phi(t) = L0 - delta0 t`, and the
//! energy built from them.
//!
//! Order-`n` term: `sigma^(2n) / (n!)^4 * ||d^n f||^2`, with
//! `||d^n f||^2 = sum_k |k|^(2n) |f_hat(k)|^2 / (2L)` (discrete Parseval).

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::GevreyError;
use crate::grid::Field;
use crate::spectral::derivative;

/// Spectral modes below this fraction of the largest are treated as round-off.
pub const SPECTRAL_NOISE_FLOOR: f64 = 1e-13;

/// Terms may grow up to this order before growth is read as round-off.
const GROWTH_GRACE_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GevreyKind {
    /// Weights from order 0.
    X,
    /// Weights from order 1.
    XDot,
    /// `||f||^2` plus order-`n` terms times `n^2`.
    Y,
    /// Order-`n` terms times `n^2`, from order 1.
    YDot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GevreyParams {
    pub l0: f64,
    pub delta0: f64,
    pub n_max: usize,
    pub tail_tol: f64,
}

impl Default for GevreyParams {
    fn default() -> Self {
        GevreyParams { l0: 10.0, delta0: 1000.0, n_max: 40, tail_tol: 1e-14 }
    }
}

impl GevreyParams {
    pub fn new(l0: f64, delta0: f64) -> Result<Self, GevreyError> {
        let p = GevreyParams { l0, delta0, ..Default::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GevreyError> {
        if !(self.l0 >= 4.0 && self.l0.is_finite()) {
            return Err(GevreyError::InvalidParams(format!("L0 must be >= 4, got {}", self.l0)));
        }
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(GevreyError::InvalidParams(format!("delta0 must be > 0, got {}", self.delta0)));
        }
        if self.n_max < 5 {
            return Err(GevreyError::InvalidParams(format!("n_max must be >= 5, got {}", self.n_max)));
        }
        if !(self.tail_tol >= 0.0) {
            return Err(GevreyError::InvalidParams(format!("tail_tol must be >= 0, got {}", self.tail_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GevreyReport {
    pub value: f64,
    /// Per-order contributions; `value^2` is their sum.
    #[serde(skip)]
    pub terms: Vec<f64>,
    pub truncated_at: usize,
    pub roundoff_flag: bool,
}

impl GevreyReport {
    fn zero() -> Self {
        GevreyReport { value: 0.0, terms: vec![0.0], truncated_at: 0, roundoff_flag: false }
    }
}

/// Gevrey norm of kind `kind` at radius `sigma`.
pub fn gevrey_norm(
    f: &Field,
    sigma: f64,
    kind: GevreyKind,
    params: &GevreyParams,
) -> Result<GevreyReport, GevreyError> {
    if !(sigma > 0.0) {
        return Err(GevreyError::NonPositiveRadius(sigma));
    }
    let grid = f.grid();
    let two_l = 2.0 * grid.half_length();
    let spec = f.spectrum();
    let peak = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(GevreyReport::zero());
    }
    let floor = SPECTRAL_NOISE_FLOOR * peak;
    // (ln |k|, ln |f_hat|^2) for the retained nonzero modes.
    let mut modes: Vec<(f64, f64)> = Vec::new();
    let mut zero_mode_power = 0.0;
    for (i, c) in spec.iter().enumerate() {
        let a = c.norm();
        if a <= floor {
            continue;
        }
        let k = grid.fft_wavenumbers()[i].abs();
        if k == 0.0 {
            zero_mode_power = a * a;
        } else {
            modes.push((k.ln(), 2.0 * a.ln()));
        }
    }
    let l2_sq = (zero_mode_power + modes.iter().map(|(_, p)| p.exp()).sum::<f64>()) / two_l;
    let ln_sigma = sigma.ln();

    let order_term = |n: usize| -> f64 {
        if n == 0 {
            return l2_sq;
        }
        let nf = n as f64;
        let lw = 2.0 * nf * ln_sigma - 4.0 * ln_gamma(nf + 1.0);
        let s: f64 = modes.iter().map(|(lk, lp)| (lw + 2.0 * nf * lk + lp).exp()).sum();
        s / two_l
    };

    let (first, with_n2) = match kind {
        GevreyKind::X => (0, false),
        GevreyKind::XDot => (1, false),
        GevreyKind::Y => (1, true),
        GevreyKind::YDot => (1, true),
    };
    let mut terms = Vec::new();
    let mut sum = 0.0;
    if kind == GevreyKind::Y {
        terms.push(l2_sq);
        sum += l2_sq;
    }
    let mut truncated_at = params.n_max;
    let mut roundoff_flag = false;
    let mut prev: Option<f64> = None;
    for n in first..=params.n_max {
        let mut t = order_term(n);
        if with_n2 {
            t *= (n * n) as f64;
        }
        if n > GROWTH_GRACE_ORDER {
            if let Some(p) = prev {
                if t > p {
                    roundoff_flag = true;
                    truncated_at = n;
                    break;
                }
            }
        }
        terms.push(t);
        sum += t;
        prev = Some(t);
        if t < params.tail_tol * sum || (sum == 0.0 && t == 0.0) {
            truncated_at = n;
            break;
        }
    }
    Ok(GevreyReport { value: sum.sqrt(), terms, truncated_at, roundoff_flag })
}

/// `phi(t) = L0 - delta0 t`.
pub fn radius(t: f64, params: &GevreyParams) -> Result<f64, GevreyError> {
    let phi = params.l0 - params.delta0 * t;
    if phi <= 0.0 {
        Err(GevreyError::ExhaustedRadius { t, phi })
    } else {
        Ok(phi)
    }
}

/// Energy with its two component norms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub energy: f64,
    pub phi: f64,
    pub u_norm: GevreyReport,
    pub w_alpha_norm: GevreyReport,
}

/// `E = (||U||^2 in Y-dot_phi + ||W_a||^2 in X_phi) / 2` at `phi = phi(t)`.
pub fn energy(w: &Field, u: &Field, t: f64, params: &GevreyParams) -> Result<f64, GevreyError> {
    energy_report(w, u, t, params).map(|r| r.energy)
}

pub fn energy_report(w: &Field, u: &Field, t: f64, params: &GevreyParams) -> Result<EnergyReport, GevreyError> {
    let phi = radius(t, params)?;
    let u_norm = gevrey_norm(u, phi, GevreyKind::YDot, params)?;
    let w_alpha_norm = gevrey_norm(&derivative(w, 1), phi, GevreyKind::X, params)?;
    let energy = 0.5 * (u_norm.value * u_norm.value + w_alpha_norm.value * w_alpha_norm.value);
    Ok(EnergyReport { energy, phi, u_norm, w_alpha_norm })
}

/// `((n+1)!^2 / sigma^(n+1) + n!^2 / sigma^n) ||f||_X`, an upper bound for
/// `sup |d^n f|`.
///
/// Follows from `||g||_inf^2 <= ||g|| ||g'||` and the order-`n` and
/// order-`n+1` terms of the `X_sigma` norm.
pub fn embedding_bound(f: &Field, sigma: f64, n: u32) -> Result<f64, GevreyError> {
    if !(sigma > 0.0) {
        return Err(GevreyError::NonPositiveRadius(sigma));
    }
    let params = GevreyParams { n_max: (n as usize + 2).max(40), ..Default::default() };
    let x = gevrey_norm(f, sigma, GevreyKind::X, &params)?.value;
    let nf = n as f64;
    let a = (2.0 * ln_gamma(nf + 2.0) - (nf + 1.0) * sigma.ln()).exp();
    let b = (2.0 * ln_gamma(nf + 1.0) - nf * sigma.ln()).exp();
    Ok((a + b) * x)
}

/// Measured `max |d^n f|` on the grid.
pub fn sup_derivative(f: &Field, n: u32) -> f64 {
    derivative(f, n).max_abs()
}
