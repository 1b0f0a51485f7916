//! Closed-form Taylor-sign coefficient `A1` for a flat interface over a
//! counter-rotating vortex pair, the reduced profile `f(gamma, k)`, and the
//! residue identities that make the closed form exact.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::TaylorError;
use crate::grid::{Field, Grid};
use crate::quadrature::{integrate_real_line, QuadOptions, QuadResult};
use crate::waterwave::Vortex;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Symmetric pair: `z1 = -x + iy` with strength `lambda`, `z2 = x + iy` with `-lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairConfig {
    pub x: f64,
    pub y: f64,
    pub lambda: f64,
}

impl PairConfig {
    pub fn new(x: f64, y: f64, lambda: f64) -> Result<Self, TaylorError> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(TaylorError::InvalidPair(format!("x must be positive, got {x}")));
        }
        if !(y < 0.0 && y.is_finite()) {
            return Err(TaylorError::InvalidPair(format!("y must be negative, got {y}")));
        }
        if !lambda.is_finite() {
            return Err(TaylorError::InvalidPair(format!("lambda must be finite, got {lambda}")));
        }
        Ok(PairConfig { x, y, lambda })
    }

    /// Pair with `lambda = pi sqrt(gamma) |y_ref|^(3/2)`, placed at depth `y`.
    pub fn from_gamma(x: f64, y: f64, gamma: f64, y_ref: f64) -> Result<Self, TaylorError> {
        if !(gamma >= 0.0) {
            return Err(TaylorError::InvalidPair(format!("gamma must be >= 0, got {gamma}")));
        }
        PairConfig::new(x, y, lambda_from_gamma(gamma, y_ref))
    }

    /// `gamma = lambda^2 / (pi^2 |y|^3)`.
    pub fn gamma(&self) -> f64 {
        self.lambda * self.lambda / (PI * PI * self.y.abs().powi(3))
    }

    pub fn vortices(&self) -> [Vortex; 2] {
        [
            Vortex { position: Complex64::new(-self.x, self.y), strength: self.lambda },
            Vortex { position: Complex64::new(self.x, self.y), strength: -self.lambda },
        ]
    }
}

/// `lambda = pi sqrt(gamma) |y|^(3/2)`.
pub fn lambda_from_gamma(gamma: f64, y: f64) -> f64 {
    PI * gamma.sqrt() * y.abs().powf(1.5)
}

/// Pair self-interaction part `G1` of the closed form.
pub fn pair_term_closed(alpha: f64, cfg: &PairConfig) -> f64 {
    let (x, y, l) = (cfg.x, cfg.y, cfg.lambda);
    let a2 = alpha * alpha;
    let r2 = x * x + y * y;
    let num = 3.0 * y * a2 * a2 + r2 * y * (3.0 * x * x - y * y + 2.0 * a2);
    let den = a2 * a2 + r2 * r2 + 2.0 * a2 * (y * y - x * x);
    l * l / (PI * PI) * num / (den * den)
}

/// Squared-difference part `G2` of the closed form; never negative.
pub fn interaction_term_closed(alpha: f64, cfg: &PairConfig) -> f64 {
    let (x, y, l) = (cfg.x, cfg.y, cfg.lambda);
    let num = alpha * alpha * x * x + x.powi(4) + 5.0 * x * x * y * y;
    let den = ((alpha + x).powi(2) + y * y) * ((alpha - x).powi(2) + y * y) * (x * x + y * y) * y.abs();
    l * l / (4.0 * PI * PI) * num / den
}

/// `A1(alpha) = 1 + G1 + G2`; even in `alpha`.
pub fn a1_flat_pair(alpha: f64, cfg: &PairConfig) -> f64 {
    1.0 + pair_term_closed(alpha, cfg) + interaction_term_closed(alpha, cfg)
}

/// `g(k) = (3k^4 + 2k^2 - 1) / (k^2 + 1)^4`; range `[-1, 1/4]`.
pub fn g_profile(k: f64) -> f64 {
    let k2 = k * k;
    (3.0 * k2 * k2 + 2.0 * k2 - 1.0) / (k2 + 1.0).powi(4)
}

/// `f(gamma, k) = 1 - gamma g(k)`.
pub fn f_reduced(gamma: f64, k: f64) -> f64 {
    1.0 - gamma * g_profile(k)
}

/// A minimum value and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub alpha: f64,
}

/// Golden-section minimization of `f` on `[a, b]` to width `tol`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Extremum {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let alpha = 0.5 * (a + b);
    Extremum { value: f(alpha), alpha }
}

/// Global minimum of [`a1_flat_pair`] over `alpha`.
///
/// Coarse scan on `|alpha| <= 10(|y| + x)` with step `|y|/200`, then golden
/// section to `1e-10` around the best scan point. The reported argmin is
/// nonnegative since `A1` is even.
pub fn inf_a1_flat(cfg: &PairConfig) -> Extremum {
    if cfg.lambda == 0.0 {
        return Extremum { value: 1.0, alpha: 0.0 };
    }
    let window = 10.0 * (cfg.y.abs() + cfg.x);
    let step = cfg.y.abs() / 200.0;
    let count = (2.0 * window / step).ceil() as usize;
    let f = |a: f64| a1_flat_pair(a, cfg);
    let (best_i, _) = (0..=count)
        .map(|i| (i, f(-window + i as f64 * step)))
        .fold((0usize, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let centre = -window + best_i as f64 * step;
    let ext = golden_section_min(f, centre - step, centre + step, 1e-10);
    Extremum { value: ext.value, alpha: ext.alpha.abs() }
}

/// Depth where `gamma = 4`: `(lambda^2 / (4 pi^2))^(1/3)`.
pub fn crossing_depth(lambda: f64) -> Result<f64, TaylorError> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(TaylorError::ZeroLambda);
    }
    Ok((lambda * lambda / (4.0 * PI * PI)).cbrt())
}

/// Summary of the closed-form profile for one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityProfile {
    pub gamma: f64,
    pub inf_value: f64,
    pub argmin_alpha: f64,
    pub crossing_depth: Option<f64>,
}

pub fn stability_profile(cfg: &PairConfig) -> StabilityProfile {
    let ext = inf_a1_flat(cfg);
    StabilityProfile {
        gamma: cfg.gamma(),
        inf_value: ext.value,
        argmin_alpha: ext.alpha,
        crossing_depth: crossing_depth(cfg.lambda).ok(),
    }
}

fn check_lower(w: Complex64) -> Result<(), TaylorError> {
    if w.im < 0.0 && w.re.is_finite() {
        Ok(())
    } else {
        Err(TaylorError::NotLowerHalfPlane(w))
    }
}

/// `int db / ((b - w1)(b - conj w2)) = 2 pi i / (conj w2 - w1)` for `w1, w2` in
/// the lower half-plane.
pub fn residue_pair_integral(w1: Complex64, w2: Complex64) -> Result<Complex64, TaylorError> {
    check_lower(w1)?;
    check_lower(w2)?;
    Ok(2.0 * PI * I / (w2.conj() - w1))
}

/// The same integral by adaptive quadrature over the real line.
pub fn residue_pair_integral_quadrature(
    w1: Complex64,
    w2: Complex64,
    opts: QuadOptions,
) -> Result<QuadResult, TaylorError> {
    check_lower(w1)?;
    check_lower(w2)?;
    let w2c = w2.conj();
    Ok(integrate_real_line(|b| 1.0 / ((b - w1) * (b - w2c)), opts)?)
}

/// Closed form of `(1/2pi) int |Qbar(a) - Qbar(b)|^2 / (a - b)^2 db` for the
/// vortex field `Qbar` on the flat line.
#[derive(Debug, Clone)]
pub struct InteractionSum {
    vortices: Vec<Vortex>,
}

pub fn interaction_sum(vortices: &[Vortex]) -> Result<InteractionSum, TaylorError> {
    for v in vortices {
        check_lower(v.position)?;
    }
    Ok(InteractionSum { vortices: vortices.to_vec() })
}

impl InteractionSum {
    /// Complex value of the double sum; its imaginary part vanishes.
    pub fn eval_complex(&self, alpha: f64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for vj in &self.vortices {
            for vk in &self.vortices {
                let zj = vj.position;
                let zk = vk.position;
                let w = vj.strength * vk.strength / (4.0 * PI * PI);
                s += w / ((alpha - zj) * (alpha - zk).conj()) * (I / (zk.conj() - zj));
            }
        }
        s
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        self.eval_complex(alpha).re
    }

    pub fn on_grid(&self, grid: &Grid) -> Field {
        Field::real_fn(grid, |a| self.eval(a))
    }
}

/// Velocities from mutual induction alone (flat interface, no wave).
pub fn mutual_induction_velocities(vortices: &[Vortex]) -> Vec<Complex64> {
    vortices
        .iter()
        .enumerate()
        .map(|(j, vj)| {
            vortices
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, vk)| vk.strength * I / (2.0 * PI * (vj.position - vk.position).conj()))
                .sum()
        })
        .collect()
}

/// `sum_j (lambda_j/2pi) Re{ 2/(a - z_j)^2 (Qbar(a) - zdot_j) }` on the flat
/// line, using `(I - H)[1/(a - z_j)^2] = 2/(a - z_j)^2`.
pub fn flat_pair_term(alpha: f64, vortices: &[Vortex]) -> f64 {
    let zdot = mutual_induction_velocities(vortices);
    let qbar: Complex64 = vortices
        .iter()
        .map(|v| v.strength * I / (2.0 * PI) / (alpha - v.position.conj()))
        .sum();
    vortices
        .iter()
        .zip(&zdot)
        .map(|(v, zd)| {
            let d = alpha - v.position;
            v.strength / (2.0 * PI) * (2.0 / (d * d) * (qbar - zd)).re
        })
        .sum()
}

/// `1 + interaction_sum - flat_pair_term`: the flat-line `A1` assembled from
/// the residue identities rather than the closed form.
pub fn a1_flat_from_identities(alpha: f64, vortices: &[Vortex]) -> Result<f64, TaylorError> {
    let s = interaction_sum(vortices)?;
    Ok(1.0 + s.eval(alpha) - flat_pair_term(alpha, vortices))
}

/// One row of a gamma sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub x: f64,
    pub y: f64,
    pub lambda: f64,
    pub inf_a1: f64,
    pub argmin_alpha: f64,
}

pub const SWEEP_HEADER: &str = "gamma,x,y,lambda,inf_A1,argmin_alpha";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.gamma, self.x, self.y, self.lambda, self.inf_a1, self.argmin_alpha
        )
    }
}

/// `steps` evenly spaced gammas in `[gamma_min, gamma_max]` at depth `y`;
/// rows are computed in parallel and returned in order.
pub fn sweep(gamma_min: f64, gamma_max: f64, steps: usize, x: f64, y: f64) -> Result<Vec<SweepRow>, TaylorError> {
    if !(gamma_min.is_finite() && gamma_max.is_finite() && gamma_min >= 0.0 && gamma_min < gamma_max) {
        return Err(TaylorError::InvalidSweep(format!(
            "need 0 <= gamma_min < gamma_max, got [{gamma_min}, {gamma_max}]"
        )));
    }
    if steps < 2 {
        return Err(TaylorError::InvalidSweep(format!("steps must be >= 2, got {steps}")));
    }
    PairConfig::new(x, y, 0.0)?;
    let rows = (0..steps)
        .into_par_iter()
        .map(|i| {
            let gamma = gamma_min + (gamma_max - gamma_min) * i as f64 / (steps - 1) as f64;
            let cfg = PairConfig { x, y, lambda: lambda_from_gamma(gamma, y) };
            let ext = inf_a1_flat(&cfg);
            SweepRow { gamma, x, y, lambda: cfg.lambda, inf_a1: ext.value, argmin_alpha: ext.alpha }
        })
        .collect();
    Ok(rows)
}
