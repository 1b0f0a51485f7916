//! Derived quantities of the evolution in Riemann-mapping variables.
//!
//! State: real fields `W = Re(Z - a)`, `U = Re F` and point vortices. The
//! interface is `Z = a + (I + H) W`, the velocity trace `F = (I + H) U`.
//!
//! Evolution:
//! `U_t = -b U_a + A Lambda W + G`,
//! `W_t = -b W_a - U - Re{[Fbar, H](1/Z_a - 1)} + R`,
//! `zdot_j = conj(cauchy(z_j)) + sum_{k != j} lambda_k i / (2 pi conj(z_j - z_k))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FieldError, SpectralError};
use crate::grid::{ensure_same_grid, Field, Grid};
use crate::spectral::{
    cauchy_velocity_with, commutator_with_hilbert, derivative, hilbert, lambda_op, minus_hilbert_projection, plus_hilbert_projection,
    sq_diff_integral, sq_diff_spectral,
};
use crate::taylor_sign::{interaction_sum, Extremum};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Point vortex at `position` with circulation `strength`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vortex {
    pub position: Complex64,
    pub strength: f64,
}

/// Full dynamical state.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub w: Field,
    pub u: Field,
    pub vortices: Vec<Vortex>,
    pub t: f64,
}

impl WaveState {
    pub fn new(w: Field, u: Field, vortices: Vec<Vortex>, t: f64) -> Result<Self, FieldError> {
        ensure_same_grid(&w, &u)?;
        for f in [&w, &u] {
            if !f.is_real() {
                return Err(SpectralError::NotReal { max_imag: f.im().iter().fold(0.0, |m, v| v.abs().max(m)), scale: f.max_abs() }.into());
            }
        }
        Ok(WaveState { w, u, vortices, t })
    }

    pub fn grid(&self) -> &Grid {
        self.w.grid()
    }

    /// Flat interface at rest with the given vortices.
    pub fn quiescent(grid: &Grid, vortices: Vec<Vortex>) -> Self {
        WaveState { w: Field::zeros(grid), u: Field::zeros(grid), vortices, t: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.w.samples().iter().chain(self.u.samples()).all(|c| c.re.is_finite())
            && self.vortices.iter().all(|v| v.position.re.is_finite() && v.position.im.is_finite())
    }
}

/// How the squared-difference integral inside `A1` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SqDiffScheme {
    /// `O(n^2)` trapezoid quadrature with far-field correction.
    Quadrature,
    /// `O(n log n)` multiplier form; used in time stepping.
    #[default]
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AssemblyOptions {
    pub sq_diff: SqDiffScheme,
    /// Also compute `b_residual` and the chord-arc constant.
    pub diagnostics: bool,
}

/// Interface and trace reconstructed from `(W, U)`.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub z: Field,
    pub f: Field,
    pub z_alpha: Field,
}

/// `Z = a + (I + H) W`, `F = (I + H) U`, `Z_a` spectrally.
pub fn reconstruct(w: &Field, u: &Field) -> Result<Reconstruction, FieldError> {
    ensure_same_grid(w, u)?;
    for f in [w, u] {
        if !f.is_real() {
            return Err(SpectralError::NotReal { max_imag: f.im().iter().fold(0.0, |m, v| v.abs().max(m)), scale: f.max_abs() }.into());
        }
    }
    let grid = w.grid();
    let pw = plus_hilbert_projection(w);
    let z_alpha = derivative(&pw, 1).map(false, |c| c + 1.0);
    let z = Field::from_complex(grid, pw.samples().iter().enumerate().map(|(j, p)| p + grid.node(j)).collect())?;
    let f = plus_hilbert_projection(u);
    Ok(Reconstruction { z, f, z_alpha })
}

/// `min_{j, a} |Z(a) - z_j|`; infinite with no vortices.
pub fn interface_distance(z: &Field, vortices: &[Vortex]) -> f64 {
    vortices
        .iter()
        .map(|v| z.samples().iter().map(|c| (c - v.position).norm()).fold(f64::INFINITY, f64::min))
        .fold(f64::INFINITY, f64::min)
}

fn check_vortices(z: &Field, vortices: &[Vortex]) -> Result<f64, FieldError> {
    let limit = 4.0 * z.grid().spacing();
    let min_im = z.samples().iter().map(|c| c.im).fold(f64::INFINITY, f64::min);
    let mut d_i = f64::INFINITY;
    for (index, v) in vortices.iter().enumerate() {
        if !(v.position.im < min_im) {
            return Err(FieldError::VortexAboveInterface { index, position: v.position, min_im_z: min_im });
        }
        let distance = z.samples().iter().map(|c| (c - v.position).norm()).fold(f64::INFINITY, f64::min);
        if distance < limit {
            return Err(FieldError::VortexTooClose { index, position: v.position, distance, limit });
        }
        d_i = d_i.min(distance);
    }
    Ok(d_i)
}

/// `Q = -sum_j (lambda_j i / 2pi) / (Z - z_j)`.
pub fn compute_q(z: &Field, vortices: &[Vortex]) -> Result<Field, FieldError> {
    check_vortices(z, vortices)?;
    Ok(q_unchecked(z, vortices))
}

fn q_unchecked(z: &Field, vortices: &[Vortex]) -> Field {
    let v: Vec<Complex64> = z
        .samples()
        .iter()
        .map(|&zc| -vortices.iter().map(|v| v.strength * I / (2.0 * PI) / (zc - v.position)).sum::<Complex64>())
        .collect();
    Field::from_complex(z.grid(), v).expect("same grid")
}

/// Quantities every later stage needs.
#[derive(Debug, Clone)]
pub struct Kinematics {
    pub z: Field,
    pub z_alpha: Field,
    pub f: Field,
    pub q: Field,
    /// `D_t Z = Fbar + Qbar`.
    pub dtz: Field,
    /// `1/Z_a - 1`.
    pub g: Field,
    /// `H g`, cached for the commutators.
    pub hg: Field,
    pub d_i: f64,
}

pub fn kinematics(state: &WaveState) -> Result<Kinematics, FieldError> {
    let r = reconstruct(&state.w, &state.u)?;
    let d_i = check_vortices(&r.z, &state.vortices)?;
    let q = q_unchecked(&r.z, &state.vortices);
    let dtz = r.f.conj().add(&q.conj())?;
    let g = r.z_alpha.map(false, |c| 1.0 / c - 1.0);
    let hg = hilbert(&g);
    Ok(Kinematics { z: r.z, z_alpha: r.z_alpha, f: r.f, q, dtz, g, hg, d_i })
}

/// `zdot_j`.
pub fn vortex_velocity(state: &WaveState, kin: &Kinematics, j: usize) -> Result<Complex64, FieldError> {
    let vj = state.vortices.get(j).ok_or(FieldError::NoSuchVortex(j))?;
    let u = cauchy_velocity_with(&kin.z, &kin.z_alpha, &kin.f, vj.position)?;
    let mutual: Complex64 = state
        .vortices
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != j)
        .map(|(_, vk)| vk.strength * I / (2.0 * PI * (vj.position - vk.position).conj()))
        .sum();
    Ok(u.conj() + mutual)
}

pub fn vortex_velocities(state: &WaveState, kin: &Kinematics) -> Result<Vec<Complex64>, FieldError> {
    (0..state.vortices.len()).map(|j| vortex_velocity(state, kin, j)).collect()
}

/// `D_t Q = sum_j (lambda_j i / 2pi) (D_t Z - zdot_j) / (Z - z_j)^2`.
pub fn compute_dtq(state: &WaveState, kin: &Kinematics, zdot: &[Complex64]) -> Field {
    let v: Vec<Complex64> = kin
        .z
        .samples()
        .iter()
        .zip(kin.dtz.samples())
        .map(|(&zc, &dz)| {
            state
                .vortices
                .iter()
                .zip(zdot)
                .map(|(v, zd)| {
                    let d = zc - v.position;
                    v.strength * I / (2.0 * PI) * (dz - zd) / (d * d)
                })
                .sum()
        })
        .collect();
    Field::from_complex(kin.z.grid(), v).expect("same grid")
}

/// Transport coefficient and its split.
#[derive(Debug, Clone)]
pub struct TransportCoefficients {
    pub b: Field,
    pub b0: Field,
    pub b1: Field,
    /// `Re{[Fbar, H](1/Z_a - 1)}`, shared with the `W` equation.
    pub f_commutator: Field,
}

/// `b = Re{[D_t Z, H] g} + Re{(I - H) Qbar} + 2 Re F`,
/// `b0 = 2 Re F + Re{[Fbar, H] g}`, `b1 = b - b0`.
pub fn compute_b(kin: &Kinematics) -> TransportCoefficients {
    let grid = kin.z.grid();
    let c_dtz = commutator_with_hilbert(&kin.dtz, &kin.g, &kin.hg);
    let qbar_proj = minus_hilbert_projection(&kin.q.conj());
    let c_f = commutator_with_hilbert(&kin.f.conj(), &kin.g, &kin.hg);
    let n = grid.n_points();
    let mut b = Vec::with_capacity(n);
    let mut b0 = Vec::with_capacity(n);
    let mut b1 = Vec::with_capacity(n);
    let mut fc = Vec::with_capacity(n);
    for j in 0..n {
        let two_f = 2.0 * kin.f.samples()[j].re;
        let bj = c_dtz.samples()[j].re + qbar_proj.samples()[j].re + two_f;
        let cf = c_f.samples()[j].re;
        let b0j = two_f + cf;
        b.push(bj);
        b0.push(b0j);
        b1.push(bj - b0j);
        fc.push(cf);
    }
    TransportCoefficients {
        b: Field::from_real(grid, b).expect("len"),
        b0: Field::from_real(grid, b0).expect("len"),
        b1: Field::from_real(grid, b1).expect("len"),
        f_commutator: Field::from_real(grid, fc).expect("len"),
    }
}

/// `|| P_- [b - D_t Z (1/Z_a - 1) - Qbar - Fbar] ||_{L^2}` with
/// `P_- = (I - H)/2` minus its mean. Zero exactly when `b` has its defining
/// holomorphy property.
pub fn b_residual(kin: &Kinematics, b: &Field) -> f64 {
    let grid = kin.z.grid();
    let x: Vec<Complex64> = (0..grid.n_points())
        .map(|j| {
            b.samples()[j]
                - kin.dtz.samples()[j] * kin.g.samples()[j]
                - kin.q.samples()[j].conj()
                - kin.f.samples()[j].conj()
        })
        .collect();
    let x = Field::from_complex(grid, x).expect("len");
    let p = minus_hilbert_projection(&x).scale(0.5);
    let m = p.mean();
    p.map(false, |c| c - m).l2_norm()
}

/// Multiplier-form `SqDiff(D_t Z)` with the flat vortex part done exactly.
///
/// With `p = sum_j lambda_j i / (2 pi (a - conj z_j))`, the value is
/// `S(D_t Z) - S(p) + interaction_sum(a)`, so the periodic image error of the
/// slowly decaying `p` cancels and only the wave-induced part is periodized.
fn spectral_sq_diff_corrected(dtz: &Field, vortices: &[Vortex]) -> Field {
    let plain = sq_diff_spectral(dtz);
    let Ok(exact) = interaction_sum(vortices) else {
        return plain;
    };
    if vortices.is_empty() {
        return plain;
    }
    let grid = dtz.grid();
    let p = Field::complex_fn(grid, |a| {
        vortices.iter().map(|v| v.strength * I / (2.0 * PI) / (a - v.position.conj())).sum()
    });
    let sp = sq_diff_spectral(&p);
    let v: Vec<f64> = (0..grid.n_points())
        .map(|j| plain.samples()[j].re - sp.samples()[j].re + exact.eval(grid.node(j)))
        .collect();
    Field::from_real(grid, v).expect("len")
}

/// `A1 = 1 + SqDiff(D_t Z) - sum_j (lambda_j/2pi) Re{((I-H)[Z_a/(Z - z_j)^2]) (D_t Z - zdot_j)}`.
pub fn compute_a1(state: &WaveState, kin: &Kinematics, zdot: &[Complex64], scheme: SqDiffScheme) -> Field {
    let grid = kin.z.grid();
    let sq = match scheme {
        SqDiffScheme::Quadrature => sq_diff_integral(&kin.dtz),
        SqDiffScheme::Spectral => spectral_sq_diff_corrected(&kin.dtz, &state.vortices),
    };
    let mut a1: Vec<f64> = sq.samples().iter().map(|c| 1.0 + c.re).collect();
    for (v, zd) in state.vortices.iter().zip(zdot) {
        // The pole part 1/(a - z)^2 is an upper-half-plane boundary value, so
        // (I - H) doubles it exactly; only the decaying remainder goes through
        // the periodic multiplier, which keeps the O(1/L^2) image error out.
        let rem: Vec<Complex64> = kin
            .z
            .samples()
            .iter()
            .zip(kin.z_alpha.samples())
            .enumerate()
            .map(|(j, (&zc, &za))| {
                let d = zc - v.position;
                let d0 = grid.node(j) - v.position;
                za / (d * d) - 1.0 / (d0 * d0)
            })
            .collect();
        let proj = minus_hilbert_projection(&Field::from_complex(grid, rem).expect("len"));
        let c = v.strength / (2.0 * PI);
        for (j, a) in a1.iter_mut().enumerate() {
            let d0 = grid.node(j) - v.position;
            let p = proj.samples()[j] + 2.0 / (d0 * d0);
            *a -= c * (p * (kin.dtz.samples()[j] - zd)).re;
        }
    }
    Field::from_real(grid, a1).expect("len")
}

/// `G = -Re{D_t Q}`, `R = Re{Q} - b1`.
pub fn compute_g_r(kin: &Kinematics, dtq: &Field, b1: &Field) -> (Field, Field) {
    let grid = kin.z.grid();
    let g: Vec<f64> = dtq.samples().iter().map(|c| -c.re).collect();
    let r: Vec<f64> = kin.q.samples().iter().zip(b1.samples()).map(|(q, b)| q.re - b.re).collect();
    (Field::from_real(grid, g).expect("len"), Field::from_real(grid, r).expect("len"))
}

/// Grid minimum of a real field, refined by a 3-point parabola.
///
/// Ties within round-off prefer the smallest `|alpha|`, then positive `alpha`.
pub fn grid_minimum(f: &Field) -> Extremum {
    let grid = f.grid();
    let v = f.re();
    let n = v.len();
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * (1.0 + min.abs());
    let mut best = 0;
    let mut best_key = (f64::INFINITY, false);
    for (j, &x) in v.iter().enumerate() {
        if x <= min + tol {
            let a = grid.node(j);
            let key = (a.abs(), a < 0.0);
            if key.0 < best_key.0 - 1e-12 || ((key.0 - best_key.0).abs() <= 1e-12 && !key.1 && best_key.1) {
                best = j;
                best_key = key;
            }
        }
    }
    let a0 = grid.node(best);
    if best == 0 || best + 1 == n {
        return Extremum { value: v[best], alpha: a0 };
    }
    let (fm, f0, fp) = (v[best - 1], v[best], v[best + 1]);
    let curv = fm - 2.0 * f0 + fp;
    if curv <= 0.0 {
        return Extremum { value: f0, alpha: a0 };
    }
    let h = grid.spacing();
    let shift = 0.5 * h * (fm - fp) / curv;
    let value = f0 - (fm - fp) * (fm - fp) / (8.0 * curv);
    Extremum { value, alpha: a0 + shift }
}

/// `min |Z(a) - Z(b)| / |a - b|` over all pairs of a subsample of at most
/// 2048 nodes, and over all adjacent node pairs.
pub fn chord_arc(z: &Field) -> f64 {
    let grid = z.grid();
    let n = grid.n_points();
    let s = z.samples();
    let adjacent = (0..n - 1)
        .map(|j| (s[j + 1] - s[j]).norm() / grid.spacing())
        .fold(f64::INFINITY, f64::min);
    let stride = (n / 2048).max(1);
    let idx: Vec<usize> = (0..n).step_by(stride).collect();
    let sampled = (0..idx.len())
        .into_par_iter()
        .map(|p| {
            let i = idx[p];
            let ai = grid.node(i);
            idx[p + 1..]
                .iter()
                .map(|&j| (s[j] - s[i]).norm() / (grid.node(j) - ai).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    adjacent.min(sampled)
}

/// Everything computed from one state.
#[derive(Debug, Clone)]
pub struct DerivedFields {
    pub kin: Kinematics,
    pub zdot: Vec<Complex64>,
    pub dtq: Field,
    pub transport: TransportCoefficients,
    pub a1: Field,
    /// `A = A1 / |Z_a|^2`.
    pub a: Field,
    pub g_force: Field,
    pub r: Field,
    pub inf_a1: Extremum,
    pub b_residual: Option<f64>,
    pub chord_arc: Option<f64>,
}

impl DerivedFields {
    pub fn d_i(&self) -> f64 {
        self.kin.d_i
    }
}

pub fn assemble(state: &WaveState, opts: &AssemblyOptions) -> Result<DerivedFields, FieldError> {
    let kin = kinematics(state)?;
    let zdot = vortex_velocities(state, &kin)?;
    let dtq = compute_dtq(state, &kin, &zdot);
    let transport = compute_b(&kin);
    let a1 = compute_a1(state, &kin, &zdot, opts.sq_diff);
    let grid = kin.z.grid();
    let a = Field::from_real(
        grid,
        a1.samples().iter().zip(kin.z_alpha.samples()).map(|(x, za)| x.re / za.norm_sqr()).collect(),
    )?;
    let (g_force, r) = compute_g_r(&kin, &dtq, &transport.b1);
    let inf_a1 = grid_minimum(&a1);
    let (b_res, ca) = if opts.diagnostics {
        (Some(b_residual(&kin, &transport.b)), Some(chord_arc(&kin.z)))
    } else {
        (None, None)
    };
    Ok(DerivedFields { kin, zdot, dtq, transport, a1, a, g_force, r, inf_a1, b_residual: b_res, chord_arc: ca })
}

/// Time derivatives of the state.
#[derive(Debug, Clone)]
pub struct Rhs {
    pub dw: Field,
    pub du: Field,
    pub dz: Vec<Complex64>,
}

pub fn rhs_from_derived(state: &WaveState, d: &DerivedFields) -> Rhs {
    let grid = state.grid();
    let wa = derivative(&state.w, 1);
    let ua = derivative(&state.u, 1);
    let lw = lambda_op(&state.w);
    let n = grid.n_points();
    let b = d.transport.b.samples();
    let mut du = Vec::with_capacity(n);
    let mut dw = Vec::with_capacity(n);
    for (j, bj) in b.iter().map(|c| c.re).enumerate() {
        du.push(-bj * ua.samples()[j].re + d.a.samples()[j].re * lw.samples()[j].re + d.g_force.samples()[j].re);
        dw.push(
            -bj * wa.samples()[j].re - state.u.samples()[j].re - d.transport.f_commutator.samples()[j].re
                + d.r.samples()[j].re,
        );
    }
    Rhs {
        dw: Field::from_real(grid, dw).expect("len"),
        du: Field::from_real(grid, du).expect("len"),
        dz: d.zdot.clone(),
    }
}

pub fn rhs(state: &WaveState, opts: &AssemblyOptions) -> Result<(Rhs, DerivedFields), FieldError> {
    let d = assemble(state, opts)?;
    Ok((rhs_from_derived(state, &d), d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::spectral::periodized_pole;
    use crate::taylor_sign::{a1_flat_pair, PairConfig};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid() -> Grid {
        GridSpec::new(200.0, 1 << 14).unwrap()
    }

    fn pair(x: f64, y: f64, lambda: f64) -> Vec<Vortex> {
        PairConfig { x, y, lambda }.vortices().to_vec()
    }

    #[test]
    fn reconstruct_zero_is_flat() {
        let g = grid();
        let z = Field::zeros(&g);
        let r = reconstruct(&z, &z).unwrap();
        assert!(r.f.max_abs() == 0.0);
        for j in (0..g.n_points()).step_by(101) {
            assert_eq!(r.z.samples()[j], c(g.node(j), 0.0));
        }
    }

    #[test]
    fn reconstruct_lorentzian_profile() {
        // W = Re of the periodized 1/(a - i); then Z - a = p - i pi/(2L).
        let g = grid();
        let p = periodized_pole(&g, c(0.0, 1.0));
        let w = p.real_part();
        let r = reconstruct(&w, &Field::zeros(&g)).unwrap();
        let shift = c(0.0, PI / (2.0 * g.half_length()));
        let err = (0..g.n_points())
            .map(|j| (r.z.samples()[j] - g.node(j) - (p.samples()[j] - shift)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "err {err:e}");
    }

    #[test]
    fn reconstruction_is_holomorphic() {
        let g = GridSpec::new(50.0, 2048).unwrap();
        let w = Field::real_fn(&g, |a| 0.3 * a * (-a * a / 4.0).exp());
        let u = Field::real_fn(&g, |a| 0.1 * (-a * a / 3.0).exp() * (2.0 * a).sin());
        let r = reconstruct(&w, &u).unwrap();
        let disp = Field::from_complex(&g, r.z.samples().iter().enumerate().map(|(j, z)| z - g.node(j)).collect()).unwrap();
        assert!(minus_hilbert_projection(&disp).l2_norm() <= 1e-10 * (1.0 + w.l2_norm()));
        assert!(minus_hilbert_projection(&r.f).l2_norm() <= 1e-10 * (1.0 + u.l2_norm()));
    }

    #[test]
    fn reconstruct_rejects_complex_input() {
        let g = GridSpec::new(10.0, 64).unwrap();
        let w = Field::complex_fn(&g, |a| c(a, 1.0));
        assert!(reconstruct(&w, &Field::zeros(&g)).is_err());
    }

    #[test]
    fn q_examples() {
        let g = grid();
        let flat = Field::complex_fn(&g, |a| c(a, 0.0));
        assert_eq!(compute_q(&flat, &[]).unwrap().max_abs(), 0.0);
        let vs = pair(1.0, -2.0, PI);
        let q = q_unchecked(&Field::complex_fn(&g, |_| c(0.0, 0.0)), &vs);
        assert!((q.samples()[0] - c(0.0, -0.2)).norm() < 1e-15);
        let q = compute_q(&flat, &vs).unwrap();
        let n = g.n_points();
        for j in (0..n / 2).step_by(37) {
            let (a, b) = (q.samples()[j], q.samples()[n - 1 - j]);
            assert!((a.re + b.re).abs() < 1e-14 && (a.im - b.im).abs() < 1e-14);
        }
        let near = [Vortex { position: c(0.0, -g.spacing()), strength: 1.0 }];
        assert!(matches!(compute_q(&flat, &near), Err(FieldError::VortexTooClose { .. })));
        let above = [Vortex { position: c(0.0, 1.0), strength: 1.0 }];
        assert!(matches!(compute_q(&flat, &above), Err(FieldError::VortexAboveInterface { .. })));
    }

    #[test]
    fn pair_velocity_is_mutual_induction() {
        let g = grid();
        let s = WaveState::quiescent(&g, pair(1.0, -3.0, 4.0 * PI));
        let kin = kinematics(&s).unwrap();
        for j in 0..2 {
            let v = vortex_velocity(&s, &kin, j).unwrap();
            assert!((v - c(0.0, 1.0)).norm() < 1e-12, "{v}");
        }
        let single = WaveState::quiescent(&g, vec![Vortex { position: c(0.0, -3.0), strength: 2.0 }]);
        let kin = kinematics(&single).unwrap();
        assert_eq!(vortex_velocity(&single, &kin, 0).unwrap(), c(0.0, 0.0));
        assert!(vortex_velocity(&single, &kin, 1).is_err());
    }

    #[test]
    fn single_vortex_dtq_matches_formula() {
        let g = grid();
        let z0 = c(0.4, -2.5);
        let lam = 3.0;
        let s = WaveState::quiescent(&g, vec![Vortex { position: z0, strength: lam }]);
        let d = assemble(&s, &AssemblyOptions::default()).unwrap();
        for j in (0..g.n_points()).step_by(513) {
            let a = g.node(j);
            let qbar = (-lam * I / (2.0 * PI) / (a - z0)).conj();
            let want = lam * I / (2.0 * PI) * qbar / ((a - z0) * (a - z0));
            assert!((d.dtq.samples()[j] - want).norm() < 1e-10);
        }
    }

    #[test]
    fn deeper_pair_forces_less() {
        let g = grid();
        let mut last = (f64::INFINITY, f64::INFINITY);
        for y in [-4.0, -6.0, -9.0] {
            let s = WaveState::quiescent(&g, pair(1.0, y, 20.0));
            let d = assemble(&s, &AssemblyOptions::default()).unwrap();
            let cur = (d.dtq.max_abs(), d.g_force.max_abs());
            assert!(cur.0 < last.0 && cur.1 < last.1);
            last = cur;
        }
    }

    #[test]
    fn flat_pair_transport_vanishes() {
        let g = grid();
        let s = WaveState::quiescent(&g, pair(1.0, -3.0, 10.0));
        let d = assemble(&s, &AssemblyOptions { diagnostics: true, ..Default::default() }).unwrap();
        assert!(d.transport.b.max_abs() < 1e-3, "b = {}", d.transport.b.max_abs());
        assert!(d.b_residual.unwrap() < 1e-10);
        let (_, r) = (d.g_force.clone(), d.r.clone());
        let req = d.kin.q.real_part().sub(&d.transport.b1).unwrap();
        assert!(r.sub(&req).unwrap().max_abs() < 1e-15);
        assert_eq!(d.chord_arc, Some(1.0));
    }

    #[test]
    fn no_vortices_no_wave_is_equilibrium() {
        let g = GridSpec::new(50.0, 1024).unwrap();
        let s = WaveState::quiescent(&g, vec![]);
        let (r, d) = rhs(&s, &AssemblyOptions { diagnostics: true, ..Default::default() }).unwrap();
        assert_eq!(r.dw.max_abs(), 0.0);
        assert_eq!(r.du.max_abs(), 0.0);
        assert!(d.a1.samples().iter().all(|v| v.re == 1.0));
        assert_eq!(d.transport.b.max_abs(), 0.0);
        assert_eq!(d.g_force.max_abs(), 0.0);
        assert_eq!(d.r.max_abs(), 0.0);
    }

    #[test]
    fn a_times_jacobian_is_a1() {
        let g = GridSpec::new(100.0, 4096).unwrap();
        let w = Field::real_fn(&g, |a| 0.05 * a * (-a * a / 4.0).exp());
        let u = w.clone();
        let s = WaveState::new(w, u, pair(1.0, -6.0, 30.0), 0.0).unwrap();
        let d = assemble(&s, &AssemblyOptions::default()).unwrap();
        for j in 0..g.n_points() {
            let lhs = d.a.samples()[j].re * d.kin.z_alpha.samples()[j].norm_sqr();
            let rhs = d.a1.samples()[j].re;
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn flat_pair_a1_matches_closed_form() {
        let g = grid();
        let cfg = PairConfig { x: 1.0, y: -2.0, lambda: 2.0 * PI };
        let s = WaveState::quiescent(&g, cfg.vortices().to_vec());
        let d = assemble(&s, &AssemblyOptions { sq_diff: SqDiffScheme::Spectral, diagnostics: false }).unwrap();
        let worst = (0..g.n_points())
            .filter(|&j| g.node(j).abs() <= 50.0)
            .map(|j| (d.a1.samples()[j].re - a1_flat_pair(g.node(j), &cfg)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-5, "worst {worst:e}");
    }

    #[test]
    fn odd_data_gives_odd_rhs() {
        let g = GridSpec::new(100.0, 4096).unwrap();
        let w = Field::real_fn(&g, |a| 0.02 * a * (-a * a / 4.0).exp());
        let s = WaveState::new(w.clone(), w, pair(1.0, -5.0, 25.0), 0.0).unwrap();
        let (r, _) = rhs(&s, &AssemblyOptions::default()).unwrap();
        assert!(r.dw.oddness_defect() < 1e-8 * (1.0 + r.dw.max_abs()));
        assert!(r.du.oddness_defect() < 1e-8 * (1.0 + r.du.max_abs()));
        assert!((r.dz[0].re + r.dz[1].re).abs() < 1e-12);
        assert!((r.dz[0].im - r.dz[1].im).abs() < 1e-12);
    }

    #[test]
    fn small_wave_velocity_is_mostly_vertical() {
        let g = grid();
        let w = Field::real_fn(&g, |a| 0.01 * a * (-a * a / 4.0).exp());
        let s = WaveState::new(w.clone(), w, pair(1.0, -6.0, 40.0), 0.0).unwrap();
        let kin = kinematics(&s).unwrap();
        for j in 0..2 {
            let v = vortex_velocity(&s, &kin, j).unwrap();
            assert!(v.re.abs() < 0.1 * v.im.abs());
        }
    }

    #[test]
    fn pair_forcing_is_nonzero() {
        let g = grid();
        let s = WaveState::quiescent(&g, pair(1.0, -3.0, 4.0 * PI));
        let (r, d) = rhs(&s, &AssemblyOptions::default()).unwrap();
        for dz in &r.dz {
            assert!((dz - c(0.0, 1.0)).norm() < 1e-12);
        }
        assert!(r.du.max_abs() > 1e-3);
        assert!(r.du.sub(&d.g_force).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn grid_minimum_refines_parabola() {
        let g = GridSpec::new(10.0, 256).unwrap();
        let f = Field::real_fn(&g, |a| (a - 0.3).powi(2) - 2.0);
        let e = grid_minimum(&f);
        assert!((e.alpha - 0.3).abs() < 1e-12 && (e.value + 2.0).abs() < 1e-12);
    }
}
