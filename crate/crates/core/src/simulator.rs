//! Time integration of the interface/vortex system and run-time monitors.
//!
//! Two steppers share one right-hand side: classical RK4, and a Picard
//! iteration that freezes `(g, b1, A, G, R)` at the current iterate and solves
//! the remaining transport step with the trapezoidal rule. After every step a
//! smooth filter `exp(-36 (|k|/k_max)^p)` is applied to `W` and `U`; it is
//! even in `k`, so parity is kept.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::config::{Scheme, ScenarioConfig, WaveKind};
use crate::error::{FieldError, GevreyError, SimError};
use crate::gevrey::{energy_report, GevreyParams, GevreyReport};
use crate::grid::{Field, Grid, GridSpec};
use crate::spectral::{commutator_with_hilbert, derivative, lambda_op, plus_hilbert_projection, spectral_filter};
use crate::taylor_sign::PairConfig;
use crate::waterwave::{assemble, rhs_from_derived, AssemblyOptions, DerivedFields, Rhs, SqDiffScheme, Vortex, WaveState};

/// Strength of the post-step filter at `|k| = k_max`.
pub const FILTER_STRENGTH: f64 = 36.0;

/// Below `FATAL_PROXIMITY * spacing` a run stops.
pub const FATAL_PROXIMITY: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub cfl_safety: f64,
    /// 0 disables the filter.
    pub filter_order: u32,
    pub sq_diff: SqDiffScheme,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 0.002,
            t_end: 1.0,
            scheme: Scheme::Rk4,
            picard_tol: 1e-10,
            picard_max_iter: 50,
            cfl_safety: 0.5,
            filter_order: 36,
            sq_diff: SqDiffScheme::Spectral,
        }
    }
}

impl IntegratorConfig {
    pub fn from_scenario(c: &ScenarioConfig) -> Self {
        IntegratorConfig {
            dt: c.dt,
            t_end: c.t_end,
            scheme: c.scheme,
            picard_tol: c.picard_tol,
            picard_max_iter: c.picard_max_iter,
            cfl_safety: c.cfl_safety,
            filter_order: c.filter_order,
            sq_diff: SqDiffScheme::Spectral,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidIntegrator(m.into()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be >= 0");
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad("cfl_safety must lie in (0, 1]");
        }
        if !(self.picard_tol > 0.0) || self.picard_max_iter == 0 {
            return bad("Picard tolerance and iteration cap must be positive");
        }
        Ok(())
    }

    fn assembly(&self) -> AssemblyOptions {
        AssemblyOptions { sq_diff: self.sq_diff, diagnostics: false }
    }
}

/// Initial state: flat or an odd bump `amplitude a exp(-a^2/4)` in both
/// `W` and `U`, with the pair `(-x + iy, lambda)`, `(x + iy, -lambda)`.
pub fn make_initial(kind: WaveKind, amplitude: f64, pair: &PairConfig, grid: &Grid) -> Result<WaveState, SimError> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(SimError::InvalidInitial(format!("amplitude must be >= 0, got {amplitude}")));
    }
    let w = match kind {
        WaveKind::OddBump if amplitude > 0.0 => Field::real_fn(grid, |a| amplitude * a * (-a * a / 4.0).exp()),
        _ => Field::zeros(grid),
    };
    let state = WaveState::new(w.clone(), w, pair.vortices().to_vec(), 0.0)?;
    crate::waterwave::kinematics(&state)?;
    Ok(state)
}

/// Advective and dispersive step limits, each already scaled by `safety`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflLimit {
    pub limit: f64,
    pub advective: f64,
    pub dispersive: f64,
}

pub fn cfl_limit(grid: &GridSpec, d: &DerivedFields, safety: f64) -> CflLimit {
    let max_b = d.transport.b.max_abs();
    let max_a = d.a.samples().iter().map(|c| c.re).fold(0.0, f64::max);
    let advective = if max_b > 0.0 { safety * grid.spacing() / max_b } else { f64::INFINITY };
    let dispersive = if max_a > 0.0 { safety / (max_a * grid.k_max()).sqrt() } else { f64::INFINITY };
    CflLimit { limit: advective.min(dispersive), advective, dispersive }
}

pub fn check_cfl(dt: f64, grid: &GridSpec, d: &DerivedFields, safety: f64) -> Result<(), SimError> {
    let c = cfl_limit(grid, d, safety);
    if dt > c.limit {
        return Err(SimError::Cfl { dt, limit: c.limit, advective: c.advective, dispersive: c.dispersive });
    }
    Ok(())
}

fn filtered(state: WaveState, order: u32) -> WaveState {
    if order == 0 {
        return state;
    }
    let p = order as i32;
    WaveState {
        w: spectral_filter(&state.w, FILTER_STRENGTH, p),
        u: spectral_filter(&state.u, FILTER_STRENGTH, p),
        ..state
    }
}

fn axpy_real(x: &Field, a: f64, y: &Field) -> Field {
    let v = x.samples().iter().zip(y.samples()).map(|(p, q)| p.re + a * q.re).collect();
    Field::from_real(x.grid(), v).expect("same grid")
}

fn displaced(s: &WaveState, a: f64, k: &Rhs) -> WaveState {
    WaveState {
        w: axpy_real(&s.w, a, &k.dw),
        u: axpy_real(&s.u, a, &k.du),
        vortices: s
            .vortices
            .iter()
            .zip(&k.dz)
            .map(|(v, dz)| Vortex { position: v.position + a * dz, strength: v.strength })
            .collect(),
        t: s.t + a,
    }
}

fn rhs_of(s: &WaveState, cfg: &IntegratorConfig) -> Result<Rhs, SimError> {
    let d = assemble(s, &cfg.assembly())?;
    Ok(rhs_from_derived(s, &d))
}

/// One RK4 step. `derived`, when given, must belong to `state`.
pub fn step_rk4(
    state: &WaveState,
    dt: f64,
    cfg: &IntegratorConfig,
    derived: Option<&DerivedFields>,
) -> Result<WaveState, SimError> {
    let owned;
    let d0 = match derived {
        Some(d) => d,
        None => {
            owned = assemble(state, &cfg.assembly())?;
            &owned
        }
    };
    check_cfl(dt, state.grid(), d0, cfg.cfl_safety)?;
    let k1 = rhs_from_derived(state, d0);
    let k2 = rhs_of(&displaced(state, 0.5 * dt, &k1), cfg)?;
    let k3 = rhs_of(&displaced(state, 0.5 * dt, &k2), cfg)?;
    let k4 = rhs_of(&displaced(state, dt, &k3), cfg)?;
    let comb = |a: &Field, b: &Field, c: &Field, d: &Field| -> Vec<f64> {
        (0..a.len())
            .map(|j| (a.samples()[j].re + 2.0 * (b.samples()[j].re + c.samples()[j].re) + d.samples()[j].re) * dt / 6.0)
            .collect()
    };
    let grid = state.grid();
    let dw = Field::from_real(grid, comb(&k1.dw, &k2.dw, &k3.dw, &k4.dw))?;
    let du = Field::from_real(grid, comb(&k1.du, &k2.du, &k3.du, &k4.du))?;
    let next = WaveState {
        w: state.w.add(&dw)?,
        u: state.u.add(&du)?,
        vortices: state
            .vortices
            .iter()
            .enumerate()
            .map(|(j, v)| Vortex {
                position: v.position + dt / 6.0 * (k1.dz[j] + 2.0 * (k2.dz[j] + k3.dz[j]) + k4.dz[j]),
                strength: v.strength,
            })
            .collect(),
        t: state.t + dt,
    };
    let next = filtered(next, cfg.filter_order);
    if !next.is_finite() {
        return Err(SimError::NonFinite(next.t));
    }
    Ok(next)
}

/// Coefficients held fixed during one Picard iterate.
struct Frozen {
    g: Field,
    hg: Field,
    b1: Field,
    a: Field,
    g_force: Field,
    r: Field,
}

impl Frozen {
    fn of(d: &DerivedFields) -> Self {
        Frozen {
            g: d.kin.g.clone(),
            hg: d.kin.hg.clone(),
            b1: d.transport.b1.clone(),
            a: d.a.clone(),
            g_force: d.g_force.clone(),
            r: d.r.clone(),
        }
    }

    /// `(W_t, U_t)` with `b = b0(U) + b1`, all other coefficients frozen.
    fn apply(&self, w: &Field, u: &Field) -> (Vec<f64>, Vec<f64>) {
        let f = plus_hilbert_projection(u);
        let cf = commutator_with_hilbert(&f.conj(), &self.g, &self.hg);
        let wa = derivative(w, 1);
        let ua = derivative(u, 1);
        let lw = lambda_op(w);
        let n = w.len();
        let mut dw = Vec::with_capacity(n);
        let mut du = Vec::with_capacity(n);
        for j in 0..n {
            let c = cf.samples()[j].re;
            let b = 2.0 * f.samples()[j].re + c + self.b1.samples()[j].re;
            du.push(-b * ua.samples()[j].re + self.a.samples()[j].re * lw.samples()[j].re + self.g_force.samples()[j].re);
            dw.push(-b * wa.samples()[j].re - u.samples()[j].re - c + self.r.samples()[j].re);
        }
        (dw, du)
    }
}

/// Discrete `H^4` norm `sqrt(sum (1 + k^2)^4 |f_hat|^2 / 2L)`.
pub fn h4_norm(f: &Field) -> f64 {
    let g = f.grid();
    let s: f64 = f
        .spectrum()
        .iter()
        .zip(g.fft_wavenumbers())
        .map(|(c, k)| (1.0 + k * k).powi(4) * c.norm_sqr())
        .sum();
    (s / (2.0 * g.half_length())).sqrt()
}

/// `H^4` size of one FFT round trip of `f`.
///
/// The weights reach `k_max^8`, so round-off in the samples shows up at this
/// level; two states closer than this are indistinguishable on the grid.
pub fn h4_roundoff_floor(f: &Field) -> f64 {
    let g = f.grid();
    let back = g.inverse(&g.forward(f.samples()));
    let diff: Vec<f64> = back.iter().zip(f.samples()).map(|(a, b)| a.re - b.re).collect();
    Field::from_real(g, diff).map(|d| h4_norm(&d)).unwrap_or(0.0)
}

const INNER_MAX_ITER: usize = 100;
const INNER_REL_TOL: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub state: WaveState,
    pub iterations: usize,
    /// `H^4` change between successive iterates, plus `|dz|`.
    pub history: Vec<f64>,
    /// Inner trapezoid fixed-point sweeps per iterate.
    pub inner_iterations: Vec<usize>,
    /// Stopping threshold used: `picard_tol` or the round-off floor, whichever is larger.
    pub tolerance: f64,
}

impl PicardOutcome {
    /// `history[i+1] / history[i]`.
    pub fn contraction_ratios(&self) -> Vec<f64> {
        self.history.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// One Picard step over `[t, t + dt]`.
///
/// Iterate 0 is the start state. Iterate `n+1` freezes coefficients at
/// iterate `n`, advances the vortices by the trapezoidal rule, and solves
/// `X = X0 + dt/2 (N0 + N_n(X))` for `X = (W, U)` by inner fixed-point sweeps.
/// Iteration stops once the change drops below `picard_tol`, raised to the
/// [`h4_roundoff_floor`] of the start state when that is larger.
pub fn step_picard(
    state: &WaveState,
    dt: f64,
    cfg: &IntegratorConfig,
    derived: Option<&DerivedFields>,
) -> Result<PicardOutcome, SimError> {
    let owned;
    let d0 = match derived {
        Some(d) => d,
        None => {
            owned = assemble(state, &cfg.assembly())?;
            &owned
        }
    };
    check_cfl(dt, state.grid(), d0, cfg.cfl_safety)?;
    let grid = state.grid().clone();
    let (n0w, n0u) = Frozen::of(d0).apply(&state.w, &state.u);
    let zdot0 = d0.zdot.clone();
    let tolerance = cfg.picard_tol.max(h4_roundoff_floor(&state.w).hypot(h4_roundoff_floor(&state.u)));

    let mut iterate = state.clone();
    iterate.t = state.t + dt;
    let mut history = Vec::new();
    let mut inner_iterations = Vec::new();
    for it in 0..cfg.picard_max_iter {
        let c = if it == 0 {
            None
        } else {
            let probe = WaveState { t: state.t, ..iterate.clone() };
            Some(assemble(&probe, &cfg.assembly())?)
        };
        let c = c.as_ref().unwrap_or(d0);
        let frozen = Frozen::of(c);
        let vortices: Vec<Vortex> = state
            .vortices
            .iter()
            .enumerate()
            .map(|(j, v)| Vortex { position: v.position + 0.5 * dt * (zdot0[j] + c.zdot[j]), strength: v.strength })
            .collect();

        let (mut wi, mut ui) = (iterate.w.clone(), iterate.u.clone());
        let mut sweeps = 0;
        for m in 0..INNER_MAX_ITER {
            sweeps = m + 1;
            let (nw, nu) = frozen.apply(&wi, &ui);
            let w2: Vec<f64> =
                (0..nw.len()).map(|j| state.w.samples()[j].re + 0.5 * dt * (n0w[j] + nw[j])).collect();
            let u2: Vec<f64> =
                (0..nu.len()).map(|j| state.u.samples()[j].re + 0.5 * dt * (n0u[j] + nu[j])).collect();
            let change = w2.iter().zip(wi.samples()).map(|(a, b)| (a - b.re).abs()).fold(0.0, f64::max)
                + u2.iter().zip(ui.samples()).map(|(a, b)| (a - b.re).abs()).fold(0.0, f64::max);
            let scale = 1.0 + w2.iter().chain(&u2).fold(0.0f64, |m, v| m.max(v.abs()));
            wi = Field::from_real(&grid, w2)?;
            ui = Field::from_real(&grid, u2)?;
            if !(change.is_finite()) {
                return Err(SimError::NonFinite(state.t + dt));
            }
            if change <= INNER_REL_TOL * scale {
                break;
            }
        }
        inner_iterations.push(sweeps);

        let dz2: f64 = vortices
            .iter()
            .zip(&iterate.vortices)
            .map(|(a, b)| (a.position - b.position).norm_sqr())
            .sum();
        let diff = (h4_norm(&wi.sub(&iterate.w)?).powi(2) + h4_norm(&ui.sub(&iterate.u)?).powi(2) + dz2).sqrt();
        history.push(diff);
        iterate = WaveState { w: wi, u: ui, vortices, t: state.t + dt };
        if !diff.is_finite() {
            return Err(SimError::NonFinite(state.t + dt));
        }
        if diff < tolerance {
            let state = filtered(iterate, cfg.filter_order);
            return Ok(PicardOutcome { state, iterations: it + 1, history, inner_iterations, tolerance });
        }
    }
    Err(SimError::PicardDiverged { iterations: cfg.picard_max_iter, history })
}

/// Same flow run backwards: `U -> -U`, `lambda -> -lambda`.
pub fn time_reversed(state: &WaveState) -> WaveState {
    WaveState {
        w: state.w.clone(),
        u: state.u.scale(-1.0),
        vortices: state.vortices.iter().map(|v| Vortex { position: v.position, strength: -v.strength }).collect(),
        t: state.t,
    }
}

/// Largest departure from the mirror symmetry `a -> -a`: relative oddness of
/// `W` and `U`, and for a pair `|x1 + x2|` and `|y1 - y2|`.
pub fn symmetry_defect(state: &WaveState) -> f64 {
    let rel = |f: &Field| f.oddness_defect() / (1.0 + f.max_abs());
    let mut d = rel(&state.w).max(rel(&state.u));
    if let [a, b] = state.vortices.as_slice() {
        d = d.max((a.position.re + b.position.re).abs()).max((a.position.im - b.position.im).abs());
    }
    d
}

/// Reference values for the assumption thresholds, taken at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorBaseline {
    pub chord_arc0: f64,
    pub d_i0: f64,
    pub x0: f64,
    pub gevrey: GevreyParams,
}

impl MonitorBaseline {
    pub fn new(state: &WaveState, d: &DerivedFields, gevrey: GevreyParams) -> Self {
        let chord_arc0 = d.chord_arc.unwrap_or_else(|| crate::waterwave::chord_arc(&d.kin.z));
        MonitorBaseline { chord_arc0, d_i0: d.d_i(), x0: half_separation(state), gevrey }
    }
}

fn half_separation(state: &WaveState) -> f64 {
    match state.vortices.as_slice() {
        [a, b] => 0.5 * (b.position.re - a.position.re).abs(),
        _ => f64::NAN,
    }
}

/// One monitor record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorReport {
    pub t: f64,
    /// `NaN` once `phi(t) <= 0`.
    pub energy: f64,
    pub chord_arc: f64,
    pub d_i: f64,
    pub phi: f64,
    pub inf_a1: f64,
    pub argmin_alpha: f64,
    pub u_l2: f64,
    pub u_inf: f64,
    pub b_residual: f64,
    pub symmetry_defect: f64,
    /// AS1 to AS5 in order.
    pub as_flags: [bool; 5],
    pub u_gevrey: Option<GevreyReport>,
    pub w_alpha_gevrey: Option<GevreyReport>,
}

impl MonitorReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }
}

/// Diagnostics for `state`; `d` must come from `assemble` with diagnostics on.
pub fn monitor(state: &WaveState, d: &DerivedFields, base: &MonitorBaseline) -> MonitorReport {
    let p = &base.gevrey;
    let phi = p.l0 - p.delta0 * state.t;
    let (energy, u_gevrey, w_alpha_gevrey) = match energy_report(&state.w, &state.u, state.t, p) {
        Ok(r) => (r.energy, Some(r.u_norm), Some(r.w_alpha_norm)),
        Err(GevreyError::ExhaustedRadius { .. }) => (f64::NAN, None, None),
        Err(_) => (f64::NAN, None, None),
    };
    let chord_arc = d.chord_arc.unwrap_or_else(|| crate::waterwave::chord_arc(&d.kin.z));
    let b_residual = d.b_residual.unwrap_or_else(|| crate::waterwave::b_residual(&d.kin, &d.transport.b));
    let u_l2 = state.u.l2_norm();
    let u_inf = state.u.max_abs();
    let d_i = d.d_i();
    let sym = symmetry_defect(state);
    let scalars = [chord_arc, d.inf_a1.value, d.inf_a1.alpha, u_l2, u_inf, b_residual, sym];
    let as1 = state.is_finite() && scalars.iter().all(|v| v.is_finite());
    let as2 = 2.0 * energy <= 1.0 && u_l2 * u_l2 <= 1.0 && u_inf <= base.d_i0.powf(-0.5);
    let as3 = chord_arc >= 0.5 * base.chord_arc0;
    let x = half_separation(state);
    let as4 = (d_i >= 0.5 * base.d_i0.powf(0.9) || base.d_i0.is_infinite())
        && (x.is_nan() || x >= 0.5 * base.x0);
    let as5 = phi >= 0.5 * p.l0;
    MonitorReport {
        t: state.t,
        energy,
        chord_arc,
        d_i,
        phi,
        inf_a1: d.inf_a1.value,
        argmin_alpha: d.inf_a1.alpha,
        u_l2,
        u_inf,
        b_residual,
        symmetry_defect: sym,
        as_flags: [as1, as2, as3, as4, as5],
        u_gevrey,
        w_alpha_gevrey,
    }
}

/// Column names of the trajectory file.
pub const TRAJECTORY_HEADER: &str = "t,x1,y1,x2,y2,d_I,inf_A1,argmin_alpha,E_gevrey,phi,chord_arc,U_L2,U_inf,b_residual,symmetry_defect,picard_iters";

/// One trajectory row.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub d_i: f64,
    pub inf_a1: f64,
    pub argmin_alpha: f64,
    pub e_gevrey: f64,
    pub phi: f64,
    pub chord_arc: f64,
    pub u_l2: f64,
    pub u_inf: f64,
    pub b_residual: f64,
    pub symmetry_defect: f64,
    /// `None` for RK4.
    pub picard_iters: Option<usize>,
}

impl StepRecord {
    pub const COLUMNS: usize = 16;

    pub fn new(state: &WaveState, m: &MonitorReport, picard_iters: Option<usize>) -> Self {
        let pos = |j: usize| state.vortices.get(j).map_or(Complex64::new(f64::NAN, f64::NAN), |v| v.position);
        let (z1, z2) = (pos(0), pos(1));
        StepRecord {
            t: state.t,
            x1: z1.re,
            y1: z1.im,
            x2: z2.re,
            y2: z2.im,
            d_i: m.d_i,
            inf_a1: m.inf_a1,
            argmin_alpha: m.argmin_alpha,
            e_gevrey: m.energy,
            phi: m.phi,
            chord_arc: m.chord_arc,
            u_l2: m.u_l2,
            u_inf: m.u_inf,
            b_residual: m.b_residual,
            symmetry_defect: m.symmetry_defect,
            picard_iters,
        }
    }

    /// Floats with 17 significant digits; empty last column for RK4.
    pub fn to_csv(&self) -> String {
        let v = [
            self.t,
            self.x1,
            self.y1,
            self.x2,
            self.y2,
            self.d_i,
            self.inf_a1,
            self.argmin_alpha,
            self.e_gevrey,
            self.phi,
            self.chord_arc,
            self.u_l2,
            self.u_inf,
            self.b_residual,
            self.symmetry_defect,
        ];
        let mut s: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
        s.push(self.picard_iters.map_or(String::new(), |n| n.to_string()));
        s.join(",")
    }
}

/// Streams trajectory rows, flushing after each so readers can follow.
pub struct TrajectoryWriter {
    out: BufWriter<File>,
}

impl TrajectoryWriter {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{TRAJECTORY_HEADER}")?;
        out.flush()?;
        Ok(TrajectoryWriter { out })
    }

    pub fn append(&mut self, r: &StepRecord) -> std::io::Result<()> {
        writeln!(self.out, "{}", r.to_csv())?;
        self.out.flush()
    }
}

/// Why a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Completed,
    /// `inf A1 <= -eta1`.
    Eta1Reached { inf_a1: f64 },
    /// `d_I` fell below the fatal threshold.
    FatalProximity { d_i: f64, limit: f64 },
    Failed(SimError),
}

#[derive(Debug, Clone)]
pub struct RunSettings {
    pub integrator: IntegratorConfig,
    pub gevrey: GevreyParams,
    /// Stop once `inf A1 <= -eta1`.
    pub eta1: Option<f64>,
    pub stride: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<StepRecord>,
    pub monitors: Vec<MonitorReport>,
    pub stop: StopReason,
    pub final_state: WaveState,
    pub steps: usize,
    /// Per-step Picard change histories (empty for RK4).
    pub picard_histories: Vec<Vec<f64>>,
}

/// Integrates from `state`, recording every `stride`-th step and the last.
///
/// The observer sees each recorded row as it is produced. Stepping errors end
/// the run with [`StopReason::Failed`] and keep what was recorded so far.
pub fn run_from(
    state: WaveState,
    settings: &RunSettings,
    mut observer: impl FnMut(&StepRecord, &MonitorReport),
) -> Result<RunOutcome, SimError> {
    let cfg = &settings.integrator;
    cfg.validate()?;
    settings.gevrey.validate()?;
    let stride = settings.stride.max(1);
    let t0 = state.t;
    let n_steps = (cfg.t_end / cfg.dt).round() as usize;
    let diag = AssemblyOptions { sq_diff: cfg.sq_diff, diagnostics: true };
    let fatal = FATAL_PROXIMITY * state.grid().spacing();

    let mut state = state;
    let d = assemble(&state, &diag)?;
    let base = MonitorBaseline::new(&state, &d, settings.gevrey);
    let mut derived = Ok(d);
    let mut out = RunOutcome {
        records: Vec::new(),
        monitors: Vec::new(),
        stop: StopReason::Completed,
        final_state: state.clone(),
        steps: 0,
        picard_histories: Vec::new(),
    };
    let mut picard_iters = match cfg.scheme {
        Scheme::Rk4 => None,
        Scheme::Picard => Some(0),
    };
    let mut step = 0usize;
    loop {
        let d = match derived {
            Ok(d) => d,
            Err(e) => {
                out.stop = match e {
                    SimError::Field(FieldError::VortexTooClose { distance, .. }) => {
                        StopReason::FatalProximity { d_i: distance, limit: fatal }
                    }
                    e => StopReason::Failed(e),
                };
                break;
            }
        };
        let m = monitor(&state, &d, &base);
        let record = StepRecord::new(&state, &m, picard_iters);
        let stop = if d.d_i() < fatal {
            Some(StopReason::FatalProximity { d_i: d.d_i(), limit: fatal })
        } else if settings.eta1.is_some_and(|eta| d.inf_a1.value <= -eta) {
            Some(StopReason::Eta1Reached { inf_a1: d.inf_a1.value })
        } else if step >= n_steps {
            Some(StopReason::Completed)
        } else {
            None
        };
        if step % stride == 0 || stop.is_some() {
            observer(&record, &m);
            out.records.push(record);
            out.monitors.push(m);
        }
        if let Some(s) = stop {
            out.stop = s;
            break;
        }
        let next = match cfg.scheme {
            Scheme::Rk4 => step_rk4(&state, cfg.dt, cfg, Some(&d)),
            Scheme::Picard => step_picard(&state, cfg.dt, cfg, Some(&d)).map(|o| {
                picard_iters = Some(o.iterations);
                out.picard_histories.push(o.history);
                o.state
            }),
        };
        match next {
            Ok(mut s) => {
                step += 1;
                s.t = t0 + step as f64 * cfg.dt;
                state = s;
                derived = assemble(&state, &diag).map_err(SimError::from);
            }
            Err(e) => {
                out.stop = match e {
                    SimError::Field(FieldError::VortexTooClose { distance, .. }) => {
                        StopReason::FatalProximity { d_i: distance, limit: fatal }
                    }
                    e => StopReason::Failed(e),
                };
                break;
            }
        }
    }
    out.steps = step;
    out.final_state = state;
    Ok(out)
}

/// Builds the grid and initial state of a scenario and runs it.
pub fn run(
    config: &ScenarioConfig,
    observer: impl FnMut(&StepRecord, &MonitorReport),
) -> Result<RunOutcome, SimError> {
    let grid = GridSpec::new(config.half_length, config.n_points)?;
    let pair = PairConfig { x: config.x0, y: config.y0, lambda: config.lambda() };
    let state = make_initial(config.wave_kind, config.wave_amplitude, &pair, &grid)?;
    let settings = RunSettings {
        integrator: IntegratorConfig::from_scenario(config),
        gevrey: GevreyParams { l0: config.l0, delta0: config.delta0, ..Default::default() },
        eta1: Some(config.eta1),
        stride: config.output_stride,
    };
    run_from(state, &settings, observer)
}
