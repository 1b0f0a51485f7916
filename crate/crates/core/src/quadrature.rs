//! Adaptive Gauss–Kronrod (7/15) quadrature for complex-valued integrands.
//!
//! Used as an independent oracle for closed-form residue identities and for
//! single-point values of the grid quadratures.

use num_complex::Complex64;

use crate::error::QuadratureError;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-12, rel_tol: 1e-12, max_subdivisions: 5000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Result<Segment, QuadratureError> {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let eval = |x: f64| -> Result<Complex64, QuadratureError> {
        let v = f(x);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(QuadratureError::NonFinite { x })
        }
    };
    let fc = eval(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = hw * XGK[i];
        let s = eval(c - dx)? + eval(c + dx)?;
        kronrod += s * WGK[i];
        if i % 2 == 1 {
            gauss += s * WG[i / 2];
        }
    }
    let value = kronrod * hw;
    let error = ((kronrod - gauss) * hw).norm();
    Ok(Segment { a, b, value, error })
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult, QuadratureError>
where
    F: Fn(f64) -> Complex64,
{
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadratureError::InvalidInterval { a, b });
    }
    let mut segments = vec![gk15(&f, a, b)?];
    let mut evaluations = 15;
    loop {
        let value: Complex64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if error <= opts.abs_tol.max(opts.rel_tol * value.norm()) {
            return Ok(QuadResult { value, error_estimate: error, evaluations });
        }
        if segments.len() >= opts.max_subdivisions {
            return Err(QuadratureError::NotConverged { subdivisions: segments.len(), error });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("at least one segment");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if !(mid > s.a && mid < s.b) {
            return Err(QuadratureError::NotConverged { subdivisions: segments.len() + 1, error });
        }
        segments.push(gk15(&f, s.a, mid)?);
        segments.push(gk15(&f, mid, s.b)?);
        evaluations += 30;
    }
}

/// Integrates `f` over the whole real line.
///
/// Uses `x = t / (1 - t^2)` on `t in (-1, 0)` and `(0, 1)` separately, so the
/// integrand is never evaluated at `x = 0` or at infinity.
pub fn integrate_real_line<F>(f: F, opts: QuadOptions) -> Result<QuadResult, QuadratureError>
where
    F: Fn(f64) -> Complex64,
{
    let g = |t: f64| {
        let d = 1.0 - t * t;
        let x = t / d;
        f(x) * ((1.0 + t * t) / (d * d))
    };
    let half = QuadOptions { abs_tol: 0.5 * opts.abs_tol, ..opts };
    let left = integrate(g, -1.0, 0.0, half)?;
    let right = integrate(g, 0.0, 1.0, half)?;
    Ok(QuadResult {
        value: left.value + right.value,
        error_estimate: left.error_estimate + right.error_estimate,
        evaluations: left.evaluations + right.evaluations,
    })
}
