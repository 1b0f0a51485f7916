//! Fourier-multiplier operators and singular quadratures on a [`Grid`].
//!
//! Conventions: `H f = (1/(pi i)) p.v. int f(b)/(a - b) db` with multiplier
//! `-sgn(k)`, `H 1 = 0`, and `Lambda = |d/da|`. Boundary values of decaying
//! functions holomorphic in the lower half-plane are fixed points of `H`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::SpectralError;
use crate::grid::{ensure_same_grid, Field, Grid};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Hilbert transform.
pub fn hilbert(f: &Field) -> Field {
    let g = f.grid().clone();
    f.apply_multiplier(false, |i, k| Complex64::new(g.hilbert_multiplier(i, k), 0.0))
}

/// `(I - H) f`.
pub fn minus_hilbert_projection(f: &Field) -> Field {
    let g = f.grid().clone();
    f.apply_multiplier(false, |i, k| Complex64::new(1.0 - g.hilbert_multiplier(i, k), 0.0))
}

/// `(I + H) f`.
pub fn plus_hilbert_projection(f: &Field) -> Field {
    let g = f.grid().clone();
    f.apply_multiplier(false, |i, k| Complex64::new(1.0 + g.hilbert_multiplier(i, k), 0.0))
}

/// `Lambda f = |d/da| f`.
pub fn lambda_op(f: &Field) -> Field {
    f.apply_multiplier(true, |_, k| Complex64::new(k.abs(), 0.0))
}

/// `d^order f / da^order`.
pub fn derivative(f: &Field, order: u32) -> Field {
    let g = f.grid().clone();
    f.apply_multiplier(true, |i, k| g.derivative_multiplier(i, k, order))
}

/// Smooth high-wavenumber filter `exp(-strength (|k|/k_max)^order)`.
pub fn spectral_filter(f: &Field, strength: f64, order: i32) -> Field {
    let k_max = f.grid().k_max();
    f.apply_multiplier(true, |_, k| Complex64::new((-strength * (k.abs() / k_max).powi(order)).exp(), 0.0))
}

/// Samples of `sum_m 1/(a + 2 L m - w)`, the periodization of `1/(a - w)`.
///
/// Its grid spectrum equals the continuous transform of `1/(a - w)` at the
/// grid wavenumbers, with mean `i pi sgn(-Im w) / (2L)`.
pub fn periodized_pole(grid: &Grid, w: Complex64) -> Field {
    let s = PI / (2.0 * grid.half_length());
    Field::complex_fn(grid, |a| {
        let z = (Complex64::new(a, 0.0) - w) * s;
        z.cos() / z.sin() * s
    })
}

/// Spectral commutator `[f, H] g = f H g - H (f g)`.
pub fn commutator(f: &Field, g: &Field) -> Result<Field, SpectralError> {
    let fhg = f.mul(&hilbert(g))?;
    let hfg = hilbert(&f.mul(g)?);
    fhg.sub(&hfg)
}

/// [`commutator`] with `H g` already computed. Inputs share one grid.
pub fn commutator_with_hilbert(f: &Field, g: &Field, hg: &Field) -> Field {
    let fhg = f.mul(hg).expect("same grid");
    let hfg = hilbert(&f.mul(g).expect("same grid"));
    fhg.sub(&hfg).expect("same grid")
}

/// Trapezoid evaluation of `(1/(pi i)) int (f(a) - f(b)) K(a - b) g(b) db`.
///
/// `K(s) = (pi/2L) cot(pi s / 2L)` is the periodization of `1/s`, so this is
/// the same operator as [`commutator`] on the periodic domain, reached in
/// physical space. The diagonal cell uses the limit `f'(a) g(a)`. Cost is
/// `O(n^2)`.
pub fn pv_commutator(f: &Field, g: &Field) -> Result<Field, SpectralError> {
    ensure_same_grid(f, g)?;
    let grid = f.grid();
    let h = grid.spacing();
    let nodes = grid.nodes();
    let fs = f.samples();
    let gs = g.samples();
    let fp = derivative(f, 1);
    let fps = fp.samples();
    let scale = h / (PI * I);
    let w = PI / (2.0 * grid.half_length());
    let n = nodes.len();
    // Kernel depends only on j - m, modulo n.
    let kernel: Vec<f64> = (0..n).map(|d| if d == 0 { 0.0 } else { w / (w * d as f64 * h).tan() }).collect();
    let out: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let fj = fs[j];
            let mut s = fps[j] * gs[j];
            for m in 0..n {
                if m != j {
                    let d = if j >= m { j - m } else { j + n - m };
                    s += (fj - fs[m]) * kernel[d] * gs[m];
                }
            }
            s * scale
        })
        .collect();
    Field::from_complex(grid, out)
}

/// `(1/(2 pi)) int |f(a) - f(b)|^2 / (a - b)^2 db` by trapezoid quadrature.
///
/// The diagonal cell uses `|f'(a)|^2`. The line outside the grid is added
/// analytically from a far-field model of `f` on each side: `d1/b + d2/b^2`
/// fitted at two nodes for `|a| <= L/2`, and `c/b` fitted at the end node
/// beyond that. Both are exact to leading order for vortex-induced traces.
/// Cost is `O(n^2)`.
pub fn sq_diff_integral(f: &Field) -> Field {
    let grid = f.grid();
    let h = grid.spacing();
    let l = grid.half_length();
    let n = grid.n_points();
    let nodes = grid.nodes();
    let fs = f.samples();
    let fp = derivative(f, 1);
    let fps = fp.samples();
    let inner = n / 8;
    let right = TailModel::fit(fs[n - 1], nodes[n - 1], fs[n - 1 - inner], nodes[n - 1 - inner]);
    let left = TailModel::fit(fs[0], -nodes[0], fs[inner], -nodes[inner]);
    let out: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let aj = nodes[j];
            let fj = fs[j];
            let mut s = fps[j].norm_sqr();
            for (m, &am) in nodes.iter().enumerate() {
                if m != j {
                    let d = aj - am;
                    s += (fj - fs[m]).norm_sqr() / (d * d);
                }
            }
            let mut total = s * h;
            total += right.integral(fj, aj, l);
            total += left.integral(fj, -aj, l);
            total / (2.0 * PI)
        })
        .collect();
    Field::from_real(grid, out).expect("length matches grid")
}

/// Far field on one side in the outward coordinate `b > 0`.
struct TailModel {
    d1: Complex64,
    d2: Complex64,
    /// One-term model `c/b` from the end node alone.
    c: Complex64,
}

impl TailModel {
    /// Fits `g(b) = d1/b + d2/b^2` through `(b_end, g_end)` and `(b_in, g_in)`.
    fn fit(g_end: Complex64, b_end: f64, g_in: Complex64, b_in: f64) -> Self {
        let d2 = (g_end * b_end - g_in * b_in) / (1.0 / b_end - 1.0 / b_in);
        let d1 = g_end * b_end - d2 / b_end;
        TailModel { d1, d2, c: g_end * b_end }
    }

    /// `int_L^inf |fa - g(b)|^2 / (b - a)^2 db` for `|a| < L`.
    fn integral(&self, fa: Complex64, a: f64, l: f64) -> f64 {
        let i0 = 1.0 / (l - a);
        if a.abs() <= 0.5 * l {
            // I_p = int_L^inf b^-p (b - a)^-2 db = sum_m (m+1) a^m / ((m+p+1) L^(m+p+1)).
            let r = a / l;
            let mut i = [0.0f64; 5];
            let mut pw = 1.0;
            for m in 0..64 {
                let mf = m as f64;
                for (p, ip) in i.iter_mut().enumerate().skip(1) {
                    *ip += (mf + 1.0) * pw / (mf + p as f64 + 1.0);
                }
                pw *= r;
            }
            for (p, ip) in i.iter_mut().enumerate().skip(1) {
                *ip /= l.powi(p as i32 + 1);
            }
            let (d1, d2) = (self.d1, self.d2);
            fa.norm_sqr() * i0 - 2.0 * (fa.conj() * d1).re * i[1] - 2.0 * (fa.conj() * d2).re * i[2]
                + d1.norm_sqr() * i[2]
                + 2.0 * (d1.conj() * d2).re * i[3]
                + d2.norm_sqr() * i[4]
        } else {
            let lg = ((l - a) / l).ln();
            let i1 = lg / (a * a) + 1.0 / (a * (l - a));
            let i2 = (1.0 / l + 1.0 / (l - a)) / (a * a) + 2.0 * lg / (a * a * a);
            fa.norm_sqr() * i0 - 2.0 * (fa.conj() * self.c).re * i1 + self.c.norm_sqr() * i2
        }
    }
}

/// Spectral form `Re(conj(f) Lambda f) - Lambda(|f|^2) / 2` of [`sq_diff_integral`].
pub fn sq_diff_spectral(f: &Field) -> Field {
    let lf = f.apply_multiplier(false, |_, k| Complex64::new(k.abs(), 0.0));
    let modsq = f.map(false, |c| Complex64::new(c.norm_sqr(), 0.0));
    let modsq = Field::wrap(f.grid(), modsq.samples().to_vec(), true);
    let lmod = lambda_op(&modsq);
    let v: Vec<Complex64> = f
        .samples()
        .iter()
        .zip(lf.samples())
        .zip(lmod.samples())
        .map(|((a, b), c)| Complex64::new((a.conj() * b).re - 0.5 * c.re, 0.0))
        .collect();
    Field::wrap(f.grid(), v, true)
}

/// Minimum distance from `z` to the sampled curve `Z`.
pub fn distance_to_curve(curve: &Field, z: Complex64) -> f64 {
    curve.samples().iter().map(|c| (c - z).norm()).fold(f64::INFINITY, f64::min)
}

/// Cauchy integral `(1/(2 pi i)) int Z_b F(b) / (z - Z(b)) db` by trapezoid rule.
///
/// `curve` holds `Z(a)`; its derivative is taken spectrally from `Z - a`.
pub fn cauchy_velocity(curve: &Field, trace: &Field, z: Complex64) -> Result<Complex64, SpectralError> {
    ensure_same_grid(curve, trace)?;
    let grid = curve.grid();
    let disp = Field::wrap(
        grid,
        curve
            .samples()
            .iter()
            .enumerate()
            .map(|(j, c)| c - grid.node(j))
            .collect(),
        false,
    );
    let za = derivative(&disp, 1).map(false, |c| c + 1.0);
    cauchy_velocity_with(curve, &za, trace, z)
}

/// [`cauchy_velocity`] with a precomputed `Z_a`.
pub fn cauchy_velocity_with(
    curve: &Field,
    curve_alpha: &Field,
    trace: &Field,
    z: Complex64,
) -> Result<Complex64, SpectralError> {
    ensure_same_grid(curve, trace)?;
    ensure_same_grid(curve, curve_alpha)?;
    let h = curve.grid().spacing();
    let limit = 4.0 * h;
    let distance = distance_to_curve(curve, z);
    if distance < limit {
        return Err(SpectralError::NearBoundary { point: z, distance, limit });
    }
    let s: Complex64 = curve
        .samples()
        .iter()
        .zip(curve_alpha.samples())
        .zip(trace.samples())
        .map(|((zc, za), f)| za * f / (z - zc))
        .sum();
    Ok(s * h / (2.0 * PI * I))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pole(w: Complex64) -> impl Fn(f64) -> Complex64 {
        move |a| 1.0 / (c(a, 0.0) - w)
    }

    #[test]
    fn hilbert_of_constant_is_zero() {
        let g = GridSpec::new(200.0, 1 << 12).unwrap();
        let one = Field::real_fn(&g, |_| 1.0);
        assert!(hilbert(&one).max_abs() < 1e-15);
    }

    #[test]
    fn lower_pole_is_fixed_point_after_periodization() {
        let g = GridSpec::new(200.0, 1 << 14).unwrap();
        let f = periodized_pole(&g, c(0.0, 1.0));
        let mean = f.mean();
        assert!((mean - c(0.0, PI / 400.0)).norm() < 1e-12);
        let err = hilbert(&f).sub(&f.map(false, |v| v - mean)).unwrap().max_abs();
        assert!(err < 1e-12, "err = {err:e}");
    }

    #[test]
    fn raw_pole_fixed_point_up_to_truncation() {
        let g = GridSpec::new(200.0, 1 << 14).unwrap();
        let f = Field::complex_fn(&g, pole(c(0.0, 1.0)));
        let hf = hilbert(&f);
        let worst = (0..g.n_points())
            .filter(|&j| g.node(j).abs() <= 10.0)
            .map(|j| (hf.samples()[j] - f.samples()[j]).norm())
            .fold(0.0, f64::max);
        // Dominated by the mean iL/(2 pi) and the image sum, both O(1/L).
        assert!(worst < 1e-2, "worst = {worst:e}");
    }

    #[test]
    fn hilbert_of_lorentzian() {
        // 1/(a^2+1) = (1/2i)[1/(a-i) - 1/(a+i)], images included.
        let g = GridSpec::new(100.0, 1 << 13).unwrap();
        let p_up = periodized_pole(&g, c(0.0, 1.0));
        let p_dn = periodized_pole(&g, c(0.0, -1.0));
        let f = p_up.sub(&p_dn).unwrap().map(false, |v| v / (2.0 * I));
        let m_up = p_up.mean();
        let m_dn = p_dn.mean();
        let expected = p_up
            .map(false, |v| v - m_up)
            .add(&p_dn.map(false, |v| v - m_dn))
            .unwrap()
            .map(false, |v| v / (2.0 * I));
        let err = hilbert(&f).sub(&expected).unwrap().max_abs();
        assert!(err < 1e-12, "err = {err:e}");
        // Away from the images this is -i a/(a^2+1).
        let hf = hilbert(&f);
        for j in (0..g.n_points()).step_by(97) {
            let a = g.node(j);
            if a.abs() < 5.0 {
                let want = c(0.0, -a / (a * a + 1.0));
                assert!((hf.samples()[j] - want).norm() < 2e-3);
            }
        }
    }

    #[test]
    fn upper_pole_has_eigenvalue_minus_one() {
        let g = GridSpec::new(100.0, 1 << 12).unwrap();
        let f = periodized_pole(&g, c(0.5, -2.0));
        let m = f.mean();
        let err = hilbert(&f).add(&f.map(false, |v| v - m)).unwrap().max_abs();
        assert!(err < 1e-12);
    }

    #[test]
    fn flipped_sign_breaks_fixed_point() {
        let g = GridSpec::new(200.0, 1 << 12).unwrap().with_flipped_hilbert_sign();
        let f = periodized_pole(&g, c(0.0, 1.0));
        let m = f.mean();
        let err = hilbert(&f).sub(&f.map(false, |v| v - m)).unwrap().max_abs();
        assert!(err > 1.0);
    }

    #[test]
    fn lambda_examples() {
        let g = GridSpec::new(PI * 8.0, 256).unwrap();
        assert!(lambda_op(&Field::real_fn(&g, |_| 2.5)).max_abs() < 1e-13);
        let e3 = Field::complex_fn(&g, |a| c(0.0, 3.0 * a).exp());
        let err = lambda_op(&e3).sub(&e3.scale(3.0)).unwrap().max_abs();
        assert!(err < 1e-12);
        let cos2 = Field::real_fn(&g, |a| (2.0 * a).cos());
        let err = lambda_op(&cos2).sub(&cos2.scale(2.0)).unwrap().max_abs();
        assert!(err < 1e-12);
    }

    #[test]
    fn derivative_examples() {
        let g = GridSpec::new(PI * 4.0, 128).unwrap();
        let d = derivative(&Field::real_fn(&g, f64::sin), 1);
        let err = d.sub(&Field::real_fn(&g, f64::cos)).unwrap().max_abs();
        assert!(err < 1e-12);
        assert!(derivative(&Field::real_fn(&g, |_| 4.0), 1).max_abs() < 1e-13);

        let g = GridSpec::new(12.0, 512).unwrap();
        let d2 = derivative(&Field::real_fn(&g, |a| (-a * a).exp()), 2);
        let want = Field::real_fn(&g, |a| (4.0 * a * a - 2.0) * (-a * a).exp());
        assert!(d2.sub(&want).unwrap().max_abs() < 1e-11);
        assert!(d2.is_real());
    }

    #[test]
    fn hilbert_squares_to_identity_on_mean_zero() {
        let g = GridSpec::new(50.0, 1024).unwrap();
        let f = Field::real_fn(&g, |a| a * (-a * a / 10.0).exp());
        let hh = hilbert(&hilbert(&f));
        assert!(hh.sub(&f).unwrap().max_abs() < 1e-12 * f.max_abs());
    }

    #[test]
    fn cauchy_velocity_examples() {
        let g = GridSpec::new(200.0, 1 << 14).unwrap();
        let flat = Field::complex_fn(&g, |a| c(a, 0.0));
        let zero = Field::zeros(&g);
        assert_eq!(cauchy_velocity(&flat, &zero, c(0.3, -2.0)).unwrap(), c(0.0, 0.0));

        // 1/(a-i) decays like 1/a; truncation costs O(1/L).
        let f = Field::complex_fn(&g, pole(c(0.0, 1.0)));
        let v = cauchy_velocity(&flat, &f, c(0.0, -2.0)).unwrap();
        assert!((v - c(0.0, 1.0 / 3.0)).norm() < 2e-3, "v = {v}");
        let f = Field::complex_fn(&g, pole(c(0.0, -1.0)));
        let v = cauchy_velocity(&flat, &f, c(0.0, -2.0)).unwrap();
        assert!(v.norm() < 2e-3, "v = {v}");

        // Square-decaying traces leave an O(1/L^3) truncation tail.
        let f = Field::complex_fn(&g, |a| 1.0 / (c(a, -1.0) * c(a, -1.0)));
        let v = cauchy_velocity(&flat, &f, c(0.5, -2.0)).unwrap();
        let want = 1.0 / (c(0.5, -2.0) - c(0.0, 1.0)).powi(2);
        assert!((v - want).norm() < 1e-7, "v = {v}, want {want}");
    }

    #[test]
    fn cauchy_velocity_rejects_near_points() {
        let g = GridSpec::new(10.0, 256).unwrap();
        let flat = Field::complex_fn(&g, |a| c(a, 0.0));
        let f = Field::zeros(&g);
        let r = cauchy_velocity(&flat, &f, c(0.0, -g.spacing()));
        assert!(matches!(r, Err(SpectralError::NearBoundary { .. })));
    }

    #[test]
    fn sq_diff_of_constant_is_zero() {
        let g = GridSpec::new(20.0, 256).unwrap();
        let f = Field::real_fn(&g, |_| 0.0);
        assert!(sq_diff_integral(&f).max_abs() < 1e-15);
        assert!(sq_diff_spectral(&Field::real_fn(&g, |_| 3.0)).max_abs() < 1e-12);
    }

    #[test]
    fn sq_diff_of_plane_wave_is_abs_k() {
        let g = GridSpec::new(PI * 64.0, 4096).unwrap();
        let k = 0.75;
        let f = Field::complex_fn(&g, |a| c(0.0, k * a).exp());
        let s = sq_diff_spectral(&f);
        assert!(s.samples().iter().all(|v| (v.re - k).abs() < 1e-11));
            let q = sq_diff_integral(&f);
        let mid = g.n_points() / 2;
        // A non-decaying f defeats the far-field model; the deficit is O(1/L).
        let q = q.samples()[mid].re;
        assert!(q < k && k - q < 1.0 / g.half_length(), "{q}");
    }

    #[test]
    fn sq_diff_at_origin_matches_adaptive_quadrature() {
        use crate::quadrature::{integrate_real_line, QuadOptions};
        let g = GridSpec::new(200.0, 1 << 14).unwrap();
        let f = Field::complex_fn(&g, pole(c(0.0, 1.0)));
        let q = sq_diff_integral(&f);
        let mid = g.n_points() / 2;
        let a0 = g.node(mid);
        let f0 = 1.0 / c(a0, -1.0);
        let oracle = integrate_real_line(
            |b| {
                let d = f0 - 1.0 / c(a0 + b, -1.0);
                c(d.norm_sqr() / (b * b) / (2.0 * PI), 0.0)
            },
            QuadOptions { abs_tol: 1e-12, rel_tol: 1e-12, ..Default::default() },
        )
        .unwrap();
        // Residual is the far-field model error, O(1/L^3).
        let at = q.samples()[mid].re;
        assert!((at - oracle.value.re).abs() < 1e-7, "{at} vs {}", oracle.value.re);
    }

    #[test]
    fn pv_commutator_special_cases() {
        let g = GridSpec::new(20.0, 256).unwrap();
        let cst = Field::real_fn(&g, |_| 2.0);
        let gg = Field::real_fn(&g, |a| (-a * a).exp());
        assert!(pv_commutator(&cst, &gg).unwrap().max_abs() < 1e-14);
        assert!(pv_commutator(&gg, &Field::zeros(&g)).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = Field::zeros(&GridSpec::new(20.0, 256).unwrap());
        let b = Field::zeros(&GridSpec::new(20.0, 128).unwrap());
        assert!(pv_commutator(&a, &b).is_err());
        assert!(commutator(&a, &b).is_err());
    }

    fn band_limited(g: &Grid, coeffs: &[(f64, f64)], width: f64) -> Field {
        let coeffs = coeffs.to_vec();
        Field::real_fn(g, move |a| {
            let env = (-(a / width).powi(2)).exp();
            coeffs
                .iter()
                .enumerate()
                .map(|(m, (cc, ss))| {
                    let k = 0.3 * (m as f64 + 1.0);
                    cc * (k * a).cos() + ss * (k * a).sin()
                })
                .sum::<f64>()
                * env
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn pv_commutator_matches_multiplier_form(
            fc in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
            gc in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
        ) {
            let g = GridSpec::new(40.0, 2048).unwrap();
            let f = band_limited(&g, &fc, 5.0);
            let gg = band_limited(&g, &gc, 5.0);
            let quad = pv_commutator(&f, &gg).unwrap();
            let spec = commutator(&f, &gg).unwrap();
            let err = quad.sub(&spec).unwrap().max_abs();
            prop_assert!(err < 1e-8, "err = {err:e}");
        }

        #[test]
        fn hilbert_is_an_isometry_and_maps_real_to_imaginary(
            fc in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6),
        ) {
            let g = GridSpec::new(60.0, 1024).unwrap();
            let f = band_limited(&g, &fc, 8.0);
            let m = f.mean();
            let f = f.map(true, |v| v - m);
            let hf = hilbert(&f);
            let n0 = f.l2_norm();
            prop_assert!((hf.l2_norm() - n0).abs() <= 1e-12 * n0.max(1e-300));
            prop_assert!(hf.re().iter().all(|v| v.abs() <= 1e-12 * f.max_abs().max(1e-300)));
            let hh = hilbert(&hf);
            prop_assert!(hh.sub(&f).unwrap().max_abs() <= 1e-12 * f.max_abs().max(1e-300));
        }

        #[test]
        fn sq_diff_is_nonnegative(
            fc in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3),
        ) {
            let g = GridSpec::new(30.0, 512).unwrap();
            let f = band_limited(&g, &fc, 4.0);
            let s = sq_diff_integral(&f);
            prop_assert!(s.re().iter().all(|&v| v >= 0.0));
        }
    }
}
