//! Uniform periodic grid on `[-L, L)` and sampled fields.
//!
//! Nodes are cell-centred, `alpha_j = -L + (j + 1/2) h`, so the reflection
//! `alpha -> -alpha` maps node `j` onto node `n - 1 - j` exactly.
//!
//! Spectra follow `f_hat(k) = sum_j f(alpha_j) exp(-i k alpha_j) h` and are
//! stored in FFT order: index `m < n/2` holds `k = pi m / L`, index `m >= n/2`
//! holds `k = pi (m - n) / L`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::SpectralError;

/// Shared handle to a grid; fields on the same grid share one handle.
pub type Grid = Arc<GridSpec>;

/// Periodic truncation of the real line with its FFT plans.
pub struct GridSpec {
    half_length: f64,
    n_points: usize,
    spacing: f64,
    k_fft: Vec<f64>,
    phase: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    hilbert_sign: f64,
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("half_length", &self.half_length)
            .field("n_points", &self.n_points)
            .field("spacing", &self.spacing)
            .field("hilbert_sign", &self.hilbert_sign)
            .finish()
    }
}

impl GridSpec {
    /// Builds a grid with `n_points` nodes on `[-half_length, half_length)`.
    pub fn new(half_length: f64, n_points: usize) -> Result<Grid, SpectralError> {
        Self::build(half_length, n_points, 1.0)
    }

    /// Same grid with the Hilbert multiplier negated.
    ///
    /// Exists only so that verification can prove it detects a wrong sign.
    pub fn with_flipped_hilbert_sign(&self) -> Grid {
        Self::build(self.half_length, self.n_points, -self.hilbert_sign)
            .expect("parameters already validated")
    }

    fn build(half_length: f64, n_points: usize, hilbert_sign: f64) -> Result<Grid, SpectralError> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(SpectralError::InvalidGrid(format!(
                "half_length must be positive and finite, got {half_length}"
            )));
        }
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(SpectralError::InvalidGrid(format!(
                "n_points must be a power of two >= 16, got {n_points}"
            )));
        }
        let spacing = 2.0 * half_length / n_points as f64;
        let k_fft: Vec<f64> = (0..n_points)
            .map(|m| {
                let signed = if m < n_points / 2 { m as f64 } else { m as f64 - n_points as f64 };
                PI * signed / half_length
            })
            .collect();
        let shift = half_length - 0.5 * spacing;
        let phase = k_fft
            .iter()
            .map(|&k| Complex64::from_polar(spacing, k * shift))
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        Ok(Arc::new(GridSpec {
            half_length,
            n_points,
            spacing,
            k_fft,
            phase,
            forward,
            inverse,
            hilbert_sign,
        }))
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Sign applied to the Hilbert multiplier: `+1` except on mutated grids.
    pub fn hilbert_sign(&self) -> f64 {
        self.hilbert_sign
    }

    /// Node `alpha_j`.
    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        -self.half_length + (j as f64 + 0.5) * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    /// Wavenumbers in FFT storage order.
    pub fn fft_wavenumbers(&self) -> &[f64] {
        &self.k_fft
    }

    /// Wavenumbers `pi m / L` for `m = -n/2 .. n/2 - 1`, ascending.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let half = self.n_points / 2;
        (0..self.n_points)
            .map(|i| self.k_fft[(i + half) % self.n_points])
            .collect()
    }

    /// Storage index of the Nyquist mode `k = -pi n / (2L)`.
    pub fn nyquist_index(&self) -> usize {
        self.n_points / 2
    }

    /// Largest resolved wavenumber magnitude, `pi n / (2L)`.
    pub fn k_max(&self) -> f64 {
        PI * self.n_points as f64 / (2.0 * self.half_length)
    }

    /// Whether two grids describe the same discretization.
    pub fn same_as(&self, other: &GridSpec) -> bool {
        std::ptr::eq(self, other)
            || (self.n_points == other.n_points
                && self.half_length == other.half_length
                && self.hilbert_sign == other.hilbert_sign)
    }

    /// Physical spectrum of `samples`.
    pub fn forward(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut buf = self.raw_forward(samples);
        for (c, p) in buf.iter_mut().zip(&self.phase) {
            *c *= p;
        }
        buf
    }

    /// Samples whose physical spectrum is `spectrum`.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .zip(&self.phase)
            .map(|(c, p)| c / p)
            .collect();
        self.raw_inverse_in_place(&mut buf);
        buf
    }

    pub(crate) fn raw_forward(&self, samples: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(samples.len(), self.n_points, "sample count does not match grid");
        let mut buf = samples.to_vec();
        self.forward.process(&mut buf);
        buf
    }

    /// Unnormalized inverse FFT followed by division by `n`.
    pub(crate) fn raw_inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.n_points as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Applies the Fourier multiplier `m(index, k)` to `samples`.
    pub fn apply_multiplier<M>(&self, samples: &[Complex64], m: M) -> Vec<Complex64>
    where
        M: Fn(usize, f64) -> Complex64,
    {
        let mut buf = self.raw_forward(samples);
        for (i, c) in buf.iter_mut().enumerate() {
            *c *= m(i, self.k_fft[i]);
        }
        self.raw_inverse_in_place(&mut buf);
        buf
    }

    /// Hilbert multiplier `-sgn(k)`, zero at `k = 0` and at the Nyquist mode.
    #[inline]
    pub fn hilbert_multiplier(&self, index: usize, k: f64) -> f64 {
        if index == 0 || index == self.nyquist_index() {
            0.0
        } else {
            -k.signum() * self.hilbert_sign
        }
    }

    /// `(ik)^order`, with the Nyquist mode dropped for odd orders.
    #[inline]
    pub fn derivative_multiplier(&self, index: usize, k: f64, order: u32) -> Complex64 {
        if order % 2 == 1 && index == self.nyquist_index() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, k).powu(order)
    }
}

/// A function sampled on a grid, with a lazily computed physical spectrum.
#[derive(Clone)]
pub struct Field {
    grid: Grid,
    samples: Vec<Complex64>,
    real: bool,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("real", &self.real)
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

impl Field {
    /// Real field from samples.
    pub fn from_real(grid: &Grid, values: Vec<f64>) -> Result<Field, SpectralError> {
        if values.len() != grid.n_points() {
            return Err(SpectralError::LengthMismatch { expected: grid.n_points(), got: values.len() });
        }
        Ok(Field {
            grid: grid.clone(),
            samples: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            real: true,
            spectrum: OnceLock::new(),
        })
    }

    /// Complex field from samples.
    pub fn from_complex(grid: &Grid, values: Vec<Complex64>) -> Result<Field, SpectralError> {
        if values.len() != grid.n_points() {
            return Err(SpectralError::LengthMismatch { expected: grid.n_points(), got: values.len() });
        }
        Ok(Field { grid: grid.clone(), samples: values, real: false, spectrum: OnceLock::new() })
    }

    /// Complex field flagged real after checking its imaginary part.
    pub fn from_complex_as_real(grid: &Grid, values: Vec<Complex64>) -> Result<Field, SpectralError> {
        let mut f = Field::from_complex(grid, values)?;
        let scale = f.max_abs();
        let im = f.samples.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        if im > 1e-12 * scale {
            return Err(SpectralError::NotReal { max_imag: im, scale });
        }
        for c in f.samples.iter_mut() {
            c.im = 0.0;
        }
        f.real = true;
        Ok(f)
    }

    pub fn real_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Field {
        let v = (0..grid.n_points()).map(|j| f(grid.node(j))).collect();
        Field::from_real(grid, v).expect("length matches by construction")
    }

    pub fn complex_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Field {
        let v = (0..grid.n_points()).map(|j| f(grid.node(j))).collect();
        Field::from_complex(grid, v).expect("length matches by construction")
    }

    pub fn zeros(grid: &Grid) -> Field {
        Field::real_fn(grid, |_| 0.0)
    }

    /// Field whose physical spectrum is `spectrum`.
    pub fn from_spectrum(grid: &Grid, spectrum: Vec<Complex64>) -> Result<Field, SpectralError> {
        if spectrum.len() != grid.n_points() {
            return Err(SpectralError::LengthMismatch { expected: grid.n_points(), got: spectrum.len() });
        }
        let samples = grid.inverse(&spectrum);
        let f = Field { grid: grid.clone(), samples, real: false, spectrum: OnceLock::new() };
        let _ = f.spectrum.set(spectrum);
        Ok(f)
    }

    pub(crate) fn wrap(grid: &Grid, samples: Vec<Complex64>, real: bool) -> Field {
        debug_assert_eq!(samples.len(), grid.n_points());
        let mut samples = samples;
        if real {
            for c in samples.iter_mut() {
                c.im = 0.0;
            }
        }
        Field { grid: grid.clone(), samples, real, spectrum: OnceLock::new() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Real parts of the samples.
    pub fn re(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.re).collect()
    }

    /// Imaginary parts of the samples.
    pub fn im(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.im).collect()
    }

    /// Physical spectrum in FFT order; computed once.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| self.grid.forward(&self.samples))
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Discrete `L^2` norm, `sqrt(sum |f_j|^2 h)`.
    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.spacing()).sqrt()
    }

    /// Grid mean of the samples.
    pub fn mean(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() / self.samples.len() as f64
    }

    /// Real part as a real field.
    pub fn real_part(&self) -> Field {
        Field::wrap(&self.grid, self.samples.clone(), true)
    }

    pub fn conj(&self) -> Field {
        Field::wrap(&self.grid, self.samples.iter().map(|c| c.conj()).collect(), self.real)
    }

    /// Pointwise map; the result is complex unless `keeps_real` and `self` is real.
    pub fn map(&self, keeps_real: bool, f: impl Fn(Complex64) -> Complex64) -> Field {
        Field::wrap(&self.grid, self.samples.iter().map(|&c| f(c)).collect(), keeps_real && self.real)
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(
        &self,
        other: &Field,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Field, SpectralError> {
        ensure_same_grid(self, other)?;
        let v = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field::wrap(&self.grid, v, false))
    }

    pub fn add(&self, other: &Field) -> Result<Field, SpectralError> {
        let real = self.real && other.real;
        let mut r = self.zip_map(other, |a, b| a + b)?;
        r.real = real;
        Ok(r)
    }

    pub fn sub(&self, other: &Field) -> Result<Field, SpectralError> {
        let real = self.real && other.real;
        let mut r = self.zip_map(other, |a, b| a - b)?;
        r.real = real;
        Ok(r)
    }

    pub fn mul(&self, other: &Field) -> Result<Field, SpectralError> {
        let real = self.real && other.real;
        let mut r = self.zip_map(other, |a, b| a * b)?;
        r.real = real;
        Ok(r)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(true, |c| c * s)
    }

    /// `max_j |f(alpha_j) + f(alpha_{n-1-j})|`; zero for exactly odd fields.
    pub fn oddness_defect(&self) -> f64 {
        let n = self.samples.len();
        (0..n / 2)
            .map(|j| (self.samples[j] + self.samples[n - 1 - j]).norm())
            .fold(0.0, f64::max)
    }

    /// Applies a multiplier, keeping the real flag when `keeps_real` holds.
    pub fn apply_multiplier(&self, keeps_real: bool, m: impl Fn(usize, f64) -> Complex64) -> Field {
        let grid = &self.grid;
        let spec = self.spectrum();
        let out: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(i, &c)| c * m(i, grid.k_fft[i]))
            .collect();
        let samples = grid.inverse(&out);
        let f = Field::wrap(grid, samples, keeps_real && self.real);
        if !f.real {
            let _ = f.spectrum.set(out);
        }
        f
    }
}

pub(crate) fn ensure_same_grid(a: &Field, b: &Field) -> Result<(), SpectralError> {
    if a.grid.same_as(&b.grid) {
        Ok(())
    } else {
        Err(SpectralError::GridMismatch {
            left: (a.grid.half_length, a.grid.n_points),
            right: (b.grid.half_length, b.grid.n_points),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(GridSpec::new(10.0, 15).is_err());
        assert!(GridSpec::new(10.0, 8).is_err());
        assert!(GridSpec::new(-1.0, 64).is_err());
        assert!(GridSpec::new(10.0, 64).is_ok());
    }

    #[test]
    fn spacing_times_count_is_domain_length() {
        let g = GridSpec::new(200.0, 1 << 14).unwrap();
        assert_eq!(g.spacing() * g.n_points() as f64, 400.0);
    }

    #[test]
    fn wavenumbers_are_ascending_multiples_of_pi_over_l() {
        let g = GridSpec::new(5.0, 32).unwrap();
        let k = g.wavenumbers();
        assert_eq!(k.len(), 32);
        assert!((k[0] + PI * 16.0 / 5.0).abs() < 1e-14);
        assert!((k[31] - PI * 15.0 / 5.0).abs() < 1e-14);
        assert!(k.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn reflection_maps_node_j_to_n_minus_1_minus_j() {
        let g = GridSpec::new(7.0, 64).unwrap();
        for j in 0..64 {
            assert!((g.node(j) + g.node(63 - j)).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_spectrum_matches_continuous_transform() {
        // exp(-a^2/2) has transform sqrt(2 pi) exp(-k^2/2).
        let g = GridSpec::new(20.0, 256).unwrap();
        let f = Field::real_fn(&g, |a| (-a * a / 2.0).exp());
        for (i, c) in f.spectrum().iter().enumerate() {
            let k = g.fft_wavenumbers()[i];
            let exact = (2.0 * PI).sqrt() * (-k * k / 2.0).exp();
            assert!((c - Complex64::new(exact, 0.0)).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn round_trip_reproduces_samples() {
        let g = GridSpec::new(30.0, 512).unwrap();
        let f = Field::complex_fn(&g, |a| Complex64::new(a.sin() * (-a * a / 50.0).exp(), a.cos() / (1.0 + a * a)));
        let back = Field::from_spectrum(&g, f.spectrum().to_vec()).unwrap();
        let err = f.sub(&back).unwrap().max_abs();
        assert!(err <= 1e-12 * f.max_abs());
    }

    #[test]
    fn real_flag_checks_imaginary_part() {
        let g = GridSpec::new(1.0, 16).unwrap();
        let ok = vec![Complex64::new(1.0, 1e-15); 16];
        assert!(Field::from_complex_as_real(&g, ok).is_ok());
        let bad = vec![Complex64::new(1.0, 1e-3); 16];
        assert!(Field::from_complex_as_real(&g, bad).is_err());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Field::zeros(&GridSpec::new(1.0, 16).unwrap());
        let b = Field::zeros(&GridSpec::new(2.0, 16).unwrap());
        assert!(matches!(a.add(&b), Err(SpectralError::GridMismatch { .. })));
    }
}
