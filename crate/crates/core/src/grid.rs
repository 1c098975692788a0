//! Uniform periodic grids standing in for the real line, sampled fields and
//! the Fourier-side calculus built on them.
//!
//! Spectral coefficients are stored in FFT order (`0, 1, …, n/2-1, -n/2, …, -1`)
//! and normalised as Fourier coefficients, `u(x_i) = Σ_j ĉ_j e^{iξ_j x_i}` up to
//! a phase that depends only on the grid origin. All integrals use the
//! trapezoid rule, which on a periodic grid is `dx · Σ`.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Spectral content above `n/3` must stay below this fraction of the peak
/// coefficient for a field to count as resolved.
pub const BAND_LIMIT_TOLERANCE: f64 = 1e-8;

#[derive(Clone)]
pub struct Grid {
    half_width: f64,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("half_width", &self.half_width)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }
}

/// Builds the grid `x_i = -L + i·2L/n`, `i = 0..n`.
pub fn make_grid(half_width: f64, n: usize) -> Result<Grid> {
    Grid::new(half_width, n)
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be positive and finite, got {half_width}"
            )));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 16, got {n}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            half_width,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Signed mode number of storage slot `j` (FFT order).
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    /// Wavenumber `ξ = π m / L` of storage slot `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        std::f64::consts::PI * self.mode(j) as f64 / self.half_width
    }

    /// All wavenumbers in FFT storage order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }

    /// Storage slot of the Nyquist mode `m = -n/2`.
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI * (self.n / 2) as f64 / self.half_width
    }

    /// Index of the grid point `-x_i` (the grid is symmetric modulo `2L`).
    pub fn mirror_index(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    /// Index of the grid point nearest to `x` (clamped to the grid).
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((x + self.half_width) / self.dx()).round();
        i.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Forward transform of real samples into normalised coefficients.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Inverse transform; the imaginary part (roundoff for Hermitian input)
    /// is discarded.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    pub(crate) fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    pub(crate) fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }
}

/// A real function sampled on a grid at time `t`.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    t: f64,
}

/// Result of a spectral derivative. `under_resolved` is raised when the top
/// third of the input spectrum is not negligible.
#[derive(Clone, Debug)]
pub struct Derivative {
    pub field: Field,
    pub under_resolved: bool,
}

/// Samples `f` at every grid point.
pub fn sample(f: impl Fn(f64) -> f64, grid: &Grid, t: f64) -> Result<Field> {
    Field::sample(grid, t, f)
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>, t: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                x: grid.x(i),
                value: values[i],
            });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            t,
        })
    }

    pub fn zeros(grid: &Grid, t: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
            t,
        }
    }

    pub fn sample(grid: &Grid, t: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.x(i))).collect();
        Self::new(grid, values, t)
    }

    /// Skips the finiteness scan; callers guarantee the invariant.
    pub(crate) fn from_parts(grid: &Grid, values: Vec<f64>, t: f64) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
            t,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index and value of the largest `|u|`.
    pub fn peak(&self) -> (usize, f64) {
        self.values
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) })
    }

    /// `∫ u dx`.
    pub fn integral(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    /// `∫ f(x, u(x)) dx`.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let dx = self.grid.dx();
        dx * self
            .values
            .iter()
            .enumerate()
            .map(|(i, &u)| f(self.grid.x(i), u))
            .sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.dx() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn to_spectral(&self) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.grid.forward(&self.values),
            t: self.t,
        }
    }

    /// Largest coefficient with `|m| > n/3` relative to the largest overall.
    pub fn spectral_tail_ratio(&self) -> f64 {
        self.to_spectral().tail_ratio()
    }

    /// Spectral derivative `(iξ)^order`; the Nyquist mode is dropped for odd
    /// orders so the result stays real.
    pub fn derivative(&self, order: u32) -> Derivative {
        let spec = self.to_spectral();
        let under_resolved = spec.tail_ratio() > BAND_LIMIT_TOLERANCE;
        let field = spec
            .map_modes(|xi| Complex64::new(0.0, xi).powu(order))
            .to_field();
        Derivative {
            field,
            under_resolved,
        }
    }

    /// Applies the Fourier multiplier `m(ξ)`. For a real result `m` must
    /// satisfy `m(-ξ) = conj(m(ξ))`; at the unpaired Nyquist mode only
    /// `Re m` is kept.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> Complex64) -> Field {
        self.to_spectral().map_modes(m).to_field()
    }

    /// `‖(1+ξ²)^{s/2} û‖₂`, normalised so that `s = 0` is the L² norm.
    pub fn sobolev_norm(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::OutOfDomain {
                name: "s",
                value: s,
                domain: "[0, ∞)",
            });
        }
        if s == 0.0 {
            return Ok(self.l2_norm());
        }
        let spec = self.to_spectral();
        let sum: f64 = spec
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let xi = self.grid.wavenumber(j);
                (1.0 + xi * xi).powf(s) * c.norm_sqr()
            })
            .sum();
        Ok((2.0 * self.grid.half_width() * sum).sqrt())
    }

    /// `u(-x)`, exact on the grid.
    pub fn mirrored(&self) -> Field {
        let values = (0..self.len())
            .map(|i| self.values[self.grid.mirror_index(i)])
            .collect();
        Field::from_parts(&self.grid, values, self.t)
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &u)| f(self.grid.x(i), u))
            .collect();
        Field::new(&self.grid, values, self.t)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Field::from_parts(&self.grid, values, self.t))
    }

    /// `max |u - v|` over the grid.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }
}

/// Fourier coefficients of a real field.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
    t: f64,
}

impl SpectralField {
    pub fn new(grid: &Grid, coeffs: Vec<Complex64>, t: f64) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
            t,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn to_field(&self) -> Field {
        Field::from_parts(&self.grid, self.grid.inverse(&self.coeffs), self.t)
    }

    /// `max_j |ĉ_{-j} - conj(ĉ_j)|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.coeffs.len();
        let peak = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if peak == 0.0 {
            return 0.0;
        }
        (1..n)
            .map(|j| (self.coeffs[n - j] - self.coeffs[j].conj()).norm())
            .fold(0.0, f64::max)
            / peak
    }

    fn tail_ratio(&self) -> f64 {
        let n = self.coeffs.len() as i64;
        let mut peak = 0.0f64;
        let mut tail = 0.0f64;
        for (j, c) in self.coeffs.iter().enumerate() {
            let a = c.norm();
            peak = peak.max(a);
            if 3 * self.grid.mode(j).abs() > n {
                tail = tail.max(a);
            }
        }
        if peak == 0.0 {
            0.0
        } else {
            tail / peak
        }
    }

    pub(crate) fn map_modes(mut self, m: impl Fn(f64) -> Complex64) -> Self {
        let nyq = self.grid.nyquist();
        for (j, c) in self.coeffs.iter_mut().enumerate() {
            let factor = m(self.grid.wavenumber(j));
            *c *= if j == nyq {
                Complex64::new(factor.re, 0.0)
            } else {
                factor
            };
        }
        self
    }
}
