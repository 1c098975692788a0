//! Solitary waves `u(x, t) = φ_{k,c}(x − ct − x₀)` with
//! `φ_{k,c}(x) = (c_k c sech²(k√c x/2))^{1/k}`, `c_k = (k+1)(k+2)/2`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `c_k = (k+1)(k+2)/2`.
pub fn soliton_constant(k: u32) -> f64 {
    let k = k as f64;
    0.5 * (k + 1.0) * (k + 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonSpec {
    pub k: u32,
    pub c: f64,
    #[serde(default)]
    pub x0: f64,
}

impl SolitonSpec {
    pub fn new(k: u32, c: f64, x0: f64) -> Result<Self> {
        let s = Self { k, c, x0 };
        s.validate()?;
        Ok(s)
    }

    /// Speed giving peak height `amplitude`.
    pub fn with_amplitude(k: u32, amplitude: f64, x0: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(invalid("amplitude", format!("must be positive, got {amplitude}")));
        }
        Self::new(k, amplitude.powi(k as i32) / soliton_constant(k), x0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(invalid("k", "must be at least 1"));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(invalid("c", format!("must be positive, got {}", self.c)));
        }
        if !self.x0.is_finite() {
            return Err(invalid("x0", "must be finite"));
        }
        Ok(())
    }

    pub fn amplitude(&self) -> f64 {
        (soliton_constant(self.k) * self.c).powf(1.0 / self.k as f64)
    }

    /// `φ_{k,c}(y)` centred at the origin.
    pub fn profile(&self, y: f64) -> f64 {
        let k = self.k as f64;
        let arg = 0.5 * k * self.c.sqrt() * y;
        let sech = 1.0 / arg.cosh();
        (soliton_constant(self.k) * self.c * sech * sech).powf(1.0 / k)
    }

    /// The travelling wave at `(x, t)`.
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.profile(x - self.c * t - self.x0)
    }

    /// `∫ φ dx`, by Gauss–Legendre quadrature over the effective support.
    pub fn mass(&self) -> f64 {
        let width = 80.0 / self.c.sqrt();
        crate::quad::GaussLegendre::new(20).integrate_composite(-width, width, 400, |y| self.profile(y))
    }
}

/// The travelling wave as a closure of `(x, t)`.
pub fn soliton(spec: &SolitonSpec) -> Result<impl Fn(f64, f64) -> f64> {
    spec.validate()?;
    let s = *spec;
    Ok(move |x, t| s.eval(x, t))
}
