//! The Airy function `Ai`.
//!
//! `|x| ≤ 8`: Maclaurin pair `Ai = c₁f − c₂g`, summed in double-double
//! arithmetic since `f` and `g` grow like `e^{(2/3)|x|^{3/2}}` while `Ai`
//! decays at the same rate. Beyond, the Poincaré expansions.

use std::f64::consts::{FRAC_PI_4, PI};

use super::dd::Dd;
use crate::error::{Error, Result};

/// `Ai(0) = 3^{-2/3}/Γ(2/3)`.
const C1: Dd = Dd::new(0.3550280538878172, 2.05233632436212e-17);
/// `-Ai'(0) = 3^{-1/3}/Γ(1/3)`.
const C2: Dd = Dd::new(0.2588194037928068, -2.522243111610832e-17);

const SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_TERMS: usize = 10;

/// Arguments beyond this are reported as saturated by [`airy_checked`].
pub const AIRY_RANGE: f64 = 200.0;

pub fn airy(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() <= SERIES_LIMIT {
        maclaurin(x)
    } else if x > 0.0 {
        asymptotic_right(x)
    } else {
        asymptotic_left(x)
    }
}

/// `Ai(x)` restricted to `|x| ≤ 200`; beyond that the right tail underflows
/// and the left tail oscillates faster than the expansion is meant for.
pub fn airy_checked(x: f64) -> Result<f64> {
    if x.abs() > AIRY_RANGE || x.is_nan() {
        return Err(Error::OutOfDomain {
            name: "x",
            value: x,
            domain: "[-200, 200]",
        });
    }
    Ok(airy(x))
}

fn maclaurin(x: f64) -> f64 {
    let x3 = Dd::from(x) * Dd::from(x) * x;
    let mut f_term = Dd::from(1.0);
    let mut g_term = Dd::from(x);
    let mut f = f_term;
    let mut g = g_term;
    for k in 1..200 {
        let k3 = 3.0 * k as f64;
        f_term = f_term * x3 / ((k3 - 1.0) * k3);
        g_term = g_term * x3 / (k3 * (k3 + 1.0));
        f = f + f_term;
        g = g + g_term;
        if f_term.hi.abs() < 1e-34 * f.hi.abs().max(1.0) && g_term.hi.abs() < 1e-34 * g.hi.abs().max(1.0) {
            break;
        }
    }
    (C1 * f - C2 * g).to_f64()
}

/// Coefficients `u_k` of the asymptotic expansions.
fn u_coeffs() -> [f64; ASYMPTOTIC_TERMS] {
    let mut u = [1.0; ASYMPTOTIC_TERMS];
    for k in 1..ASYMPTOTIC_TERMS {
        let j = k as f64;
        u[k] = u[k - 1] * (6.0 * j - 5.0) * (6.0 * j - 3.0) * (6.0 * j - 1.0) / ((2.0 * j - 1.0) * 216.0 * j);
    }
    u
}

/// Sums `Σ sign_k u_k / ζ^k` over the indices selected by `keep`, stopping
/// before the terms start to grow.
fn truncated_sum(zeta: f64, keep: impl Fn(usize) -> Option<f64>) -> f64 {
    let u = u_coeffs();
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    let mut power = 1.0;
    for (k, uk) in u.iter().enumerate() {
        let term = uk * power;
        if term > last {
            break;
        }
        last = term;
        if let Some(sign) = keep(k) {
            sum += sign * term;
        }
        power /= zeta;
    }
    sum
}

fn asymptotic_right(x: f64) -> f64 {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let s = truncated_sum(zeta, |k| Some(if k % 2 == 0 { 1.0 } else { -1.0 }));
    (-zeta).exp() / (2.0 * PI.sqrt() * x.powf(0.25)) * s
}

fn asymptotic_left(x: f64) -> f64 {
    let y = -x;
    let zeta = 2.0 / 3.0 * y * y.sqrt();
    let sign = |k: usize| if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let p = truncated_sum(zeta, |k| (k % 2 == 0).then(|| sign(k)));
    let q = truncated_sum(zeta, |k| (k % 2 == 1).then(|| sign(k)));
    let phase = zeta + FRAC_PI_4;
    (phase.sin() * p - phase.cos() * q) / (PI.sqrt() * y.powf(0.25))
}

/// Reference value from the Airy integral on the shifted contour
/// `ξ = s + iη`, where the integrand decays like `e^{-η s²}`; trapezoid rule
/// in `s`. Slow; meant for cross-checks.
pub fn airy_reference(x: f64) -> f64 {
    let eta = if x > 0.0 {
        x.sqrt()
    } else {
        (1.0 / (1.0 + x.abs()).sqrt()).max(0.05)
    };
    // |integrand| = e^{-η(s² + x - η²/3)}
    let shift = -eta * (x - eta * eta / 3.0);
    let s_max = ((80.0 + shift.max(0.0)) / eta).sqrt();
    let freq = s_max * s_max + x.abs() + eta * eta;
    let steps = ((s_max * freq / 0.02).ceil() as usize).clamp(2000, 2_000_000);
    let h = s_max / steps as f64;
    let mut sum = 0.0;
    for i in 0..=steps {
        let s = i as f64 * h;
        let mag = (-eta * (s * s + x - eta * eta / 3.0)).exp();
        let phase = s * s * s / 3.0 - s * eta * eta + x * s;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        sum += w * mag * phase.cos();
    }
    sum * h / PI
}
