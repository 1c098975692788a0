//! The linear group `U(t)` of `∂ₜv + ∂ₓ³v = 0`: multiplication by
//! `e^{iξ³t}` on the Fourier side.

use rustfft::num_complex::Complex64;

use super::airy::airy;
use crate::grid::Field;

pub fn linear_propagate(u0: &Field, t: f64) -> Field {
    if t == 0.0 {
        return u0.clone().with_time(u0.t());
    }
    u0.apply_multiplier(|xi| Complex64::from_polar(1.0, xi * xi * xi * t))
        .with_time(u0.t() + t)
}

/// `U(t)u₀` at a single point via the kernel form
/// `(3t)^{-1/3} ∫ Ai((x−y)/(3t)^{1/3}) u₀(y) dy`, trapezoid in `y` over the
/// grid. Ignores periodic images, so it matches [`linear_propagate`] only
/// while the solution has not wrapped around.
pub fn linear_kernel_apply(u0: &Field, t: f64, x: f64) -> f64 {
    assert!(t > 0.0, "kernel form needs t > 0");
    let s = (3.0 * t).cbrt();
    let g = u0.grid();
    g.dx() / s
        * u0
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| if v == 0.0 { 0.0 } else { airy((x - g.x(i)) / s) * v })
            .sum::<f64>()
}
