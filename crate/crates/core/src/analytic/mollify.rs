//! Mollified, shifted data `u₀^ε = ρ_ε ∗ u₀(· + ε)`.
//!
//! `u₀^ε(x)` averages `u₀` over `[x, x + 2ε]`, so the support moves left by
//! at most `2ε` and never right; weights increasing in `x` therefore can only
//! shrink the weighted norm.

use crate::error::{Error, Result};
use crate::grid::Field;

/// The unnormalised bump `exp(−1/(1−y²))` on `(−1, 1)`.
pub fn bump(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - y * y)).exp()
    }
}

/// Discrete mollification with normalised kernel `K_m ∝ ρ_ε(ε − m·dx)`,
/// `0 < m·dx < 2ε`, so that `Σ K_m = 1` exactly up to rounding. Periodic.
pub fn mollify_shift(u0: &Field, eps: f64) -> Result<Field> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::OutOfDomain {
            name: "epsilon",
            value: eps,
            domain: "(0, 1)",
        });
    }
    let g = u0.grid();
    let dx = g.dx();
    if 2.0 * eps <= dx {
        return Err(crate::error::invalid(
            "epsilon",
            format!("2ε = {} does not exceed the grid spacing {dx}", 2.0 * eps),
        ));
    }
    let mut kernel = Vec::new();
    let mut m = 1usize;
    while (m as f64) * dx < 2.0 * eps {
        kernel.push(bump((eps - m as f64 * dx) / eps));
        m += 1;
    }
    let total: f64 = kernel.iter().sum();
    if total == 0.0 {
        return Err(crate::error::invalid("epsilon", "kernel has no mass on this grid"));
    }
    kernel.iter_mut().for_each(|k| *k /= total);
    let n = g.len();
    let values = (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, k)| k * u0.values()[(i + j + 1) % n])
                .sum()
        })
        .collect();
    Field::new(g, values, u0.t())
}
