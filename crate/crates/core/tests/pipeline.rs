//! End-to-end checks through the public API: solver against exact solutions,
//! the linear group in its two forms, and weighted norms against closed forms.

use gkdv_core::analytic::{linear_kernel_apply, linear_propagate};
use gkdv_core::solver::{evolve, evolve_backward, Invariants};
use gkdv_core::weights::log_weighted_l2;
use gkdv_core::{DecaySchedule, Field, Grid, SolitonSpec, SolverConfig, Weight, WeightSpec};
use proptest::prelude::*;
use std::f64::consts::PI;

fn gaussian(grid: &Grid, width: f64) -> Field {
    Field::sample(grid, 0.0, |x| (-(x / width).powi(2)).exp()).unwrap()
}

#[test]
fn mkdv_soliton_translates_rigidly() {
    let grid = Grid::new(30.0, 512).unwrap();
    let s = SolitonSpec::new(2, 1.0, -5.0).unwrap();
    let u0 = Field::sample(&grid, 0.0, |x| s.eval(x, 0.0)).unwrap();
    let traj = evolve(&u0, &SolverConfig::new(2, 1e-3).with_snapshots(vec![1.0, 2.0])).unwrap();
    assert!(traj.flags.labels().is_empty());
    for u in &traj.snapshots[1..] {
        let exact = Field::sample(&grid, u.t(), |x| s.eval(x, u.t())).unwrap();
        assert!(u.max_abs_diff(&exact).unwrap() < 1e-8, "t = {}", u.t());
    }
    let first = Invariants::of(traj.initial(), 2);
    let last = Invariants::of(traj.last(), 2);
    assert!((last.l2_squared - first.l2_squared).abs() < 1e-9);
    assert!((last.hamiltonian - first.hamiltonian).abs() < 1e-9);
}

#[test]
fn backward_evolution_runs_the_soliton_in_reverse() {
    let grid = Grid::new(30.0, 512).unwrap();
    let s = SolitonSpec::new(1, 1.0, 0.0).unwrap();
    let u0 = Field::sample(&grid, 0.0, |x| s.eval(x, 0.0)).unwrap();
    let traj = evolve_backward(&u0, &SolverConfig::new(1, 1e-3).with_snapshots(vec![1.5])).unwrap();
    let u = traj.last();
    assert!((u.t() + 1.5).abs() < 1e-12);
    let exact = Field::sample(&grid, u.t(), |x| s.eval(x, -1.5)).unwrap();
    assert!(u.max_abs_diff(&exact).unwrap() < 1e-8);
}

#[test]
fn linear_solver_matches_the_exact_group() {
    let grid = Grid::new(40.0, 1024).unwrap();
    let u0 = gaussian(&grid, 1.0);
    let traj = evolve(&u0, &SolverConfig::new(1, 1e-2).linear().with_snapshots(vec![1.0])).unwrap();
    let exact = linear_propagate(&u0, 1.0);
    assert!(traj.last().max_abs_diff(&exact).unwrap() < 1e-12);
}

#[test]
fn spectral_and_kernel_forms_of_the_linear_group_agree() {
    let grid = Grid::new(40.0, 2048).unwrap();
    let u0 = gaussian(&grid, 1.0);
    let t = 0.5;
    let spectral = linear_propagate(&u0, t);
    for x in [-6.0, -2.0, 0.0, 1.5, 4.0] {
        let i = grid.nearest_index(x);
        let kernel = linear_kernel_apply(&u0, t, grid.x(i));
        assert!((spectral.values()[i] - kernel).abs() < 1e-6, "x = {x}");
    }
}

#[test]
fn exponential_weight_norm_matches_closed_form() {
    // ∫ e^{βx} e^{−2x²} dx = (π/2)^{1/2} e^{β²/8}
    let grid = Grid::new(60.0, 4096).unwrap();
    let u = gaussian(&grid, 1.0);
    let want = |beta: f64| 0.25 * (PI / 2.0).ln() + beta * beta / 16.0;
    for beta in [0.0, 1.0, 10.0, 40.0] {
        let w = Weight::from_spec(&WeightSpec::exp_linear(beta)).unwrap();
        let n = log_weighted_l2(&u, &w, 0.0, None).unwrap();
        assert!((n.log_norm - want(beta)).abs() < 1e-10, "beta = {beta}");
        assert!(!n.saturated);
    }
    // At β = 100 the integrand peaks where |u| is near the 1e-300 floor, so
    // the skipped samples shave a little off the norm, never add to it.
    let w = Weight::from_spec(&WeightSpec::exp_linear(100.0)).unwrap();
    let n = log_weighted_l2(&u, &w, 0.0, None).unwrap();
    assert!(n.floored_fraction > 0.0);
    assert!(n.log_norm < want(100.0) && n.log_norm > want(100.0) - 0.01);

    // Past the f64 range the norm saturates but its logarithm stays exact:
    // for u ≡ 1 the grid sum of e^{x} is geometric.
    let big = Grid::new(1500.0, 1 << 14).unwrap();
    let one = Field::sample(&big, 0.0, |_| 1.0).unwrap();
    let w = Weight::from_spec(&WeightSpec::exp_linear(1.0)).unwrap();
    let n = log_weighted_l2(&one, &w, 0.0, None).unwrap();
    let dx = big.dx();
    let x_max = big.x(big.len() - 1);
    let log_sum = x_max - (-(-dx).exp_m1()).ln() + (-(-2.0 * 1500.0f64).exp()).ln_1p();
    assert!(n.saturated && n.norm.is_infinite());
    assert!((n.log_norm - 0.5 * (dx.ln() + log_sum)).abs() < 1e-9);
}

#[test]
fn polynomial_weight_norm_matches_closed_form() {
    // ∫ (1 + x²) e^{−2x²} dx = (π/2)^{1/2} (1 + 1/4)
    let grid = Grid::new(30.0, 1024).unwrap();
    let u = gaussian(&grid, 1.0);
    let w = Weight::from_spec(&WeightSpec::poly_bracket(1.0)).unwrap();
    let n = log_weighted_l2(&u, &w, 0.0, None).unwrap();
    let want = ((PI / 2.0).sqrt() * 1.25).sqrt();
    assert!((n.norm - want).abs() < 1e-12);
}

proptest! {
    #[test]
    fn schedule_solves_its_ode(a0 in 0.05f64..5.0, t in 0.0f64..50.0) {
        let s = DecaySchedule::forward(a0).unwrap();
        let a = s.rate(t).unwrap();
        prop_assert!((a - a0 / (1.0 + 6.75 * a0 * a0 * t).sqrt()).abs() <= 1e-14 * a0);
        let tau = 1.0 / (6.75 * a0 * a0) + t;
        let h = 1e-3 * tau;
        let fd = (s.rate(t + h).unwrap() - s.rate((t - h).max(0.0)).unwrap()) / (t + h - (t - h).max(0.0));
        let exact = -3.375 * a * a * a;
        let tol = if t >= h { 1e-5 } else { 1e-2 };
        prop_assert!((fd - exact).abs() <= tol * exact.abs());
    }

    #[test]
    fn schedule_decreases_and_scales_like_inverse_sqrt(a0 in 0.05f64..5.0, t in 1.0f64..1e4) {
        let s = DecaySchedule::forward(a0).unwrap();
        prop_assert!(s.rate(2.0 * t).unwrap() < s.rate(t).unwrap());
        // a(t)√t → 1/√6.75 from below
        let lim = 1.0 / 6.75f64.sqrt();
        let v = s.rate(t).unwrap() * t.sqrt();
        prop_assert!(v < lim && v > lim * (1.0 - 1.0 / (6.75 * a0 * a0 * t)));
    }
}
