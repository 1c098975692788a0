//! Fractional-exponential decay under the flow: the scheduled weight
//! `e^{a(t)x₊^{3/2}}` stays bounded where the frozen `e^{a₀x₊^{3/2}}` does
//! not. Also audits the schedule ODE and the piecewise weight `φ_N`.

use gkdv_core::diagnostics::{fit_tail, weighted_series};
use gkdv_core::weights::{piecewise_bound_constant, theta_jet, PiecewiseWeight, RateMode};
use gkdv_core::{DecaySchedule, Field, TailModel, TailWindow, Weight, WeightSpec};
use serde::Deserialize;

use super::{absorb_flags, evolve_with, output_times, record_weights, RunError};
use crate::config::ExperimentConfig;
use crate::report::{Report, Status, Verdict};

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub a0: f64,
    pub t_final: f64,
    pub snapshot_interval: f64,
    /// Weighted integrals run over `x ≤ (log_weight_cap/a₀)^{2/3}`, where
    /// the weight stays below `e^{log_weight_cap}`.
    pub log_weight_cap: f64,
    /// `φ_N` indices.
    pub n_values: Vec<u32>,
    pub bounded_ratio: f64,
    /// Number of times at which the schedule ODE is checked.
    pub ode_samples: usize,
    /// Step sizes for the one-sided difference jumps of `φ_N`.
    pub fd_steps: [f64; 2],
    /// Times at which `φ_N` is audited.
    pub weight_times: Vec<f64>,
    /// Right-tail fit window for the pre-run decay check.
    pub prefit_window: [f64; 2],
}

impl Default for Params {
    fn default() -> Self {
        Self {
            a0: 1.0,
            t_final: 2.0,
            snapshot_interval: 0.1,
            log_weight_cap: 40.0,
            n_values: vec![8, 16, 32],
            bounded_ratio: 10.0,
            ode_samples: 100,
            fd_steps: [1e-3, 1e-4],
            weight_times: vec![0.0, 0.5, 2.0],
            prefit_window: [2.0, 8.0],
        }
    }
}

const ODE_TOL: f64 = 1e-12;
/// Minimum observed order of the vanishing jumps.
const JUMP_ORDER: f64 = 0.8;
/// Jumps below this many ulps of the difference quotient count as zero.
const ROUNDOFF_ULPS: f64 = 64.0;

pub fn run(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let p: Params = cfg.params()?;
    let mut report = Report::default();
    let sched = DecaySchedule::forward(p.a0)?;

    schedule_ode(&mut report, &sched, &p);
    weight_smoothness(&mut report, &sched, &p)?;

    let u0 = cfg.initial_field()?;
    let zero = u0.max_abs() == 0.0;
    let prefit_ok = zero || prefit(&mut report, &u0, &p);

    let traj = evolve_with(cfg, &u0, output_times(p.t_final, p.snapshot_interval))?;
    absorb_flags(&mut report, &traj);
    record_weights(&mut report, cfg, &traj)?;

    let x_max = (p.log_weight_cap / p.a0).powf(2.0 / 3.0);
    let window = Some((f64::NEG_INFINITY, x_max));
    report.note(format!("weighted integrals over x ≤ {x_max:.4}"));
    let integral = |spec: WeightSpec| -> Result<Vec<(f64, f64, bool)>, RunError> {
        let w = Weight::from_spec(&spec)?;
        Ok(weighted_series(&traj, &w, window)?
            .into_iter()
            .map(|s| (s.t, s.norm.norm * s.norm.norm, s.norm.saturated))
            .collect())
    };
    let scheduled = integral(WeightSpec::frac_exp_plus(p.a0, RateMode::Scheduled))?;
    let frozen = integral(WeightSpec::frac_exp_plus(p.a0, RateMode::Frozen))?;
    if scheduled.iter().chain(&frozen).any(|s| s.2) {
        report.flag("saturated");
    }
    for (s, f) in scheduled.iter().zip(&frozen) {
        report.row(s.0, "W_scheduled", s.1);
        report.row(f.0, "W_frozen", f.1);
    }
    report.series("W_scheduled", "t", "W", scheduled.iter().map(|s| (s.0, s.1)).collect());
    report.series("W_frozen", "t", "W", frozen.iter().map(|s| (s.0, s.1)).collect());

    let reached = (traj.last().t() - p.t_final).abs() < 1e-9;
    if zero {
        let sup = scheduled.iter().map(|s| s.1).fold(0.0, f64::max);
        report.verdict(Verdict::at_most("AC6", "W(t) for zero data", sup, 0.0));
        report.note("zero datum: frozen growth is vacuous");
    } else {
        let w0 = scheduled[0].1;
        let f0 = frozen[0].1;
        let sched_ratio = scheduled.iter().map(|s| s.1 / w0).fold(0.0, f64::max);
        let frozen_ratio = frozen.iter().map(|s| s.1 / f0).fold(0.0, f64::max);
        let gate = |v: Verdict| {
            if !prefit_ok || !reached {
                v.with_status(Status::Inconclusive)
            } else {
                v
            }
        };
        report.verdict(gate(Verdict::at_most(
            "AC6",
            format!("sup W_scheduled / W(0) over [0, {}]", p.t_final),
            sched_ratio,
            p.bounded_ratio,
        )));
        report.verdict(gate(Verdict::new(
            "AC6",
            format!("sup W_frozen / W(0) over [0, {}]", p.t_final),
            Status::from_bool(frozen_ratio > p.bounded_ratio),
            frozen_ratio,
            format!("> {}", p.bounded_ratio),
        )));
    }

    // ∫φ_N u² against C(a₀)·W_scheduled, same window
    let c = piecewise_bound_constant(p.a0);
    let mut worst = 0.0f64;
    for &n in &p.n_values {
        let w = PiecewiseWeight::new(n, sched)?;
        let mut pts = Vec::new();
        for (u, s) in traj.snapshots.iter().zip(&scheduled) {
            let phi = phi_integral(u, &w, x_max)?;
            report.row(u.t(), format!("phi_N{n}"), phi);
            pts.push((u.t(), phi));
            if s.1 > 0.0 {
                worst = worst.max(phi / (c * s.1));
            }
        }
        report.series(&format!("phi_N{n}"), "t", "integral", pts);
    }
    report.verdict(Verdict::at_most(
        "SUPP-T1-PHI",
        "max over t, N of ∫φ_N u² / (C(a₀)·W_scheduled)",
        worst,
        1.0,
    ));
    Ok(report)
}

fn phi_integral(u: &Field, w: &PiecewiseWeight, x_max: f64) -> Result<f64, RunError> {
    let g = u.grid();
    let mut s = 0.0;
    for (i, &v) in u.values().iter().enumerate() {
        let x = g.x(i);
        if x <= x_max {
            s += w.value(x, u.t())? * v * v;
        }
    }
    Ok(s * g.dx())
}

/// The datum's right tail must decay at least like `e^{−a₀x^{3/2}/2}`.
fn prefit(report: &mut Report, u0: &Field, p: &Params) -> bool {
    let window = TailWindow::right(p.prefit_window[0], p.prefit_window[1]);
    match fit_tail(u0, TailModel::FracExp, window) {
        Ok(fit) => {
            report.row(0.0, "prefit_rate", fit.rate);
            let v = Verdict::new(
                "SUPP-T1-PREFIT",
                "right-tail rate of the datum",
                Status::from_bool(fit.rate >= 0.5 * p.a0),
                fit.rate,
                format!(">= {}", 0.5 * p.a0),
            );
            let ok = v.status == Status::Pass;
            report.verdict(v);
            ok
        }
        Err(e) => {
            report.verdict(Verdict::inconclusive("SUPP-T1-PREFIT", "right-tail rate of the datum", e));
            false
        }
    }
}

/// `a′(t)` from differentiating the closed form against `−(27/8)a(t)³`.
fn schedule_ode(report: &mut Report, sched: &DecaySchedule, p: &Params) {
    let a0 = sched.a0();
    let mut worst = 0.0f64;
    let mut worst_fd = 0.0f64;
    let n = p.ode_samples.max(2);
    for i in 0..n {
        let t = p.t_final * i as f64 / (n - 1) as f64;
        let analytic = -3.375 * a0.powi(3) * (1.0 + 6.75 * a0 * a0 * t).powf(-1.5);
        let a = sched.rate(t).expect("forward schedule, t ≥ 0");
        worst = worst.max((analytic + 3.375 * a * a * a).abs());
        let h = 1e-5;
        let fd = if t >= h {
            (sched.rate(t + h).unwrap() - sched.rate(t - h).unwrap()) / (2.0 * h)
        } else {
            (-3.0 * sched.rate(t).unwrap() + 4.0 * sched.rate(t + h).unwrap() - sched.rate(t + 2.0 * h).unwrap())
                / (2.0 * h)
        };
        worst_fd = worst_fd.max((fd - sched.rate_derivative(t).unwrap()).abs());
    }
    report.row(0.0, "schedule_ode_residual", worst);
    report.verdict(Verdict::at_most(
        "AC3",
        format!("max |a′ + (27/8)a³| at {n} times in [0, {}]", p.t_final),
        worst,
        ODE_TOL,
    ));
    report.verdict(Verdict::at_most(
        "SUPP-T1-ODE-FD",
        "max |difference quotient of a − a′|",
        worst_fd,
        1e-6,
    ));
}

/// Left and right difference quotients of `φ^{(j)}` at `b`, built from
/// `φ` values only.
fn one_sided(f: &dyn Fn(f64) -> f64, b: f64, h: f64, j: usize) -> (f64, f64) {
    match j {
        0 => (f(b - h), f(b + h)),
        1 => ((f(b) - f(b - h)) / h, (f(b + h) - f(b)) / h),
        _ => (
            (f(b) - 2.0 * f(b - h) + f(b - 2.0 * h)) / (h * h),
            (f(b + 2.0 * h) - 2.0 * f(b + h) + f(b)) / (h * h),
        ),
    }
}

fn weight_smoothness(report: &mut Report, sched: &DecaySchedule, p: &Params) -> Result<(), RunError> {
    let [h1, h2] = p.fd_steps;
    let mut worst_order = f64::INFINITY;
    let mut cases = 0usize;
    for &n in &p.n_values {
        let w = PiecewiseWeight::new(n, *sched)?;
        for &t in &p.weight_times {
            let f = |x: f64| w.value(x, t).expect("valid time");
            for b in [0.0, 1.0, n as f64] {
                for j in 0..3 {
                    let jump = |h: f64| {
                        let (l, r) = one_sided(&f, b, h, j);
                        ((r - l).abs(), ROUNDOFF_ULPS * f64::EPSILON * f(b) / h.powi(j as i32))
                    };
                    let (j1, _) = jump(h1);
                    let (j2, floor) = jump(h2);
                    let order = if j2 <= floor {
                        f64::INFINITY
                    } else {
                        (j1 / j2).ln() / (h1 / h2).ln()
                    };
                    cases += 1;
                    worst_order = worst_order.min(order);
                    if order.is_finite() {
                        report.row(t, format!("jump_order_N{n}_x{b}_d{j}"), order);
                    }
                }
            }
        }
    }
    report.verdict(Verdict::new(
        "AC4",
        format!("smallest order of the one-sided jumps of φ_N, φ′_N, φ″_N ({cases} cases, below-roundoff counted as vanished)"),
        Status::from_bool(worst_order >= JUMP_ORDER),
        worst_order,
        format!(">= {JUMP_ORDER}"),
    ));

    let min_theta2 = (0..=1000)
        .map(|i| theta_jet(i as f64 / 1000.0).expect("x in [0, 1]")[2])
        .fold(f64::INFINITY, f64::min);
    report.row(0.0, "theta_dxx_min", min_theta2);
    report.verdict(Verdict::new(
        "AC4",
        "min θ″ on [0, 1]",
        Status::from_bool(min_theta2 >= 0.0),
        min_theta2,
        ">= 0",
    ));

    // ∂ₓP₂ ≤ (1 + 3a(t)N^{1/2})P₂ ≤ (1 + 3a₀x^{1/2})φ_N on [N, 4N]
    let mut worst = 0.0f64;
    for &n in &p.n_values {
        let w = PiecewiseWeight::new(n, *sched)?;
        let nf = n as f64;
        for &t in &p.weight_times {
            let a = sched.rate(t)?;
            for i in 0..=600 {
                let x = nf + 3.0 * nf * i as f64 / 600.0;
                let jet = w.jet(x, t)?;
                let mid = (1.0 + 3.0 * a * nf.sqrt()) * jet.value;
                let outer = (1.0 + 3.0 * sched.a0() * x.sqrt()) * jet.value;
                worst = worst.max(jet.dx / mid).max(mid / outer);
            }
        }
    }
    report.row(0.0, "p2_slope_ratio_max", worst);
    report.verdict(Verdict::at_most(
        "AC4",
        "max of ∂ₓP₂/((1+3aN^{1/2})P₂) and (1+3aN^{1/2})/(1+3a₀x^{1/2}) on [N, 4N]",
        worst,
        1.0 + 1e-12,
    ));
    Ok(())
}
