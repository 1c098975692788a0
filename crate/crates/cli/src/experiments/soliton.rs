//! Soliton regression: exact travelling wave, conserved quantities and the
//! temporal convergence order.

use std::time::Instant;

use gkdv_core::diagnostics::conserved_audit;
use gkdv_core::{Field, SolitonSpec};
use rayon::prelude::*;
use serde::Deserialize;

use super::{absorb_flags, evolve_with, output_times, record_weights, wrong_kind, RunError};
use crate::config::{ExperimentConfig, InitialData};
use crate::report::{Report, Status, Verdict};

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub t_final: f64,
    pub snapshot_interval: f64,
    /// Conservation is audited over `[0, conservation_horizon]`.
    pub conservation_horizon: f64,
    /// Three step sizes, each half the previous, for the order estimate.
    pub convergence_dts: [f64; 3],
    pub runtime_limit_s: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            t_final: 20.0,
            snapshot_interval: 0.5,
            conservation_horizon: 10.0,
            convergence_dts: [4e-3, 2e-3, 1e-3],
            runtime_limit_s: 60.0,
        }
    }
}

const MAX_ERROR: f64 = 1e-5;
const L2_DRIFT: f64 = 1e-10;
const HAMILTONIAN_DRIFT: f64 = 1e-8;
const ORDER: f64 = 4.0;
const ORDER_TOL: f64 = 0.2;

pub fn run(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let p: Params = cfg.params()?;
    let InitialData::Soliton { k, c, x0 } = cfg.initial else {
        return Err(wrong_kind(cfg, "soliton"));
    };
    let spec = SolitonSpec::new(k, c, x0 + cfg.placement_shift())?;
    let u0 = cfg.initial_field()?;
    let mut report = Report::default();
    let times = output_times(p.t_final, p.snapshot_interval);

    let clock = Instant::now();
    let traj = evolve_with(cfg, &u0, times.clone())?;
    let runtime = clock.elapsed().as_secs_f64();
    absorb_flags(&mut report, &traj);
    record_weights(&mut report, cfg, &traj)?;

    let mut worst = 0.0f64;
    let mut errors = Vec::new();
    for u in &traj.snapshots {
        let exact = Field::sample(u.grid(), u.t(), |x| spec.eval(x, u.t()))?;
        let e = u.max_abs_diff(&exact)?;
        worst = worst.max(e);
        errors.push((u.t(), e));
        report.row(u.t(), "max_error", e);
    }
    report.series("soliton_error", "t", "max_abs_error", errors);
    report.verdict(Verdict::at_most(
        "AC1",
        format!("max |u − exact travelling wave| over [0, {}]", p.t_final),
        worst,
        MAX_ERROR,
    ));
    report.verdict(Verdict::at_most("AC1", "wall-clock seconds of the run", runtime, p.runtime_limit_s));
    report.note(format!("run took {runtime:.2} s, {} steps", traj.steps));

    let audit = conserved_audit(&traj);
    for inv in &audit.invariants {
        report.row(inv.t, "mass", inv.mass);
        report.row(inv.t, "l2_squared", inv.l2_squared);
        report.row(inv.t, "hamiltonian", inv.hamiltonian);
    }
    let within: Vec<_> = audit
        .invariants
        .iter()
        .filter(|i| i.t <= p.conservation_horizon + 1e-9)
        .collect();
    let rel = |f: fn(&gkdv_core::solver::Invariants) -> f64| {
        let r = f(within[0]);
        within.iter().map(|i| (f(i) - r).abs()).fold(0.0, f64::max) / r.abs().max(f64::MIN_POSITIVE)
    };
    let (l2, ham, mass) = (rel(|i| i.l2_squared), rel(|i| i.hamiltonian), rel(|i| i.mass));
    let sponge_on = cfg.solver.sponge.is_some();
    let conservation = |v: Verdict| {
        if sponge_on {
            Verdict::inconclusive(&v.clause_id, v.check, "sponge on")
        } else {
            v
        }
    };
    let horizon = p.conservation_horizon;
    report.verdict(conservation(Verdict::at_most(
        "AC2",
        format!("relative drift of ∫u² over [0, {horizon}]"),
        l2,
        L2_DRIFT,
    )));
    report.verdict(conservation(Verdict::at_most(
        "AC2",
        format!("relative drift of the Hamiltonian over [0, {horizon}]"),
        ham,
        HAMILTONIAN_DRIFT,
    )));
    report.verdict(conservation(Verdict::at_most(
        "SUPP-SR-MASS",
        format!("relative drift of ∫u over [0, {horizon}]"),
        mass,
        L2_DRIFT,
    )));

    // self-convergence from three runs ending at t_final
    let finals: Vec<Result<Field, RunError>> = p
        .convergence_dts
        .par_iter()
        .map(|&dt| {
            if Some(dt) == cfg.solver.dt {
                return Ok(traj.last().clone());
            }
            let mut solver = cfg.solver.build(&u0).with_snapshots(vec![p.t_final]);
            solver.dt = dt;
            Ok(gkdv_core::solver::evolve(&u0, &solver)?.last().clone())
        })
        .collect();
    let finals = finals.into_iter().collect::<Result<Vec<_>, _>>()?;
    let reached = finals.iter().all(|f| (f.t() - p.t_final).abs() < 1e-9);
    let d1 = finals[0].max_abs_diff(&finals[1])?;
    let d2 = finals[1].max_abs_diff(&finals[2])?;
    let order = (d1 / d2).log2();
    for (dt, f) in p.convergence_dts.iter().zip(&finals) {
        let exact = Field::sample(f.grid(), f.t(), |x| spec.eval(x, f.t()))?;
        report.row(*dt, "final_error_vs_dt", f.max_abs_diff(&exact)?);
    }
    report.row(p.t_final, "convergence_order", order);
    let v = Verdict::within("AC9", "temporal order from three step sizes", order, ORDER, ORDER_TOL);
    report.verdict(if reached { v } else { v.with_status(Status::Inconclusive) });
    Ok(report)
}
