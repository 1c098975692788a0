//! Exponential persistence `‖e^{βx}u(t)‖ ≤ e^{Kt}‖e^{βx}u₀‖` and the
//! smoothing inequality with the fitted `K̂`.

use gkdv_core::diagnostics::persistence_audit;
use gkdv_core::Error;
use serde::Deserialize;

use super::{absorb_flags, evolve_with, output_times, record_weights, RunError};
use crate::config::ExperimentConfig;
use crate::report::{Report, Status, Verdict};

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub beta: f64,
    pub t_final: f64,
    pub snapshot_interval: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            beta: 0.1,
            t_final: 2.0,
            snapshot_interval: 0.05,
        }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let p: Params = cfg.params()?;
    let u0 = cfg.initial_field()?;
    let mut report = Report::default();
    let traj = evolve_with(cfg, &u0, output_times(p.t_final, p.snapshot_interval))?;
    absorb_flags(&mut report, &traj);
    record_weights(&mut report, cfg, &traj)?;

    let smoothing = "∫ e^{−K̂t}‖e^{βx}∂ₓu‖² dt ≤ ‖e^{βx}u₀‖²/(4β)";
    let line = "max ‖e^{βx}u(t)‖ / (e^{K̂t}‖e^{βx}u₀‖)";
    let audit = match persistence_audit(&traj, p.beta) {
        Ok(a) => a,
        Err(Error::Saturated { log_norm }) => {
            report.flag("saturated");
            report.note(format!("weighted norm saturated (log norm {log_norm})"));
            report.verdict(Verdict::inconclusive("AC8", smoothing, "saturated"));
            report.verdict(Verdict::inconclusive("AC8", line, "saturated"));
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };
    for ((t, n), l) in audit.times.iter().zip(&audit.norms).zip(&audit.log_norms) {
        report.row(*t, "exp_weighted_norm", *n);
        report.row(*t, "exp_weighted_log_norm", *l);
    }
    report.row(p.t_final, "k_hat", audit.k_hat);
    report.row(p.t_final, "smoothing_integral", audit.smoothing_integral);
    report.row(p.t_final, "bound", audit.bound);
    report.row(p.t_final, "max_line_ratio", audit.max_line_ratio);
    report.series(
        "exp_weighted_log_norm",
        "t",
        "log_norm",
        audit.times.iter().copied().zip(audit.log_norms.iter().copied()).collect(),
    );
    report.note(format!(
        "K̂ = {:.6}, S = {:.6}, B = {:.6}",
        audit.k_hat, audit.smoothing_integral, audit.bound
    ));

    let reached = (traj.last().t() - p.t_final).abs() < 1e-9;
    let gate = |v: Verdict| {
        if !audit.resolvable || !reached {
            v.with_status(Status::Inconclusive)
        } else {
            v
        }
    };
    if !audit.resolvable {
        report.note("e^{βx}u₀ is not resolved at the right edge of the grid");
    }
    report.verdict(gate(Verdict::at_most(
        "AC8",
        smoothing,
        audit.smoothing_integral,
        audit.bound,
    )));
    report.verdict(gate(Verdict::at_most(
        "AC8",
        line,
        audit.max_line_ratio,
        1.0 + gkdv_core::diagnostics::LINE_TOLERANCE,
    )));
    Ok(report)
}
