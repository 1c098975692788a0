//! The named experiments. Each takes a validated config and returns a
//! [`Report`]; nothing here touches the file system.

use gkdv_core::diagnostics::weighted_series;
use gkdv_core::solver::Trajectory;
use gkdv_core::weights::weighted_integral;
use gkdv_core::{Field, SolverConfig, Weight};

use crate::config::{ConfigError, ExperimentConfig, ExperimentName};
use crate::report::Report;

mod airy_decay;
mod corollary1;
mod interpolation;
mod persistence;
mod perturbation;
mod regularity;
mod soliton;
mod theorem1;

/// `2/(3√3)`, the large-time limit of `a(t)·√t` for linear Airy tails.
pub const AIRY_RATE_LIMIT: f64 = 0.384_900_179_459_750_5;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] gkdv_core::Error),
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let report = match cfg.experiment {
        ExperimentName::SolitonRegression => soliton::run(cfg),
        ExperimentName::LinearAiryDecay => airy_decay::run(cfg),
        ExperimentName::Theorem1Decay => theorem1::run(cfg),
        ExperimentName::PersistenceKato => persistence::run(cfg),
        ExperimentName::Corollary1LeftTail => corollary1::run(cfg),
        ExperimentName::SolitonPerturbation => perturbation::run(cfg),
        ExperimentName::RegularityLink => regularity::run(cfg),
        ExperimentName::InterpolationProbe => interpolation::run(cfg),
    }?;
    Ok(report.finalize())
}

/// Parses the experiment's parameters without running anything.
pub fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    match cfg.experiment {
        ExperimentName::SolitonRegression => cfg.params::<soliton::Params>().map(drop),
        ExperimentName::LinearAiryDecay => cfg.params::<airy_decay::Params>().map(drop),
        ExperimentName::Theorem1Decay => cfg.params::<theorem1::Params>().map(drop),
        ExperimentName::PersistenceKato => cfg.params::<persistence::Params>().map(drop),
        ExperimentName::Corollary1LeftTail => cfg.params::<corollary1::Params>().map(drop),
        ExperimentName::SolitonPerturbation => cfg.params::<perturbation::Params>().map(drop),
        ExperimentName::RegularityLink => cfg.params::<regularity::Params>().map(drop),
        ExperimentName::InterpolationProbe => cfg.params::<interpolation::Params>().map(drop),
    }
}

/// `interval, 2·interval, …` up to and including `t_final`.
pub(crate) fn output_times(t_final: f64, interval: f64) -> Vec<f64> {
    let n = (t_final / interval - 1e-9).ceil().max(1.0) as usize;
    (1..=n).map(|i| (i as f64 * interval).min(t_final)).collect()
}

pub(crate) fn evolve_with(cfg: &ExperimentConfig, u0: &Field, times: Vec<f64>) -> Result<Trajectory, RunError> {
    let solver: SolverConfig = cfg.solver.build(u0).with_snapshots(times);
    Ok(gkdv_core::solver::evolve(u0, &solver)?)
}

/// Records the trajectory's flags on the report.
pub(crate) fn absorb_flags(report: &mut Report, traj: &Trajectory) {
    for f in traj.flags.labels() {
        report.flag(f);
    }
    if let Some(t) = traj.flags.blow_up {
        report.note(format!("run stopped at t = {t}: blow-up"));
    }
}

/// Norms (or, for signed weights, integrals) of every snapshot under the
/// config's extra weights, as rows `weight<i>`.
pub(crate) fn record_weights(report: &mut Report, cfg: &ExperimentConfig, traj: &Trajectory) -> Result<(), RunError> {
    for (i, spec) in cfg.weights.iter().enumerate() {
        let w = Weight::from_spec(spec)?;
        let name = format!("weight{i}");
        if w.is_signed() {
            for u in &traj.snapshots {
                report.row(u.t(), &name, weighted_integral(u, &w, u.t())?);
            }
            continue;
        }
        for p in weighted_series(traj, &w, None)? {
            if p.norm.saturated {
                report.flag("saturated");
                report.row_flagged(p.t, &name, p.norm.log_norm, &["saturated", "log"]);
            } else {
                report.row(p.t, &name, p.norm.norm);
            }
        }
    }
    Ok(())
}

pub(crate) fn wrong_kind(cfg: &ExperimentConfig, expected: &str) -> RunError {
    ConfigError::invalid("initial.kind", format!("{} needs {expected} initial data", cfg.experiment)).into()
}
