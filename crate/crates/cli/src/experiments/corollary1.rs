//! Compact rough data: the left tail becomes an oscillation with envelope
//! `|x|^{−1/4}`, the right tail decays fractionally-exponentially, and
//! running backward swaps the two sides.

use gkdv_core::diagnostics::{airy_tail_window, fit_tail};
use gkdv_core::solver::evolve_backward;
use gkdv_core::{Field, TailModel, TailWindow};
use serde::Deserialize;

use super::{absorb_flags, evolve_with, record_weights, RunError, AIRY_RATE_LIMIT};
use crate::config::{ExperimentConfig, InitialData};
use crate::report::{Report, Status, Verdict};

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub times: Vec<f64>,
    /// Envelope window in units of `(3t)^{1/3}` from the datum's centre.
    pub envelope_window: [f64; 2],
    pub envelope_tolerance: f64,
    /// Relative tolerance of the right-tail rate against `2/(3√3)/√t`.
    pub right_tolerance: f64,
    /// Upper end of the right-tail fit window.
    pub right_cap: f64,
    /// `X` values for `∫_{−X}^{0}|x|^{1/2}u² dx`.
    pub growth_windows: Vec<f64>,
    /// Outside `[a − margin, b + margin]` the datum must vanish to
    /// `support_tolerance·amp`.
    pub support_margin: f64,
    pub support_tolerance: f64,
    pub backward: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            times: vec![0.5, 1.0],
            envelope_window: [2.0, 20.0],
            envelope_tolerance: 0.04,
            right_tolerance: 0.25,
            right_cap: 40.0,
            growth_windows: vec![16.0, 32.0, 64.0, 96.0],
            support_margin: 1.0,
            support_tolerance: 1e-15,
            backward: true,
        }
    }
}

const ENVELOPE_POWER: f64 = 0.25;
/// The right-tail fit stops where `|u|` falls to this multiple of the
/// far-field floor.
const FLOOR_FACTOR: f64 = 10.0;

/// Largest `|u|` on `[lo, hi]`: the level of wrapped fast radiation.
fn far_field_floor(u: &Field, lo: f64, hi: f64) -> f64 {
    let g = u.grid();
    u.values()
        .iter()
        .enumerate()
        .filter(|(i, _)| (lo..=hi).contains(&g.x(*i)))
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
}

/// Shortens a right window to end before `|u|` first drops below `level`.
fn above_floor(u: &Field, w: TailWindow, level: f64) -> Option<TailWindow> {
    let g = u.grid();
    let start = g.nearest_index(w.origin + w.y_lo);
    let end = (start..u.len())
        .take_while(|&i| g.x(i) - w.origin <= w.y_hi)
        .find(|&i| u.values()[i].abs() < level)
        .map_or(w.y_hi, |i| g.x(i) - w.origin);
    (end > w.y_lo).then_some(TailWindow { y_hi: end, ..w })
}

pub(crate) fn envelope_fit(
    report: &mut Report,
    u: &Field,
    t: f64,
    window: TailWindow,
    clause: &str,
    label: &str,
    tol: f64,
) -> Option<f64> {
    let what = format!("{label} envelope power at t = {t}");
    match fit_tail(u, TailModel::Power, window) {
        Ok(fit) => {
            report.row(t, format!("{label}_envelope_p"), fit.rate);
            report.row(t, format!("{label}_envelope_rms"), fit.residual_rms);
            report.row(t, format!("{label}_envelope_peaks"), fit.samples as f64);
            report.verdict(Verdict::within(clause, what, fit.rate, ENVELOPE_POWER, tol));
            Some(fit.rate)
        }
        Err(e) => {
            report.verdict(Verdict::inconclusive(clause, what, e));
            None
        }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let p: Params = cfg.params()?;
    let InitialData::SmoothedBox { edges, amp, .. } = cfg.initial else {
        return Err(super::wrong_kind(cfg, "smoothed_box"));
    };
    let shift = cfg.placement_shift();
    let (a, b) = (edges[0] + shift, edges[1] + shift);
    let origin = 0.5 * (a + b);
    let u0 = cfg.initial_field()?;
    let mut report = Report::default();

    let g = u0.grid();
    let outside = u0
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let x = g.x(*i);
            x < a - p.support_margin || x > b + p.support_margin
        })
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    report.row(0.0, "outside_support_max", outside);
    report.verdict(Verdict::at_most(
        "SUPP-C1-SUPPORT",
        format!("max |u₀| farther than {} from the box", p.support_margin),
        outside,
        p.support_tolerance * amp.abs(),
    ));

    let traj = evolve_with(cfg, &u0, p.times.clone())?;
    absorb_flags(&mut report, &traj);
    record_weights(&mut report, cfg, &traj)?;

    for &t in &p.times {
        let Some(u) = traj.at(t, 1e-9) else {
            report.verdict(Verdict::inconclusive("AC7", format!("left envelope power at t = {t}"), "time not reached"));
            continue;
        };
        let scale = (3.0 * t).cbrt();
        let [lo, hi] = p.envelope_window;
        let left = TailWindow::left(lo * scale, hi * scale).about(origin);
        envelope_fit(&mut report, u, t, left, "AC7", "left", p.envelope_tolerance);

        let expected = AIRY_RATE_LIMIT / t.sqrt();
        let what = format!("right-tail rate at t = {t} against 2/(3√3)/√t");
        let edge = cfg.grid.half_width_L - cfg.solver.sponge.as_ref().map_or(0.0, |s| s.width_x);
        let floor = far_field_floor(u, origin + p.right_cap, edge);
        report.row(t, "right_noise_floor", floor);
        let window = airy_tail_window(u, t, origin, p.right_cap).and_then(|w| above_floor(u, w, FLOOR_FACTOR * floor));
        match window.map(|w| fit_tail(u, TailModel::FracExp, w)) {
            Some(Ok(fit)) => {
                report.row(t, "right_rate", fit.rate);
                report.row(t, "right_rate_rms", fit.residual_rms);
                report.verdict(Verdict::within(
                    "SUPP-C1-RIGHT",
                    what,
                    fit.rate,
                    expected,
                    p.right_tolerance * expected,
                ));
            }
            Some(Err(e)) => report.verdict(Verdict::inconclusive("SUPP-C1-RIGHT", what, e)),
            None => report.verdict(Verdict::inconclusive("SUPP-C1-RIGHT", what, "no tail window")),
        }

        let growth: Vec<f64> = p
            .growth_windows
            .iter()
            .map(|&x_w| {
                u.integrate(|x, v| {
                    let y = origin - x;
                    if y > 0.0 && y < x_w {
                        y.sqrt() * v * v
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        for (x_w, v) in p.growth_windows.iter().zip(&growth) {
            report.row(t, format!("left_weighted_X{x_w}"), *v);
        }
        let increasing = growth.windows(2).all(|w| w[1] > w[0]);
        let last_step = match growth.as_slice() {
            [.., x, y] => y / x,
            _ => f64::NAN,
        };
        report.verdict(Verdict::new(
            "SUPP-C1-GROWTH",
            format!("∫|x|^{{1/2}}u² over the left windows increases at t = {t} (last ratio shown)"),
            Status::from_bool(increasing),
            last_step,
            "strictly increasing",
        ));
    }

    if p.backward {
        let solver = cfg.solver.build(&u0).with_snapshots(p.times.clone());
        let back = evolve_backward(&u0, &solver)?;
        for f in back.flags.labels() {
            report.flag(f);
        }
        for &t in &p.times {
            let Some(u) = back.at(-t, 1e-9) else {
                continue;
            };
            let scale = (3.0 * t).cbrt();
            let [lo, hi] = p.envelope_window;
            let right = TailWindow::right(lo * scale, hi * scale).about(origin);
            envelope_fit(&mut report, u, -t, right, "SUPP-C1-BACKWARD", "backward_right", p.envelope_tolerance);
        }
    }
    Ok(report)
}
