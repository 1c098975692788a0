//! A soliton plus a compact bump: after subtracting the tracked soliton the
//! residual carries a dispersive left tail with envelope `|x|^{−1/4}`.

use gkdv_core::weights::log_weighted_l2;
use gkdv_core::{Field, SolitonSpec, TailWindow, Weight, WeightSpec};
use serde::Deserialize;

use super::corollary1::envelope_fit;
use super::{absorb_flags, evolve_with, output_times, record_weights, wrong_kind, RunError};
use crate::config::{ExperimentConfig, InitialData};
use crate::report::{Report, Verdict};

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub t_final: f64,
    pub snapshot_interval: f64,
    pub envelope_window: [f64; 2],
    pub envelope_tolerance: f64,
    /// `ε` in the residual weight `⟨x⟩^{(1+ε)/2}`.
    pub epsilon: f64,
    /// Half-widths of the windows `[−X, X]` for the residual norm.
    pub residual_windows: Vec<f64>,
    /// A second local maximum above this fraction of the main peak makes
    /// the tracking ambiguous.
    pub secondary_peak_fraction: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            t_final: 5.0,
            snapshot_interval: 0.5,
            envelope_window: [2.0, 20.0],
            envelope_tolerance: 0.05,
            epsilon: 0.1,
            residual_windows: vec![32.0, 64.0, 96.0],
            secondary_peak_fraction: 0.5,
        }
    }
}

/// Parabolic refinement of the largest sample: `(x, height)`.
pub(crate) fn track_peak(u: &Field) -> (f64, f64) {
    let (i, _) = u.peak();
    let v = u.values();
    let n = v.len();
    let (ym, y0, yp) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
    let curv = ym - 2.0 * y0 + yp;
    if curv < 0.0 {
        let s = 0.5 * (ym - yp) / curv;
        (u.grid().x(i) + s * u.grid().dx(), y0 - 0.125 * (yp - ym).powi(2) / curv)
    } else {
        (u.grid().x(i), y0)
    }
}

/// Largest local maximum of `u` farther than `exclusion` from `x_peak`.
fn secondary_peak(u: &Field, x_peak: f64, exclusion: f64) -> f64 {
    let v = u.values();
    let g = u.grid();
    (1..v.len() - 1)
        .filter(|&i| v[i] >= v[i - 1] && v[i] > v[i + 1] && (g.x(i) - x_peak).abs() > exclusion)
        .map(|i| v[i])
        .fold(0.0, f64::max)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let p: Params = cfg.params()?;
    let InitialData::SolitonPlusBump { k, c, x0, bump_center, .. } = cfg.initial else {
        return Err(wrong_kind(cfg, "soliton_plus_bump"));
    };
    let shift = cfg.placement_shift();
    let origin = bump_center + shift;
    let start = x0 + shift;
    let u0 = cfg.initial_field()?;
    let mut report = Report::default();
    let traj = evolve_with(cfg, &u0, output_times(p.t_final, p.snapshot_interval))?;
    absorb_flags(&mut report, &traj);
    record_weights(&mut report, cfg, &traj)?;

    let mut track = Vec::new();
    for u in &traj.snapshots {
        let (xp, h) = track_peak(u);
        report.row(u.t(), "peak_x", xp);
        report.row(u.t(), "peak_height", h);
        track.push((u.t(), xp));
    }
    report.series("peak_track", "t", "x", track);

    let u = traj.last();
    let t = u.t();
    let (xp, height) = track_peak(u);
    let fitted = SolitonSpec::with_amplitude(k, height, xp)?;
    let width = 2.0 / (k as f64 * fitted.c.sqrt());
    let second = secondary_peak(u, xp, 6.0 * width);
    report.row(t, "secondary_peak", second);
    let ambiguous = second > p.secondary_peak_fraction * height;

    let soliton = Field::sample(u.grid(), t, |x| fitted.eval(x, 0.0))?;
    let residual = u.sub(&soliton)?;
    report.row(t, "fitted_speed", fitted.c);
    report.row(t, "mean_speed", if t > 0.0 { (xp - start) / t } else { f64::NAN });
    report.row(t, "initial_speed", c);
    report.row(t, "residual_max", residual.max_abs());
    report.note(format!(
        "tracked peak {height:.6} at x = {xp:.4}; fitted speed {:.6} against {c}",
        fitted.c
    ));

    let w = Weight::from_spec(&WeightSpec::poly_bracket(0.5 * (1.0 + p.epsilon)))?;
    for &x_w in &p.residual_windows {
        let n = log_weighted_l2(&residual, &w, t, Some((-x_w, x_w)))?;
        report.row(t, format!("residual_weighted_X{x_w}"), n.norm);
    }

    let scale = (3.0 * t).cbrt();
    let [lo, hi] = p.envelope_window;
    let window = TailWindow::left(lo * scale, hi * scale).about(origin);
    let what = format!("left envelope power of the residual at t = {t}");
    if ambiguous {
        report.verdict(Verdict::inconclusive("AC7", what, "peak tracking ambiguous"));
    } else {
        envelope_fit(&mut report, &residual, t, window, "AC7", "residual_left", p.envelope_tolerance);
    }
    Ok(report)
}
