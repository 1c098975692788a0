//! Ratio of the two sides of the weighted interpolation inequality
//! `‖J^{θa}(⟨x⟩^{(1−θ)b}f)‖ ≲ ‖⟨x⟩^b f‖^{1−θ}‖J^a f‖^θ` on test families.

use gkdv_core::diagnostics::{interpolation_check, InterpolationCheck};
use gkdv_core::solver::CONTAMINATION_THRESHOLD;
use gkdv_core::{Field, Grid, SolitonSpec};
use serde::Deserialize;

use super::RunError;
use crate::config::ExperimentConfig;
use crate::report::{Report, Status, Verdict};

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Dilations `λ` of `e^{−(x/λ)²}`.
    pub lambdas: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    pub max_spread: f64,
    /// Soliton regression case `(a, b, θ)` and its pinned ratio.
    pub soliton_case: [f64; 3],
    pub soliton_ratio: f64,
    pub soliton_tolerance: f64,
    /// Small `θ` for the endpoint check.
    pub theta_small: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            lambdas: vec![0.5, 1.0, 2.0, 4.0],
            a: 1.0,
            b: 1.0,
            theta: 0.5,
            max_spread: 3.0,
            soliton_case: [2.0, 1.0, 0.25],
            soliton_ratio: 0.947_357_6,
            soliton_tolerance: 1e-6,
            theta_small: 1e-6,
        }
    }
}

fn checked(report: &mut Report, f: &Field, a: f64, b: f64, theta: f64) -> Result<InterpolationCheck, RunError> {
    let c = interpolation_check(f, a, b, theta)?;
    if c.edge_ratio > CONTAMINATION_THRESHOLD {
        report.flag("contaminated");
    }
    Ok(c)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let p: Params = cfg.params()?;
    let grid: Grid = cfg.grid();
    let mut report = Report::default();

    let mut ratios = Vec::new();
    for &lam in &p.lambdas {
        let f = Field::sample(&grid, 0.0, |x| (-(x / lam).powi(2)).exp())?;
        let c = checked(&mut report, &f, p.a, p.b, p.theta)?;
        report.row(lam, "gaussian_lhs", c.lhs);
        report.row(lam, "gaussian_rhs", c.rhs_product);
        report.row(lam, "gaussian_ratio", c.ratio);
        ratios.push((lam, c.ratio));
    }
    report.series("gaussian_ratio", "lambda", "ratio", ratios.clone());
    let max = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    report.verdict(Verdict::at_most(
        "AC10",
        format!("max/min of the ratio over λ ∈ {:?}", p.lambdas),
        max / min,
        p.max_spread,
    ));

    let soliton = SolitonSpec::new(1, 1.0, 0.0)?;
    let f = Field::sample(&grid, 0.0, |x| soliton.profile(x))?;
    let [a, b, theta] = p.soliton_case;
    let c = checked(&mut report, &f, a, b, theta)?;
    report.row(0.0, "soliton_ratio", c.ratio);
    report.verdict(Verdict::within(
        "SUPP-IP-SOLITON",
        format!("soliton ratio at a = {a}, b = {b}, θ = {theta} (regression pin)"),
        c.ratio,
        p.soliton_ratio,
        p.soliton_tolerance,
    ));

    let g = Field::sample(&grid, 0.0, |x| (-x * x).exp())?;
    let c = checked(&mut report, &g, p.a, p.b, p.theta_small)?;
    report.row(p.theta_small, "endpoint_ratio", c.ratio);
    report.verdict(Verdict::new(
        "SUPP-IP-ENDPOINT",
        format!("ratio at θ = {} tends to 1", p.theta_small),
        Status::from_bool((c.ratio - 1.0).abs() <= 1e-3),
        c.ratio,
        "1 ± 1e-3",
    ));
    Ok(report)
}
