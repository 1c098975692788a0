//! Time integration of `∂ₜu + ∂ₓ³u + uᵏ∂ₓu = 0` on a periodic grid.
//!
//! Integrating-factor RK4: the dispersive part is applied exactly as
//! `e^{iξ³dt}`, the nonlinear term `−∂ₓ(u^{k+1})/(k+1)` is evaluated on a
//! zero-padded grid large enough to make the product alias-free. An optional
//! sponge damps the solution near `±L` after every step.

use std::io::Write;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticRow;
use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid, SpectralField, BAND_LIMIT_TOLERANCE};

/// Solutions whose sup norm exceeds this multiple of the initial one are
/// declared blown up.
pub const BLOW_UP_FACTOR: f64 = 1e6;

/// Edge amplitude relative to the peak above which a sponge-free run is
/// flagged as contaminated by periodic wrap-around.
pub const CONTAMINATION_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sponge {
    pub width: f64,
    pub strength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub k: u32,
    pub dt: f64,
    #[serde(default = "yes")]
    pub dealias: bool,
    /// Drop the nonlinear term (linear Airy dynamics).
    #[serde(default = "yes")]
    pub nonlinear: bool,
    #[serde(default)]
    pub sponge: Option<Sponge>,
    /// Output times; the initial state is always the first snapshot.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Steps between conserved-quantity samples; 0 samples at snapshots only.
    #[serde(default)]
    pub conservation_check_interval: usize,
}

fn yes() -> bool {
    true
}

impl SolverConfig {
    pub fn new(k: u32, dt: f64) -> Self {
        Self {
            k,
            dt,
            dealias: true,
            nonlinear: true,
            sponge: None,
            snapshot_times: Vec::new(),
            conservation_check_interval: 0,
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn with_sponge(mut self, width: f64, strength: f64) -> Self {
        self.sponge = Some(Sponge { width, strength });
        self
    }

    pub fn linear(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    /// `0.1·dx / max(1, ‖u₀‖_∞)^k`.
    pub fn default_dt(u0: &Field, k: u32) -> f64 {
        0.1 * u0.grid().dx() / u0.max_abs().max(1.0).powi(k as i32)
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.k < 1 {
            return Err(invalid("k", "must be at least 1"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if let Some(s) = self.sponge {
            if !(s.width > 0.0 && s.width < grid.half_width() / 4.0) {
                return Err(invalid(
                    "sponge.width",
                    format!("must lie in (0, L/4) = (0, {}), got {}", grid.half_width() / 4.0, s.width),
                ));
            }
            if !(s.strength.is_finite() && s.strength >= 0.0) {
                return Err(invalid("sponge.strength", "must be nonnegative"));
            }
        }
        for w in self.snapshot_times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(invalid("snapshot_times", "must be strictly increasing"));
            }
        }
        if self.snapshot_times.iter().any(|t| !t.is_finite()) {
            return Err(invalid("snapshot_times", "must be finite"));
        }
        Ok(())
    }
}

/// Quintic smoothstep `s³(10 − 15s + 6s²)` clamped to `[0, 1]`; C² with
/// vanishing first and second derivatives at both ends.
fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

/// Damping rate `σ·S((|x| − (L − w))/w)` at every grid point.
pub fn sponge_profile(grid: &Grid, width: f64, strength: f64) -> Result<Vec<f64>> {
    if !(width > 0.0 && width < grid.half_width() / 4.0) {
        return Err(invalid("width", format!("must lie in (0, L/4), got {width}")));
    }
    let inner = grid.half_width() - width;
    Ok((0..grid.len())
        .map(|i| strength * smoothstep((grid.x(i).abs() - inner) / width))
        .collect())
}

/// Smallest `2^a 3^b ≥ m`.
fn smooth_size(m: usize) -> usize {
    let mut best = usize::MAX;
    let mut p3 = 1usize;
    while p3 < 2 * m.max(1) {
        let mut v = p3;
        while v < m {
            v *= 2;
        }
        best = best.min(v);
        p3 *= 3;
    }
    best
}

/// Evaluates `N(û) = −iξ·P[u^{k+1}/(k+1)]`.
struct Nonlinear {
    n: usize,
    m: usize,
    k: i32,
    deriv: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
}

impl Nonlinear {
    fn new(grid: &Grid, k: u32, dealias: bool) -> Self {
        let n = grid.len();
        let m = if dealias {
            smooth_size((n * (k as usize + 2)).div_ceil(2))
        } else {
            n
        };
        let mut planner = FftPlanner::new();
        let nyq = grid.nyquist();
        let deriv = (0..n)
            .map(|j| {
                if j == nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, -grid.wavenumber(j) / (k as f64 + 1.0))
                }
            })
            .collect();
        Self {
            n,
            m,
            k: k as i32 + 1,
            deriv,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
            buf: vec![Complex64::new(0.0, 0.0); m],
        }
    }

    /// Writes `N(û)` into `out` and returns `max |u|` on the quadrature grid.
    fn eval(&mut self, uhat: &[Complex64], out: &mut [Complex64]) -> f64 {
        let (n, m) = (self.n, self.m);
        let half = n / 2;
        let zero = Complex64::new(0.0, 0.0);
        self.buf.iter_mut().for_each(|c| *c = zero);
        self.buf[..half].copy_from_slice(&uhat[..half]);
        if m == n {
            self.buf[half] = uhat[half];
        }
        self.buf[m - half + 1..].copy_from_slice(&uhat[half + 1..]);
        self.inv.process(&mut self.buf);
        let mut peak = 0.0f64;
        let k = self.k;
        for c in self.buf.iter_mut() {
            let u = c.re;
            peak = peak.max(u.abs());
            *c = Complex64::new(u.powi(k), 0.0);
        }
        if !peak.is_finite() {
            peak = f64::INFINITY;
        }
        self.fwd.process(&mut self.buf);
        let scale = 1.0 / m as f64;
        out[..half].copy_from_slice(&self.buf[..half]);
        out[half] = zero;
        out[half + 1..].copy_from_slice(&self.buf[m - half + 1..]);
        for (o, d) in out.iter_mut().zip(&self.deriv) {
            *o *= d * scale;
        }
        peak
    }
}

/// Linear propagators over half and full steps.
struct Phases {
    half: Vec<Complex64>,
    full: Vec<Complex64>,
}

impl Phases {
    fn new(grid: &Grid, dt: f64) -> Self {
        let nyq = grid.nyquist();
        let phase = |j: usize, tau: f64| {
            let xi = grid.wavenumber(j);
            let c = Complex64::from_polar(1.0, xi * xi * xi * tau);
            if j == nyq {
                Complex64::new(c.re, 0.0)
            } else {
                c
            }
        };
        Self {
            half: (0..grid.len()).map(|j| phase(j, 0.5 * dt)).collect(),
            full: (0..grid.len()).map(|j| phase(j, dt)).collect(),
        }
    }
}

/// Stateful stepper for one run.
pub struct Solver {
    grid: Grid,
    cfg: SolverConfig,
    phases: Phases,
    nonlinear: Option<Nonlinear>,
    sponge_rate: Option<Vec<f64>>,
    damping: Option<Vec<f64>>,
    stages: [Vec<Complex64>; 5],
}

impl Solver {
    pub fn new(grid: &Grid, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate(grid)?;
        let sponge_rate = match cfg.sponge {
            Some(s) if s.strength > 0.0 => Some(sponge_profile(grid, s.width, s.strength)?),
            _ => None,
        };
        let damping = sponge_rate
            .as_ref()
            .map(|r| r.iter().map(|r| (-r * cfg.dt).exp()).collect());
        let zero = vec![Complex64::new(0.0, 0.0); grid.len()];
        Ok(Self {
            grid: grid.clone(),
            cfg: cfg.clone(),
            phases: Phases::new(grid, cfg.dt),
            nonlinear: cfg.nonlinear.then(|| Nonlinear::new(grid, cfg.k, cfg.dealias)),
            sponge_rate,
            damping,
            stages: [zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero],
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Size of the quadrature grid used for the nonlinear term.
    pub fn padded_len(&self) -> usize {
        self.nonlinear.as_ref().map_or(self.grid.len(), |n| n.m)
    }

    /// One step of length `dt`; returns `max |u|` seen at the step start.
    fn advance(&mut self, uhat: &mut [Complex64], dt: f64, partial: Option<&Phases>) -> f64 {
        let phases = partial.unwrap_or(&self.phases);
        let Some(nl) = self.nonlinear.as_mut() else {
            for (u, e) in uhat.iter_mut().zip(&phases.full) {
                *u *= e;
            }
            self.apply_sponge(uhat, dt, partial.is_some());
            return 0.0;
        };
        let (e, e2) = (&phases.half, &phases.full);
        let [a, b, c, d, tmp] = &mut self.stages;
        let h = 0.5 * dt;
        let peak = nl.eval(uhat, a);
        for j in 0..uhat.len() {
            tmp[j] = e[j] * (uhat[j] + h * a[j]);
        }
        nl.eval(tmp, b);
        for j in 0..uhat.len() {
            tmp[j] = e[j] * uhat[j] + h * b[j];
        }
        nl.eval(tmp, c);
        for j in 0..uhat.len() {
            tmp[j] = e2[j] * uhat[j] + dt * e[j] * c[j];
        }
        nl.eval(tmp, d);
        let sixth = dt / 6.0;
        for j in 0..uhat.len() {
            uhat[j] = e2[j] * uhat[j] + sixth * (e2[j] * a[j] + 2.0 * e[j] * (b[j] + c[j]) + d[j]);
        }
        self.apply_sponge(uhat, dt, partial.is_some());
        peak
    }

    fn apply_sponge(&mut self, uhat: &mut [Complex64], dt: f64, partial: bool) {
        let Some(rate) = self.sponge_rate.as_ref() else {
            return;
        };
        let tmp = &mut self.stages[4];
        tmp.copy_from_slice(uhat);
        self.grid.inverse_in_place(tmp);
        for (i, v) in tmp.iter_mut().enumerate() {
            let f = if partial {
                (-rate[i] * dt).exp()
            } else {
                self.damping.as_ref().map_or(1.0, |d| d[i])
            };
            *v = Complex64::new(v.re * f, 0.0);
        }
        self.grid.forward_in_place(tmp);
        uhat.copy_from_slice(tmp);
    }

    /// One full step of the configured length.
    pub fn step(&mut self, state: &SpectralField) -> Result<SpectralField> {
        self.check_grid(state.grid())?;
        let mut uhat = state.coeffs().to_vec();
        self.advance(&mut uhat, self.cfg.dt, None);
        let out = SpectralField::new(&self.grid, uhat, state.t() + self.cfg.dt)?;
        if !out.is_finite() {
            return Err(Error::BlowUp { t: out.t() });
        }
        Ok(out)
    }

    /// One step of arbitrary length `tau` (used to land on output times).
    pub fn partial_step(&mut self, state: &SpectralField, tau: f64) -> Result<SpectralField> {
        self.check_grid(state.grid())?;
        let phases = Phases::new(&self.grid, tau);
        let mut uhat = state.coeffs().to_vec();
        self.advance(&mut uhat, tau, Some(&phases));
        let out = SpectralField::new(&self.grid, uhat, state.t() + tau)?;
        if !out.is_finite() {
            return Err(Error::BlowUp { t: out.t() });
        }
        Ok(out)
    }

    fn check_grid(&self, g: &Grid) -> Result<()> {
        if *g != self.grid {
            Err(Error::GridMismatch)
        } else {
            Ok(())
        }
    }
}

/// One integrating-factor RK4 step (builds a throwaway [`Solver`]).
pub fn step(state: &SpectralField, cfg: &SolverConfig) -> Result<SpectralField> {
    Solver::new(state.grid(), cfg)?.step(state)
}

/// Conserved quantities at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    pub t: f64,
    /// `∫u`
    pub mass: f64,
    /// `∫u²`
    pub l2_squared: f64,
    /// `∫(½u_x² − u^{k+2}/((k+1)(k+2)))`
    pub hamiltonian: f64,
}

impl Invariants {
    pub fn of(u: &Field, k: u32) -> Self {
        let ux = u.derivative(1).field;
        let kk = k as i32;
        let denom = ((k + 1) * (k + 2)) as f64;
        let dx = u.grid().dx();
        let h = dx
            * u.values()
                .iter()
                .zip(ux.values())
                .map(|(v, d)| 0.5 * d * d - v.powi(kk + 2) / denom)
                .sum::<f64>();
        Self {
            t: u.t(),
            mass: u.integral(),
            l2_squared: dx * u.values().iter().map(|v| v * v).sum::<f64>(),
            hamiltonian: h,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFlags {
    /// Time at which the run was stopped for blowing up.
    pub blow_up: Option<f64>,
    /// Sponge off and the solution reached the domain edge.
    pub contaminated: bool,
    /// Some snapshot had non-negligible energy in the top third of its spectrum.
    pub under_resolved: bool,
}

impl TrajectoryFlags {
    pub fn labels(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.blow_up.is_some() {
            v.push("blow_up");
        }
        if self.contaminated {
            v.push("contaminated");
        }
        if self.under_resolved {
            v.push("under_resolved");
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub config: SolverConfig,
    /// Initial state first, then one field per reached output time.
    pub snapshots: Vec<Field>,
    pub invariants: Vec<Invariants>,
    pub rows: Vec<DiagnosticRow>,
    pub flags: TrajectoryFlags,
    pub steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(Field::t).collect()
    }

    pub fn initial(&self) -> &Field {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Field {
        self.snapshots.last().expect("trajectory holds the initial state")
    }

    /// Snapshot whose time is within `tol` of `t`.
    pub fn at(&self, t: f64, tol: f64) -> Option<&Field> {
        self.snapshots.iter().find(|f| (f.t() - t).abs() <= tol)
    }

    /// One CSV record per snapshot: `t,n,L,u_0,…,u_{n−1}`.
    pub fn write_snapshots_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        for f in &self.snapshots {
            write!(out, "{},{},{}", f.t(), f.len(), f.grid().half_width())?;
            for v in f.values() {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Edge amplitude relative to the peak, over the outer 2% on each side.
pub fn edge_ratio(u: &Field) -> f64 {
    let g = u.grid();
    let band = (g.len() / 100).max(2);
    let peak = u.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let v = u.values();
    let edge = v[..band]
        .iter()
        .chain(&v[v.len() - band..])
        .fold(0.0f64, |m, x| m.max(x.abs()));
    edge / peak
}

/// Evolves `u0` forward through `cfg.snapshot_times`.
pub fn evolve(u0: &Field, cfg: &SolverConfig) -> Result<Trajectory> {
    let grid = u0.grid().clone();
    let mut solver = Solver::new(&grid, cfg)?;
    let t0 = u0.t();
    if cfg.snapshot_times.iter().any(|&t| t < t0) {
        return Err(invalid("snapshot_times", format!("must not precede the initial time {t0}")));
    }
    let u0_peak = u0.max_abs();
    let limit = BLOW_UP_FACTOR * u0_peak;
    let mut flags = TrajectoryFlags::default();
    let mut snapshots = vec![u0.clone()];
    let mut invariants = vec![Invariants::of(u0, cfg.k)];
    let check_field = |f: &Field, flags: &mut TrajectoryFlags| {
        if cfg.sponge.is_none() && edge_ratio(f) > CONTAMINATION_THRESHOLD {
            flags.contaminated = true;
        }
        if f.spectral_tail_ratio() > BAND_LIMIT_TOLERANCE {
            flags.under_resolved = true;
        }
    };
    check_field(u0, &mut flags);

    let mut state = u0.to_spectral();
    let mut t = t0;
    let mut steps = 0usize;
    let dt = cfg.dt;
    'outer: for &target in cfg.snapshot_times.iter().filter(|&&s| s > t0) {
        // times inside a segment are anchored at its start to avoid drift
        let start = t;
        let full = ((target - start) / dt * (1.0 + 1e-12)).floor() as usize;
        for i in 1..=full {
            let mut uhat = state.coeffs().to_vec();
            let peak = solver.advance(&mut uhat, dt, None);
            steps += 1;
            t = start + i as f64 * dt;
            let finite = uhat.iter().all(|c| c.re.is_finite() && c.im.is_finite());
            if !finite || peak > limit {
                flags.blow_up = Some(t);
                break 'outer;
            }
            state = SpectralField::new(&grid, uhat, t)?;
            if cfg.conservation_check_interval > 0 && steps % cfg.conservation_check_interval == 0 {
                invariants.push(Invariants::of(&state.to_field(), cfg.k));
            }
        }
        let rest = target - t;
        let mut uhat = state.coeffs().to_vec();
        if rest > 1e-12 * dt.max(target.abs()) {
            let phases = Phases::new(&grid, rest);
            solver.advance(&mut uhat, rest, Some(&phases));
            steps += 1;
            if !uhat.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
                flags.blow_up = Some(target);
                break 'outer;
            }
        }
        t = target;
        state = SpectralField::new(&grid, uhat, target)?;
        let field = state.to_field();
        if field.max_abs() > limit {
            flags.blow_up = Some(target);
            break;
        }
        check_field(&field, &mut flags);
        invariants.push(Invariants::of(&field, cfg.k));
        snapshots.push(field);
    }
    Ok(Trajectory {
        config: cfg.clone(),
        snapshots,
        invariants,
        rows: Vec::new(),
        flags,
        steps,
    })
}

/// Evolves backward in time through `u(x, t) ↦ u(−x, −t)`: the mirrored
/// datum is run forward and the snapshots are mirrored back. Output times
/// in `cfg.snapshot_times` are elapsed durations; snapshots carry `t₀ − τ`.
pub fn evolve_backward(u0: &Field, cfg: &SolverConfig) -> Result<Trajectory> {
    let t0 = u0.t();
    let mirrored = u0.mirrored().with_time(0.0);
    let mut traj = evolve(&mirrored, cfg)?;
    traj.snapshots = traj
        .snapshots
        .iter()
        .map(|f| f.mirrored().with_time(t0 - f.t()))
        .collect();
    for inv in &mut traj.invariants {
        inv.t = t0 - inv.t;
    }
    if let Some(tb) = traj.flags.blow_up.as_mut() {
        *tb = t0 - *tb;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{linear_propagate, SolitonSpec};
    use crate::grid::make_grid;

    #[test]
    fn pad_sizes() {
        assert_eq!(smooth_size(3072), 3072);
        assert_eq!(smooth_size(3073), 3456);
        assert_eq!(smooth_size(1), 1);
        let g = make_grid(60.0, 2048).unwrap();
        let s = Solver::new(&g, &SolverConfig::new(1, 1e-3)).unwrap();
        assert_eq!(s.padded_len(), 3072);
        let s = Solver::new(&g, &SolverConfig::new(4, 1e-3)).unwrap();
        assert!(s.padded_len() >= 6144);
    }

    #[test]
    fn zero_stays_zero() {
        let g = make_grid(10.0, 64).unwrap();
        let u = Field::zeros(&g, 0.0).to_spectral();
        let v = step(&u, &SolverConfig::new(1, 0.01)).unwrap();
        assert!(v.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn tiny_data_follow_linear_group() {
        let g = make_grid(20.0, 256).unwrap();
        let u = Field::sample(&g, 0.0, |x| 1e-8 * (-x * x).exp()).unwrap();
        let dt = 0.01;
        let v = step(&u.to_spectral(), &SolverConfig::new(1, dt)).unwrap().to_field();
        let w = linear_propagate(&u, dt);
        assert!(v.max_abs_diff(&w).unwrap() <= 1e-18);
    }

    #[test]
    fn local_error_is_fifth_order() {
        // one step against two half steps; dt = 0.08 is still pre-asymptotic
        let g = make_grid(30.0, 512).unwrap();
        let s = SolitonSpec::new(1, 1.0, 0.0).unwrap();
        let u = Field::sample(&g, 0.0, |x| s.profile(x)).unwrap().to_spectral();
        let cfg = |dt| SolverConfig::new(1, dt);
        let richardson = |dt: f64| {
            let one = step(&u, &cfg(dt)).unwrap();
            let two = step(&step(&u, &cfg(dt / 2.0)).unwrap(), &cfg(dt / 2.0)).unwrap();
            one.to_field().max_abs_diff(&two.to_field()).unwrap()
        };
        let ratio = richardson(0.02) / richardson(0.01);
        assert!((ratio.log2() - 5.0).abs() < 0.5, "ratio {ratio}");
        // and the step is close to the exact travelling wave
        let exact = Field::sample(&g, 0.01, |x| s.eval(x, 0.01)).unwrap();
        assert!(step(&u, &cfg(0.01)).unwrap().to_field().max_abs_diff(&exact).unwrap() < 1e-7);
    }

    #[test]
    fn mass_and_norm_conserved() {
        let g = make_grid(40.0, 512).unwrap();
        let u = Field::sample(&g, 0.0, |x| 2.0 * (-x * x / 2.0).exp()).unwrap();
        let cfg = SolverConfig::new(1, 2e-3).with_snapshots(vec![1.0, 2.0]);
        let tr = evolve(&u, &cfg).unwrap();
        let i0 = tr.invariants[0];
        for inv in &tr.invariants[1..] {
            assert!((inv.mass / i0.mass - 1.0).abs() < 1e-12);
            assert!((inv.l2_squared / i0.l2_squared - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn snapshots_land_on_requested_times() {
        let g = make_grid(20.0, 128).unwrap();
        let u = Field::sample(&g, 0.0, |x| (-x * x).exp()).unwrap();
        let cfg = SolverConfig::new(2, 0.03).with_snapshots(vec![0.0, 0.1, 0.25, 1.0]);
        let tr = evolve(&u, &cfg).unwrap();
        assert_eq!(tr.times(), vec![0.0, 0.1, 0.25, 1.0]);
    }

    #[test]
    fn rejects_bad_configs() {
        let g = make_grid(20.0, 128).unwrap();
        assert!(SolverConfig::new(0, 0.1).validate(&g).is_err());
        assert!(SolverConfig::new(1, 0.0).validate(&g).is_err());
        assert!(SolverConfig::new(1, 0.1).with_sponge(5.0, 1.0).validate(&g).is_err());
        assert!(SolverConfig::new(1, 0.1).with_snapshots(vec![1.0, 1.0]).validate(&g).is_err());
    }

    #[test]
    fn sponge_profile_shape() {
        let g = make_grid(40.0, 512).unwrap();
        let p = sponge_profile(&g, 5.0, 2.0).unwrap();
        for (i, &r) in p.iter().enumerate() {
            let x = g.x(i);
            assert!((0.0..=2.0).contains(&r));
            if x.abs() <= 35.0 {
                assert_eq!(r, 0.0);
            }
        }
        assert_eq!(p[0], 2.0);
        let off = sponge_profile(&g, 5.0, 0.0).unwrap();
        assert!(off.iter().all(|&r| r == 0.0));
        assert!(sponge_profile(&g, 10.0, 1.0).is_err());
    }

    #[test]
    fn zero_strength_sponge_is_identity() {
        let g = make_grid(20.0, 128).unwrap();
        let u = Field::sample(&g, 0.0, |x| (-x * x).exp()).unwrap();
        let a = evolve(&u, &SolverConfig::new(1, 0.01).with_snapshots(vec![0.5])).unwrap();
        let b = evolve(&u, &SolverConfig::new(1, 0.01).with_sponge(2.0, 0.0).with_snapshots(vec![0.5])).unwrap();
        assert_eq!(a.last().values(), b.last().values());
    }

    #[test]
    fn sponge_absorbs_left_going_packet() {
        // ξ₀ = 2 packet, group velocity −12 ± 1.5 in the linear equation;
        // by t = 18 it has crossed both layers once and sits in the interior
        let l = 128.0;
        let g = make_grid(l, 1024).unwrap();
        let u = Field::sample(&g, 0.0, |x| (-(x / 8.0).powi(2)).exp() * (2.0 * x).cos()).unwrap();
        let times = vec![18.0];
        let free = SolverConfig::new(1, 0.05).linear().with_snapshots(times.clone());
        let damped = free.clone().with_sponge(l / 8.0, 5.0);
        let interior = |f: &Field| {
            f.values()
                .iter()
                .enumerate()
                .filter(|(i, _)| g.x(*i).abs() < l - l / 8.0)
                .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
        };
        let a = interior(evolve(&u, &free).unwrap().last());
        let b = interior(evolve(&u, &damped).unwrap().last());
        assert!(a / b >= 100.0, "reduction {}", a / b);
    }

    #[test]
    fn sponge_dissipates_l2() {
        let g = make_grid(32.0, 512).unwrap();
        let u = Field::sample(&g, 0.0, |x| if x.abs() < 2.0 { 1.0 } else { 0.0 } * 0.5).unwrap();
        let u = crate::analytic::mollify_shift(&u, 0.5).unwrap();
        let times: Vec<f64> = (1..=20).map(|i| i as f64 * 0.5).collect();
        let cfg = SolverConfig::new(1, 5e-3).with_sponge(4.0, 5.0).with_snapshots(times);
        let tr = evolve(&u, &cfg).unwrap();
        for w in tr.invariants.windows(2) {
            assert!(w[1].l2_squared <= w[0].l2_squared * (1.0 + 1e-12));
        }
        assert!(tr.invariants.last().unwrap().l2_squared < 0.99 * tr.invariants[0].l2_squared);
    }

    #[test]
    fn contamination_flag() {
        let g = make_grid(10.0, 256).unwrap();
        let u = Field::sample(&g, 0.0, |x| (-x * x / 8.0).exp()).unwrap();
        let tr = evolve(&u, &SolverConfig::new(1, 0.01).with_snapshots(vec![0.1])).unwrap();
        assert!(tr.flags.contaminated);
        // fast dispersive modes reach the edge quickly; a short run on a wider
        // box stays clean
        let g = make_grid(20.0, 512).unwrap();
        let u = Field::sample(&g, 0.0, |x| (-x * x).exp()).unwrap();
        let tr = evolve(&u, &SolverConfig::new(1, 0.001).with_snapshots(vec![0.01])).unwrap();
        assert!(!tr.flags.contaminated);
    }

    #[test]
    fn blow_up_is_reported() {
        // dt far beyond the stability limit
        let g = make_grid(20.0, 256).unwrap();
        let u = Field::sample(&g, 0.0, |x| 5.0 * (-x * x).exp()).unwrap();
        let tr = evolve(&u, &SolverConfig::new(4, 0.5).with_snapshots(vec![50.0])).unwrap();
        assert!(tr.flags.blow_up.is_some());
        assert_eq!(tr.snapshots.len(), 1);
        assert!(tr.snapshots.iter().all(|f| f.values().iter().all(|v| v.is_finite())));
    }

    #[test]
    fn forward_then_backward_returns() {
        let g = make_grid(30.0, 256).unwrap();
        let u = Field::sample(&g, 0.0, |x| 1.5 * (-x * x / 2.0).exp()).unwrap();
        let cfg = SolverConfig::new(1, 5e-3).with_snapshots(vec![1.0]);
        let fwd = evolve(&u, &cfg).unwrap();
        let back = evolve_backward(fwd.last(), &cfg).unwrap();
        let end = back.last();
        assert!(end.t().abs() < 1e-12);
        assert!(end.max_abs_diff(&u).unwrap() < 1e-7);
    }

    #[test]
    fn backward_run_mirrors_forward_run() {
        let g = make_grid(30.0, 256).unwrap();
        let u = Field::sample(&g, 0.0, |x| (-(x - 1.0).powi(2)).exp()).unwrap();
        let cfg = SolverConfig::new(1, 5e-3).with_snapshots(vec![0.5]);
        let b = evolve_backward(&u, &cfg).unwrap();
        let f = evolve(&u.mirrored(), &cfg).unwrap();
        assert_eq!(b.last().t(), -0.5);
        let expect = f.last().mirrored();
        assert_eq!(b.last().values(), expect.values());
    }

    #[test]
    fn default_dt_rule() {
        let g = make_grid(10.0, 128).unwrap();
        let u = Field::sample(&g, 0.0, |x| 3.0 * (-x * x).exp()).unwrap();
        let dt = SolverConfig::default_dt(&u, 2);
        assert!((dt - 0.1 * g.dx() / 9.0).abs() < 1e-15);
    }
}
