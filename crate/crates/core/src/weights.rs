//! Weight functions: the decay schedule `a(t)`, the piecewise weight `φ_N`
//! with its bridges `θ` and `P₂`, truncated polynomial weights with odd and
//! even extensions, exponential and polynomial weights, the Airy envelope,
//! and overflow-safe weighted L² integration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::quad::GaussLegendre;

/// Samples with `|u|` below this contribute nothing to weighted integrals.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Largest log-norm that still converts to a finite `f64`.
const LOG_MAX: f64 = 709.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Forward,
    /// Evaluates the schedule at `|t|`.
    Backward,
}

/// `a(t) = a₀ / (1 + 27a₀²t/4)^{1/2}`, the solution of `a' + (27/8)a³ = 0`
/// with `a(0) = a₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecaySchedule {
    a0: f64,
    direction: Direction,
}

impl DecaySchedule {
    pub fn new(a0: f64, direction: Direction) -> Result<Self> {
        if !(a0.is_finite() && a0 > 0.0) {
            return Err(crate::error::invalid("a0", format!("must be positive, got {a0}")));
        }
        Ok(Self { a0, direction })
    }

    pub fn forward(a0: f64) -> Result<Self> {
        Self::new(a0, Direction::Forward)
    }

    pub fn backward(a0: f64) -> Result<Self> {
        Self::new(a0, Direction::Backward)
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    fn elapsed(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::OutOfDomain {
                name: "t",
                value: t,
                domain: "finite times",
            });
        }
        match self.direction {
            Direction::Forward if t < 0.0 => Err(Error::OutOfDomain {
                name: "t",
                value: t,
                domain: "[0, ∞) for a forward schedule",
            }),
            Direction::Forward => Ok(t),
            Direction::Backward => Ok(t.abs()),
        }
    }

    pub fn rate(&self, t: f64) -> Result<f64> {
        let s = self.elapsed(t)?;
        Ok(self.a0 / (1.0 + 6.75 * self.a0 * self.a0 * s).sqrt())
    }

    /// `d/dt a(t)`; for a backward schedule this is the derivative of
    /// `a(|t|)`, taken from the right at `t = 0`.
    pub fn rate_derivative(&self, t: f64) -> Result<f64> {
        let a = self.rate(t)?;
        let sign = if t < 0.0 { -1.0 } else { 1.0 };
        Ok(-sign * 3.375 * a * a * a)
    }
}

pub fn decay_rate_a(sched: &DecaySchedule, t: f64) -> Result<f64> {
    sched.rate(t)
}

/// Value and first three derivatives of a function at a point.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub dx: f64,
    pub dxx: f64,
    pub dxxx: f64,
    /// Time derivative; zero for time-independent weights.
    pub dt: f64,
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            name: "x",
            value: x,
            domain: "[0, 1]",
        })
    }
}

/// `θ(x) = 1/4 + 15/8 x³ − 12/8 x⁴ + 3/8 x⁵`.
pub fn theta(x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(theta_unchecked(x)[0])
}

/// `[θ, θ′, θ″, θ‴]` at `x ∈ [0, 1]`.
pub fn theta_jet(x: f64) -> Result<[f64; 4]> {
    check_unit(x)?;
    Ok(theta_unchecked(x))
}

fn theta_unchecked(x: f64) -> [f64; 4] {
    let x2 = x * x;
    let x3 = x2 * x;
    [
        0.25 + x3 * (1.875 + x * (-1.5 + 0.375 * x)),
        x2 * (5.625 + x * (-6.0 + 1.875 * x)),
        x * (11.25 + x * (-18.0 + 7.5 * x)),
        11.25 + x * (-36.0 + 22.5 * x),
    ]
}

/// Quadratic continuation of `e^{a x^{3/2}}` beyond `x = N`, matching value,
/// slope and curvature at `N`.
pub fn p2(x: f64, t: f64, n: u32, sched: &DecaySchedule) -> Result<f64> {
    Ok(PiecewiseWeight::new(n, *sched)?.p2_jet(x, t)?.value)
}

pub fn p2_dx(x: f64, t: f64, n: u32, sched: &DecaySchedule) -> Result<f64> {
    Ok(PiecewiseWeight::new(n, *sched)?.p2_jet(x, t)?.dx)
}

/// The four-branch weight: `e^{a/4}` for `x ≤ 0`, `e^{aθ(x)}` on `[0, 1]`,
/// `e^{a x^{3/2}}` on `[1, N]` and `P₂` beyond `N`, with `a = a(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiecewiseWeight {
    n: u32,
    sched: DecaySchedule,
}

impl PiecewiseWeight {
    pub fn new(n: u32, sched: DecaySchedule) -> Result<Self> {
        if n < 1 {
            return Err(crate::error::invalid("N", "must be a positive integer"));
        }
        Ok(Self { n, sched })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn schedule(&self) -> &DecaySchedule {
        &self.sched
    }

    fn p2_coeffs(&self, a: f64) -> (f64, f64, f64) {
        let n = self.n as f64;
        let s = 1.5 * a * n.sqrt();
        let q = s * s + 0.75 * a / n.sqrt();
        (a * n.powf(1.5), s, q)
    }

    fn p2_jet(&self, x: f64, t: f64) -> Result<Jet> {
        let n = self.n as f64;
        if x < n {
            return Err(Error::OutOfDomain {
                name: "x",
                value: x,
                domain: "[N, ∞)",
            });
        }
        let a = self.sched.rate(t)?;
        let da = self.sched.rate_derivative(t)?;
        let (log_e, s, q) = self.p2_coeffs(a);
        let e = log_e.exp();
        let d = x - n;
        let poly = 1.0 + s * d + 0.5 * q * d * d;
        let ds = 1.5 * n.sqrt();
        let dq = 2.0 * s * ds + 0.75 / n.sqrt();
        let dp_da = n.powf(1.5) * e * poly + e * (ds * d + 0.5 * dq * d * d);
        Ok(Jet {
            value: e * poly,
            dx: e * (s + q * d),
            dxx: e * q,
            dxxx: 0.0,
            dt: da * dp_da,
        })
    }

    /// `log φ_N(x, t)`, finite for any `N` without overflow.
    pub fn log_value(&self, x: f64, t: f64) -> Result<f64> {
        let a = self.sched.rate(t)?;
        Ok(self.log_value_with_rate(x, a))
    }

    fn log_value_with_rate(&self, x: f64, a: f64) -> f64 {
        let n = self.n as f64;
        if x <= 0.0 {
            0.25 * a
        } else if x <= 1.0 {
            a * theta_unchecked(x)[0]
        } else if x <= n {
            a * x.powf(1.5)
        } else {
            let (log_e, s, q) = self.p2_coeffs(a);
            let d = x - n;
            log_e + (1.0 + s * d + 0.5 * q * d * d).ln()
        }
    }

    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.log_value(x, t)?.exp())
    }

    /// Value, x-derivatives up to third order and time derivative. `φ‴`
    /// jumps at `x = 0, 1, N`; there the mean of the one-sided limits is
    /// returned, which is what quadrature across the jump needs.
    pub fn jet(&self, x: f64, t: f64) -> Result<Jet> {
        let n = self.n as f64;
        let right = self.one_sided_jet(x, t, false)?;
        if x == 0.0 || x == 1.0 || x == n {
            let left = self.one_sided_jet(x, t, true)?;
            return Ok(Jet {
                dxxx: 0.5 * (left.dxxx + right.dxxx),
                ..right
            });
        }
        Ok(right)
    }

    fn one_sided_jet(&self, x: f64, t: f64, from_left: bool) -> Result<Jet> {
        let n = self.n as f64;
        let past = |b: f64| if from_left { x > b } else { x >= b };
        if past(n) {
            return self.p2_jet(x, t);
        }
        let a = self.sched.rate(t)?;
        let da = self.sched.rate_derivative(t)?;
        // φ = e^{g} with g = a·h(x)
        let (h, h1, h2, h3) = if !past(0.0) {
            (0.25, 0.0, 0.0, 0.0)
        } else if !past(1.0) {
            let j = theta_unchecked(x);
            (j[0], j[1], j[2], j[3])
        } else {
            let r = x.sqrt();
            (x * r, 1.5 * r, 0.75 / r, -0.375 / (x * r))
        };
        let phi = (a * h).exp();
        let (g1, g2, g3) = (a * h1, a * h2, a * h3);
        Ok(Jet {
            value: phi,
            dx: g1 * phi,
            dxx: (g2 + g1 * g1) * phi,
            dxxx: (g3 + 3.0 * g1 * g2 + g1 * g1 * g1) * phi,
            dt: da * h * phi,
        })
    }
}

pub fn phi_piecewise(x: f64, t: f64, n: u32, sched: &DecaySchedule) -> Result<f64> {
    PiecewiseWeight::new(n, *sched)?.value(x, t)
}

/// The constant `C(a₀)` in `φ_N(x, t) ≤ C(a₀)·e^{a(t)x^{3/2}}`, `x ≥ 0`.
pub fn piecewise_bound_constant(a0: f64) -> f64 {
    (0.25 * a0).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
}

/// `(1+x⁴)^{α/2} − 1` on `[0, N]`, the constant `(2N)^{2α}` from `N + ℓ ≤ 10N`
/// on, joined by `φ′ = f′·(1 − S(s)) + A·s³(1−s)³`, `s = (x−N)/ℓ`, with `S` the
/// quintic smoothstep, and extended to `x < 0` with the requested parity.
/// `ℓ` is the shortest length reaching the plateau with `A = 0`; when even
/// `ℓ = 9N` falls short, `A > 0` supplies the deficit.
#[derive(Clone, Debug)]
pub struct TruncatedWeight {
    n: u32,
    alpha: f64,
    parity: Parity,
    ell: f64,
    /// Amplitude of the `s³(1−s)³` lift, nonzero only when the cutoff alone
    /// cannot reach the plateau within `9N`.
    lift: f64,
    f_n: f64,
    top: f64,
    rule: GaussLegendreShared,
}

#[derive(Clone, Debug)]
struct GaussLegendreShared(std::sync::Arc<GaussLegendre>);

impl PartialEq for TruncatedWeight {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.alpha == other.alpha && self.parity == other.parity
    }
}

const BRIDGE_PANELS: usize = 4;

fn smoothstep5(s: f64) -> [f64; 3] {
    let s = s.clamp(0.0, 1.0);
    let one = 1.0 - s;
    [
        s * s * s * (10.0 + s * (-15.0 + 6.0 * s)),
        30.0 * s * s * one * one,
        60.0 * s * one * (1.0 - 2.0 * s),
    ]
}

/// `[B, B′, B″, ∫₀ˢB]` for `B(s) = s³(1−s)³`, `∫₀¹B = 1/140`.
fn lift_bump(s: f64) -> [f64; 4] {
    let s = s.clamp(0.0, 1.0);
    let one = 1.0 - s;
    let s2 = s * s;
    [
        s2 * s * one * one * one,
        3.0 * s2 * one * one * (1.0 - 2.0 * s),
        6.0 * s * one * (1.0 - 5.0 * s + 5.0 * s2),
        s2 * s2 * (0.25 + s * (-0.6 + s * (0.5 - s / 7.0))),
    ]
}

/// `[f, f′, f″, f‴]` for `f(x) = (1+x⁴)^{α/2} − 1`, `x ≥ 0`.
fn inner_jet(x: f64, alpha: f64) -> [f64; 4] {
    let x2 = x * x;
    let x4 = x2 * x2;
    let q = 1.0 + x4;
    let h = 0.5 * alpha;
    let b = 2.0 * alpha - 1.0;
    let value = q.powf(h) - 1.0;
    let d1 = 2.0 * alpha * x * x2 * q.powf(h - 1.0);
    let d2 = 2.0 * alpha * x2 * q.powf(h - 2.0) * (3.0 + b * x4);
    let x5 = x4 * x;
    let d3 = 2.0
        * alpha
        * q.powf(h - 3.0)
        * ((6.0 * x + 6.0 * b * x5) * q + (2.0 * alpha - 8.0) * x5 * (3.0 + b * x4));
    [value, d1, d2, d3]
}

impl TruncatedWeight {
    pub fn new(n: u32, alpha: f64, parity: Parity) -> Result<Self> {
        if n < 1 {
            return Err(crate::error::invalid("N", "must be a positive integer"));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(crate::error::invalid("alpha", format!("must be positive, got {alpha}")));
        }
        let nf = n as f64;
        let f_n = inner_jet(nf, alpha)[0];
        let top = (2.0 * nf).powf(2.0 * alpha);
        let rule = GaussLegendreShared(std::sync::Arc::new(GaussLegendre::new(24)));
        let reach = |ell: f64| {
            f_n + rule.0.integrate_composite(0.0, 1.0, BRIDGE_PANELS, |s| {
                ell * inner_jet(nf + ell * s, alpha)[1] * (1.0 - smoothstep5(s)[0])
            })
        };
        let max_ell = 9.0 * nf;
        let (ell, lift) = if reach(max_ell) < top {
            (max_ell, (top - reach(max_ell)) * 140.0 / max_ell)
        } else {
            let (mut lo, mut hi) = (0.0, max_ell);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if reach(mid) < top {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            (hi, 0.0)
        };
        Ok(Self {
            n,
            alpha,
            parity,
            ell,
            lift,
            f_n,
            top,
            rule,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Length of the bridge; the weight is constant from `N + ℓ` on.
    pub fn bridge_length(&self) -> f64 {
        self.ell
    }

    /// `‖φ‖_∞ = (2N)^{2α}`.
    pub fn sup(&self) -> f64 {
        self.top
    }

    fn half_line_jet(&self, x: f64) -> [f64; 4] {
        let nf = self.n as f64;
        if x <= nf {
            return inner_jet(x, self.alpha);
        }
        if x >= nf + self.ell {
            return [self.top, 0.0, 0.0, 0.0];
        }
        let ell = self.ell;
        let s = (x - nf) / ell;
        let f = inner_jet(x, self.alpha);
        let sm = smoothstep5(s);
        let g = 1.0 - sm[0];
        let g1 = -sm[1] / ell;
        let g2 = -sm[2] / (ell * ell);
        let b = lift_bump(s);
        let value = self.f_n
            + self.lift * ell * b[3]
            + self.rule.0.integrate_composite(0.0, s, BRIDGE_PANELS, |r| {
                ell * inner_jet(nf + ell * r, self.alpha)[1] * (1.0 - smoothstep5(r)[0])
            });
        [
            value.min(self.top),
            f[1] * g + self.lift * b[0],
            f[2] * g + f[1] * g1 + self.lift * b[1] / ell,
            f[3] * g + 2.0 * f[2] * g1 + f[1] * g2 + self.lift * b[2] / (ell * ell),
        ]
    }

    /// `[φ, φ′, φ″, φ‴]` at any real `x`.
    pub fn jet(&self, x: f64) -> [f64; 4] {
        if x >= 0.0 {
            return self.half_line_jet(x);
        }
        let j = self.half_line_jet(-x);
        // φ^{(m)}(−x) = p·(−1)^m φ^{(m)}(x)
        let p = match self.parity {
            Parity::Odd => -1.0,
            Parity::Even => 1.0,
        };
        [p * j[0], -p * j[1], p * j[2], -p * j[3]]
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }
}

pub fn truncated_weight(x: f64, n: u32, alpha: f64, parity: Parity) -> Result<f64> {
    Ok(TruncatedWeight::new(n, alpha, parity)?.value(x))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    #[serde(rename = "frac_exp_plus")]
    FracExpPlus,
    #[serde(rename = "frac_exp_minus")]
    FracExpMinus,
    #[serde(rename = "exp_linear")]
    ExpLinear,
    #[serde(rename = "poly_bracket")]
    PolyBracket,
    #[serde(rename = "phiN_piecewise")]
    PhiNPiecewise,
    #[serde(rename = "truncated_odd")]
    TruncatedOdd,
    #[serde(rename = "truncated_even")]
    TruncatedEven,
    #[serde(rename = "airy_envelope")]
    AiryEnvelope,
}

impl WeightKind {
    pub const ALL: [WeightKind; 8] = [
        WeightKind::FracExpPlus,
        WeightKind::FracExpMinus,
        WeightKind::ExpLinear,
        WeightKind::PolyBracket,
        WeightKind::PhiNPiecewise,
        WeightKind::TruncatedOdd,
        WeightKind::TruncatedEven,
        WeightKind::AiryEnvelope,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    /// `a = a(t)`.
    #[default]
    Scheduled,
    /// `a ≡ a₀`.
    Frozen,
}

/// Serializable description of a weight: a kind plus a flat parameter map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub kind: WeightKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<RateMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    /// Exponent constant of the Airy envelope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl WeightSpec {
    fn bare(kind: WeightKind) -> Self {
        Self {
            kind,
            a0: None,
            beta: None,
            alpha: None,
            n: None,
            schedule: None,
            direction: None,
            c: None,
        }
    }

    pub fn frac_exp_plus(a0: f64, mode: RateMode) -> Self {
        Self {
            a0: Some(a0),
            schedule: Some(mode),
            ..Self::bare(WeightKind::FracExpPlus)
        }
    }

    pub fn frac_exp_minus(a0: f64, mode: RateMode) -> Self {
        Self {
            a0: Some(a0),
            schedule: Some(mode),
            ..Self::bare(WeightKind::FracExpMinus)
        }
    }

    pub fn exp_linear(beta: f64) -> Self {
        Self {
            beta: Some(beta),
            ..Self::bare(WeightKind::ExpLinear)
        }
    }

    pub fn poly_bracket(alpha: f64) -> Self {
        Self {
            alpha: Some(alpha),
            ..Self::bare(WeightKind::PolyBracket)
        }
    }

    pub fn phi_piecewise(a0: f64, n: u32) -> Self {
        Self {
            a0: Some(a0),
            n: Some(n),
            ..Self::bare(WeightKind::PhiNPiecewise)
        }
    }

    pub fn truncated(n: u32, alpha: f64, parity: Parity) -> Self {
        let kind = match parity {
            Parity::Odd => WeightKind::TruncatedOdd,
            Parity::Even => WeightKind::TruncatedEven,
        };
        Self {
            alpha: Some(alpha),
            n: Some(n),
            ..Self::bare(kind)
        }
    }

    pub fn airy_envelope(c: f64) -> Self {
        Self {
            c: Some(c),
            ..Self::bare(WeightKind::AiryEnvelope)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// A validated weight, ready for evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum Weight {
    FracExp {
        side: Side,
        schedule: DecaySchedule,
        mode: RateMode,
    },
    ExpLinear {
        beta: f64,
    },
    PolyBracket {
        alpha: f64,
    },
    Piecewise(PiecewiseWeight),
    Truncated(TruncatedWeight),
    AiryEnvelope {
        c: f64,
    },
}

fn require(value: Option<f64>, name: &str, kind: WeightKind) -> Result<f64> {
    let v = value.ok_or_else(|| Error::InvalidWeight(format!("{kind:?} requires `{name}`")))?;
    if !v.is_finite() {
        return Err(Error::InvalidWeight(format!("`{name}` must be finite, got {v}")));
    }
    Ok(v)
}

fn positive(v: f64, name: &str) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidWeight(format!("`{name}` must be positive, got {v}")))
    }
}

fn nonnegative(v: f64, name: &str) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidWeight(format!("`{name}` must be nonnegative, got {v}")))
    }
}

impl Weight {
    pub fn from_spec(spec: &WeightSpec) -> Result<Self> {
        let kind = spec.kind;
        let direction = spec.direction.unwrap_or_default();
        let schedule = |a0: f64| {
            DecaySchedule::new(positive(a0, "a0")?, direction)
                .map_err(|e| Error::InvalidWeight(e.to_string()))
        };
        let index = || -> Result<u32> {
            match spec.n {
                Some(n) if n >= 1 => Ok(n),
                Some(n) => Err(Error::InvalidWeight(format!("`N` must be ≥ 1, got {n}"))),
                None => Err(Error::InvalidWeight(format!("{kind:?} requires `N`"))),
            }
        };
        Ok(match kind {
            WeightKind::FracExpPlus | WeightKind::FracExpMinus => Weight::FracExp {
                side: if kind == WeightKind::FracExpPlus {
                    Side::Plus
                } else {
                    Side::Minus
                },
                schedule: schedule(require(spec.a0, "a0", kind)?)?,
                mode: spec.schedule.unwrap_or_default(),
            },
            WeightKind::ExpLinear => Weight::ExpLinear {
                beta: nonnegative(require(spec.beta, "beta", kind)?, "beta")?,
            },
            WeightKind::PolyBracket => Weight::PolyBracket {
                alpha: nonnegative(require(spec.alpha, "alpha", kind)?, "alpha")?,
            },
            WeightKind::PhiNPiecewise => Weight::Piecewise(
                PiecewiseWeight::new(index()?, schedule(require(spec.a0, "a0", kind)?)?)
                    .map_err(|e| Error::InvalidWeight(e.to_string()))?,
            ),
            WeightKind::TruncatedOdd | WeightKind::TruncatedEven => {
                let parity = if kind == WeightKind::TruncatedOdd {
                    Parity::Odd
                } else {
                    Parity::Even
                };
                let alpha = positive(require(spec.alpha, "alpha", kind)?, "alpha")?;
                Weight::Truncated(
                    TruncatedWeight::new(index()?, alpha, parity)
                        .map_err(|e| Error::InvalidWeight(e.to_string()))?,
                )
            }
            WeightKind::AiryEnvelope => Weight::AiryEnvelope {
                c: positive(
                    spec.c.map_or(Ok(2.0 / 3.0), |c| require(Some(c), "c", kind))?,
                    "c",
                )?,
            },
        })
    }

    /// Whether the weight depends on time.
    pub fn is_scheduled(&self) -> bool {
        matches!(
            self,
            Weight::FracExp {
                mode: RateMode::Scheduled,
                ..
            } | Weight::Piecewise(_)
        )
    }

    /// Whether the weight takes negative values (odd truncated extension).
    pub fn is_signed(&self) -> bool {
        matches!(self, Weight::Truncated(w) if w.parity() == Parity::Odd)
    }

    /// Freezes the time argument.
    pub fn at(&self, t: f64) -> Result<WeightAtTime<'_>> {
        let rate = match self {
            Weight::FracExp { schedule, mode, .. } => match mode {
                RateMode::Scheduled => schedule.rate(t)?,
                RateMode::Frozen => schedule.a0(),
            },
            Weight::Piecewise(w) => w.schedule().rate(t)?,
            _ => 0.0,
        };
        Ok(WeightAtTime { weight: self, rate })
    }

    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.at(t)?.value(x))
    }
}

/// A weight with its time argument resolved.
#[derive(Clone, Copy, Debug)]
pub struct WeightAtTime<'a> {
    weight: &'a Weight,
    rate: f64,
}

impl WeightAtTime<'_> {
    /// The rate `a` in effect (zero for kinds without one).
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `log w(x)`; `-∞` where `w = 0`. Meaningless for signed weights at
    /// negative values, where it returns NaN.
    pub fn log_value(&self, x: f64) -> f64 {
        match self.weight {
            Weight::FracExp { side, .. } => {
                let y = match side {
                    Side::Plus => x.max(0.0),
                    Side::Minus => (-x).max(0.0),
                };
                self.rate * y * y.sqrt()
            }
            Weight::ExpLinear { beta } => beta * x,
            Weight::PolyBracket { alpha } => alpha * (1.0 + x * x).ln(),
            Weight::Piecewise(w) => w.log_value_with_rate(x, self.rate),
            Weight::Truncated(w) => w.value(x).ln(),
            Weight::AiryEnvelope { c } => {
                let p = x.max(0.0);
                let m = (-x).max(0.0);
                -c * p * p.sqrt() - 0.25 * (1.0 + m).ln()
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.weight {
            Weight::Truncated(w) => w.value(x),
            _ => self.log_value(x).exp(),
        }
    }
}

/// Dispatches on the spec; validates it on every call.
pub fn evaluate_weight(spec: &WeightSpec, x: f64, t: f64) -> Result<f64> {
    Weight::from_spec(spec)?.value(x, t)
}

/// `(∫ w |u|² dx)^{1/2}` accumulated in log space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedNorm {
    /// `+∞` when saturated.
    pub norm: f64,
    pub log_norm: f64,
    /// Fraction of samples skipped because `|u| < 1e-300`.
    pub floored_fraction: f64,
    /// The norm exceeds the `f64` range.
    pub saturated: bool,
}

/// Weighted L² norm with optional window `[lo, hi]` restricting the samples.
pub fn log_weighted_l2(
    u: &Field,
    weight: &Weight,
    t: f64,
    window: Option<(f64, f64)>,
) -> Result<WeightedNorm> {
    if weight.is_signed() {
        return Err(Error::InvalidWeight(
            "weighted L² norms need a nonnegative weight; use weighted_integral".into(),
        ));
    }
    let w = weight.at(t)?;
    let grid = u.grid();
    let (lo, hi) = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut terms = Vec::with_capacity(u.len());
    let mut considered = 0usize;
    let mut floored = 0usize;
    for (i, &v) in u.values().iter().enumerate() {
        let x = grid.x(i);
        if x < lo || x > hi {
            continue;
        }
        considered += 1;
        let a = v.abs();
        if a < UNDERFLOW_FLOOR {
            floored += 1;
            continue;
        }
        let lw = w.log_value(x);
        if lw == f64::NEG_INFINITY {
            continue;
        }
        terms.push(lw + 2.0 * a.ln());
    }
    let floored_fraction = if considered == 0 {
        0.0
    } else {
        floored as f64 / considered as f64
    };
    let Some(m) = terms.iter().copied().reduce(f64::max) else {
        return Ok(WeightedNorm {
            norm: 0.0,
            log_norm: f64::NEG_INFINITY,
            floored_fraction,
            saturated: false,
        });
    };
    let sum: f64 = terms.iter().map(|&l| (l - m).exp()).sum();
    let log_norm = 0.5 * (m + sum.ln() + grid.dx().ln());
    let saturated = !(log_norm < LOG_MAX);
    Ok(WeightedNorm {
        norm: if saturated { f64::INFINITY } else { log_norm.exp() },
        log_norm,
        floored_fraction,
        saturated,
    })
}

/// `∫ w |u|² dx` by the trapezoid rule, for weights of either sign.
pub fn weighted_integral(u: &Field, weight: &Weight, t: f64) -> Result<f64> {
    let w = weight.at(t)?;
    Ok(u.integrate(|x, v| w.value(x) * v * v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sched(a0: f64) -> DecaySchedule {
        DecaySchedule::forward(a0).unwrap()
    }

    #[test]
    fn schedule_values() {
        let s = sched(1.0);
        assert_eq!(s.rate(0.0).unwrap(), 1.0);
        assert_relative_eq!(s.rate(4.0 / 27.0).unwrap(), 0.5f64.sqrt(), max_relative = 1e-15);
        assert!(s.rate(-1.0).is_err());
        assert!(DecaySchedule::forward(0.0).is_err());
        assert!(DecaySchedule::forward(-1.0).is_err());
    }

    #[test]
    fn schedule_solves_its_ode() {
        let s = sched(1.0);
        for t in [0.1, 1.0, 10.0] {
            let a = s.rate(t).unwrap();
            let r = s.rate_derivative(t).unwrap() + 3.375 * a * a * a;
            assert!(r.abs() <= 1e-12);
        }
    }

    #[test]
    fn schedule_derivative_matches_finite_difference() {
        let s = sched(1.7);
        for t in [0.05, 0.5, 3.0] {
            let h = 1e-5;
            let fd = (s.rate(t + h).unwrap() - s.rate(t - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(fd, s.rate_derivative(t).unwrap(), max_relative = 1e-8);
        }
    }

    #[test]
    fn schedule_long_time_limit() {
        let s = sched(1.0);
        let t = 1e4;
        let lim = 2.0 / (3.0 * 3f64.sqrt());
        assert!((s.rate(t).unwrap() * t.sqrt() / lim - 1.0).abs() < 0.01);
    }

    #[test]
    fn backward_schedule_uses_elapsed_time() {
        let b = DecaySchedule::backward(2.0).unwrap();
        let f = sched(2.0);
        assert_eq!(b.rate(-0.3).unwrap(), f.rate(0.3).unwrap());
        assert_eq!(b.rate_derivative(-0.3).unwrap(), -f.rate_derivative(0.3).unwrap());
    }

    #[test]
    fn theta_endpoints() {
        let j0 = theta_jet(0.0).unwrap();
        assert_eq!(j0[0], 0.25);
        assert_eq!(j0[1], 0.0);
        assert_eq!(j0[2], 0.0);
        let j1 = theta_jet(1.0).unwrap();
        assert_relative_eq!(j1[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(j1[1], 1.5, max_relative = 1e-15);
        assert_relative_eq!(j1[2], 0.75, max_relative = 1e-15);
        assert!(theta(1.01).is_err());
        assert!(theta(-0.01).is_err());
    }

    #[test]
    fn theta_second_derivative_nonnegative_and_factored() {
        let r10 = 10f64.sqrt();
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            let d2 = theta_jet(x).unwrap()[2];
            let alt = 0.75 * x * ((r10 * x - 12.0 / r10).powi(2) + 0.6);
            assert!(d2 >= 0.0);
            assert!((d2 - alt).abs() <= 1e-12);
        }
    }

    #[test]
    fn theta_jet_matches_finite_differences() {
        let h = 1e-5;
        for x in [0.2, 0.5, 0.8] {
            let j = theta_jet(x).unwrap();
            let jp = theta_jet(x + h).unwrap();
            let jm = theta_jet(x - h).unwrap();
            for k in 0..3 {
                let fd = (jp[k] - jm[k]) / (2.0 * h);
                assert!((fd - j[k + 1]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn p2_matches_at_n() {
        let s = sched(1.0);
        for t in [0.0, 0.7] {
            let a = s.rate(t).unwrap();
            for n in [4u32, 8, 16] {
                let nf = n as f64;
                let e = (a * nf.powf(1.5)).exp();
                assert_relative_eq!(p2(nf, t, n, &s).unwrap(), e, max_relative = 1e-14);
                assert_relative_eq!(
                    p2_dx(nf, t, n, &s).unwrap(),
                    1.5 * a * nf.sqrt() * e,
                    max_relative = 1e-14
                );
            }
        }
        assert!(p2(3.9, 0.0, 4, &s).is_err());
    }

    #[test]
    fn p2_slope_bounded_by_weight() {
        for a0 in [0.5, 1.0, 2.0] {
            let s = sched(a0);
            for n in [8u32, 16, 32] {
                let w = PiecewiseWeight::new(n, s).unwrap();
                for t in [0.0, 0.5, 2.0] {
                    for i in 0..=3000 {
                        let x = n as f64 * (1.0 + 3.0 * i as f64 / 3000.0);
                        let j = w.jet(x, t).unwrap();
                        assert!(j.dx <= (1.0 + 3.0 * a0 * x.sqrt()) * j.value * (1.0 + 1e-14));
                    }
                }
            }
        }
    }

    #[test]
    fn piecewise_branch_values() {
        let s = sched(1.3);
        let w = PiecewiseWeight::new(8, s).unwrap();
        let t = 0.4;
        let a = s.rate(t).unwrap();
        assert_relative_eq!(w.value(-5.0, t).unwrap(), (a / 4.0).exp(), max_relative = 1e-15);
        assert_relative_eq!(w.value(1.0, t).unwrap(), a.exp(), max_relative = 1e-15);
        let below = w.value(1.0 - 1e-12, t).unwrap();
        let above = w.value(1.0 + 1e-12, t).unwrap();
        assert!((below - above).abs() < 1e-10);
    }

    #[test]
    fn piecewise_below_bound() {
        for a0 in [0.3, 1.0, 3.0] {
            let s = sched(a0);
            let c = piecewise_bound_constant(a0);
            for n in [2u32, 8, 32] {
                let w = PiecewiseWeight::new(n, s).unwrap();
                for t in [0.0, 0.3, 3.0] {
                    let a = s.rate(t).unwrap();
                    for i in 0..=2000 {
                        let x = 4.0 * n as f64 * i as f64 / 2000.0;
                        let lhs = w.log_value(x, t).unwrap();
                        let rhs = c.ln() + a * x.powf(1.5);
                        assert!(lhs <= rhs + 1e-12, "x={x}");
                    }
                }
            }
        }
    }

    #[test]
    fn middle_branch_energy_inequality() {
        let s = sched(1.0);
        let w = PiecewiseWeight::new(32, s).unwrap();
        for t in [0.0, 0.2, 1.0, 5.0] {
            let a = s.rate(t).unwrap();
            for i in 1..500 {
                let x = 1.0 + 31.0 * i as f64 / 500.0;
                let j = w.jet(x, t).unwrap();
                let closed = (3.375 * a * a - 0.375 * a * x.powf(-1.5)) * j.value;
                assert!((j.dxxx + j.dt - closed).abs() <= 1e-10 * j.value);
                assert!(j.dxxx + j.dt <= 3.375 * a * a * j.value * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn piecewise_time_derivative_matches_finite_difference() {
        let s = sched(1.0);
        let w = PiecewiseWeight::new(8, s).unwrap();
        let h = 1e-6;
        for x in [-2.0, 0.5, 3.0, 12.0] {
            let t = 0.5;
            let fd = (w.value(x, t + h).unwrap() - w.value(x, t - h).unwrap()) / (2.0 * h);
            let j = w.jet(x, t).unwrap();
            assert_relative_eq!(fd, j.dt, max_relative = 1e-6);
        }
    }

    #[test]
    fn piecewise_jets_match_finite_differences() {
        let s = sched(1.0);
        let w = PiecewiseWeight::new(8, s).unwrap();
        let h = 1e-5;
        for x in [0.3, 0.7, 2.0, 5.0, 9.0, 20.0] {
            let j = w.jet(x, 0.2).unwrap();
            let jp = w.jet(x + h, 0.2).unwrap();
            let jm = w.jet(x - h, 0.2).unwrap();
            let fd = [(jp.value - jm.value), (jp.dx - jm.dx), (jp.dxx - jm.dxx)].map(|d| d / (2.0 * h));
            assert_relative_eq!(fd[0], j.dx, max_relative = 1e-7, epsilon = 1e-9);
            assert_relative_eq!(fd[1], j.dxx, max_relative = 1e-7, epsilon = 1e-9);
            assert_relative_eq!(fd[2], j.dxxx, max_relative = 1e-6, epsilon = 1e-8);
        }
    }

    #[test]
    fn inner_jet_matches_finite_differences() {
        let h = 1e-5;
        for alpha in [0.25, 0.5, 1.0] {
            for x in [0.3, 1.0, 2.5, 7.0] {
                let j = inner_jet(x, alpha);
                let jp = inner_jet(x + h, alpha);
                let jm = inner_jet(x - h, alpha);
                for k in 0..3 {
                    let fd = (jp[k] - jm[k]) / (2.0 * h);
                    assert_relative_eq!(fd, j[k + 1], max_relative = 1e-6, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn truncated_values() {
        for alpha in [0.25, 0.5, 0.75] {
            for n in [1u32, 4, 16, 64] {
                let w = TruncatedWeight::new(n, alpha, Parity::Odd).unwrap();
                assert_eq!(w.value(0.0), 0.0);
                let top = (2.0 * n as f64).powf(2.0 * alpha);
                assert_eq!(w.value(10.0 * n as f64), top);
                assert_eq!(w.value(1e6), top);
                assert!(w.bridge_length() <= 9.0 * n as f64);
                let x = 0.5 * n as f64;
                assert_eq!(w.value(x), (1.0 + x.powi(4)).powf(alpha / 2.0) - 1.0);
                assert_eq!(w.value(-x), -w.value(x));
                let e = TruncatedWeight::new(n, alpha, Parity::Even).unwrap();
                assert_eq!(e.value(-x), e.value(x));
            }
        }
        assert!(TruncatedWeight::new(0, 0.5, Parity::Odd).is_err());
        assert!(TruncatedWeight::new(4, 0.0, Parity::Odd).is_err());
    }

    #[test]
    fn truncated_bridge_is_monotone_and_continuous() {
        for alpha in [0.25, 0.5] {
            for n in [4u32, 16, 64] {
                let w = TruncatedWeight::new(n, alpha, Parity::Even).unwrap();
                let nf = n as f64;
                let end = nf + w.bridge_length();
                let mut prev = w.value(nf);
                for i in 1..=4000 {
                    let x = nf + (end - nf) * i as f64 / 4000.0;
                    let v = w.value(x);
                    assert!(v >= prev - 1e-12 * w.sup());
                    assert!(v <= w.sup());
                    prev = v;
                }
                assert!((w.value(end - 1e-9) - w.sup()).abs() < 1e-9 * w.sup());
            }
        }
    }

    #[test]
    fn truncated_jets_match_finite_differences() {
        let w = TruncatedWeight::new(4, 0.5, Parity::Odd).unwrap();
        let h = 1e-4;
        let end = 4.0 + w.bridge_length();
        for x in [-6.0, -1.0, 0.5, 3.0, 4.5, 6.0, 0.5 * (4.0 + end), end - 0.3] {
            let j = w.jet(x);
            let jp = w.jet(x + h);
            let jm = w.jet(x - h);
            for k in 0..3 {
                let fd = (jp[k] - jm[k]) / (2.0 * h);
                assert!((fd - j[k + 1]).abs() < 1e-6, "x={x} k={k} fd={fd} an={}", j[k + 1]);
            }
        }
    }

    #[test]
    fn truncated_derivatives_bounded_independent_of_n() {
        let mut maxima = Vec::new();
        for n in [4u32, 16, 64] {
            let w = TruncatedWeight::new(n, 0.5, Parity::Odd).unwrap();
            let mut m = [0.0f64; 3];
            let hi = 11.0 * n as f64;
            for i in 0..=20_000 {
                let x = hi * i as f64 / 20_000.0;
                let j = w.jet(x);
                for k in 0..3 {
                    m[k] = m[k].max(j[k + 1].abs());
                }
            }
            maxima.push(m);
        }
        for k in 0..3 {
            let worst = maxima.iter().map(|m| m[k]).fold(0.0, f64::max);
            assert!(worst < 10.0, "derivative {k}: {worst}");
        }
    }

    #[test]
    fn truncated_slope_bounded_by_bracket_power() {
        let alpha = 0.5;
        let mut constants = Vec::new();
        for n in [4u32, 16, 64] {
            let w = TruncatedWeight::new(n, alpha, Parity::Even).unwrap();
            let c = (0..=20_000)
                .map(|i| {
                    let x = -11.0 * n as f64 + 22.0 * n as f64 * i as f64 / 20_000.0;
                    w.jet(x)[1].abs() / (1.0 + x * x).powf(alpha - 0.5)
                })
                .fold(0.0, f64::max);
            constants.push(c);
        }
        let max = constants.iter().copied().fold(0.0, f64::max);
        let min = constants.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(max / min < 1.5, "{constants:?}");
    }

    #[test]
    fn spec_dispatch_examples() {
        assert_eq!(evaluate_weight(&WeightSpec::exp_linear(1.0), 0.0, 0.0).unwrap(), 1.0);
        let fe = WeightSpec::frac_exp_plus(1.0, RateMode::Scheduled);
        assert_relative_eq!(evaluate_weight(&fe, 4.0, 0.0).unwrap(), 8f64.exp(), max_relative = 1e-15);
        assert_eq!(evaluate_weight(&fe, -4.0, 0.0).unwrap(), 1.0);
        let fm = WeightSpec::frac_exp_minus(1.0, RateMode::Frozen);
        assert_relative_eq!(evaluate_weight(&fm, -4.0, 3.0).unwrap(), 8f64.exp(), max_relative = 1e-15);
        let pb = WeightSpec::poly_bracket(0.5);
        assert_relative_eq!(evaluate_weight(&pb, 3.0, 0.0).unwrap(), 10f64.sqrt(), max_relative = 1e-15);
        let ae = WeightSpec::airy_envelope(2.0 / 3.0);
        assert_relative_eq!(evaluate_weight(&ae, -15.0, 0.0).unwrap(), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn spec_validation() {
        let mut s = WeightSpec::frac_exp_plus(1.0, RateMode::Scheduled);
        s.a0 = None;
        assert!(Weight::from_spec(&s).is_err());
        assert!(Weight::from_spec(&WeightSpec::frac_exp_plus(-1.0, RateMode::Frozen)).is_err());
        assert!(Weight::from_spec(&WeightSpec::phi_piecewise(1.0, 0)).is_err());
        assert!(Weight::from_spec(&WeightSpec::truncated(4, -0.5, Parity::Odd)).is_err());
        assert!(Weight::from_spec(&WeightSpec::exp_linear(f64::NAN)).is_err());
        assert!(Weight::from_spec(&WeightSpec::airy_envelope(0.0)).is_err());
    }

    #[test]
    fn spec_serde_round_trip() {
        let json = r#"{"kind":"phiN_piecewise","a0":1.0,"N":16}"#;
        let s: WeightSpec = serde_json::from_str(json).unwrap();
        assert_eq!(s, WeightSpec::phi_piecewise(1.0, 16));
        assert_eq!(serde_json::to_string(&s).unwrap(), json);
        for kind in WeightKind::ALL {
            let text = serde_json::to_string(&kind).unwrap();
            let back: WeightKind = serde_json::from_str(&text).unwrap();
            assert_eq!(back, kind);
        }
        assert!(serde_json::from_str::<WeightSpec>(r#"{"kind":"exp_linear","gamma":1}"#).is_err());
    }

    #[test]
    fn unit_weight_gives_l2_norm() {
        let g = make_grid(20.0, 1024).unwrap();
        let u = Field::sample(&g, 0.0, |x| (-x * x).exp() * (1.0 + 0.3 * x)).unwrap();
        let n = log_weighted_l2(&u, &Weight::from_spec(&WeightSpec::exp_linear(0.0)).unwrap(), 0.0, None).unwrap();
        assert_relative_eq!(n.norm, u.l2_norm(), max_relative = 1e-12);
        assert!(!n.saturated);
    }

    #[test]
    fn gaussian_exponential_weight_closed_form() {
        let g = make_grid(20.0, 2048).unwrap();
        let u = Field::sample(&g, 0.0, |x| (-x * x).exp()).unwrap();
        for beta in [0.1, 1.0, 3.0] {
            let w = Weight::from_spec(&WeightSpec::exp_linear(beta)).unwrap();
            let n = log_weighted_l2(&u, &w, 0.0, None).unwrap();
            // ∫ e^{βx} e^{−2x²} dx = √(π/2) e^{β²/8}
            let exact = (std::f64::consts::FRAC_PI_2.sqrt() * (beta * beta / 8.0).exp()).sqrt();
            assert_relative_eq!(n.norm, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn weighted_norm_survives_huge_weights() {
        let g = make_grid(100.0, 2048).unwrap();
        let u = Field::sample(&g, 0.0, |x| (-0.5 * x * x.max(0.0).sqrt()).exp() * (-0.01 * x * x).exp()).unwrap();
        let w = Weight::from_spec(&WeightSpec::frac_exp_plus(1.0, RateMode::Frozen)).unwrap();
        let n = log_weighted_l2(&u, &w, 0.0, None).unwrap();
        assert!(n.log_norm.is_finite());
        let w_big = Weight::from_spec(&WeightSpec::frac_exp_plus(3.0, RateMode::Frozen)).unwrap();
        let big = log_weighted_l2(&u, &w_big, 0.0, None).unwrap();
        assert!(big.saturated);
        assert!(big.log_norm.is_finite());
    }

    #[test]
    fn balanced_tail_norm_grows_with_window() {
        let g = make_grid(200.0, 8192).unwrap();
        let u = Field::sample(&g, 0.0, |x| if x > 0.0 { (-x.powf(1.5)).exp() } else { 0.0 }).unwrap();
        let w = Weight::from_spec(&WeightSpec::frac_exp_plus(2.0, RateMode::Scheduled)).unwrap();
        let mut prev = 0.0;
        for x_max in [10.0, 40.0, 70.0] {
            let n = log_weighted_l2(&u, &w, 0.0, Some((0.0, x_max))).unwrap();
            assert!((n.norm * n.norm / x_max - 1.0).abs() < 0.02);
            assert!(n.norm > prev);
            prev = n.norm;
        }
        let full = log_weighted_l2(&u, &w, 0.0, Some((0.0, 199.0))).unwrap();
        assert!(full.floored_fraction > 0.0);
    }

    #[test]
    fn signed_weights_rejected_for_norms() {
        let g = make_grid(20.0, 256).unwrap();
        let u = Field::sample(&g, 0.0, |x| (-x * x).exp()).unwrap();
        let w = Weight::from_spec(&WeightSpec::truncated(2, 0.5, Parity::Odd)).unwrap();
        assert!(log_weighted_l2(&u, &w, 0.0, None).is_err());
        assert!(weighted_integral(&u, &w, 0.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn zero_field_norm() {
        let g = make_grid(20.0, 256).unwrap();
        let u = Field::zeros(&g, 0.0);
        let w = Weight::from_spec(&WeightSpec::frac_exp_plus(1.0, RateMode::Scheduled)).unwrap();
        let n = log_weighted_l2(&u, &w, 0.0, None).unwrap();
        assert_eq!(n.norm, 0.0);
        assert_eq!(n.floored_fraction, 1.0);
    }

    proptest! {
        #[test]
        fn schedule_strictly_decreasing(a0 in 0.01f64..10.0, t in 0.0f64..100.0, dt in 1e-3f64..10.0) {
            let s = sched(a0);
            let a = s.rate(t).unwrap();
            prop_assert!(a > 0.0 && a <= a0);
            prop_assert!(s.rate(t + dt).unwrap() < a);
        }

        #[test]
        fn piecewise_nonnegative_and_nondecreasing(
            a0 in 0.05f64..4.0, n in 1u32..40, t in 0.0f64..10.0,
            x in -5.0f64..200.0, dx in 1e-6f64..5.0,
        ) {
            let w = PiecewiseWeight::new(n, sched(a0)).unwrap();
            let j = w.jet(x, t).unwrap();
            prop_assert!(j.value >= 0.0 && j.dx >= 0.0);
            prop_assert!(w.log_value(x + dx, t).unwrap() >= w.log_value(x, t).unwrap());
        }

        #[test]
        fn truncated_odd_is_odd_even_is_even(n in 1u32..32, alpha in 0.05f64..0.75, x in 0.0f64..400.0) {
            let o = TruncatedWeight::new(n, alpha, Parity::Odd).unwrap();
            let e = TruncatedWeight::new(n, alpha, Parity::Even).unwrap();
            prop_assert_eq!(o.value(-x), -o.value(x));
            prop_assert_eq!(e.value(-x), e.value(x));
            prop_assert!(e.value(x) >= 0.0 && e.value(x) <= e.sup());
        }
    }
}
