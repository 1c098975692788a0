//! Experiment configuration files.
//!
//! A config is a JSON key tree. Unknown keys are rejected and every error
//! carries the dotted path of the offending field plus its line and column.

use std::fmt;
use std::path::{Path, PathBuf};

use gkdv_core::analytic::bump;
use gkdv_core::solver::Sponge;
use gkdv_core::{Field, Grid, SolitonSpec, SolverConfig, WeightSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{field}: {message} (line {line}, column {column})")]
    Parse {
        field: String,
        message: String,
        line: usize,
        column: usize,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Self::Invalid {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    SolitonRegression,
    LinearAiryDecay,
    Theorem1Decay,
    PersistenceKato,
    Corollary1LeftTail,
    SolitonPerturbation,
    RegularityLink,
    InterpolationProbe,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 8] = [
        ExperimentName::SolitonRegression,
        ExperimentName::LinearAiryDecay,
        ExperimentName::Theorem1Decay,
        ExperimentName::PersistenceKato,
        ExperimentName::Corollary1LeftTail,
        ExperimentName::SolitonPerturbation,
        ExperimentName::RegularityLink,
        ExperimentName::InterpolationProbe,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::SolitonRegression => "soliton_regression",
            ExperimentName::LinearAiryDecay => "linear_airy_decay",
            ExperimentName::Theorem1Decay => "theorem1_decay",
            ExperimentName::PersistenceKato => "persistence_kato",
            ExperimentName::Corollary1LeftTail => "corollary1_left_tail",
            ExperimentName::SolitonPerturbation => "soliton_perturbation",
            ExperimentName::RegularityLink => "regularity_link",
            ExperimentName::InterpolationProbe => "interpolation_probe",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentName::SolitonRegression => {
                "KdV soliton against the exact travelling wave; conservation and time-step convergence"
            }
            ExperimentName::LinearAiryDecay => "fitted right-tail rate a(t) of linear Airy evolution, a·√t → 2/(3√3)",
            ExperimentName::Theorem1Decay => {
                "weighted norms with the decaying rate a(t) stay bounded while a frozen rate blows up"
            }
            ExperimentName::PersistenceKato => "exponential-weight persistence and the smoothing integral bound",
            ExperimentName::Corollary1LeftTail => "rough compact data develop an |x|^{-1/4} oscillatory left tail",
            ExperimentName::SolitonPerturbation => "radiation shed by a perturbed soliton carries the same envelope",
            ExperimentName::RegularityLink => "polynomially weighted norms of smooth against rough data",
            ExperimentName::InterpolationProbe => "stability of the weighted interpolation ratio over dilations",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct GridSection {
    pub half_width_L: f64,
    pub n_points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpongeSection {
    pub width_x: f64,
    pub strength: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "one")]
    pub k: u32,
    /// Omitted: `0.1·dx / max(1, ‖u₀‖∞)^k`.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "yes")]
    pub nonlinear: bool,
    #[serde(default = "yes")]
    pub dealias: bool,
    #[serde(default)]
    pub sponge: Option<SpongeSection>,
}

fn one() -> u32 {
    1
}

fn yes() -> bool {
    true
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            k: 1,
            dt: None,
            nonlinear: true,
            dealias: true,
            sponge: None,
        }
    }
}

impl SolverSection {
    /// Solver config without output times.
    pub fn build(&self, u0: &Field) -> SolverConfig {
        let dt = self.dt.unwrap_or_else(|| SolverConfig::default_dt(u0, self.k));
        SolverConfig {
            k: self.k,
            dt,
            dealias: self.dealias,
            nonlinear: self.nonlinear,
            sponge: self.sponge.as_ref().map(|s| Sponge {
                width: s.width_x,
                strength: s.strength,
            }),
            snapshot_times: Vec::new(),
            conservation_check_interval: 0,
        }
    }
}

/// Initial data. Centres may be jittered by the run seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Soliton {
        #[serde(default = "one")]
        k: u32,
        c: f64,
        #[serde(default)]
        x0: f64,
    },
    Gaussian {
        #[serde(default)]
        center: f64,
        width: f64,
        #[serde(default = "unit")]
        amp: f64,
    },
    /// `amp·(tanh((x−a)/s) − tanh((x−b)/s))/2` for edges `[a, b]`.
    SmoothedBox {
        edges: [f64; 2],
        smoothing: f64,
        #[serde(default = "unit")]
        amp: f64,
    },
    /// Soliton plus a compact bump of peak height `bump_amp`.
    SolitonPlusBump {
        #[serde(default = "one")]
        k: u32,
        c: f64,
        #[serde(default)]
        x0: f64,
        bump_center: f64,
        bump_radius: f64,
        bump_amp: f64,
    },
    /// `amp·exp(−decay·((1+x²)^{3/4} − 1))`.
    FracExp {
        decay: f64,
        #[serde(default = "unit")]
        amp: f64,
    },
    Zero,
    /// Whitespace-separated values, one per grid point, relative to the
    /// config file.
    Samples { path: PathBuf },
}

fn unit() -> f64 {
    1.0
}

impl InitialData {
    fn check(&self) -> Result<(), ConfigError> {
        let pos = |v: f64, f: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(format!("initial.{f}"), format!("must be positive, got {v}")))
            }
        };
        match self {
            InitialData::Soliton { k, c, x0 } => SolitonSpec::new(*k, *c, *x0)
                .map(|_| ())
                .map_err(|e| ConfigError::invalid("initial", e)),
            InitialData::Gaussian { width, .. } => pos(*width, "width"),
            InitialData::SmoothedBox { edges, smoothing, .. } => {
                pos(*smoothing, "smoothing")?;
                if edges[0] < edges[1] {
                    Ok(())
                } else {
                    Err(ConfigError::invalid("initial.edges", "must satisfy a < b"))
                }
            }
            InitialData::SolitonPlusBump {
                k, c, x0, bump_radius, ..
            } => {
                SolitonSpec::new(*k, *c, *x0).map_err(|e| ConfigError::invalid("initial", e))?;
                pos(*bump_radius, "bump_radius")
            }
            InitialData::FracExp { decay, .. } => pos(*decay, "decay"),
            InitialData::Zero | InitialData::Samples { .. } => Ok(()),
        }
    }

    /// Samples the datum, shifting every centre by `shift`.
    pub fn sample(&self, grid: &Grid, shift: f64, base_dir: &Path) -> Result<Field, ConfigError> {
        let field = match self {
            InitialData::Soliton { k, c, x0 } => {
                let s = SolitonSpec::new(*k, *c, x0 + shift).map_err(|e| ConfigError::invalid("initial", e))?;
                Field::sample(grid, 0.0, |x| s.eval(x, 0.0))
            }
            InitialData::Gaussian { center, width, amp } => {
                let c = center + shift;
                Field::sample(grid, 0.0, |x| amp * (-((x - c) / width).powi(2)).exp())
            }
            InitialData::SmoothedBox { edges, smoothing, amp } => {
                let (a, b) = (edges[0] + shift, edges[1] + shift);
                Field::sample(grid, 0.0, |x| {
                    0.5 * amp * (((x - a) / smoothing).tanh() - ((x - b) / smoothing).tanh())
                })
            }
            InitialData::SolitonPlusBump {
                k,
                c,
                x0,
                bump_center,
                bump_radius,
                bump_amp,
            } => {
                let s = SolitonSpec::new(*k, *c, x0 + shift).map_err(|e| ConfigError::invalid("initial", e))?;
                let bc = bump_center + shift;
                Field::sample(grid, 0.0, |x| {
                    s.eval(x, 0.0) + bump_amp * std::f64::consts::E * bump((x - bc) / bump_radius)
                })
            }
            InitialData::FracExp { decay, amp } => {
                Field::sample(grid, 0.0, |x| amp * (-decay * ((1.0 + x * x).powf(0.75) - 1.0)).exp())
            }
            InitialData::Zero => Ok(Field::zeros(grid, 0.0)),
            InitialData::Samples { path } => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full).map_err(|source| ConfigError::Io {
                    path: full.clone(),
                    source,
                })?;
                let values = text
                    .split_whitespace()
                    .map(|s| s.parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| ConfigError::invalid("initial.path", format!("{}: {e}", full.display())))?;
                Field::new(grid, values, 0.0)
            }
        };
        field.map_err(|e| ConfigError::invalid("initial", e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    /// Defaults to the experiment name.
    #[serde(default)]
    pub run_id: Option<String>,
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub initial: InitialData,
    #[serde(default)]
    pub weights: Vec<WeightSpec>,
    /// Experiment-specific parameters; see each experiment's `Params`.
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
    #[serde(default)]
    pub seed: u64,
    /// Centres are shifted by a uniform draw from `[−j, j]` seeded by `seed`.
    #[serde(default)]
    pub placement_jitter: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Directory that relative paths resolve against; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

/// Deserializes `text` reporting the full field path on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, prefix: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = match (prefix.is_empty(), path.as_str()) {
            (true, p) => p.to_string(),
            (false, ".") => prefix.to_string(),
            (false, p) => format!("{prefix}.{p}"),
        };
        let inner = e.into_inner();
        ConfigError::Parse {
            field,
            message: inner.to_string(),
            line: inner.line(),
            column: inner.column(),
        }
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = parse_json(text, "")?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        Grid::new(self.grid.half_width_L, self.grid.n_points).map_err(|e| ConfigError::invalid("grid", e))?;
        if self.solver.k < 1 {
            return Err(ConfigError::invalid("solver.k", "must be at least 1"));
        }
        if let Some(dt) = self.solver.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(ConfigError::invalid("solver.dt", format!("must be positive, got {dt}")));
            }
        }
        if let Some(s) = &self.solver.sponge {
            let limit = self.grid.half_width_L / 4.0;
            if !(s.width_x > 0.0 && s.width_x < limit) {
                return Err(ConfigError::invalid(
                    "solver.sponge.width_x",
                    format!("must lie in (0, L/4) = (0, {limit}), got {}", s.width_x),
                ));
            }
            if !(s.strength.is_finite() && s.strength >= 0.0) {
                return Err(ConfigError::invalid("solver.sponge.strength", "must be nonnegative"));
            }
        }
        if !(self.placement_jitter.is_finite() && self.placement_jitter >= 0.0) {
            return Err(ConfigError::invalid("placement_jitter", "must be nonnegative"));
        }
        self.initial.check()?;
        for (i, w) in self.weights.iter().enumerate() {
            gkdv_core::Weight::from_spec(w).map_err(|e| ConfigError::invalid(format!("weights[{i}]"), e))?;
        }
        if let Some(id) = &self.run_id {
            if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
                return Err(ConfigError::invalid("run_id", "must be a plain, non-empty file name"));
            }
        }
        Ok(())
    }

    pub fn run_id(&self) -> String {
        self.run_id.clone().unwrap_or_else(|| self.experiment.to_string())
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid.half_width_L, self.grid.n_points).expect("grid checked at load")
    }

    /// Deterministic placement shift drawn from the seed.
    pub fn placement_shift(&self) -> f64 {
        if self.placement_jitter == 0.0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.random_range(-self.placement_jitter..=self.placement_jitter)
    }

    pub fn initial_field(&self) -> Result<Field, ConfigError> {
        self.initial.sample(&self.grid(), self.placement_shift(), &self.base_dir)
    }

    /// Typed experiment parameters; missing keys take their defaults.
    pub fn params<P: DeserializeOwned>(&self) -> Result<P, ConfigError> {
        parse_json(&self.params.to_string(), "params")
    }

    /// Canonical JSON used for hashing and the manifest.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
