//! Pseudospectral simulation of the k-generalized KdV equation
//!
//! ```text
//! ∂ₜu + ∂ₓ³u + uᵏ∂ₓu = 0
//! ```
//!
//! on a periodic truncation `[-L, L)` of the real line, together with the
//! weight families and weighted-norm measurements used to study how
//! fractional-exponential decay `e^{a(t) x₊^{3/2}}` persists in time.
//!
//! Module map:
//! - [`grid`]: grids, sampled fields, spectral derivatives and Sobolev norms.
//! - [`weights`]: the decay schedule `a(t)`, the piecewise weight `φ_N`,
//!   truncated polynomial weights and overflow-safe weighted integrals.
//! - [`analytic`]: Airy function, linear group, soliton profiles, mollifier.
//! - [`solver`]: integrating-factor RK4 time stepping with dealiasing and
//!   an optional absorbing sponge.
//! - [`diagnostics`]: tail fits, persistence audits, conservation audits,
//!   the interpolation probe and the weighted energy identity.

pub mod analytic;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod quad;
pub mod solver;
pub mod weights;

pub use analytic::SolitonSpec;
pub use diagnostics::{DiagnosticRow, PersistenceAudit, TailFit, TailModel, TailWindow};
pub use error::{Error, Result};
pub use grid::{Field, Grid, SpectralField};
pub use solver::{SolverConfig, Sponge, Trajectory};
pub use weights::{DecaySchedule, Direction, Weight, WeightKind, WeightSpec, WeightedNorm};
