//! Mutual information, constrained capacity and channel capacity for scalar
//! memoryless channels `Y = a(X) + Z` with additive Gaussian noise.
//!
//! The crate is organized bottom-up:
//!
//! * [`channel`] holds the channel model (nonlinearity plus noise level).
//! * [`source`] builds continuous sources, constellations and free particle
//!   sources at a given average power.
//! * [`quadrature`] and [`entropy`] evaluate `f_Y`, `h(Y)` and `I(X;Y)` by
//!   composite Simpson quadrature.
//! * [`optimizer`] maximizes `I(X;Y)` over particle sources with a
//!   Lagrangian steepest-ascent scheme and golden-section line search.
//! * [`theory`] numerically checks monotonicity of `C(P)`, the equivalence
//!   of the equality- and inequality-constrained definitions, and the
//!   peak-power AWGN equivalence.
//!
//! All information quantities are in bits.

pub mod channel;
pub mod entropy;
mod error;
pub mod optimizer;
pub mod quadrature;
pub mod source;
pub mod theory;

pub use channel::{std_normal_pdf, Channel, Nonlinearity};
pub use entropy::{mutual_information, output_entropy, output_pdf, MIResult, OutputMixture};
pub use error::{Error, Result};
pub use optimizer::{
    capacity_curve, log_power_grid, optimize, shaping_curve, CapacityCurve, ConstraintSpec, CurvePoint, Mode,
    OptimizeOutcome, Schedule,
};
pub use quadrature::QuadratureGrid;
pub use source::{
    moments, ContinuousFamily, ContinuousSource, Constellation, Moments, ParticleSource, Source,
};
