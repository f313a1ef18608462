//! Localization of stationary-ish radio emitters from a small aerial vehicle
//! carrying a single directional antenna that spins ("gyrates") while the
//! vehicle flies.
//!
//! The receiver measures RSSI of periodic pulses. Absolute RSSI depends on
//! transmit power and environment, both unknown; *differences* of successive
//! RSSI samples taken while the antenna sweeps do not, because every additive
//! term that is constant over the window cancels. What remains is the change
//! in antenna gain between the two relative bearings, which is why a
//! differenced window acts as a pseudo-bearing measurement. The crate builds
//! the full stack on that idea:
//!
//! * [`geometry`], [`antenna`]: poses, bearing conventions, gain patterns.
//! * [`propagation`]: log-distance path loss, knife-edge terrain diffraction,
//!   synthetic RSSI generation.
//! * [`measurement`]: RSSI windows, finite differencing, the tridiagonal
//!   noise covariance of differenced noise, and the Gaussian log-likelihood.
//! * [`filter`]: a particle filter over emitter position.
//! * [`crlb`]: Fisher-information / Cramer-Rao analysis of how gyration rate
//!   affects attainable accuracy, plus a dual-antenna baseline.
//! * [`planner`]: discrete and continuous greedy trajectory planners.
//! * [`sim`]: the 1 Hz mission loop, measurement-method baselines, Monte
//!   Carlo batches, and the rotation-rate convergence study.
//!
//! Numeric code is generic over [`scalar::Real`] (implemented for `f32` and
//! `f64`); the simulation layer and the aliases below fix `f64`.

pub mod antenna;
pub mod crlb;
pub mod filter;
pub mod geometry;
pub mod measurement;
pub mod planner;
pub mod propagation;
pub mod scalar;
pub mod sim;

pub use scalar::Real;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Geometry that leaves an operation undefined, e.g. a bearing between
    /// horizontally coincident points.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),
    /// A parameter outside its documented domain.
    #[error("invalid {what}: {why}")]
    InvalidParameter { what: &'static str, why: String },
    /// Fewer samples than the operation needs.
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
    /// A measurement window with a gap larger than the configured maximum.
    #[error("stale window: gap of {gap_s} s exceeds maximum {max_gap_s} s")]
    StaleWindow { gap_s: f64, max_gap_s: f64 },
    /// Mismatched vector lengths.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A query outside the supported region, e.g. terrain lookups beyond the
    /// grid hull.
    #[error("out of bounds: {0}")]
    OutOfBounds(String),
    /// Malformed input data (CSV pattern tables, ESRI ASCII grids, ...).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

// Double-precision aliases for the generic core types. The simulation layer
// ([`sim`]) and the CLI are written against these.
pub type UavState64 = geometry::UavState<f64>;
pub type SourceState64 = geometry::SourceState<f64>;
pub type Bounds64 = geometry::Bounds<f64>;
pub type GainPattern64 = antenna::GainPattern<f64>;
pub type RadioModel64 = propagation::RadioModel<f64>;
pub type TerrainGrid64 = propagation::TerrainGrid<f64>;
pub type EnvironmentModel64 = propagation::EnvironmentModel<f64>;
pub type MeasurementWindow64 = measurement::MeasurementWindow<f64>;
pub type DifferentialMeasurement64 = measurement::DifferentialMeasurement<f64>;
pub type ParticleBelief64 = filter::ParticleBelief<f64>;
pub type CrlbScenario64 = crlb::CrlbScenario<f64>;
pub type PlannerConfig64 = planner::PlannerConfig<f64>;
