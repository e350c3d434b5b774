//! Beam-aware radio map estimation for co-channel LEO satellites.
//!
//! Given received-signal-strength samples at ground stations and a set of
//! candidate satellite positions, the crate identifies which candidates are
//! transmitting, fits a squared-sinc beam model to each of them and
//! synthesizes a continuous received-power field over the region.
//!
//! The pipeline is split along these modules:
//!
//! * [`geometry`]: ECEF conversion, satellite body-frame look angles and
//!   visibility screening.
//! * [`beam`]: the separable squared-sinc kernel and the superposed forward
//!   model.
//! * [`fit`]: single-satellite robust fitting with closed-form amplitude.
//! * [`select`]: BIC / AIC / GLRT acceptance rules.
//! * [`inference`]: greedy active-set search, joint refinement and map
//!   synthesis.
//! * [`scenario`]: synthetic scenario generation.
//! * [`baselines`]: Lasso, MP, OMP and peak-detection reference estimators.
//! * [`metrics`]: detection and reconstruction scores.
//! * [`harness`]: Monte Carlo sweeps, CSV results and heatmaps.

pub mod baselines;
pub mod beam;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod harness;
pub mod inference;
pub mod io;
pub mod metrics;
pub mod optim;
pub mod scenario;
pub mod select;
pub mod stats;

pub use beam::BeamParams;
pub use error::{Error, Result};
pub use geometry::{EcefVector, GeoPosition, LookAngles};
pub use inference::ActiveSetEstimate;
pub use scenario::{Scenario, ScenarioConfig};
