//! Socially-aware navigation lab.
//!
//! The crate couples a rule-based social comfort field with a small
//! from-scratch reinforcement-learning stack:
//!
//! - [`slm`] — orientation-sensitive, asymmetric discomfort field of one or
//!   more standing humans, with per-component ablation switches.
//! - [`net`] — dense MLP with reverse-mode gradients and an RMSprop optimizer.
//! - [`env`] — episodic 2-D navigation environment with a three-part reward
//!   (goal progress, energy, social discomfort).
//! - [`a2c`] — advantage actor-critic trainer over the environment.
//! - [`scenario`] — scenario data model, file I/O, and deterministic suite
//!   generators.
//! - [`metrics`] — trajectory smoothing, lateral-deviation and front-pass
//!   metrics.
//! - [`experiments`] — sweep and ablation drivers with CSV reports.
//!
//! All numeric kernels are generic over a floating scalar (see [`Scalar`]);
//! the aliases below pin the two supported precisions.

pub mod a2c;
pub mod env;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod net;
pub mod scalar;
pub mod scenario;
pub mod slm;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// f64 aliases — the precision used by the CLI and the experiment drivers.
pub type Pose64 = slm::Pose<f64>;
pub type SlmParams64 = slm::SlmParams<f64>;
pub type FieldSample64 = slm::FieldSample<f64>;
pub type FieldGrid64 = slm::FieldGrid<f64>;
pub type EnvConfig64 = env::EnvConfig<f64>;
pub type NavEnv64 = env::NavEnv<f64>;
pub type EpisodeRecord64 = env::EpisodeRecord<f64>;
pub type MlpParams64 = net::MlpParams<f64>;
pub type RmspropState64 = net::RmspropState<f64>;

/// f32 aliases for callers that trade precision for footprint.
pub type Pose32 = slm::Pose<f32>;
pub type SlmParams32 = slm::SlmParams<f32>;
pub type FieldSample32 = slm::FieldSample<f32>;
pub type FieldGrid32 = slm::FieldGrid<f32>;
pub type EnvConfig32 = env::EnvConfig<f32>;
pub type NavEnv32 = env::NavEnv<f32>;
pub type EpisodeRecord32 = env::EpisodeRecord<f32>;
pub type MlpParams32 = net::MlpParams<f32>;
pub type RmspropState32 = net::RmspropState<f32>;
