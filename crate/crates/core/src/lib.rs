//! Reliability and regularity estimation for crowdsourced affective ratings.
//!
//! Raw ordinal ratings are turned into a per-task agreement multigraph
//! ([`ingest`]), a Gated Latent Beta Allocation model is fitted to it by
//! variational EM ([`glba`]), and the fitted parameters drive subject rankings,
//! confidence-weighted stimulus scores and evaluation curves ([`scoring`]).
//! [`baselines`] holds the comparison methods and [`simulate`] the synthetic
//! data generators used for validation.
//!
//! The numerical core is generic over the scalar type (see [`Real`]); the
//! aliases below fix it to `f64` or `f32`.

pub mod baselines;
pub mod error;
pub mod glba;
pub mod ingest;
pub mod io;
pub mod num;
pub mod rng;
pub mod scoring;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
pub use num::Real;

pub type ModelParamsF64 = glba::ModelParams<f64>;
pub type ModelParamsF32 = glba::ModelParams<f32>;
pub type PriorsF64 = glba::Priors<f64>;
pub type FitConfigF64 = glba::FitConfig<f64>;
pub type FitConfigF32 = glba::FitConfig<f32>;
pub type FitReportF64 = glba::FitReport<f64>;
pub type FitReportF32 = glba::FitReport<f32>;
pub type TaskStatsF64 = glba::TaskStats<f64>;
pub type SubjectReportF64 = scoring::SubjectReport<f64>;
pub type ImageReportF64 = scoring::ImageReport<f64>;
pub type DawidSkeneModelF64 = baselines::DawidSkeneModel<f64>;
