//! Word-association test (WAT) evaluation and culture-conditioned steering.
//!
//! The crate is organized as a pipeline:
//!
//! * [`data`]: response cleaning, cue alignment, association norms, splits.
//! * [`metrics`]: R@K and position-weighted recall (PWR@K).
//! * [`lm`]: tokenizer, prompt templates and a small causal language model.
//! * [`steer`]: per-culture linear steering of the final hidden state.
//! * [`eval`]: candidate scoring, ranking, reports and controlled experiments.
//! * [`pipeline`]: file-level stages driven by the `watsteer` binary.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); metrics accept
//! any [`MetricValue`], including exact rationals. The aliases below pin the
//! double-precision types used by the pipeline.

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod lm;
pub mod metrics;
pub mod pipeline;
pub mod scalar;
pub mod steer;
pub mod synth;

pub use error::{Error, Result};
pub use metrics::MetricValue;
pub use scalar::Scalar;

/// Double-precision backbone used by the pipeline.
pub type Backbone = lm::BackboneLm<f64>;
/// Single-precision backbone.
pub type Backbone32 = lm::BackboneLm<f32>;
/// Double-precision steering layer.
pub type Steer = steer::SteerModel<f64>;
/// Single-precision steering layer.
pub type Steer32 = steer::SteerModel<f32>;
/// Window trace in double precision.
pub type Trace = lm::DistributionTrace<f64>;
/// Ranked prediction with double-precision scores.
pub type Ranked = metrics::RankedPrediction<f64>;
/// Metric value in double precision.
pub type Metric = metrics::MetricResult<f64>;
/// Exact rational metric value.
pub type ExactMetric = metrics::MetricResult<num_rational::Rational64>;
