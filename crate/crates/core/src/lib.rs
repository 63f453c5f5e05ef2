//! High-dimensional tests for a normal mean when the covariance is unknown
//! and the dimension may exceed the sample size.
//!
//! The statistics standardize by the sample variances only, so they depend on
//! the data through X̄ᵀD̂⁻¹X̄ and tr(R̂²). Their null laws are mixtures of a
//! normal and centred chi-squares governed by the spectrum of the
//! correlation matrix; [`limit_law`] evaluates those laws and
//! [`sim_harness`] checks them by simulation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corrmat;
pub mod error;
pub mod estimators;
pub mod gauss_sampling;
pub mod io;
pub mod limit_law;
pub mod linalg;
pub mod moments;
pub mod rng;
pub mod sample_stats;
pub mod sim_harness;

pub use corrmat::{CorrMatrix, SpectrumSpec};
pub use error::{Error, Result};
pub use estimators::TraceEstimate;
pub use gauss_sampling::{Dataset, MvnSampler};
pub use limit_law::{CdfMethod, MixtureLaw};
pub use mean_tests::{TestReport, Variant};
pub use moments::Corr4;
pub use rng::{with_workers, SeedSpec};
pub use sample_stats::{SampleSummary, StatInputs};
