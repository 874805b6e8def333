//! Affect recognition for video ads from content features and EEG,
//! decision fusion, inter-rater agreement, and affect-aware ad insertion.
//!
//! Numeric code is generic over [`scalar::Real`] (floating point) or
//! [`scalar::Scalar`] (also exact rationals for the scheduler). The aliases
//! below fix the common `f64` instantiations.

pub mod corpus;
pub mod features;
pub mod scalar;
pub mod stats;
pub mod eeg;
pub mod classify;
pub mod fusion;
pub mod schedule;
pub mod synth;
pub mod pipeline;

pub use scalar::{Real, Scalar};

pub type CvReport = classify::CvReport<f64>;
pub type FoldOutcome = classify::FoldOutcome<f64>;
pub type EegBatch = eeg::EegBatch<f64>;
pub type Epoch = eeg::Epoch<f64>;
pub type FusionWeights = fusion::FusionWeights<f64>;
pub type FusionResult = fusion::FusionResult<f64>;
pub type AgreementReport = stats::AgreementReport<f64>;
pub type CorrelationReport = stats::CorrelationReport<f64>;
pub type RankSumResult = stats::RankSumResult<f64>;
pub type InsertionInstance = schedule::InsertionInstance<f64>;
pub type RelevanceWeights = schedule::RelevanceWeights<f64>;
pub type ScoreCorrelation = schedule::ScoreCorrelation<f64>;
/// Scheduler instance over exact rationals.
pub type ExactInstance = schedule::InsertionInstance<num_rational::BigRational>;
