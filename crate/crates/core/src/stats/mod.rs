//! Inter-rater agreement, rater/expert concordance, correlation with
//! Benjamini–Hochberg control, and the Wilcoxon rank-sum test.

mod agreement;
mod correlation;
mod ranksum;

pub use agreement::{
    cohen_kappa, krippendorff_alpha_ordinal, rater_vs_expert_concordance, AgreementReport, AxisKappa,
};
pub use correlation::{benjamini_hochberg, pearson, pearson_fdr, CorrelationReport, DEFAULT_FDR_Q};
pub use ranksum::{ranksum_test, RankSumResult, EXACT_MAX_TOTAL};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("degenerate series (zero variance)")]
    DegenerateSeries,
    #[error("empty sample")]
    EmptySample,
}
