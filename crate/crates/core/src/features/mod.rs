//! Content-centric descriptors: spectrograms, keyframe sampling, per-second
//! audio-visual statistics, temporal windowing and feature-level fusion.

mod concat;
mod han;
mod keyframes;
pub mod media;
mod spectrogram;
mod window;

pub use concat::{align_keyframes, feature_fusion_concat};
pub use han::{estimate_pitch, han_series, HanConfig, HanSecond, HanSeries};
pub use keyframes::{extract_keyframes, Keyframe, KEYFRAME_PERIOD_S};
pub use media::Frame;
pub use spectrogram::{
    hann_window, mix_to_mono, segment_count, spectrogram, stft_magnitude, StftShape, Spectrogram, HOP_S,
    SEGMENT_S, WINDOW_S,
};
pub use window::{han_window_vector, window_table, Windowed};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("empty frame sequence")]
    EmptySequence,
    #[error("segment {index} out of range ({available} full segments)")]
    SegmentOutOfRange { index: usize, available: usize },
    #[error("modality mismatch: audio {audio_s:.3} s vs video {video_s:.3} s")]
    ModalityMismatch { audio_s: f64, video_s: f64 },
    #[error("alignment error: {0}")]
    AlignmentError(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("media error: {0}")]
    Media(String),
}
