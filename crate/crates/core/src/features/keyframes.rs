use super::FeatureError;

pub const KEYFRAME_PERIOD_S: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keyframe {
    pub t: f64,
    pub index: usize,
}

/// One keyframe every three seconds starting at t = 0.
///
/// The frame index is the nearest frame to `t * fps`, halves rounding down,
/// clamped to the last frame. Count is `floor(duration / 3) + 1` with
/// `duration = n_frames / fps`.
pub fn extract_keyframes(n_frames: usize, fps: f64) -> Result<Vec<Keyframe>, FeatureError> {
    if !(fps > 0.0) {
        return Err(FeatureError::InvalidParameter(format!("frame rate {fps} must be positive")));
    }
    if n_frames == 0 {
        return Err(FeatureError::EmptySequence);
    }
    let duration = n_frames as f64 / fps;
    let count = (duration / KEYFRAME_PERIOD_S).floor() as usize + 1;
    Ok((0..count)
        .map(|k| {
            let t = k as f64 * KEYFRAME_PERIOD_S;
            let pos = t * fps;
            let index = ((pos - 0.5).ceil().max(0.0) as usize).min(n_frames - 1);
            Keyframe { t, index }
        })
        .collect())
}
