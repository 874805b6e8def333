use super::FeatureError;
use crate::corpus::{FeatureRow, FeatureTable, SegmentClock};
use crate::scalar::Real;

/// For each audio row, the indices of the video rows whose timestamp falls
/// inside that audio row's interval.
pub fn align_keyframes<T: Real>(
    audio: &FeatureTable<T>,
    audio_clock: SegmentClock,
    video: &FeatureTable<T>,
    video_clock: SegmentClock,
) -> Result<Vec<Vec<usize>>, FeatureError> {
    if audio.ad_id != video.ad_id || audio.window != video.window {
        return Err(FeatureError::AlignmentError(format!(
            "tables differ: {}/{} vs {}/{}",
            audio.ad_id, audio.window, video.ad_id, video.window
        )));
    }
    audio
        .rows
        .iter()
        .map(|row| {
            let lo = audio_clock.start(row.segment);
            let hi = lo + audio_clock.span;
            let idx: Vec<usize> = video
                .rows
                .iter()
                .enumerate()
                .filter(|(_, v)| {
                    let t = video_clock.center(v.segment);
                    t >= lo && t < hi
                })
                .map(|(i, _)| i)
                .collect();
            if idx.is_empty() {
                Err(FeatureError::AlignmentError(format!(
                    "ad {}: no video row in [{lo}, {hi}) s for segment {}",
                    audio.ad_id, row.segment
                )))
            } else {
                Ok(idx)
            }
        })
        .collect()
}

/// Per audio interval, `[audio | mean of aligned video rows]`.
pub fn feature_fusion_concat<T: Real>(
    audio: &FeatureTable<T>,
    audio_clock: SegmentClock,
    video: &FeatureTable<T>,
    video_clock: SegmentClock,
) -> Result<FeatureTable<T>, FeatureError> {
    let map = align_keyframes(audio, audio_clock, video, video_clock)?;
    let dim = audio.dim + video.dim;
    let rows = audio
        .rows
        .iter()
        .zip(&map)
        .map(|(a, idx)| {
            let mut values = a.values.clone();
            let k = T::count(idx.len());
            values.extend((0..video.dim).map(|c| idx.iter().map(|&i| video.rows[i].values[c]).sum::<T>() / k));
            FeatureRow { segment: a.segment, values }
        })
        .collect();
    Ok(FeatureTable { ad_id: audio.ad_id.clone(), window: audio.window, dim, rows })
}
