use super::han::HanSeries;
use super::FeatureError;
use crate::corpus::{FeatureTable, SegmentClock, Window};
use crate::scalar::{mean, std_pop, Real};

/// A windowed value plus whether the window had to be clipped to the
/// available media.
#[derive(Debug, Clone, PartialEq)]
pub struct Windowed<V> {
    pub value: V,
    pub clipped: bool,
}

/// `[start, end)` in seconds covered by `window` on a clip of `duration`
/// seconds, and whether the nominal length exceeded the clip.
pub fn window_span(duration: f64, window: Window) -> (f64, f64, bool) {
    match window.seconds() {
        None => (0.0, duration, false),
        Some(len) if len >= duration => (0.0, duration, len > duration),
        Some(len) => match window {
            Window::F30 => (0.0, len, false),
            _ => (duration - len, duration, false),
        },
    }
}

/// Keeps the rows whose segment centre lies inside the window. When no row
/// qualifies the nearest segment is kept and the result is flagged.
pub fn window_table<T: Real>(
    table: &FeatureTable<T>,
    clock: SegmentClock,
    duration: f64,
    window: Window,
) -> Windowed<FeatureTable<T>> {
    let (start, end, mut clipped) = window_span(duration, window);
    let mut rows: Vec<_> = table
        .rows
        .iter()
        .filter(|r| {
            let c = clock.center(r.segment);
            c >= start && c <= end
        })
        .cloned()
        .collect();
    if rows.is_empty() && !table.rows.is_empty() {
        let mid = (start + end) / 2.0;
        let nearest = table
            .rows
            .iter()
            .min_by(|a, b| (clock.center(a.segment) - mid).abs().total_cmp(&(clock.center(b.segment) - mid).abs()))
            .expect("nonempty");
        rows.push(nearest.clone());
        clipped = true;
    }
    Windowed { value: FeatureTable { ad_id: table.ad_id.clone(), window, dim: table.dim, rows }, clipped }
}

/// Mean, std, min and max of every per-second channel over the window,
/// laid out channel by channel (`[mean0, std0, min0, max0, mean1, ...]`).
pub fn han_window_vector<T: Real>(series: &HanSeries<T>, window: Window) -> Result<Windowed<Vec<T>>, FeatureError> {
    let n = series.per_second.len();
    if n == 0 {
        return Err(FeatureError::EmptySequence);
    }
    let (lo, hi, clipped) = match window.seconds() {
        None => (0, n, false),
        Some(len) => {
            let len = len as usize;
            if len >= n {
                (0, n, len > n)
            } else if window == Window::F30 {
                (0, len, false)
            } else {
                (n - len, n, false)
            }
        }
    };
    let rows: Vec<Vec<T>> = series.per_second[lo..hi].iter().map(|s| s.values()).collect();
    let channels = rows[0].len();
    let mut out = Vec::with_capacity(4 * channels);
    for c in 0..channels {
        let col: Vec<T> = rows.iter().map(|r| r[c]).collect();
        out.push(mean(&col).expect("nonempty"));
        out.push(std_pop(&col).expect("nonempty"));
        out.push(col.iter().copied().fold(T::infinity(), T::min));
        out.push(col.iter().copied().fold(T::neg_infinity(), T::max));
    }
    Ok(Windowed { value: out, clipped })
}
