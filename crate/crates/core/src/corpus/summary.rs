use std::collections::BTreeMap;

use super::{Axis, Corpus, CorpusError, Quadrant, RatingsMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrantRow {
    pub n_ads: usize,
    pub mean_length: f64,
    pub mean_arousal: f64,
    pub mean_valence: f64,
}

/// Per-quadrant means; a quadrant without ads maps to `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrantSummary {
    pub rows: BTreeMap<Quadrant, Option<QuadrantRow>>,
}

impl QuadrantSummary {
    pub fn empty_quadrants(&self) -> Vec<Quadrant> {
        self.rows.iter().filter(|(_, r)| r.is_none()).map(|(q, _)| *q).collect()
    }
}

/// Mean duration and mean rater-averaged arousal/valence per quadrant.
pub fn quadrant_summary(corpus: &Corpus, ratings: &RatingsMatrix) -> Result<QuadrantSummary, CorpusError> {
    let mut acc: BTreeMap<Quadrant, (usize, f64, f64, f64)> = BTreeMap::new();
    for ad in &corpus.ads {
        let Some(col) = ratings.ads.iter().position(|a| a == &ad.id) else {
            return Err(CorpusError::DanglingReference {
                file: corpus.root.clone(),
                line: None,
                message: format!("ad `{}` missing from ratings", ad.id),
            });
        };
        let (Some(asl), Some(val)) = (ratings.ad_mean(Axis::Arousal, col), ratings.ad_mean(Axis::Valence, col)) else {
            return Err(CorpusError::SchemaViolation {
                file: corpus.root.clone(),
                line: None,
                field: "ratings".into(),
                message: format!("ad `{}` has no ratings", ad.id),
            });
        };
        let e = acc.entry(ad.quadrant).or_insert((0, 0.0, 0.0, 0.0));
        e.0 += 1;
        e.1 += ad.duration;
        e.2 += asl;
        e.3 += val;
    }
    let rows = Quadrant::ALL
        .iter()
        .map(|&q| {
            let row = acc.get(&q).map(|&(n, len, a, v)| {
                let nf = n as f64;
                QuadrantRow { n_ads: n, mean_length: len / nf, mean_arousal: a / nf, mean_valence: v / nf }
            });
            (q, row)
        })
        .collect();
    Ok(QuadrantSummary { rows })
}
