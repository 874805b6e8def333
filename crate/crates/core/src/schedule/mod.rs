//! Per-ad affect scores and ad-insertion scheduling over a program's
//! inter-scene gaps.

mod hungarian;

pub use hungarian::{max_weight_assignment, min_cost_assignment};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Axis, Program};
use crate::features::HanSeries;
use crate::scalar::{Real, Scalar};
use crate::stats::{pearson_fdr, CorrelationReport, StatsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("empty probability table")]
    EmptyTable,
    #[error("empty series")]
    EmptySeries,
    #[error("no clean epochs for ad `{0}`")]
    NoCleanEpochs(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("infeasible: K = {k} with {points} points and {ads} ads")]
    Infeasible { k: usize, points: usize, ads: usize },
    #[error("score lists differ: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub type Result<T> = std::result::Result<T, ScheduleError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMethod {
    Deep,
    Han,
    Eeg,
}

impl ScoreMethod {
    pub const ALL: [ScoreMethod; 3] = [ScoreMethod::Deep, ScoreMethod::Han, ScoreMethod::Eeg];

    pub fn name(self) -> &'static str {
        match self {
            ScoreMethod::Deep => "deep",
            ScoreMethod::Han => "han",
            ScoreMethod::Eeg => "eeg",
        }
    }
}

impl fmt::Display for ScoreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreMethod {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "deep" => Ok(ScoreMethod::Deep),
            "han" => Ok(ScoreMethod::Han),
            "eeg" => Ok(ScoreMethod::Eeg),
            other => Err(format!("unknown score method `{other}`")),
        }
    }
}

/// Per-ad affect estimate, both axes in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffectScore<T = f64> {
    pub ad_id: String,
    pub method: ScoreMethod,
    pub arousal: T,
    pub valence: T,
}

/// Mean over a sorted copy, so the result does not depend on input order.
fn order_free_mean<T: Real>(xs: impl IntoIterator<Item = T>) -> Option<T> {
    let mut v: Vec<T> = xs.into_iter().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = T::count(v.len());
    Some(v.into_iter().sum::<T>() / n)
}

fn unit_check<T: Real>(what: &str, xs: &[T]) -> Result<()> {
    match xs.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
        Some(v) => Err(ScheduleError::OutOfRange(format!("{what}: {v}"))),
        None => Ok(()),
    }
}

fn prob_rows<T: Real>(what: &str, rows: &[[T; 2]]) -> Result<T> {
    let tol = T::lit(1e-6);
    for r in rows {
        unit_check(what, r)?;
        if (r[0] + r[1] - T::one()).abs() > tol {
            return Err(ScheduleError::OutOfRange(format!("{what}: row ({}, {}) does not sum to 1", r[0], r[1])));
        }
    }
    order_free_mean(rows.iter().map(|r| r[1])).ok_or(ScheduleError::EmptyTable)
}

/// Mean `P(High)` over frame-level `(L, H)` rows; arousal from the audio
/// model, valence from the video model.
pub fn score_deep<T: Real>(ad_id: &str, audio_probs: &[[T; 2]], video_probs: &[[T; 2]]) -> Result<AffectScore<T>> {
    Ok(AffectScore {
        ad_id: ad_id.to_string(),
        method: ScoreMethod::Deep,
        arousal: prob_rows("audio", audio_probs)?,
        valence: prob_rows("video", video_probs)?,
    })
}

/// Per-axis mean of per-second estimates in `[0, 1]`.
pub fn score_han<T: Real>(ad_id: &str, arousal: &[T], valence: &[T]) -> Result<AffectScore<T>> {
    unit_check("arousal", arousal)?;
    unit_check("valence", valence)?;
    Ok(AffectScore {
        ad_id: ad_id.to_string(),
        method: ScoreMethod::Han,
        arousal: order_free_mean(arousal.iter().copied()).ok_or(ScheduleError::EmptySeries)?,
        valence: order_free_mean(valence.iter().copied()).ok_or(ScheduleError::EmptySeries)?,
    })
}

/// Mean epoch posterior `P(High)` per axis over every clean epoch of an ad.
pub fn score_eeg<T: Real>(ad_id: &str, arousal: &[T], valence: &[T]) -> Result<AffectScore<T>> {
    unit_check("arousal", arousal)?;
    unit_check("valence", valence)?;
    let none = || ScheduleError::NoCleanEpochs(ad_id.to_string());
    Ok(AffectScore {
        ad_id: ad_id.to_string(),
        method: ScoreMethod::Eeg,
        arousal: order_free_mean(arousal.iter().copied()).ok_or_else(none)?,
        valence: order_free_mean(valence.iter().copied()).ok_or_else(none)?,
    })
}

/// Per-second arousal and valence curves in `[0, 1]` from Hanjalic-style
/// low-level series. Arousal averages energy, motion and shot changes;
/// valence averages pitch (and colorfulness when present). Each channel is
/// min-max scaled over all seconds of all given ads.
pub fn han_curves<T: Real>(series: &[HanSeries<T>]) -> Vec<(Vec<T>, Vec<T>)> {
    let rows: Vec<Vec<T>> = series.iter().flat_map(|s| s.per_second.iter().map(|p| p.values())).collect();
    let width = rows.iter().map(Vec::len).min().unwrap_or(0);
    let mut lo = vec![T::infinity(); width];
    let mut hi = vec![T::neg_infinity(); width];
    for r in &rows {
        for c in 0..width {
            lo[c] = lo[c].min(r[c]);
            hi[c] = hi[c].max(r[c]);
        }
    }
    let scale = |c: usize, v: T| {
        let span = hi[c] - lo[c];
        if span > T::zero() { (v - lo[c]) / span } else { T::lit(0.5) }
    };
    // value layout: energy, pitch mean, pitch std, shot changes, motion[, colorfulness]
    let avg = |xs: &[T]| xs.iter().copied().sum::<T>() / T::count(xs.len());
    series
        .iter()
        .map(|s| {
            let mut a = Vec::with_capacity(s.per_second.len());
            let mut v = Vec::with_capacity(s.per_second.len());
            for p in &s.per_second {
                let r = p.values();
                a.push(avg(&[scale(0, r[0]), scale(3, r[3]), scale(4, r[4])]));
                if width > 5 {
                    v.push(avg(&[scale(1, r[1]), scale(5, r[5])]));
                } else {
                    v.push(scale(1, r[1]));
                }
            }
            (a, v)
        })
        .collect()
}

/// Relevance weights `(w_v, w_a, w_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceWeights<T> {
    pub valence: T,
    pub arousal: T,
    pub crowding: T,
}

impl<T: Scalar> Default for RelevanceWeights<T> {
    fn default() -> Self {
        RelevanceWeights { valence: T::ratio(1, 2), arousal: T::ratio(3, 10), crowding: T::ratio(1, 5) }
    }
}

impl RelevanceWeights<f64> {
    pub fn convert<T: Scalar>(&self) -> RelevanceWeights<T> {
        let c = |x: f64| T::from_f64(x).expect("finite weight");
        RelevanceWeights { valence: c(self.valence), arousal: c(self.arousal), crowding: c(self.crowding) }
    }
}

/// `(arousal, valence)` of a scene or ad, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffectPoint<T> {
    pub arousal: T,
    pub valence: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertionInstance<T> {
    pub program_id: String,
    /// Scene order; gap `j` lies between scenes `j` and `j + 1`.
    pub scenes: Vec<AffectPoint<T>>,
    pub ad_ids: Vec<String>,
    pub ads: Vec<AffectPoint<T>>,
    pub k: usize,
    pub weights: RelevanceWeights<T>,
    /// Optional additive term per `(point, ad)` on top of the relevance.
    pub adjust: Option<Vec<Vec<T>>>,
}

fn min_max<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut lo = xs[0].clone();
    let mut hi = xs[0].clone();
    for x in xs {
        if *x < lo {
            lo = x.clone();
        }
        if *x > hi {
            hi = x.clone();
        }
    }
    let span = hi - lo.clone();
    xs.iter().map(|x| if span.is_zero() { T::ratio(1, 2) } else { (x.clone() - lo.clone()) / span.clone() }).collect()
}

fn normalize<T: Scalar>(pts: Vec<(f64, f64)>) -> Result<Vec<AffectPoint<T>>> {
    let conv = |x: f64| T::from_f64(x).ok_or_else(|| ScheduleError::OutOfRange(format!("{x}")));
    let a: Vec<T> = pts.iter().map(|p| conv(p.0)).collect::<Result<_>>()?;
    let v: Vec<T> = pts.iter().map(|p| conv(p.1)).collect::<Result<_>>()?;
    if a.is_empty() {
        return Ok(Vec::new());
    }
    Ok(min_max(&a).into_iter().zip(min_max(&v)).map(|(arousal, valence)| AffectPoint { arousal, valence }).collect())
}

impl<T: Scalar> InsertionInstance<T> {
    /// Builds an instance from rating-scale scenes and `[0, 1]` ad scores.
    /// Scene and ad scores are each min-max scaled per axis over the
    /// instance; a constant axis maps to 1/2.
    pub fn new(program: &Program, ads: &[AffectScore<f64>], k: usize, weights: RelevanceWeights<T>) -> Result<Self> {
        let scenes = normalize(program.scenes.iter().map(|s| (s.arousal, s.valence)).collect())?;
        let pts = normalize(ads.iter().map(|a| (a.arousal, a.valence)).collect())?;
        let inst = InsertionInstance {
            program_id: program.id.clone(),
            scenes,
            ad_ids: ads.iter().map(|a| a.ad_id.clone()).collect(),
            ads: pts,
            k,
            weights,
            adjust: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn points(&self) -> usize {
        self.scenes.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        let (p, n) = (self.points(), self.ads.len());
        if self.k == 0 || self.k > p || self.k > n {
            return Err(ScheduleError::Infeasible { k: self.k, points: p, ads: n });
        }
        if self.ad_ids.len() != n {
            return Err(ScheduleError::Mismatch(format!("{} ids for {} ads", self.ad_ids.len(), n)));
        }
        let mut ids = self.ad_ids.clone();
        ids.sort();
        ids.dedup();
        if ids.len() != n {
            return Err(ScheduleError::Mismatch("duplicate ad ids".into()));
        }
        let unit = |x: &T| *x >= T::zero() && *x <= T::one();
        for q in self.scenes.iter().chain(&self.ads) {
            if !unit(&q.arousal) || !unit(&q.valence) {
                return Err(ScheduleError::OutOfRange(format!("{:?} / {:?}", q.arousal, q.valence)));
            }
        }
        if let Some(adj) = &self.adjust {
            if adj.len() != p || adj.iter().any(|r| r.len() != n) {
                return Err(ScheduleError::Mismatch("adjust matrix shape".into()));
            }
        }
        Ok(())
    }

    /// `r(j, a)` given whether a neighbouring gap is also used.
    pub fn relevance(&self, j: usize, a: usize, crowded: bool) -> T {
        let w = &self.weights;
        let ad = &self.ads[a];
        let one = T::one();
        let mut r = w.valence.clone() * (one.clone() - (ad.valence.clone() - self.scenes[j].valence.clone()).abs())
            + w.arousal.clone() * (one - (ad.arousal.clone() - self.scenes[j + 1].arousal.clone()).abs());
        if crowded {
            r = r - w.crowding.clone();
        }
        if let Some(adj) = &self.adjust {
            r = r + adj[j][a].clone();
        }
        r
    }

    /// Objective of a set of `(point, ad index)` pairs, summed in point order.
    pub fn objective(&self, pairs: &[(usize, usize)]) -> T {
        let mut sorted = pairs.to_vec();
        sorted.sort();
        let used: Vec<usize> = sorted.iter().map(|p| p.0).collect();
        sorted.iter().fold(T::zero(), |acc, &(j, a)| acc + self.relevance(j, a, crowded(&used, j)))
    }

    /// Ad indices ordered by id.
    fn id_order(&self) -> Vec<usize> {
        let mut o: Vec<usize> = (0..self.ads.len()).collect();
        o.sort_by(|&x, &y| self.ad_ids[x].cmp(&self.ad_ids[y]));
        o
    }
}

fn crowded(used: &[usize], j: usize) -> bool {
    used.iter().any(|&u| u + 1 == j || j + 1 == u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Exact,
    Matching,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule<T = f64> {
    pub program_id: String,
    /// `(point index, ad id)` in point order.
    pub assignments: Vec<(usize, String)>,
    pub objective: T,
    pub solver: Solver,
}

impl<T: Scalar> Schedule<T> {
    /// Checks distinctness, cardinality and the stored objective.
    pub fn verify(&self, inst: &InsertionInstance<T>) -> Result<()> {
        let bad = |m: &str| Err(ScheduleError::Mismatch(m.to_string()));
        if self.assignments.len() != inst.k {
            return bad("cardinality");
        }
        let mut pairs = Vec::new();
        for (j, id) in &self.assignments {
            let Some(a) = inst.ad_ids.iter().position(|x| x == id) else { return bad("unknown ad") };
            if *j >= inst.points() {
                return bad("point out of range");
            }
            pairs.push((*j, a));
        }
        let mut pts: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let mut ads: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        pts.sort();
        pts.dedup();
        ads.sort();
        ads.dedup();
        if pts.len() != inst.k || ads.len() != inst.k {
            return bad("repeated point or ad");
        }
        if !inst.objective(&pairs).tie(&self.objective) {
            return bad("objective");
        }
        Ok(())
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn subset_matrix<T: Scalar>(inst: &InsertionInstance<T>, subset: &[usize], rows: &[usize], cols: &[usize]) -> Vec<Vec<T>> {
    rows.iter().map(|&j| cols.iter().map(|&a| inst.relevance(j, a, crowded(subset, j))).collect()).collect()
}

fn best_value<T: Scalar>(inst: &InsertionInstance<T>, subset: &[usize], rows: &[usize], cols: &[usize]) -> T {
    if rows.is_empty() {
        return T::zero();
    }
    max_weight_assignment(&subset_matrix(inst, subset, rows, cols)).1
}

fn finish<T: Scalar>(inst: &InsertionInstance<T>, pairs: Vec<(usize, usize)>, solver: Solver) -> Schedule<T> {
    let objective = inst.objective(&pairs);
    let mut assignments: Vec<(usize, String)> = pairs.iter().map(|&(j, a)| (j, inst.ad_ids[a].clone())).collect();
    assignments.sort();
    Schedule { program_id: inst.program_id.clone(), assignments, objective, solver }
}

/// Optimal schedule: every `K`-subset of gaps is solved as a `K × |ads|`
/// maximum-weight assignment. Among optimal schedules the one with the
/// lexicographically smallest gap indices, then ad ids, is returned.
pub fn build_schedule<T: Scalar>(inst: &InsertionInstance<T>) -> Result<Schedule<T>> {
    inst.validate()?;
    let subsets = combinations(inst.points(), inst.k);
    let order = inst.id_order();
    let values: Vec<T> = subsets.par_iter().map(|s| best_value(inst, s, s, &order)).collect();
    let mut top = values[0].clone();
    for v in &values[1..] {
        if *v > top {
            top = v.clone();
        }
    }
    let s = &subsets[values.iter().position(|v| v.tie(&top)).expect("max is attained")];

    // fix pairs point by point, taking the smallest ad id that keeps the optimum
    let mut free = order.clone();
    let mut fixed = T::zero();
    let mut pairs = Vec::with_capacity(inst.k);
    for (row, &j) in s.iter().enumerate() {
        let rest = &s[row + 1..];
        let totals: Vec<T> = free
            .iter()
            .map(|&a| {
                let cols: Vec<usize> = free.iter().copied().filter(|&b| b != a).collect();
                fixed.clone() + inst.relevance(j, a, crowded(s, j)) + best_value(inst, s, rest, &cols)
            })
            .collect();
        let mut hi = totals[0].clone();
        for t in &totals[1..] {
            if *t > hi {
                hi = t.clone();
            }
        }
        let pick = totals.iter().position(|t| t.tie(&hi)).expect("max is attained");
        let a = free.remove(pick);
        fixed = fixed + inst.relevance(j, a, crowded(s, j));
        pairs.push((j, a));
    }
    Ok(finish(inst, pairs, Solver::Matching))
}

/// Exhaustive enumeration of gap subsets and ordered ad choices, visited in
/// lexicographic order; only practical for small instances.
pub fn build_schedule_exhaustive<T: Scalar>(inst: &InsertionInstance<T>) -> Result<Schedule<T>> {
    inst.validate()?;
    let order = inst.id_order();
    let mut best: Option<(T, Vec<(usize, usize)>)> = None;
    for s in combinations(inst.points(), inst.k) {
        let mut used = vec![false; order.len()];
        let mut cur = Vec::with_capacity(inst.k);
        walk(inst, &s, &order, &mut used, &mut cur, &mut best);
    }
    Ok(finish(inst, best.expect("feasible").1, Solver::Exact))
}

fn walk<T: Scalar>(
    inst: &InsertionInstance<T>,
    s: &[usize],
    order: &[usize],
    used: &mut [bool],
    cur: &mut Vec<(usize, usize)>,
    best: &mut Option<(T, Vec<(usize, usize)>)>,
) {
    if cur.len() == s.len() {
        let v = inst.objective(cur);
        if best.as_ref().is_none_or(|(b, _)| v > *b && !v.tie(b)) {
            *best = Some((v, cur.clone()));
        }
        return;
    }
    let j = s[cur.len()];
    for (slot, &a) in order.iter().enumerate() {
        if !used[slot] {
            used[slot] = true;
            cur.push((j, a));
            walk(inst, s, order, used, cur, best);
            cur.pop();
            used[slot] = false;
        }
    }
}

/// Scene sequence with the inserted ads, one line per scene or ad.
pub fn render_timeline<T: Scalar>(program: &Program, schedule: &Schedule<T>) -> String {
    let mut out = format!("program {} objective {:.6}\n", program.id, schedule.objective.approx_f64());
    let at: BTreeMap<usize, &str> = schedule.assignments.iter().map(|(j, a)| (*j, a.as_str())).collect();
    let mut t = 0.0;
    for (i, s) in program.scenes.iter().enumerate() {
        out.push_str(&format!("{:>8.1}s  scene {:>2}  {:.1}s\n", t, s.index, s.length));
        t += s.length;
        if let Some(ad) = at.get(&i) {
            out.push_str(&format!("{:>8.1}s    ad {ad} (point {i})\n", t));
        }
    }
    out
}

/// How often each ad of a pool was inserted across a set of schedules.
#[derive(Debug, Clone, PartialEq)]
pub struct InsertionFrequency {
    pub counts: BTreeMap<String, usize>,
    pub pool: usize,
    pub inserted_at_least_once: usize,
    pub max: usize,
    /// Mean over ads inserted at least once.
    pub mean: f64,
}

pub fn insertion_frequency<T>(pool: &[String], schedules: &[Schedule<T>]) -> InsertionFrequency {
    let mut counts: BTreeMap<String, usize> = pool.iter().map(|a| (a.clone(), 0)).collect();
    for s in schedules {
        for (_, a) in &s.assignments {
            *counts.entry(a.clone()).or_insert(0) += 1;
        }
    }
    let used: Vec<usize> = counts.values().copied().filter(|&c| c > 0).collect();
    InsertionFrequency {
        pool: counts.len(),
        inserted_at_least_once: used.len(),
        max: used.iter().copied().max().unwrap_or(0),
        mean: if used.is_empty() { 0.0 } else { used.iter().sum::<usize>() as f64 / used.len() as f64 },
        counts,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreCorrelation<T> {
    pub left: ScoreMethod,
    pub right: ScoreMethod,
    pub axis: Axis,
    pub report: CorrelationReport<T>,
}

/// Pairwise Pearson correlation between methods per axis, with FDR control
/// over the whole family. Every list must cover the same ads.
pub fn compare_score_methods<T: Real>(methods: &[Vec<AffectScore<T>>], q: T) -> Result<Vec<ScoreCorrelation<T>>> {
    let keyed: Vec<(ScoreMethod, BTreeMap<&str, &AffectScore<T>>)> = methods
        .iter()
        .filter_map(|l| l.first().map(|f| (f.method, l.iter().map(|s| (s.ad_id.as_str(), s)).collect())))
        .collect();
    if keyed.len() != methods.len() {
        return Err(ScheduleError::Mismatch("empty score list".into()));
    }
    let ids: Vec<&str> = keyed[0].1.keys().copied().collect();
    for (m, k) in &keyed {
        if k.keys().copied().ne(ids.iter().copied()) {
            return Err(ScheduleError::Mismatch(format!("{m} covers a different ad set")));
        }
    }
    let mut labels = Vec::new();
    let mut pairs = Vec::new();
    for axis in Axis::BOTH {
        let get = |s: &AffectScore<T>| if axis == Axis::Arousal { s.arousal } else { s.valence };
        for i in 0..keyed.len() {
            for j in i + 1..keyed.len() {
                let x = ids.iter().map(|id| get(keyed[i].1[id])).collect();
                let y = ids.iter().map(|id| get(keyed[j].1[id])).collect();
                labels.push((keyed[i].0, keyed[j].0, axis));
                pairs.push((x, y));
            }
        }
    }
    let reports = pearson_fdr(&pairs, q)?;
    Ok(labels
        .into_iter()
        .zip(reports)
        .map(|((left, right, axis), report)| ScoreCorrelation { left, right, axis, report })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::Signed;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(rng: &mut ChaCha8Rng, points: usize, ads: usize, k: usize) -> InsertionInstance<BigRational> {
        let r = |rng: &mut ChaCha8Rng| BigRational::new(rng.random_range(0..=20).into(), 20.into());
        InsertionInstance {
            program_id: "p".into(),
            scenes: (0..=points).map(|_| AffectPoint { arousal: r(rng), valence: r(rng) }).collect(),
            ad_ids: (0..ads).map(|i| format!("ad{i:02}")).collect(),
            ads: (0..ads).map(|_| AffectPoint { arousal: r(rng), valence: r(rng) }).collect(),
            k,
            weights: RelevanceWeights::default(),
            adjust: None,
        }
    }

    /// Independent enumeration over injective maps from gaps to ads.
    fn oracle(inst: &InsertionInstance<BigRational>) -> BigRational {
        let p = inst.points();
        let n = inst.ads.len();
        let mut best: Option<BigRational> = None;
        let mut assign = vec![usize::MAX; p];
        fn rec(
            inst: &InsertionInstance<BigRational>,
            j: usize,
            assign: &mut Vec<usize>,
            best: &mut Option<BigRational>,
            n: usize,
        ) {
            let p = assign.len();
            if j == p {
                let used: Vec<usize> = (0..p).filter(|&i| assign[i] != usize::MAX).collect();
                if used.len() != inst.k {
                    return;
                }
                let mut total = BigRational::from_integer(0.into());
                for &i in &used {
                    let a = &inst.ads[assign[i]];
                    let mut r = BigRational::new(1.into(), 2.into())
                        * (BigRational::from_integer(1.into()) - (a.valence.clone() - inst.scenes[i].valence.clone()).abs())
                        + BigRational::new(3.into(), 10.into())
                            * (BigRational::from_integer(1.into())
                                - (a.arousal.clone() - inst.scenes[i + 1].arousal.clone()).abs());
                    let adjacent = (i > 0 && assign[i - 1] != usize::MAX) || (i + 1 < p && assign[i + 1] != usize::MAX);
                    if adjacent {
                        r -= BigRational::new(1.into(), 5.into());
                    }
                    total += r;
                }
                if best.as_ref().is_none_or(|b| total > *b) {
                    *best = Some(total);
                }
                return;
            }
            rec(inst, j + 1, assign, best, n);
            for a in 0..n {
                if !assign.contains(&a) {
                    assign[j] = a;
                    rec(inst, j + 1, assign, best, n);
                    assign[j] = usize::MAX;
                }
            }
        }
        rec(inst, 0, &mut assign, &mut best, n);
        best.unwrap()
    }

    #[test]
    fn matches_oracle_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..150 {
            let p = rng.random_range(1..=5);
            let n = rng.random_range(1..=7);
            let k = rng.random_range(1..=p.min(n));
            let inst = random_instance(&mut rng, p, n, k);
            let s = build_schedule(&inst).unwrap();
            s.verify(&inst).unwrap();
            assert_eq!(s.objective, oracle(&inst));
            let e = build_schedule_exhaustive(&inst).unwrap();
            assert_eq!(e.assignments, s.assignments, "tie-break agreement");
        }
    }

    #[test]
    fn single_point_picks_best_ad() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let inst = random_instance(&mut rng, 1, 6, 1);
        let best = (0..6).max_by(|&a, &b| inst.relevance(0, a, false).partial_cmp(&inst.relevance(0, b, false)).unwrap().then(b.cmp(&a))).unwrap();
        let s = build_schedule(&inst).unwrap();
        assert_eq!(s.assignments, vec![(0, inst.ad_ids[best].clone())]);
    }

    #[test]
    fn raising_an_assigned_pair_keeps_it() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..60 {
            let inst = random_instance(&mut rng, 5, 7, 3);
            let s = build_schedule(&inst).unwrap();
            let (j, id) = s.assignments[rng.random_range(0..3)].clone();
            let a = inst.ad_ids.iter().position(|x| *x == id).unwrap();
            let mut adj = vec![vec![BigRational::from_integer(0.into()); 7]; 5];
            adj[j][a] = BigRational::new(rng.random_range(1..10).into(), 10.into());
            let raised = InsertionInstance { adjust: Some(adj), ..inst };
            let t = build_schedule(&raised).unwrap();
            assert!(t.assignments.contains(&(j, id)));
        }
    }

    #[test]
    fn infeasible_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut inst = random_instance(&mut rng, 3, 2, 3);
        assert!(matches!(build_schedule(&inst), Err(ScheduleError::Infeasible { .. })));
        inst.k = 0;
        assert!(build_schedule(&inst).is_err());
    }

    #[test]
    fn float_and_rational_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let q = random_instance(&mut rng, 5, 7, 4);
        let c = |x: &BigRational| x.approx_f64();
        let f = InsertionInstance {
            program_id: q.program_id.clone(),
            scenes: q.scenes.iter().map(|p| AffectPoint { arousal: c(&p.arousal), valence: c(&p.valence) }).collect(),
            ad_ids: q.ad_ids.clone(),
            ads: q.ads.iter().map(|p| AffectPoint { arousal: c(&p.arousal), valence: c(&p.valence) }).collect(),
            k: 4,
            weights: RelevanceWeights::default(),
            adjust: None,
        };
        let (sq, sf) = (build_schedule(&q).unwrap(), build_schedule(&f).unwrap());
        assert!((sq.objective.approx_f64() - sf.objective).abs() < 1e-12);
    }

    #[test]
    fn score_examples() {
        let s = score_deep("a", &[[0.0, 1.0]; 4], &[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!((s.arousal, s.valence), (1.0, 0.5));
        assert_eq!(score_deep::<f64>("a", &[], &[[0.5, 0.5]]), Err(ScheduleError::EmptyTable));
        let h: AffectScore<f64> = score_han("a", &[0.7; 9], &[0.2]).unwrap();
        assert!((h.arousal - 0.7).abs() < 1e-15 && h.valence == 0.2);
        assert_eq!(score_han::<f64>("a", &[], &[0.1]), Err(ScheduleError::EmptySeries));
        assert!(score_han("a", &[1.2], &[0.1]).is_err());
        let e: AffectScore<f64> = score_eeg("a", &[0.2, 0.8], &[0.9]).unwrap();
        assert!((e.arousal - 0.5).abs() < 1e-15 && e.valence == 0.9);
        assert!(matches!(score_eeg::<f64>("x", &[], &[]), Err(ScheduleError::NoCleanEpochs(_))));
    }

    #[test]
    fn scores_ignore_row_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let rows: Vec<[f64; 2]> = (0..37).map(|_| {
            let p: f64 = rng.random();
            [1.0 - p, p]
        }).collect();
        let col = rows.iter().map(|r| r[1]).sum::<f64>() / 37.0;
        let s = score_deep("a", &rows, &rows).unwrap();
        assert!((s.arousal - col).abs() < 1e-12);
        let mut rev = rows.clone();
        rev.reverse();
        assert_eq!(score_deep("a", &rev, &rev).unwrap(), s);
    }

    #[test]
    fn frequency_bookkeeping() {
        let pool: Vec<String> = (0..4).map(|i| format!("a{i}")).collect();
        let mk = |ids: &[&str]| Schedule::<f64> {
            program_id: "p".into(),
            assignments: ids.iter().enumerate().map(|(j, a)| (j, a.to_string())).collect(),
            objective: 0.0,
            solver: Solver::Matching,
        };
        let f = insertion_frequency(&pool, &[mk(&["a0", "a1"]), mk(&["a0", "a2"])]);
        assert_eq!((f.inserted_at_least_once, f.max, f.pool), (3, 2, 4));
        assert!((f.mean - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn method_correlations() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mk = |m: ScoreMethod, v: &[f64]| -> Vec<AffectScore> {
            v.iter().enumerate().map(|(i, &x)| AffectScore { ad_id: format!("a{i}"), method: m, arousal: x, valence: 1.0 - x }).collect()
        };
        let v: Vec<f64> = (0..12).map(|_| rng.random()).collect();
        let anti: Vec<f64> = v.iter().map(|x| 1.0 - x).collect();
        let out = compare_score_methods(&[mk(ScoreMethod::Deep, &v), mk(ScoreMethod::Han, &v), mk(ScoreMethod::Eeg, &anti)], 0.05).unwrap();
        assert_eq!(out.len(), 6);
        for c in &out {
            let rho = c.report.rho.unwrap();
            let expect = if c.right == ScoreMethod::Eeg { -1.0 } else { 1.0 };
            assert!((rho - expect).abs() < 1e-12, "{c:?}");
        }
        let short = mk(ScoreMethod::Han, &v[..5]);
        assert!(compare_score_methods(&[mk(ScoreMethod::Deep, &v), short], 0.05).is_err());
    }
}
