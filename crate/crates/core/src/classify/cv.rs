use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linalg::{dot, Square};
use super::{
    check_xy, f1_score, kernel_of, lda, posterior_rows, sign_vector, svm, ClassifierConfig, ClassifierKind,
    ClassifyError, Hyper, Kernel, Result,
};
use crate::corpus::Level;
use crate::scalar::{mean, std_sample, Real};

/// Pairwise inner products and squared distances of a dataset.
#[derive(Debug, Clone)]
pub struct PairCache<T> {
    pub dot: Square<T>,
    pub sqd: Square<T>,
    pub d: usize,
}

impl<T: Real> PairCache<T> {
    pub fn build(x: &[Vec<T>]) -> Self {
        let n = x.len();
        let d = x.first().map_or(0, Vec::len);
        let rows: Vec<Vec<T>> = (0..n).into_par_iter().map(|i| (0..n).map(|j| dot(&x[i], &x[j])).collect()).collect();
        let dot = Square { n, data: rows.concat() };
        let mut sqd = Square::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = dot.at(i, i) + dot.at(j, j) - dot.at(i, j) - dot.at(i, j);
                sqd.set(i, j, if i == j { T::zero() } else { v.max(T::zero()) });
            }
        }
        PairCache { dot, sqd, d }
    }

    pub fn len(&self) -> usize {
        self.dot.n
    }

    pub fn is_empty(&self) -> bool {
        self.dot.n == 0
    }
}

/// Full-dataset kernel matrices for every grid kernel.
#[derive(Debug, Clone)]
pub struct KernelBank<T> {
    pub kernels: Vec<(Kernel, Square<T>)>,
}

impl<T: Real> KernelBank<T> {
    pub fn build(cache: &PairCache<T>, kernels: &[Kernel]) -> Self {
        let kernels = kernels
            .iter()
            .map(|&k| {
                let m = match k {
                    Kernel::Linear => cache.dot.clone(),
                    Kernel::Rbf { .. } => Square {
                        n: cache.sqd.n,
                        data: cache.sqd.data.iter().map(|&s| k.from_pair(T::zero(), s, cache.d)).collect(),
                    },
                };
                (k, m)
            })
            .collect();
        KernelBank { kernels }
    }

    fn get(&self, k: Kernel) -> &Square<T> {
        &self.kernels.iter().find(|(kk, _)| *kk == k).expect("kernel in bank").1
    }
}

/// Summary of one repeated cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub method: String,
    pub window: String,
    pub axis: String,
    /// Mean of all fold scores.
    pub f1_mean: f64,
    /// Sample standard deviation of all fold scores.
    pub f1_std: f64,
    /// `repeats × folds` outer-fold F1 scores.
    pub scores: Vec<Vec<f64>>,
    /// Fold-assignment seed per repeat.
    pub seeds: Vec<u64>,
}

impl EvalRun {
    pub fn from_scores(method: &str, window: &str, axis: &str, scores: Vec<Vec<f64>>, seeds: Vec<u64>) -> Self {
        let flat: Vec<f64> = scores.iter().flatten().copied().collect();
        EvalRun {
            method: method.into(),
            window: window.into(),
            axis: axis.into(),
            f1_mean: mean(&flat).unwrap_or(0.0),
            f1_std: std_sample(&flat).unwrap_or(0.0),
            scores,
            seeds,
        }
    }
}

/// Everything one outer fold produced.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome<T> {
    pub repeat: usize,
    pub fold: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// `P(High)` per test row.
    pub p_high: Vec<T>,
    pub labels: Vec<Level>,
    pub f1: f64,
    /// Resubstitution F1 on the training split.
    pub train_f1: f64,
    pub hyper: Hyper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport<T> {
    pub run: EvalRun,
    pub folds: Vec<FoldOutcome<T>>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of repeat `r` derived from the base seed.
pub fn repeat_seed(base: u64, r: usize) -> u64 {
    splitmix(base ^ splitmix(r as u64 + 1))
}

/// Fold index for every group, stratified by group label: each class is
/// shuffled and dealt round-robin, continuing the rotation across classes.
pub fn stratified_folds(labels: &[Level], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; labels.len()];
    let mut offset = 0;
    for class in [Level::High, Level::Low] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < folds {
            return Err(ClassifyError::TooFewSamples(format!(
                "{} groups of class {} for {folds} folds",
                idx.len(),
                class.letter()
            )));
        }
        idx.shuffle(&mut rng);
        for (k, &g) in idx.iter().enumerate() {
            out[g] = (offset + k) % folds;
        }
        offset += idx.len();
    }
    Ok(out)
}

struct Data<'a, T> {
    kind: ClassifierKind,
    cfg: &'a ClassifierConfig,
    x: &'a [Vec<T>],
    y: &'a [Level],
    ys: Vec<T>,
    cache: &'a PairCache<T>,
    bank: KernelBank<T>,
}

/// A fitted model expressed on dataset indices.
enum Fitted<T> {
    Primal { w: Vec<T>, b: T },
    Dual { train: Vec<usize>, beta: Vec<T>, b: T, kernel: Kernel, link: Option<T>, resolution: T },
}

impl<T: Real> Data<'_, T> {
    /// Fits at `h`, warm-starting SVMs along the smaller grid values of C.
    fn fit(&self, h: Hyper, train: &[usize]) -> Fitted<T> {
        if self.kind == ClassifierKind::Lda {
            return self.fit_from(h, train, None, true);
        }
        let mut path: Vec<f64> = self.cfg.c_grid.iter().copied().filter(|&c| c < h.c).collect();
        path.sort_by(f64::total_cmp);
        let mut prev: Option<(f64, Vec<T>)> = None;
        for c in path.into_iter().chain(std::iter::once(h.c)) {
            let init = prev.as_ref().map(|(c0, a)| a.iter().map(|&v| v * T::lit(c / c0)).collect());
            let m = self.fit_from(Hyper { c, gamma: h.gamma }, train, init, c == h.c);
            if c == h.c {
                return m;
            }
            prev = Some((c, self.alpha(&m)));
        }
        unreachable!("path ends at h.c")
    }

    /// Dual variables `α` of a fitted SVM (empty for LDA).
    fn alpha(&self, m: &Fitted<T>) -> Vec<T> {
        match m {
            Fitted::Dual { train, beta, .. } if self.kind != ClassifierKind::Lda => train.iter().zip(beta).map(|(&i, &b)| b * self.ys[i]).collect(),
            _ => Vec::new(),
        }
    }

    /// `with_link` fits the posterior link; sign-only uses skip it.
    fn fit_from(&self, h: Hyper, train: &[usize], init: Option<Vec<T>>, with_link: bool) -> Fitted<T> {
        let positive: Vec<bool> = train.iter().map(|&i| self.y[i] == Level::High).collect();
        match self.kind {
            ClassifierKind::Lda => {
                if self.cache.d > train.len() {
                    let k = self.cache.dot.select(train);
                    let (beta, b) = lda::fit_dual(&k, &positive, self.cache.d, self.cfg.lda_ridge);
                    Fitted::Dual { train: train.to_vec(), beta, b, kernel: Kernel::Linear, link: None, resolution: T::zero() }
                } else {
                    let rows: Vec<&[T]> = train.iter().map(|&i| self.x[i].as_slice()).collect();
                    let (w, b) = lda::fit_primal(&rows, &positive, self.cfg.lda_ridge);
                    Fitted::Primal { w, b }
                }
            }
            ClassifierKind::Lsvm | ClassifierKind::Rsvm => {
                let kernel = kernel_of(self.kind, h);
                let k = self.bank.get(kernel).select(train);
                let ys: Vec<T> = train.iter().map(|&i| self.ys[i]).collect();
                let sol = svm::smo_from(&k, &ys, T::lit(h.c), T::lit(self.cfg.kkt_tol), self.cfg.max_iter, init);
                let coef = sol.coef(&ys);
                let link = with_link.then(|| {
                    let f: Vec<T> =
                        (0..train.len()).map(|i| svm::snap(k.mul_row(i, &coef) - sol.rho, sol.resolution)).collect();
                    svm::fit_link(&f, &positive)
                });
                Fitted::Dual {
                    train: train.to_vec(),
                    beta: coef,
                    b: -sol.rho,
                    kernel,
                    link,
                    resolution: sol.resolution,
                }
            }
        }
    }

    fn decision(&self, m: &Fitted<T>, rows: &[usize]) -> Vec<T> {
        match m {
            Fitted::Primal { w, b } => rows.iter().map(|&i| dot(w, &self.x[i]) + *b).collect(),
            Fitted::Dual { train, beta, b, kernel, resolution, .. } => {
                let k = match kernel {
                    Kernel::Linear => &self.cache.dot,
                    _ => self.bank.get(*kernel),
                };
                rows.iter()
                    .map(|&t| svm::snap(train.iter().zip(beta).map(|(&i, &bi)| bi * k.at(i, t)).sum::<T>() + *b, *resolution))
                    .collect()
            }
        }
    }

    fn p_high(m: &Fitted<T>, f: T) -> T {
        match m {
            Fitted::Dual { link: Some(a), .. } => svm::sigmoid(*a * f),
            _ => svm::sigmoid(f),
        }
    }

    fn f1_on(&self, m: &Fitted<T>, rows: &[usize]) -> f64 {
        let f = self.decision(m, rows);
        let labels: Vec<Level> = f.iter().map(|&v| Level::from_threshold(v > T::zero())).collect();
        let truth: Vec<Level> = rows.iter().map(|&i| self.y[i]).collect();
        f1_score::<f64>(&labels, &truth, Level::High).expect("equal lengths")
    }
}

fn rows_of(groups: &[usize], group_fold: &[usize], keep: impl Fn(usize) -> bool) -> Vec<usize> {
    (0..groups.len()).filter(|&i| keep(group_fold[groups[i]])).collect()
}

/// Builds the pair cache and runs [`crossval_cached`].
pub fn crossval<T: Real>(
    cfg: &ClassifierConfig,
    x: &[Vec<T>],
    y: &[Level],
    groups: &[usize],
    tags: (&str, &str),
) -> Result<CvReport<T>> {
    let cache = PairCache::build(x);
    crossval_cached(cfg, x, y, groups, &cache, tags)
}

/// Repeated stratified k-fold cross-validation with groups kept together.
/// Each outer training split runs an inner stratified CV over the grid
/// (ties to smallest C, then smallest γ). `tags` are `(window, axis)` labels
/// copied into the run.
pub fn crossval_cached<T: Real>(
    cfg: &ClassifierConfig,
    x: &[Vec<T>],
    y: &[Level],
    groups: &[usize],
    cache: &PairCache<T>,
    tags: (&str, &str),
) -> Result<CvReport<T>> {
    cfg.validate()?;
    check_xy(x, y)?;
    if groups.len() != y.len() || cache.len() != y.len() {
        return Err(ClassifyError::LengthMismatch { left: groups.len(), right: y.len() });
    }
    let n_groups = groups.iter().max().map_or(0, |g| g + 1);
    let mut group_label: Vec<Option<Level>> = vec![None; n_groups];
    for (&g, &l) in groups.iter().zip(y) {
        match group_label[g] {
            Some(prev) if prev != l => return Err(ClassifyError::Invalid(format!("group {g} mixes labels"))),
            _ => group_label[g] = Some(l),
        }
    }
    let group_label: Vec<Level> = group_label
        .into_iter()
        .enumerate()
        .map(|(g, l)| l.ok_or_else(|| ClassifyError::Invalid(format!("group {g} has no rows"))))
        .collect::<Result<_>>()?;

    let candidates = cfg.candidates();
    let kernels: Vec<Kernel> = match cfg.kind {
        ClassifierKind::Lda => vec![],
        ClassifierKind::Lsvm => vec![Kernel::Linear],
        ClassifierKind::Rsvm => cfg.gamma_grid.iter().map(|&gamma| Kernel::Rbf { gamma }).collect(),
    };
    let data = Data { kind: cfg.kind, cfg, x, y, ys: sign_vector(y), cache, bank: KernelBank::build(cache, &kernels) };

    let seeds: Vec<u64> = (0..cfg.repeats).map(|r| repeat_seed(cfg.seed, r)).collect();
    let assignments: Vec<Vec<usize>> =
        seeds.iter().map(|&s| stratified_folds(&group_label, cfg.folds, s)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.repeats).flat_map(|r| (0..cfg.folds).map(move |f| (r, f))).collect();

    let folds: Vec<FoldOutcome<T>> = jobs
        .par_iter()
        .map(|&(r, f)| {
            let gf = &assignments[r];
            let train = rows_of(groups, gf, |k| k != f);
            let test = rows_of(groups, gf, |k| k == f);
            let hyper = if candidates.len() == 1 {
                candidates[0]
            } else {
                select(&data, &candidates, groups, &group_label, gf, f, splitmix(seeds[r] ^ (f as u64 + 1)))
            };
            let model = data.fit(hyper, &train);
            let fx = data.decision(&model, &test);
            let pred = posterior_rows(&fx, |v| Data::p_high(&model, v));
            let truth: Vec<Level> = test.iter().map(|&i| y[i]).collect();
            let f1 = f1_score::<f64>(&pred.labels, &truth, Level::High).expect("equal lengths");
            let train_f1 = data.f1_on(&model, &train);
            FoldOutcome {
                repeat: r,
                fold: f,
                p_high: pred.posteriors.iter().map(|p| p[1]).collect(),
                labels: pred.labels,
                train,
                test,
                f1,
                train_f1,
                hyper,
            }
        })
        .collect();

    let scores: Vec<Vec<f64>> =
        (0..cfg.repeats).map(|r| folds[r * cfg.folds..(r + 1) * cfg.folds].iter().map(|o| o.f1).collect()).collect();
    let run = EvalRun::from_scores(cfg.kind.name(), tags.0, tags.1, scores, seeds);
    Ok(CvReport { run, folds })
}

/// Inner-CV grid selection on the groups outside outer fold `outer`.
fn select<T: Real>(
    data: &Data<'_, T>,
    candidates: &[Hyper],
    groups: &[usize],
    group_label: &[Level],
    outer_fold: &[usize],
    outer: usize,
    seed: u64,
) -> Hyper {
    let inner_groups: Vec<usize> = (0..group_label.len()).filter(|&g| outer_fold[g] != outer).collect();
    let labels: Vec<Level> = inner_groups.iter().map(|&g| group_label[g]).collect();
    let smallest = [Level::High, Level::Low].map(|c| labels.iter().filter(|&&l| l == c).count()).into_iter().min().unwrap_or(0);
    let k = data.cfg.inner_folds.min(smallest);
    if k < 2 {
        return candidates[candidates.len() / 2];
    }
    let inner = stratified_folds(&labels, k, seed).expect("k bounded by class counts");
    let mut inner_of = vec![usize::MAX; group_label.len()];
    for (pos, &g) in inner_groups.iter().enumerate() {
        inner_of[g] = inner[pos];
    }
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|f| {
            let tr = (0..groups.len()).filter(|&i| inner_of[groups[i]] != usize::MAX && inner_of[groups[i]] != f).collect();
            let te = (0..groups.len()).filter(|&i| inner_of[groups[i]] == f).collect();
            (tr, te)
        })
        .collect();
    let mut totals = vec![0.0; candidates.len()];
    for (tr, te) in &splits {
        // warm start along ascending C for each γ
        let mut last: Vec<(Option<f64>, f64, Vec<T>)> = Vec::new();
        for (ci, &h) in candidates.iter().enumerate() {
            let slot = last.iter().position(|(g, _, _)| *g == h.gamma);
            let init = slot.map(|s| {
                let (_, c0, a) = &last[s];
                let r = T::lit(h.c / c0);
                a.iter().map(|&v| v * r).collect()
            });
            let m = data.fit_from(h, tr, init, false);
            totals[ci] += data.f1_on(&m, te);
            let alpha = data.alpha(&m);
            match slot {
                Some(s) => last[s] = (h.gamma, h.c, alpha),
                None => last.push((h.gamma, h.c, alpha)),
            }
        }
    }
    let mut best = candidates[0];
    let mut best_score = f64::NEG_INFINITY;
    for (&h, &t) in candidates.iter().zip(&totals) {
        let score = t / k as f64;
        if score > best_score {
            best_score = score;
            best = h;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn data(n: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<Level>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 5;
        (0..n)
            .map(|i| {
                let hi = i % 2 == 0;
                let s = if hi { sep / 2.0 } else { -sep / 2.0 } / (d as f64).sqrt();
                ((0..d).map(|_| { let e: f64 = StandardNormal.sample(&mut rng); e + s }).collect(), Level::from_threshold(hi))
            })
            .unzip()
    }

    #[test]
    fn folds_are_stratified_and_balanced() {
        let labels: Vec<Level> = (0..23).map(|i| Level::from_threshold(i % 3 == 0)).collect();
        let f = stratified_folds(&labels, 5, 7).unwrap();
        for k in 0..5 {
            let members: Vec<usize> = (0..23).filter(|&i| f[i] == k).collect();
            assert!(members.iter().any(|&i| labels[i] == Level::High));
            assert!(members.iter().any(|&i| labels[i] == Level::Low));
            assert!((4..=5).contains(&members.len()));
        }
        assert!(stratified_folds(&labels[..6], 5, 0).is_err());
    }

    #[test]
    fn fold_scores_recompute() {
        let (x, y) = data(60, 2.0, 1);
        let groups: Vec<usize> = (0..60).collect();
        let mut cfg = ClassifierConfig::new(ClassifierKind::Lsvm, 3);
        cfg.repeats = 2;
        let rep = crossval(&cfg, &x, &y, &groups, ("all", "val")).unwrap();
        assert_eq!(rep.folds.len(), 10);
        for o in &rep.folds {
            let truth: Vec<Level> = o.test.iter().map(|&i| y[i]).collect();
            assert_eq!(f1_score::<f64>(&o.labels, &truth, Level::High).unwrap(), o.f1);
            assert_eq!(rep.run.scores[o.repeat][o.fold], o.f1);
        }
        let flat: Vec<f64> = rep.run.scores.iter().flatten().copied().collect();
        assert_eq!(rep.run.f1_mean, flat.iter().sum::<f64>() / 10.0);
    }

    #[test]
    fn groups_never_straddle_folds() {
        let (x, y0) = data(40, 2.0, 2);
        let groups: Vec<usize> = (0..40).map(|i| i / 2).collect();
        let y: Vec<Level> = (0..40).map(|i| y0[(i / 2) % 2]).collect();
        let mut cfg = ClassifierConfig::new(ClassifierKind::Lda, 1);
        cfg.repeats = 3;
        let rep = crossval(&cfg, &x, &y, &groups, ("all", "val")).unwrap();
        for o in &rep.folds {
            for &t in &o.test {
                assert!(!o.train.iter().any(|&tr| groups[tr] == groups[t]));
            }
        }
    }

    #[test]
    fn deterministic() {
        let (x, y) = data(50, 1.0, 4);
        let groups: Vec<usize> = (0..50).collect();
        let mut cfg = ClassifierConfig::new(ClassifierKind::Rsvm, 9);
        cfg.repeats = 2;
        let a = crossval(&cfg, &x, &y, &groups, ("all", "asl")).unwrap();
        let b = crossval(&cfg, &x, &y, &groups, ("all", "asl")).unwrap();
        assert_eq!(a, b);
    }
}
