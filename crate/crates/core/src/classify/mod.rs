//! Binary H/L classifiers (LDA, linear SVM, RBF SVM), posteriors, F1 and the
//! repeated stratified cross-validation harness with inner grid search.

mod cv;
pub mod lda;
pub mod linalg;
pub mod svm;

pub use cv::{crossval, crossval_cached, stratified_folds, CvReport, EvalRun, FoldOutcome, KernelBank, PairCache};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Level;
use crate::scalar::Real;
use linalg::{dot, sq_dist, Square};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ClassifyError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Lda,
    Lsvm,
    Rsvm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::Lda, ClassifierKind::Lsvm, ClassifierKind::Rsvm];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Lda => "LDA",
            ClassifierKind::Lsvm => "LSVM",
            ClassifierKind::Rsvm => "RSVM",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "lda" => Ok(ClassifierKind::Lda),
            "lsvm" => Ok(ClassifierKind::Lsvm),
            "rsvm" => Ok(ClassifierKind::Rsvm),
            o => Err(format!("unknown classifier `{o}`")),
        }
    }
}

/// `count` decade-spaced values from `10^lo` to `10^hi`.
pub fn decade_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 10f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    /// Ridge as a multiple of the mean covariance diagonal.
    pub lda_ridge: f64,
    pub seed: u64,
    pub repeats: usize,
    pub folds: usize,
    pub inner_folds: usize,
    pub kkt_tol: f64,
    pub max_iter: usize,
    /// Parameters used by a direct `train` call outside cross-validation.
    pub c: f64,
    pub gamma: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            kind: ClassifierKind::Lda,
            c_grid: decade_grid(-3, 3),
            gamma_grid: decade_grid(-3, 3),
            lda_ridge: 1e-6,
            seed: 0,
            repeats: 10,
            folds: 5,
            inner_folds: 5,
            kkt_tol: 1e-3,
            max_iter: 10_000_000,
            c: 1.0,
            gamma: 1.0,
        }
    }
}

impl ClassifierConfig {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        ClassifierConfig { kind, seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |g: &[f64]| !g.is_empty() && g.iter().all(|&v| v > 0.0 && v.is_finite());
        if !ok(&self.c_grid) || !ok(&self.gamma_grid) {
            return Err(ClassifyError::Invalid("grids must be nonempty and positive".into()));
        }
        if !(self.lda_ridge > 0.0) || !(self.c > 0.0) || !(self.gamma > 0.0) || !(self.kkt_tol > 0.0) {
            return Err(ClassifyError::Invalid("ridge, C, gamma and tolerance must be positive".into()));
        }
        if self.repeats == 0 || self.folds < 2 || self.inner_folds < 2 {
            return Err(ClassifyError::Invalid("need repeats ≥ 1 and folds ≥ 2".into()));
        }
        Ok(())
    }

    /// `(C, γ)` candidates in tie-break order: ascending C, then ascending γ.
    pub fn candidates(&self) -> Vec<Hyper> {
        match self.kind {
            ClassifierKind::Lda => vec![Hyper { c: 0.0, gamma: None }],
            ClassifierKind::Lsvm => self.c_grid.iter().map(|&c| Hyper { c, gamma: None }).collect(),
            ClassifierKind::Rsvm => self
                .c_grid
                .iter()
                .flat_map(|&c| self.gamma_grid.iter().map(move |&g| Hyper { c, gamma: Some(g) }))
                .collect(),
        }
    }
}

/// Selected grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub c: f64,
    pub gamma: Option<f64>,
}

/// `Rbf` evaluates `exp(−γ ‖a − b‖² / d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval<T: Real>(&self, a: &[T], b: &[T]) -> T {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => (-T::lit(gamma) * sq_dist(a, b) / T::count(a.len().max(1))).exp(),
        }
    }

    fn from_pair<T: Real>(&self, dot: T, sqd: T, d: usize) -> T {
        match *self {
            Kernel::Linear => dot,
            Kernel::Rbf { gamma } => (-T::lit(gamma) * sqd / T::count(d.max(1))).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model<T> {
    /// Posterior `σ(wᵀx + b)`.
    Lda { w: Vec<T>, b: T },
    /// Decision `f(x) = Σ coef_i K(sv_i, x) − rho`, posterior `σ(link · f)`.
    /// Values within `resolution` of zero are reported as exactly zero.
    Svm { kernel: Kernel, support: Vec<Vec<T>>, coef: Vec<T>, rho: T, link: T, resolution: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub labels: Vec<Level>,
    /// `[P(Low), P(High)]` per row.
    pub posteriors: Vec<[T; 2]>,
    pub decision: Vec<T>,
}

pub(crate) fn check_xy<T: Real>(x: &[Vec<T>], y: &[Level]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(ClassifyError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(ClassifyError::TooFewSamples(format!("{} rows", x.len())));
    }
    let d = x[0].len();
    for r in x {
        if r.len() != d {
            return Err(ClassifyError::DimensionMismatch { expected: d, got: r.len() });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(ClassifyError::Invalid("non-finite feature".into()));
        }
    }
    if y.iter().all(|&l| l == y[0]) {
        return Err(ClassifyError::SingleClass);
    }
    Ok(d)
}

pub(crate) fn sign_vector<T: Real>(y: &[Level]) -> Vec<T> {
    y.iter().map(|&l| if l == Level::High { T::one() } else { -T::one() }).collect()
}

pub(crate) fn kernel_of(kind: ClassifierKind, h: Hyper) -> Kernel {
    match (kind, h.gamma) {
        (ClassifierKind::Rsvm, Some(gamma)) => Kernel::Rbf { gamma },
        _ => Kernel::Linear,
    }
}

/// Fits a model with the fixed `config.c` / `config.gamma`.
pub fn train<T: Real>(config: &ClassifierConfig, x: &[Vec<T>], y: &[Level]) -> Result<Model<T>> {
    config.validate()?;
    let gamma = (config.kind == ClassifierKind::Rsvm).then_some(config.gamma);
    train_with(config, Hyper { c: config.c, gamma }, x, y)
}

pub fn train_with<T: Real>(config: &ClassifierConfig, h: Hyper, x: &[Vec<T>], y: &[Level]) -> Result<Model<T>> {
    let d = check_xy(x, y)?;
    let positive: Vec<bool> = y.iter().map(|&l| l == Level::High).collect();
    let n = x.len();
    match config.kind {
        ClassifierKind::Lda => {
            if d > n {
                let mut k = Square::zeros(n);
                for i in 0..n {
                    for j in i..n {
                        let v = dot(&x[i], &x[j]);
                        k.set(i, j, v);
                        k.set(j, i, v);
                    }
                }
                let (beta, b) = lda::fit_dual(&k, &positive, d, config.lda_ridge);
                let mut w = vec![T::zero(); d];
                for (row, &bi) in x.iter().zip(&beta) {
                    w.iter_mut().zip(row).for_each(|(a, &v)| *a = *a + bi * v);
                }
                Ok(Model::Lda { w, b })
            } else {
                let rows: Vec<&[T]> = x.iter().map(Vec::as_slice).collect();
                let (w, b) = lda::fit_primal(&rows, &positive, config.lda_ridge);
                Ok(Model::Lda { w, b })
            }
        }
        ClassifierKind::Lsvm | ClassifierKind::Rsvm => {
            let kernel = kernel_of(config.kind, h);
            let mut k = Square::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let v = kernel.eval(&x[i], &x[j]);
                    k.set(i, j, v);
                    k.set(j, i, v);
                }
            }
            let ys: Vec<T> = sign_vector(y);
            let sol = svm::smo(&k, &ys, T::lit(h.c), T::lit(config.kkt_tol), config.max_iter);
            let coef = sol.coef(&ys);
            let f: Vec<T> = (0..n).map(|i| svm::snap(k.mul_row(i, &coef) - sol.rho, sol.resolution)).collect();
            let link = svm::fit_link(&f, &positive);
            let keep: Vec<usize> = (0..n).filter(|&i| coef[i] != T::zero()).collect();
            Ok(Model::Svm {
                kernel,
                support: keep.iter().map(|&i| x[i].clone()).collect(),
                coef: keep.iter().map(|&i| coef[i]).collect(),
                rho: sol.rho,
                link,
                resolution: sol.resolution,
            })
        }
    }
}

impl<T: Real> Square<T> {
    /// `row_i · v`.
    pub fn mul_row(&self, i: usize, v: &[T]) -> T {
        dot(&self.data[i * self.n..(i + 1) * self.n], v)
    }
}

impl<T: Real> Model<T> {
    pub fn dim(&self) -> usize {
        match self {
            Model::Lda { w, .. } => w.len(),
            Model::Svm { support, .. } => support.first().map_or(0, Vec::len),
        }
    }

    pub fn decision(&self, x: &[T]) -> T {
        match self {
            Model::Lda { w, b } => dot(w, x) + *b,
            Model::Svm { kernel, support, coef, rho, resolution, .. } => svm::snap(
                support.iter().zip(coef).map(|(s, &c)| c * kernel.eval(s, x)).sum::<T>() - *rho,
                *resolution,
            ),
        }
    }

    /// `P(High)` for a decision value.
    pub fn posterior_high(&self, f: T) -> T {
        match self {
            Model::Lda { .. } => svm::sigmoid(f),
            Model::Svm { link, .. } => svm::sigmoid(*link * f),
        }
    }
}

/// Row posteriors from decision values: `[1 − p, p]`, label `High` iff `f > 0`.
pub(crate) fn posterior_rows<T: Real>(f: &[T], p_high: impl Fn(T) -> T) -> Prediction<T> {
    let posteriors = f.iter().map(|&v| {
        let p = p_high(v);
        [T::one() - p, p]
    });
    Prediction {
        labels: f.iter().map(|&v| Level::from_threshold(v > T::zero())).collect(),
        posteriors: posteriors.collect(),
        decision: f.to_vec(),
    }
}

pub fn predict<T: Real>(model: &Model<T>, x: &[Vec<T>]) -> Result<Prediction<T>> {
    let d = model.dim();
    if let Some(r) = x.iter().find(|r| r.len() != d) {
        return Err(ClassifyError::DimensionMismatch { expected: d, got: r.len() });
    }
    let f: Vec<T> = x.iter().map(|r| model.decision(r)).collect();
    Ok(posterior_rows(&f, |v| model.posterior_high(v)))
}

/// Harmonic mean of precision and recall for `positive`; 0 when both vanish.
pub fn f1_score<T: Real>(pred: &[Level], truth: &[Level], positive: Level) -> Result<T> {
    if pred.len() != truth.len() {
        return Err(ClassifyError::LengthMismatch { left: pred.len(), right: truth.len() });
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p == positive, t == positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    // 2PR/(P+R) = 2TP / (2TP + FP + FN)
    let den = 2 * tp + fp + fneg;
    if tp == 0 || den == 0 {
        return Ok(T::zero());
    }
    Ok(T::count(2 * tp) / T::count(den))
}
