//! Model fitting and prediction for the three variants.
//!
//! Fitting runs the same pipeline for every variant:
//!
//! 1. min-max normalise the training features (state kept in the model);
//! 2. build the state matrix `G = [F, E]` from a seeded random layer;
//! 3. compute per-sample weights `S`: all ones for plain BLS, fuzzy membership
//!    for the fuzzy variant, intuitionistic fuzzy scores for the IF variant;
//! 4. solve the weighted ridge problem for the output weights, in feature
//!    space when `width(G) <= N` and in sample space otherwise.
//!
//! Targets are one-hot rows over the lexicographically ordered class labels.
//! The binary fuzzy schemes treat class index 0 as `+1` and index 1 as `-1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::sorted_classes;
use crate::linalg::{
    solve_weighted_ridge_dual, solve_weighted_ridge_primal, DiagonalWeights, LinalgError, Matrix,
};
use crate::network::{init_random_layer, NetworkConfig, NetworkError, RandomLayer};
use crate::scoring::fuzzy::fuzzy_score_vector;
use crate::scoring::intuitionistic::{if_score_vector, IfScoreBreakdown, KernelParams};
use crate::scoring::ScoreError;

mod persist;

pub use persist::{ModelFileError, MODEL_FORMAT, MODEL_VERSION};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("{variant} needs exactly two classes, found {found}")]
    ClassCount { variant: VariantKind, found: usize },
    #[error("{variant} needs at least 2 samples per class; class '{class}' has {count}")]
    SparseClass {
        variant: VariantKind,
        class: String,
        count: usize,
    },
    #[error("training set is empty")]
    NoSamples,
    #[error("{expected} labels expected, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("input has {got} features, model expects {expected}")]
    FeatureCount { expected: usize, got: usize },
    #[error("score override has {got} entries, training set has {expected}")]
    OverrideLength { expected: usize, got: usize },
    #[error("regularisation C must be positive and finite, got {0}")]
    BadRegularization(f64),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariantKind {
    #[serde(rename = "bls")]
    Bls,
    #[serde(rename = "f-bls")]
    FuzzyBls,
    #[serde(rename = "if-bls")]
    IntuitionisticBls,
}

impl VariantKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VariantKind::Bls => "bls",
            VariantKind::FuzzyBls => "f-bls",
            VariantKind::IntuitionisticBls => "if-bls",
        }
    }

    pub fn is_fuzzy(self) -> bool {
        self != VariantKind::Bls
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariantKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bls" => Ok(VariantKind::Bls),
            "f-bls" | "fbls" => Ok(VariantKind::FuzzyBls),
            "if-bls" | "ifbls" => Ok(VariantKind::IntuitionisticBls),
            other => Err(format!("unknown variant '{other}' (expected bls, f-bls or if-bls)")),
        }
    }
}

/// Variant together with exactly the parameters it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Variant {
    #[serde(rename = "bls")]
    Bls,
    #[serde(rename = "f-bls")]
    FuzzyBls { delta: f64 },
    #[serde(rename = "if-bls")]
    IntuitionisticBls { kernel: KernelParams },
}

impl Variant {
    pub fn kind(&self) -> VariantKind {
        match self {
            Variant::Bls => VariantKind::Bls,
            Variant::FuzzyBls { .. } => VariantKind::FuzzyBls,
            Variant::IntuitionisticBls { .. } => VariantKind::IntuitionisticBls,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub network: NetworkConfig,
    /// Weight `C` of the data term against the `‖W‖²` penalty.
    pub c_reg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveBranch {
    Primal,
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchPolicy {
    /// Primal when the state width is at most the sample count.
    #[default]
    Auto,
    Force(SolveBranch),
}

impl BranchPolicy {
    pub fn resolve(self, width: usize, n: usize) -> SolveBranch {
        match self {
            BranchPolicy::Auto if width <= n => SolveBranch::Primal,
            BranchPolicy::Auto => SolveBranch::Dual,
            BranchPolicy::Force(b) => b,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    pub branch: BranchPolicy,
    /// Replaces the variant's computed sample weights.
    pub score_override: Option<DiagonalWeights>,
}

/// Per-feature min-max scaling to `[0, 1]`, fit on training data only.
/// Constant features map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: &Matrix) -> MinMaxScaler {
        let mut min = vec![f64::INFINITY; x.cols()];
        let mut max = vec![f64::NEG_INFINITY; x.cols()];
        for row in x.row_iter() {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        MinMaxScaler { min, max }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                let range = self.max[j] - self.min[j];
                *v = if range > 0.0 { (*v - self.min[j]) / range } else { 0.0 };
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub(crate) config: ModelConfig,
    pub(crate) layer: RandomLayer,
    pub(crate) w_out: Matrix,
    pub(crate) norm: MinMaxScaler,
    pub(crate) class_labels: Vec<String>,
    pub(crate) solve_branch: SolveBranch,
}

impl TrainedModel {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layer(&self) -> &RandomLayer {
        &self.layer
    }

    pub fn output_weights(&self) -> &Matrix {
        &self.w_out
    }

    pub fn normalization(&self) -> &MinMaxScaler {
        &self.norm
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn solve_branch(&self) -> SolveBranch {
        self.solve_branch
    }

    pub fn input_dim(&self) -> usize {
        self.layer.input_dim
    }

    fn check_width(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(TrainError::FeatureCount {
                expected: self.input_dim(),
                got: x.cols(),
            });
        }
        Ok(())
    }

    /// Raw network outputs `G W`, one column per class.
    pub fn decision_scores(&self, x: &Matrix) -> Result<Matrix> {
        self.check_width(x)?;
        let xn = self.norm.transform(x);
        let g = self.layer.state_matrix(&xn)?;
        Ok(g.matmul(&self.w_out)?)
    }

    /// Class index per row; ties go to the lower index.
    pub fn predict_indices(&self, x: &Matrix) -> Result<Vec<usize>> {
        let scores = self.decision_scores(x)?;
        Ok(scores.row_iter().map(argmax).collect())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<String>> {
        Ok(self
            .predict_indices(x)?
            .into_iter()
            .map(|c| self.class_labels[c].clone())
            .collect())
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

fn class_indices<S: AsRef<str>>(labels: &[S], classes: &[String]) -> Vec<usize> {
    labels
        .iter()
        .map(|l| {
            classes
                .binary_search_by(|c| c.as_str().cmp(l.as_ref()))
                .expect("label drawn from class list")
        })
        .collect()
}

fn one_hot(idx: &[usize], n_classes: usize) -> Matrix {
    let mut t = Matrix::zeros(idx.len(), n_classes);
    for (i, &c) in idx.iter().enumerate() {
        t.set(i, c, 1.0);
    }
    t
}

/// Class index 0 maps to `+1`, index 1 to `-1`.
fn polarity(idx: &[usize]) -> Vec<i8> {
    idx.iter().map(|&c| if c == 0 { 1 } else { -1 }).collect()
}

fn check_fuzzy_classes<S: AsRef<str>>(kind: VariantKind, labels: &[S], classes: &[String]) -> Result<()> {
    if !kind.is_fuzzy() {
        return Ok(());
    }
    if classes.len() != 2 {
        return Err(TrainError::ClassCount {
            variant: kind,
            found: classes.len(),
        });
    }
    for class in classes {
        let count = labels.iter().filter(|l| l.as_ref() == class).count();
        if count < 2 {
            return Err(TrainError::SparseClass {
                variant: kind,
                class: class.clone(),
                count,
            });
        }
    }
    Ok(())
}

fn variant_scores(
    variant: &Variant,
    xn: &Matrix,
    pol: &[i8],
) -> Result<(DiagonalWeights, Option<IfScoreBreakdown>)> {
    Ok(match variant {
        Variant::Bls => (DiagonalWeights::ones(xn.rows()), None),
        Variant::FuzzyBls { delta } => (fuzzy_score_vector(xn, pol, *delta)?, None),
        Variant::IntuitionisticBls { kernel } => {
            let (s, br) = if_score_vector(xn, pol, kernel)?;
            (s, Some(br))
        }
    })
}

/// Sample weights the variant would place on a training set, computed on the
/// normalised features exactly as `fit` does.
pub fn training_scores<S: AsRef<str>>(
    x: &Matrix,
    labels: &[S],
    cfg: &ModelConfig,
) -> Result<(DiagonalWeights, Option<IfScoreBreakdown>)> {
    let classes = sorted_classes(labels);
    check_fuzzy_classes(cfg.variant.kind(), labels, &classes)?;
    let xn = MinMaxScaler::fit(x).transform(x);
    let pol = polarity(&class_indices(labels, &classes));
    variant_scores(&cfg.variant, &xn, &pol)
}

pub fn fit<S: AsRef<str>>(x: &Matrix, labels: &[S], cfg: &ModelConfig) -> Result<TrainedModel> {
    fit_with(x, labels, cfg, &FitOptions::default())
}

pub fn fit_with<S: AsRef<str>>(
    x: &Matrix,
    labels: &[S],
    cfg: &ModelConfig,
    opts: &FitOptions,
) -> Result<TrainedModel> {
    let n = x.rows();
    if n == 0 {
        return Err(TrainError::NoSamples);
    }
    if labels.len() != n {
        return Err(TrainError::LabelCount {
            expected: n,
            got: labels.len(),
        });
    }
    if !(cfg.c_reg > 0.0 && cfg.c_reg.is_finite()) {
        return Err(TrainError::BadRegularization(cfg.c_reg));
    }
    x.ensure_finite("training features")?;
    let classes = sorted_classes(labels);
    let kind = cfg.variant.kind();
    check_fuzzy_classes(kind, labels, &classes)?;

    let norm = MinMaxScaler::fit(x);
    let xn = norm.transform(x);
    let layer = init_random_layer(&cfg.network, x.cols())?;
    let g = layer.state_matrix(&xn)?;

    let idx = class_indices(labels, &classes);
    let s = match &opts.score_override {
        Some(s) if s.len() != n => {
            return Err(TrainError::OverrideLength {
                expected: n,
                got: s.len(),
            })
        }
        Some(s) => s.clone(),
        None => variant_scores(&cfg.variant, &xn, &polarity(&idx))?.0,
    };
    let t = one_hot(&idx, classes.len());

    let branch = opts.branch.resolve(g.cols(), n);
    let w_out = match branch {
        SolveBranch::Primal => solve_weighted_ridge_primal(&g, &s, &t, cfg.c_reg)?,
        SolveBranch::Dual => solve_weighted_ridge_dual(&g, &s, &t, cfg.c_reg)?,
    };
    Ok(TrainedModel {
        config: cfg.clone(),
        layer,
        w_out,
        norm,
        class_labels: classes,
        solve_branch: branch,
    })
}
