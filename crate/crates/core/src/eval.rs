//! k-fold cross-validation and exhaustive grid search.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, FoldPlan};
use crate::network::NetworkConfig;
use crate::scoring::fuzzy::DEFAULT_DELTA;
use crate::scoring::intuitionistic::{Epsilon, KernelParams};
use crate::trainer::{fit, ModelConfig, TrainError, Variant, VariantKind};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("fold plan covers {plan} samples but dataset '{dataset}' has {n}")]
    PlanMismatch { dataset: String, plan: usize, n: usize },
    #[error("every fold was skipped for lack of training classes")]
    NoScoredFolds,
    #[error("grid is empty: list '{0}' has no values")]
    EmptyGrid(&'static str),
    #[error("no grid configuration could be evaluated ({0} failed)")]
    AllConfigsFailed(usize),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: TrainError,
    },
}

pub type Result<T> = std::result::Result<T, EvalError>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub model_name: String,
    pub dataset_name: String,
    /// Test accuracy in `[0, 1]` per fold; `None` for skipped folds.
    pub per_fold_accuracy: Vec<Option<f64>>,
    pub mean_accuracy: f64,
    /// Sample standard deviation over scored folds (0 with fewer than two).
    pub std_dev: f64,
    pub best_config: ModelConfig,
}

impl CvResult {
    pub fn scored_folds(&self) -> usize {
        self.per_fold_accuracy.iter().flatten().count()
    }
}

pub fn accuracy<A: AsRef<str>, B: AsRef<str>>(pred: &[A], truth: &[B]) -> f64 {
    let hits = pred
        .iter()
        .zip(truth)
        .filter(|(p, t)| p.as_ref() == t.as_ref())
        .count();
    hits as f64 / truth.len() as f64
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Trains on each fold's complement and scores on the fold.
///
/// A fold whose training part lacks one of the dataset's classes, or cannot
/// meet a fuzzy variant's per-class minimum, is skipped with a warning and
/// recorded as `None`.
pub fn cross_validate(ds: &Dataset, cfg: &ModelConfig, plan: &FoldPlan) -> Result<CvResult> {
    if plan.assignments.len() != ds.len() {
        return Err(EvalError::PlanMismatch {
            dataset: ds.name.clone(),
            plan: plan.assignments.len(),
            n: ds.len(),
        });
    }
    let mut per_fold = Vec::with_capacity(plan.k);
    for f in 0..plan.k {
        let (train, test) = plan.split(f);
        let (x_tr, y_tr) = ds.subset(&train);
        let missing = ds
            .class_labels
            .iter()
            .find(|c| !y_tr.iter().any(|y| y == *c));
        if let Some(c) = missing {
            warn!("{}: fold {f} skipped, training part has no '{c}' samples", ds.name);
            per_fold.push(None);
            continue;
        }
        let model = match fit(&x_tr, &y_tr, cfg) {
            Ok(m) => m,
            Err(e @ (TrainError::SparseClass { .. } | TrainError::ClassCount { .. })) => {
                warn!("{}: fold {f} skipped, {e}", ds.name);
                per_fold.push(None);
                continue;
            }
            Err(source) => return Err(EvalError::Fold { fold: f, source }),
        };
        let (x_te, y_te) = ds.subset(&test);
        let pred = model
            .predict(&x_te)
            .map_err(|source| EvalError::Fold { fold: f, source })?;
        per_fold.push(Some(accuracy(&pred, &y_te)));
    }
    let scored: Vec<f64> = per_fold.iter().flatten().copied().collect();
    if scored.is_empty() {
        return Err(EvalError::NoScoredFolds);
    }
    let (mean, std) = mean_and_std(&scored);
    Ok(CvResult {
        model_name: cfg.variant.kind().to_string(),
        dataset_name: ds.name.clone(),
        per_fold_accuracy: per_fold,
        mean_accuracy: mean,
        std_dev: std,
        best_config: cfg.clone(),
    })
}

/// Value lists swept by [`grid_search`]. Only the axes a variant uses are
/// enumerated; the others are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "C", default = "default_c")]
    pub c_reg: Vec<f64>,
    #[serde(rename = "m", default = "default_m")]
    pub feature_groups: Vec<usize>,
    #[serde(rename = "p", default = "default_p")]
    pub feature_nodes: Vec<usize>,
    #[serde(rename = "q", default = "default_q")]
    pub enhancement_nodes: Vec<usize>,
    #[serde(default = "default_mu")]
    pub mu: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: Vec<Epsilon>,
}

fn default_c() -> Vec<f64> {
    vec![1.0]
}
fn default_m() -> Vec<usize> {
    vec![NetworkConfig::default().feature_groups]
}
fn default_p() -> Vec<usize> {
    vec![NetworkConfig::default().feature_nodes]
}
fn default_q() -> Vec<usize> {
    vec![NetworkConfig::default().enhancement_nodes]
}
fn default_mu() -> Vec<f64> {
    vec![KernelParams::default().mu]
}
fn default_delta() -> Vec<f64> {
    vec![DEFAULT_DELTA]
}
fn default_epsilon() -> Vec<Epsilon> {
    vec![Epsilon::MedianHeuristic]
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            c_reg: default_c(),
            feature_groups: default_m(),
            feature_nodes: default_p(),
            enhancement_nodes: default_q(),
            mu: default_mu(),
            delta: default_delta(),
            epsilon: default_epsilon(),
        }
    }
}

impl GridSpec {
    /// The published sweep: C in 10^{-6,-4,...,6}, m = 1:2:21, p = 5:5:50,
    /// q = 5:10:105, mu in 2^{-5..5}; delta and epsilon fixed at defaults.
    pub fn paper() -> GridSpec {
        GridSpec {
            c_reg: (-3..=3).map(|e| 100f64.powi(e)).collect(),
            feature_groups: (1..=21).step_by(2).collect(),
            feature_nodes: (5..=50).step_by(5).collect(),
            enhancement_nodes: (5..=105).step_by(10).collect(),
            mu: (-5..=5).map(|e| 2f64.powi(e)).collect(),
            delta: default_delta(),
            epsilon: default_epsilon(),
        }
    }

    fn validate(&self, variant: VariantKind) -> Result<()> {
        let mut lists = vec![
            ("C", self.c_reg.is_empty()),
            ("m", self.feature_groups.is_empty()),
            ("p", self.feature_nodes.is_empty()),
            ("q", self.enhancement_nodes.is_empty()),
        ];
        if variant.is_fuzzy() {
            lists.push(("delta", self.delta.is_empty()));
        }
        if variant == VariantKind::IntuitionisticBls {
            lists.push(("mu", self.mu.is_empty()));
            lists.push(("epsilon", self.epsilon.is_empty()));
        }
        match lists.into_iter().find(|(_, empty)| *empty) {
            Some((name, _)) => Err(EvalError::EmptyGrid(name)),
            None => Ok(()),
        }
    }

    pub fn size(&self, variant: VariantKind) -> usize {
        let base = self.c_reg.len()
            * self.feature_groups.len()
            * self.feature_nodes.len()
            * self.enhancement_nodes.len();
        match variant {
            VariantKind::Bls => base,
            VariantKind::FuzzyBls => base * self.delta.len(),
            VariantKind::IntuitionisticBls => {
                base * self.mu.len() * self.delta.len() * self.epsilon.len()
            }
        }
    }

    /// Cartesian product in enumeration order: C outermost, then m, p, q,
    /// mu, delta, epsilon. Everything else comes from `base`.
    pub fn configs(&self, variant: VariantKind, base: &NetworkConfig) -> Result<Vec<ModelConfig>> {
        self.validate(variant)?;
        let mut out = Vec::with_capacity(self.size(variant));
        for &c_reg in &self.c_reg {
            for &m in &self.feature_groups {
                for &p in &self.feature_nodes {
                    for &q in &self.enhancement_nodes {
                        let network = NetworkConfig {
                            feature_groups: m,
                            feature_nodes: p,
                            enhancement_nodes: q,
                            ..base.clone()
                        };
                        for v in self.variants(variant) {
                            out.push(ModelConfig {
                                variant: v,
                                network: network.clone(),
                                c_reg,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn variants(&self, variant: VariantKind) -> Vec<Variant> {
        match variant {
            VariantKind::Bls => vec![Variant::Bls],
            VariantKind::FuzzyBls => self
                .delta
                .iter()
                .map(|&delta| Variant::FuzzyBls { delta })
                .collect(),
            VariantKind::IntuitionisticBls => {
                let mut v = Vec::new();
                for &mu in &self.mu {
                    for &delta in &self.delta {
                        for &epsilon in &self.epsilon {
                            v.push(Variant::IntuitionisticBls {
                                kernel: KernelParams { mu, delta, epsilon },
                            });
                        }
                    }
                }
                v
            }
        }
    }
}

/// One grid point: its result, or why it could not be evaluated.
#[derive(Debug, Clone)]
pub struct GridEntry {
    pub config: ModelConfig,
    pub outcome: std::result::Result<CvResult, String>,
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    /// Every configuration in enumeration order.
    pub entries: Vec<GridEntry>,
    /// Index into `entries` of the highest mean accuracy (earliest on ties).
    pub best_index: usize,
}

impl GridSearchResult {
    pub fn best(&self) -> &CvResult {
        self.entries[self.best_index]
            .outcome
            .as_ref()
            .expect("best entry succeeded")
    }
}

/// Cross-validates every configuration of the grid on the same folds and the
/// same network seed. `jobs = 0` uses all cores; the result does not depend
/// on the job count.
pub fn grid_search(
    ds: &Dataset,
    variant: VariantKind,
    grid: &GridSpec,
    base: &NetworkConfig,
    plan: &FoldPlan,
    jobs: usize,
) -> Result<GridSearchResult> {
    let configs = grid.configs(variant, base)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    let entries: Vec<GridEntry> = pool.install(|| {
        configs
            .into_par_iter()
            .map(|config| {
                let outcome = cross_validate(ds, &config, plan).map_err(|e| e.to_string());
                if let Err(e) = &outcome {
                    warn!("{}: configuration skipped: {e}", ds.name);
                }
                GridEntry { config, outcome }
            })
            .collect()
    });

    let mut best: Option<(usize, f64)> = None;
    for (i, e) in entries.iter().enumerate() {
        if let Ok(r) = &e.outcome {
            if best.is_none_or(|(_, m)| r.mean_accuracy > m) {
                best = Some((i, r.mean_accuracy));
            }
        }
    }
    match best {
        Some((best_index, _)) => Ok(GridSearchResult {
            entries,
            best_index,
        }),
        None => Err(EvalError::AllConfigsFailed(entries.len())),
    }
}
