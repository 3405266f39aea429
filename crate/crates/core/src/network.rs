//! Randomised feature and enhancement groups of a broad learning system.
//!
//! Each feature group maps the input through a random affine projection and a
//! feature map; the groups are concatenated and projected again through each
//! enhancement group. The state matrix handed to the output solver is the
//! column concatenation `[feature nodes, enhancement nodes]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("input has {got} columns, network expects {expected}")]
    InputWidth { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeatureActivation {
    #[default]
    Linear,
    Tanh,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EnhancementActivation {
    #[default]
    Tanh,
    Sigmoid,
    Relu,
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl FeatureActivation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            FeatureActivation::Linear => v,
            FeatureActivation::Tanh => v.tanh(),
            FeatureActivation::Sigmoid => sigmoid(v),
        }
    }
}

impl EnhancementActivation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            EnhancementActivation::Tanh => v.tanh(),
            EnhancementActivation::Sigmoid => sigmoid(v),
            EnhancementActivation::Relu => v.max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub feature_groups: usize,
    pub feature_nodes: usize,
    pub enhancement_groups: usize,
    pub enhancement_nodes: usize,
    #[serde(default)]
    pub feature_activation: FeatureActivation,
    #[serde(default)]
    pub enhancement_activation: EnhancementActivation,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            feature_groups: 5,
            feature_nodes: 5,
            enhancement_groups: 1,
            enhancement_nodes: 15,
            feature_activation: FeatureActivation::Linear,
            enhancement_activation: EnhancementActivation::Tanh,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), NetworkError> {
        for (name, v) in [
            ("feature groups", self.feature_groups),
            ("feature nodes", self.feature_nodes),
            ("enhancement groups", self.enhancement_groups),
            ("enhancement nodes", self.enhancement_nodes),
        ] {
            if v == 0 {
                return Err(NetworkError::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    pub fn feature_width(&self) -> usize {
        self.feature_groups * self.feature_nodes
    }

    /// Column count of the state matrix: feature nodes plus enhancement nodes.
    pub fn state_width(&self) -> usize {
        self.feature_width() + self.enhancement_groups * self.enhancement_nodes
    }
}

/// Frozen random weights of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomLayer {
    pub input_dim: usize,
    pub feature_activation: FeatureActivation,
    pub enhancement_activation: EnhancementActivation,
    /// One `input_dim × p` matrix per feature group.
    pub feature_weights: Vec<Matrix>,
    pub feature_biases: Vec<Vec<f64>>,
    /// One `mp × q` matrix per enhancement group.
    pub enhancement_weights: Vec<Matrix>,
    pub enhancement_biases: Vec<Vec<f64>>,
}

const FEATURE_STREAM: u64 = 0;
const ENHANCEMENT_STREAM: u64 = 1;

/// Weights and bias of one group, uniform on [-1, 1]. The stream is keyed by
/// (layer, group) so groups are independent of each other's sizes.
fn draw_group(seed: u64, layer: u64, group: usize, rows: usize, cols: usize) -> (Matrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((layer << 32) | group as u64);
    let w = Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0));
    let b = (0..cols).map(|_| rng.random_range(-1.0..=1.0)).collect();
    (w, b)
}

pub fn init_random_layer(cfg: &NetworkConfig, input_dim: usize) -> Result<RandomLayer, NetworkError> {
    cfg.validate()?;
    if input_dim == 0 {
        return Err(NetworkError::InvalidConfig("input dimension must be >= 1".into()));
    }
    let (feature_weights, feature_biases) = (0..cfg.feature_groups)
        .map(|i| draw_group(cfg.seed, FEATURE_STREAM, i, input_dim, cfg.feature_nodes))
        .unzip();
    let mp = cfg.feature_width();
    let (enhancement_weights, enhancement_biases) = (0..cfg.enhancement_groups)
        .map(|j| draw_group(cfg.seed, ENHANCEMENT_STREAM, j, mp, cfg.enhancement_nodes))
        .unzip();
    Ok(RandomLayer {
        input_dim,
        feature_activation: cfg.feature_activation,
        enhancement_activation: cfg.enhancement_activation,
        feature_weights,
        feature_biases,
        enhancement_weights,
        enhancement_biases,
    })
}

fn project_groups(
    x: &Matrix,
    weights: &[Matrix],
    biases: &[Vec<f64>],
    act: impl Fn(f64) -> f64,
) -> Result<Matrix, NetworkError> {
    let width: usize = weights.iter().map(Matrix::cols).sum();
    let mut out = Matrix::zeros(x.rows(), width);
    let mut offset = 0;
    for (w, b) in weights.iter().zip(biases) {
        let z = x.matmul(w)?;
        for i in 0..x.rows() {
            let dst = &mut out.row_mut(i)[offset..offset + w.cols()];
            for ((d, &v), &bias) in dst.iter_mut().zip(z.row(i)).zip(b) {
                *d = act(v + bias);
            }
        }
        offset += w.cols();
    }
    Ok(out)
}

impl RandomLayer {
    pub fn feature_width(&self) -> usize {
        self.feature_weights.iter().map(Matrix::cols).sum()
    }

    pub fn state_width(&self) -> usize {
        self.feature_width() + self.enhancement_weights.iter().map(Matrix::cols).sum::<usize>()
    }

    /// `[F_1 … F_m]` with `F_i = act(X W_i + b_i)`.
    pub fn feature_groups(&self, x: &Matrix) -> Result<Matrix, NetworkError> {
        if x.cols() != self.input_dim {
            return Err(NetworkError::InputWidth {
                expected: self.input_dim,
                got: x.cols(),
            });
        }
        let act = self.feature_activation;
        project_groups(x, &self.feature_weights, &self.feature_biases, |v| act.apply(v))
    }

    /// `[E_1 … E_l]` with `E_j = act(F W_j + b_j)`.
    pub fn enhancement_groups(&self, fm: &Matrix) -> Result<Matrix, NetworkError> {
        let mp = self.feature_width();
        if fm.cols() != mp {
            return Err(NetworkError::InputWidth {
                expected: mp,
                got: fm.cols(),
            });
        }
        let act = self.enhancement_activation;
        project_groups(fm, &self.enhancement_weights, &self.enhancement_biases, |v| act.apply(v))
    }

    /// Full state matrix for raw (already normalised) inputs.
    pub fn state_matrix(&self, x: &Matrix) -> Result<Matrix, NetworkError> {
        let fm = self.feature_groups(x)?;
        let el = self.enhancement_groups(&fm)?;
        assemble_state(&fm, &el)
    }
}

/// Column concatenation `[F, E]`. Both blocks must be non-empty.
pub fn assemble_state(fm: &Matrix, el: &Matrix) -> Result<Matrix, NetworkError> {
    if fm.cols() == 0 || el.cols() == 0 {
        return Err(NetworkError::InvalidConfig(
            "feature and enhancement blocks must both have at least one column".into(),
        ));
    }
    Ok(fm.hconcat(el)?)
}
