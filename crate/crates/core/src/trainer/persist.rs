//! Model files: versioned JSON holding everything needed to predict.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! saved model reproduces its in-memory predictions bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{MinMaxScaler, ModelConfig, SolveBranch, TrainedModel};
use crate::linalg::Matrix;
use crate::network::RandomLayer;

pub const MODEL_FORMAT: &str = "ifbls-model";
pub const MODEL_VERSION: u32 = 1;

const PREPROCESSING: &str = "per-feature min-max scaling to [0, 1] fit on the training data";
const TARGETS: &str = "one-hot over class_labels; binary sample weights use class 0 as +1";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("cannot access model file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("not a model file (format '{0}')")]
    WrongFormat(String),
    #[error("unsupported model file version {0} (this build reads version {MODEL_VERSION})")]
    UnsupportedVersion(u32),
    #[error("inconsistent model file: {0}")]
    Inconsistent(String),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    preprocessing: String,
    targets: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifest: Option<String>,
    config: ModelConfig,
    class_labels: Vec<String>,
    solve_branch: SolveBranch,
    normalization: MinMaxScaler,
    layer: RandomLayer,
    output_weights: Matrix,
}

impl TrainedModel {
    /// Serialises the model; `manifest` names the run manifest that produced it.
    pub fn to_json(&self, manifest: Option<&str>) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            preprocessing: PREPROCESSING.into(),
            targets: TARGETS.into(),
            manifest: manifest.map(str::to_owned),
            config: self.config.clone(),
            class_labels: self.class_labels.clone(),
            solve_branch: self.solve_branch,
            normalization: self.norm.clone(),
            layer: self.layer.clone(),
            output_weights: self.w_out.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<TrainedModel, ModelFileError> {
        let f: ModelFile = serde_json::from_str(text)?;
        if f.format != MODEL_FORMAT {
            return Err(ModelFileError::WrongFormat(f.format));
        }
        if f.version != MODEL_VERSION {
            return Err(ModelFileError::UnsupportedVersion(f.version));
        }
        let width = f.layer.state_width();
        if f.output_weights.shape() != (width, f.class_labels.len()) {
            return Err(ModelFileError::Inconsistent(format!(
                "output weights are {:?}, expected ({width}, {})",
                f.output_weights.shape(),
                f.class_labels.len()
            )));
        }
        if f.normalization.min.len() != f.layer.input_dim || f.normalization.max.len() != f.layer.input_dim {
            return Err(ModelFileError::Inconsistent(
                "normalisation width differs from input dimension".into(),
            ));
        }
        Ok(TrainedModel {
            config: f.config,
            layer: f.layer,
            w_out: f.output_weights,
            norm: f.normalization,
            class_labels: f.class_labels,
            solve_branch: f.solve_branch,
        })
    }

    pub fn save(&self, path: &Path, manifest: Option<&str>) -> Result<(), ModelFileError> {
        fs::write(path, self.to_json(manifest)).map_err(|source| ModelFileError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<TrainedModel, ModelFileError> {
        let text = fs::read_to_string(path).map_err(|source| ModelFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        TrainedModel::from_json(&text)
    }
}
