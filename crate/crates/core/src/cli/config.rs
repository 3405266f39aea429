//! TOML run configuration. Every key is optional; command-line flags win
//! over file values, which win over built-in defaults.
//!
//! ```toml
//! [model]
//! variant = "if-bls"
//! C = 100.0
//!
//! [network]
//! m = 5
//! p = 5
//! l = 1
//! q = 15
//! seed = 1
//! feature_activation = "linear"
//! enhancement_activation = "tanh"
//!
//! [kernel]
//! mu = 2.0
//! delta = 1e-4
//! epsilon = "median"
//!
//! [cv]
//! k = 5
//! fold_seed = 3
//!
//! [data]
//! path = "blobs.csv"
//! label = "y"
//! header = true
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::network::{EnhancementActivation, FeatureActivation, NetworkConfig};
use crate::scoring::fuzzy::DEFAULT_DELTA;
use crate::scoring::intuitionistic::{Epsilon, KernelParams};
use crate::trainer::{ModelConfig, Variant, VariantKind};

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub model: ModelSection,
    pub network: NetworkSection,
    pub kernel: KernelSection,
    pub cv: CvSection,
    pub data: DataSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub variant: Option<VariantKind>,
    #[serde(rename = "C")]
    pub c_reg: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub m: Option<usize>,
    pub p: Option<usize>,
    pub l: Option<usize>,
    pub q: Option<usize>,
    pub seed: Option<u64>,
    pub feature_activation: Option<FeatureActivation>,
    pub enhancement_activation: Option<EnhancementActivation>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub mu: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<Epsilon>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub k: Option<usize>,
    pub fold_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    pub label: Option<String>,
    pub header: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn load_opt(path: Option<&Path>) -> Result<FileConfig, CliError> {
        path.map_or_else(|| Ok(FileConfig::default()), FileConfig::load)
    }
}

/// Network and kernel values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct ModelOverrides {
    pub variant: Option<VariantKind>,
    pub c_reg: Option<f64>,
    pub m: Option<usize>,
    pub p: Option<usize>,
    pub l: Option<usize>,
    pub q: Option<usize>,
    pub seed: Option<u64>,
    pub feature_activation: Option<FeatureActivation>,
    pub enhancement_activation: Option<EnhancementActivation>,
    pub mu: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<Epsilon>,
}

pub fn resolve_variant(flags: &ModelOverrides, file: &FileConfig) -> Result<VariantKind, CliError> {
    flags
        .variant
        .or(file.model.variant)
        .ok_or_else(|| CliError::Usage("the following required argument was not provided: --variant".into()))
}

pub fn resolve_network(flags: &ModelOverrides, file: &FileConfig) -> NetworkConfig {
    let d = NetworkConfig::default();
    let n = &file.network;
    NetworkConfig {
        feature_groups: flags.m.or(n.m).unwrap_or(d.feature_groups),
        feature_nodes: flags.p.or(n.p).unwrap_or(d.feature_nodes),
        enhancement_groups: flags.l.or(n.l).unwrap_or(d.enhancement_groups),
        enhancement_nodes: flags.q.or(n.q).unwrap_or(d.enhancement_nodes),
        feature_activation: flags
            .feature_activation
            .or(n.feature_activation)
            .unwrap_or(d.feature_activation),
        enhancement_activation: flags
            .enhancement_activation
            .or(n.enhancement_activation)
            .unwrap_or(d.enhancement_activation),
        seed: flags.seed.or(n.seed).unwrap_or(d.seed),
    }
}

pub fn resolve_model(flags: &ModelOverrides, file: &FileConfig) -> Result<ModelConfig, CliError> {
    let kind = resolve_variant(flags, file)?;
    let k = &file.kernel;
    let delta = flags.delta.or(k.delta).unwrap_or(DEFAULT_DELTA);
    let variant = match kind {
        VariantKind::Bls => Variant::Bls,
        VariantKind::FuzzyBls => Variant::FuzzyBls { delta },
        VariantKind::IntuitionisticBls => Variant::IntuitionisticBls {
            kernel: KernelParams {
                mu: flags.mu.or(k.mu).unwrap_or(KernelParams::default().mu),
                delta,
                epsilon: flags.epsilon.or(k.epsilon).unwrap_or_default(),
            },
        },
    };
    Ok(ModelConfig {
        variant,
        network: resolve_network(flags, file),
        c_reg: flags.c_reg.or(file.model.c_reg).unwrap_or(DEFAULT_C),
    })
}
