//! Kernel-space intuitionistic fuzzy scores.
//!
//! Every quantity is evaluated from kernel values only: distances between
//! mapped samples, class centroids and class radii in the implicit feature
//! space all expand into sums of kernel entries. The score of a sample combines
//!
//! * membership: closeness to its own class centroid relative to the class radius;
//! * non-membership: `(1 − membership)` times the fraction of opposite-class
//!   samples inside its ε-neighbourhood.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::{pairwise_sq_dist, DiagonalWeights, Matrix};

use super::fuzzy::DEFAULT_DELTA;
use super::{check_labels, check_positive, ScoreError};

/// Slack tolerated on a squared kernel distance before it counts as invalid,
/// relative to the magnitude of the kernel values involved.
const RADICAND_TOL: f64 = 1e-12;

/// Neighbourhood radius policy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Epsilon {
    /// Median of all pairwise kernel distances in the training set.
    #[default]
    MedianHeuristic,
    Fixed(f64),
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Epsilon::MedianHeuristic => f.write_str("median"),
            Epsilon::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Epsilon {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("median") {
            return Ok(Epsilon::MedianHeuristic);
        }
        match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(Epsilon::Fixed(v)),
            _ => Err(format!("epsilon must be 'median' or a non-negative number, got '{s}'")),
        }
    }
}

impl Serialize for Epsilon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Epsilon::MedianHeuristic => s.serialize_str("median"),
            Epsilon::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Epsilon::from_str(&v.to_string()),
            Raw::Text(t) => Epsilon::from_str(&t),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Gaussian width: `K(a, b) = exp(−‖a − b‖² / mu²)`.
    pub mu: f64,
    pub delta: f64,
    #[serde(default)]
    pub epsilon: Epsilon,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            mu: 1.0,
            delta: DEFAULT_DELTA,
            epsilon: Epsilon::MedianHeuristic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfScoreBreakdown {
    pub membership: Vec<f64>,
    pub non_membership: Vec<f64>,
    pub hetero_ratio: Vec<f64>,
    pub score: Vec<f64>,
    /// The neighbourhood radius actually used.
    pub epsilon: f64,
}

pub fn gaussian_kernel(a: &Matrix, b: &Matrix, mu: f64) -> Result<Matrix, ScoreError> {
    check_positive("mu", mu)?;
    let d2 = pairwise_sq_dist(a, b).map_err(|_| ScoreError::LengthMismatch {
        what: "kernel input columns",
        expected: a.cols(),
        got: b.cols(),
    })?;
    let mu2 = mu * mu;
    Ok(d2.map(|v| (-v / mu2).exp()))
}

fn checked_sqrt(radicand: f64, scale: f64) -> Result<f64, ScoreError> {
    if radicand < -RADICAND_TOL * scale.max(1.0) || radicand.is_nan() {
        return Err(ScoreError::InvalidKernel(radicand));
    }
    Ok(radicand.max(0.0).sqrt())
}

/// Distance between two mapped samples: `√(K(r,r) + K(l,l) − 2K(r,l))`.
pub fn kernel_distance(k_rr: f64, k_ll: f64, k_rl: f64) -> Result<f64, ScoreError> {
    let scale = k_rr.abs() + k_ll.abs() + 2.0 * k_rl.abs();
    checked_sqrt(k_rr + k_ll - 2.0 * k_rl, scale)
}

fn check_square(k: &Matrix, n_labels: usize) -> Result<(), ScoreError> {
    if k.rows() != k.cols() {
        return Err(ScoreError::LengthMismatch {
            what: "kernel matrix columns",
            expected: k.rows(),
            got: k.cols(),
        });
    }
    if k.rows() != n_labels {
        return Err(ScoreError::LengthMismatch {
            what: "labels",
            expected: k.rows(),
            got: n_labels,
        });
    }
    Ok(())
}

/// Distance from every sample to its own class centroid in kernel space.
fn centroid_distances(k: &Matrix, labels: &[i8]) -> Result<Vec<f64>, ScoreError> {
    check_square(k, labels.len())?;
    check_labels(labels, k.rows())?;
    let n = k.rows();
    let mut class_total = [0.0f64; 2];
    let mut class_count = [0usize; 2];
    // row sums restricted to the sample's own class
    let mut own_sum = vec![0.0f64; n];
    for r in 0..n {
        let c = usize::from(labels[r] < 0);
        class_count[c] += 1;
        let row = k.row(r);
        let s: f64 = row
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y == labels[r])
            .map(|(v, _)| v)
            .sum();
        own_sum[r] = s;
        class_total[c] += s;
    }
    (0..n)
        .map(|r| {
            let c = usize::from(labels[r] < 0);
            let nc = class_count[c] as f64;
            let krr = k.get(r, r);
            let centroid_sq = class_total[c] / (nc * nc);
            let cross = 2.0 * own_sum[r] / nc;
            checked_sqrt(krr + centroid_sq - cross, krr.abs() + centroid_sq.abs() + cross.abs())
        })
        .collect()
}

/// Largest member-to-centroid kernel distance of each class, `(positive, negative)`.
pub fn kernel_class_radii(k: &Matrix, labels: &[i8]) -> Result<(f64, f64), ScoreError> {
    let dist = centroid_distances(k, labels)?;
    Ok(radii_from(&dist, labels))
}

fn radii_from(dist: &[f64], labels: &[i8]) -> (f64, f64) {
    let mut radii = (0.0f64, 0.0f64);
    for (&d, &y) in dist.iter().zip(labels) {
        if y > 0 {
            radii.0 = radii.0.max(d);
        } else {
            radii.1 = radii.1.max(d);
        }
    }
    radii
}

/// Kernel-space membership `1 − ‖ψ(x) − centroid‖ / (radius + delta)`.
pub fn kernel_membership(
    k: &Matrix,
    labels: &[i8],
    radii: (f64, f64),
    delta: f64,
) -> Result<Vec<f64>, ScoreError> {
    check_positive("delta", delta)?;
    let dist = centroid_distances(k, labels)?;
    Ok(dist
        .iter()
        .zip(labels)
        .map(|(&d, &y)| {
            let r = if y > 0 { radii.0 } else { radii.1 };
            (1.0 - d / (r + delta)).clamp(0.0, 1.0)
        })
        .collect())
}

/// Fraction of opposite-class samples within kernel distance `epsilon`.
/// The sample itself is always in its own neighbourhood.
pub fn heterogeneity_ratio(k: &Matrix, labels: &[i8], epsilon: f64) -> Result<Vec<f64>, ScoreError> {
    check_square(k, labels.len())?;
    let n = k.rows();
    let mut out = Vec::with_capacity(n);
    for r in 0..n {
        let (mut total, mut hetero) = (0usize, 0usize);
        for l in 0..n {
            let d = if l == r {
                0.0
            } else {
                kernel_distance(k.get(r, r), k.get(l, l), k.get(r, l))?
            };
            if d <= epsilon {
                total += 1;
                if labels[l] != labels[r] {
                    hetero += 1;
                }
            }
        }
        out.push(hetero as f64 / total as f64);
    }
    Ok(out)
}

/// Heterogeneity ratios and non-membership `(1 − θ) Θ` for each sample.
pub fn non_membership(
    k: &Matrix,
    labels: &[i8],
    epsilon: f64,
    membership: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), ScoreError> {
    if membership.len() != labels.len() {
        return Err(ScoreError::LengthMismatch {
            what: "membership values",
            expected: labels.len(),
            got: membership.len(),
        });
    }
    let ratio = heterogeneity_ratio(k, labels, epsilon)?;
    let nm = membership
        .iter()
        .zip(&ratio)
        .map(|(&theta, &h)| (1.0 - theta) * h)
        .collect();
    Ok((ratio, nm))
}

/// Combines membership and non-membership into a single weight.
pub fn if_score(theta: f64, theta_tilde: f64) -> Result<f64, ScoreError> {
    let unit = 0.0..=1.0;
    if !unit.contains(&theta) || !unit.contains(&theta_tilde) || theta + theta_tilde > 1.0 + 1e-12 {
        return Err(ScoreError::InvalidScoreInputs { theta, theta_tilde });
    }
    Ok(if theta_tilde == 0.0 {
        theta
    } else if theta <= theta_tilde {
        0.0
    } else {
        (1.0 - theta_tilde) / (2.0 - theta - theta_tilde)
    })
}

/// Median of the strictly upper-triangular pairwise kernel distances.
pub fn median_kernel_distance(k: &Matrix) -> Result<f64, ScoreError> {
    let n = k.rows();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for r in 0..n {
        for l in r + 1..n {
            d.push(kernel_distance(k.get(r, r), k.get(l, l), k.get(r, l))?);
        }
    }
    if d.is_empty() {
        return Ok(0.0);
    }
    d.sort_by(f64::total_cmp);
    let m = d.len() / 2;
    Ok(if d.len() % 2 == 1 {
        d[m]
    } else {
        0.5 * (d[m - 1] + d[m])
    })
}

/// Full scoring pipeline over a precomputed kernel matrix.
pub fn if_scores_from_kernel(
    k: &Matrix,
    labels: &[i8],
    delta: f64,
    epsilon: Epsilon,
) -> Result<(DiagonalWeights, IfScoreBreakdown), ScoreError> {
    let dist = centroid_distances(k, labels)?;
    let radii = radii_from(&dist, labels);
    let membership = kernel_membership(k, labels, radii, delta)?;
    let eps = match epsilon {
        Epsilon::MedianHeuristic => median_kernel_distance(k)?,
        Epsilon::Fixed(v) => v,
    };
    let (hetero_ratio, non_membership) = non_membership(k, labels, eps, &membership)?;
    let score = membership
        .iter()
        .zip(&non_membership)
        .map(|(&t, &nt)| if_score(t, nt))
        .collect::<Result<Vec<_>, _>>()?;
    debug_assert!(membership
        .iter()
        .zip(&non_membership)
        .all(|(t, nt)| t + nt <= 1.0 + 1e-12));
    let weights = DiagonalWeights::new(score.clone()).expect("scores lie in [0, 1]");
    Ok((
        weights,
        IfScoreBreakdown {
            membership,
            non_membership,
            hetero_ratio,
            score,
            epsilon: eps,
        },
    ))
}

/// Intuitionistic fuzzy scores of a training set under the Gaussian kernel.
pub fn if_score_vector(
    x: &Matrix,
    labels: &[i8],
    params: &KernelParams,
) -> Result<(DiagonalWeights, IfScoreBreakdown), ScoreError> {
    check_labels(labels, x.rows())?;
    check_positive("delta", params.delta)?;
    let k = gaussian_kernel(x, x, params.mu)?;
    if_scores_from_kernel(&k, labels, params.delta, params.epsilon)
}
