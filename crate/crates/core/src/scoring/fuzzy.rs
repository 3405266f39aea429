//! Input-space fuzzy membership: a sample's weight falls linearly with its
//! distance to its own class centre, normalised by the class radius.

use crate::linalg::{DiagonalWeights, Matrix};

use super::{check_labels, check_positive, ScoreError};

pub const DEFAULT_DELTA: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassGeometry {
    pub center_pos: Vec<f64>,
    pub center_neg: Vec<f64>,
    pub radius_pos: f64,
    pub radius_neg: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl ClassGeometry {
    fn for_label(&self, label: i8) -> (&[f64], f64) {
        if label > 0 {
            (&self.center_pos, self.radius_pos)
        } else {
            (&self.center_neg, self.radius_neg)
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Class means and the largest member-to-centre distance of each class.
pub fn class_geometry(x: &Matrix, labels: &[i8]) -> Result<ClassGeometry, ScoreError> {
    check_labels(labels, x.rows())?;
    let d = x.cols();
    let mut center_pos = vec![0.0; d];
    let mut center_neg = vec![0.0; d];
    let (mut n_pos, mut n_neg) = (0usize, 0usize);
    for (row, &y) in x.row_iter().zip(labels) {
        let (c, n) = if y > 0 {
            (&mut center_pos, &mut n_pos)
        } else {
            (&mut center_neg, &mut n_neg)
        };
        for (ci, v) in c.iter_mut().zip(row) {
            *ci += v;
        }
        *n += 1;
    }
    center_pos.iter_mut().for_each(|v| *v /= n_pos as f64);
    center_neg.iter_mut().for_each(|v| *v /= n_neg as f64);

    let (mut radius_pos, mut radius_neg) = (0.0f64, 0.0f64);
    for (row, &y) in x.row_iter().zip(labels) {
        if y > 0 {
            radius_pos = radius_pos.max(euclidean(row, &center_pos));
        } else {
            radius_neg = radius_neg.max(euclidean(row, &center_neg));
        }
    }
    Ok(ClassGeometry {
        center_pos,
        center_neg,
        radius_pos,
        radius_neg,
        n_pos,
        n_neg,
    })
}

/// `1 − ‖x − centre‖ / (radius + delta)` for the sample's own class.
pub fn fuzzy_membership(x: &[f64], label: i8, geom: &ClassGeometry, delta: f64) -> f64 {
    let (center, radius) = geom.for_label(label);
    1.0 - euclidean(x, center) / (radius + delta)
}

pub fn fuzzy_score_vector(
    x: &Matrix,
    labels: &[i8],
    delta: f64,
) -> Result<DiagonalWeights, ScoreError> {
    check_positive("delta", delta)?;
    let geom = class_geometry(x, labels)?;
    let scores = x
        .row_iter()
        .zip(labels)
        .map(|(row, &y)| fuzzy_membership(row, y, &geom, delta))
        .collect();
    // members never sit beyond their class radius, so every score is in (0, 1]
    Ok(DiagonalWeights::new(scores).expect("fuzzy scores lie in (0, 1]"))
}
