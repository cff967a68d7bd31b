//! The bottleneck predictor: a linear head over concept activations, the
//! sign prior on its weights, and their training loop.

mod loss;
mod prior;
mod train;

pub use loss::{
    contrastive_loss, gradients, loss_ce, loss_prior, loss_total, prior_gradient, Objective,
    DEFAULT_CONTRASTIVE_MARGIN,
};
pub use prior::{empirical_prior, PriorMatrix, TruthPrior};
pub use train::{evaluate_accuracy, train_head, TrainConfig, TrainedHead};

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `scores = activations · Wᵀ + bias`, one row of `W` per class and one
/// column per bottleneck concept.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub fit_bias: bool,
    pub class_names: Vec<String>,
    /// Bottleneck concept texts in column order.
    pub concepts: Vec<String>,
}

impl LinearHead {
    /// Zero-initialised head.
    pub fn zeros(class_names: Vec<String>, concepts: Vec<String>, fit_bias: bool) -> Result<Self> {
        if class_names.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a head needs at least 2 classes, got {}",
                class_names.len()
            )));
        }
        Ok(Self {
            weights: Array2::zeros((class_names.len(), concepts.len())),
            bias: Array1::zeros(class_names.len()),
            fit_bias,
            class_names,
            concepts,
        })
    }

    /// Unnamed head with `n_classes × n_features` zero weights.
    pub fn anonymous(n_classes: usize, n_features: usize, fit_bias: bool) -> Result<Self> {
        Self::zeros(
            (0..n_classes).map(|c| format!("class_{c}")).collect(),
            (0..n_features).map(|j| format!("feature_{j}")).collect(),
            fit_bias,
        )
    }

    pub fn n_classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_concepts(&self) -> usize {
        self.weights.ncols()
    }

    pub fn scores(&self, activations: &[f64]) -> Result<Vec<f64>> {
        if activations.len() != self.n_concepts() {
            return Err(Error::DimensionMismatch {
                expected: self.n_concepts(),
                got: activations.len(),
            });
        }
        Ok(self
            .weights
            .rows()
            .into_iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(activations).map(|(w, a)| w * a).sum::<f64>() + b)
            .collect())
    }

    pub fn predict(&self, activations: &[f64]) -> Result<usize> {
        Ok(argmax(&self.scores(activations)?))
    }

    pub fn scores_matrix(&self, activations: ArrayView2<f64>) -> Result<Array2<f64>> {
        if activations.ncols() != self.n_concepts() {
            return Err(Error::DimensionMismatch {
                expected: self.n_concepts(),
                got: activations.ncols(),
            });
        }
        Ok(activations.dot(&self.weights.t()) + &self.bias)
    }

    pub fn predict_matrix(&self, activations: ArrayView2<f64>) -> Result<Vec<usize>> {
        let s = self.scores_matrix(activations)?;
        Ok(s.axis_iter(Axis(0))
            .map(|row| argmax(row.as_slice().expect("standard layout")))
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, &HeadFile::from(self))
    }

    pub fn load(path: &Path) -> Result<Self> {
        crate::io::read_json::<HeadFile>(path)?.try_into()
    }
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Serialize, Deserialize)]
struct HeadFile {
    shape: (usize, usize),
    weights: Vec<f64>,
    bias: Vec<f64>,
    fit_bias: bool,
    class_names: Vec<String>,
    concepts: Vec<String>,
}

impl From<&LinearHead> for HeadFile {
    fn from(h: &LinearHead) -> Self {
        Self {
            shape: h.weights.dim(),
            weights: h.weights.iter().copied().collect(),
            bias: h.bias.to_vec(),
            fit_bias: h.fit_bias,
            class_names: h.class_names.clone(),
            concepts: h.concepts.clone(),
        }
    }
}

impl TryFrom<HeadFile> for LinearHead {
    type Error = Error;

    fn try_from(f: HeadFile) -> Result<Self> {
        let (n, nc) = f.shape;
        if f.class_names.len() != n || f.concepts.len() != nc || f.bias.len() != n {
            return Err(Error::Format(format!(
                "head shape {n}x{nc} disagrees with {} class names, {} concepts, {} biases",
                f.class_names.len(),
                f.concepts.len(),
                f.bias.len()
            )));
        }
        if f.weights.iter().chain(&f.bias).any(|v| !v.is_finite()) {
            return Err(Error::Format("head has non-finite entries".into()));
        }
        let weights = Array2::from_shape_vec((n, nc), f.weights)
            .map_err(|e| Error::Format(format!("head weights: {e}")))?;
        let mut head = LinearHead::zeros(f.class_names, f.concepts, f.fit_bias)?;
        head.weights = weights;
        head.bias = Array1::from(f.bias);
        Ok(head)
    }
}
