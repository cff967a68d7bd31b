use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{LinearHead, Objective, PriorMatrix};
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub prior_enabled: bool,
    /// Multiplier on the prior term.
    pub prior_weight: f64,
    pub l2: f64,
    pub fit_bias: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 200,
            seed: 0,
            prior_enabled: true,
            prior_weight: 1.0,
            l2: 0.0,
            fit_bias: true,
        }
    }
}

impl TrainConfig {
    /// Plain linear probe settings: same optimiser, no prior.
    pub fn linear_probe(seed: u64) -> Self {
        Self {
            seed,
            prior_enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if self.l2 < 0.0 || self.prior_weight < 0.0 {
            return Err(Error::InvalidArgument(
                "l2 and prior weight must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainedHead {
    pub head: LinearHead,
    /// Epoch of the kept checkpoint; 0 is the initial head.
    pub best_epoch: usize,
    pub best_val_accuracy: Option<f64>,
    /// Validation accuracy after each epoch, starting with the initial head.
    pub val_history: Vec<f64>,
}

/// Percentage of rows whose argmax prediction equals the label.
pub fn evaluate_accuracy(head: &LinearHead, x: ArrayView2<f64>, y: &[usize]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::EmptySplit);
    }
    let pred = head.predict_matrix(x)?;
    let correct = pred.iter().zip(y).filter(|(p, t)| p == t).count();
    Ok(100.0 * correct as f64 / y.len() as f64)
}

/// Mini-batch gradient descent from a zero head. With a validation set, the
/// checkpoint with the highest validation accuracy is returned (later epochs
/// win ties); without one, the final head.
#[allow(clippy::too_many_arguments)]
pub fn train_head(
    x: ArrayView2<f64>,
    y: &[usize],
    val: Option<(ArrayView2<f64>, &[usize])>,
    class_names: Vec<String>,
    concepts: Vec<String>,
    cfg: &TrainConfig,
    prior: Option<&PriorMatrix>,
) -> Result<TrainedHead> {
    cfg.validate()?;
    let mut head = LinearHead::zeros(class_names, concepts, cfg.fit_bias)?;
    if x.ncols() != head.n_concepts() {
        return Err(Error::DimensionMismatch {
            expected: head.n_concepts(),
            got: x.ncols(),
        });
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= head.n_classes()) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range for {} classes",
            head.n_classes()
        )));
    }
    for c in 0..head.n_classes() {
        if !y.contains(&c) {
            return Err(Error::EmptyClass(c));
        }
    }
    let prior = if cfg.prior_enabled {
        let p = prior.ok_or(Error::MissingPrior)?;
        if p.entries.dim() != head.weights.dim() {
            return Err(Error::ShapeMismatch {
                expected: head.weights.dim(),
                got: p.entries.dim(),
            });
        }
        Some(p)
    } else {
        None
    };
    let objective = Objective {
        prior,
        prior_weight: cfg.prior_weight,
        l2: cfg.l2,
    };

    let val_acc = |h: &LinearHead| -> Result<Option<f64>> {
        match val {
            Some((vx, vy)) if !vy.is_empty() => evaluate_accuracy(h, vx, vy).map(Some),
            _ => Ok(None),
        }
    };
    let mut best = (head.clone(), 0, val_acc(&head)?);
    let mut history: Vec<f64> = best.2.into_iter().collect();

    let mut rng = seeded(cfg.seed);
    let mut order: Vec<usize> = (0..y.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let xb = x.select(Axis(0), chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
            let (dw, db) = objective.gradients(&head, xb.view(), &yb)?;
            head.weights.scaled_add(-cfg.learning_rate, &dw);
            head.bias.scaled_add(-cfg.learning_rate, &db);
        }
        match val_acc(&head)? {
            Some(acc) => {
                history.push(acc);
                if acc >= best.2.unwrap_or(f64::NEG_INFINITY) {
                    best = (head.clone(), epoch, Some(acc));
                }
            }
            None => best = (head.clone(), epoch, None),
        }
    }
    Ok(TrainedHead {
        head: best.0,
        best_epoch: best.1,
        best_val_accuracy: best.2,
        val_history: history,
    })
}
