use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{LinearHead, PriorMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_CONTRASTIVE_MARGIN: f64 = 0.6;

fn check_shape(w: &Array2<f64>, prior: &PriorMatrix) -> Result<()> {
    if w.dim() != prior.entries.dim() {
        return Err(Error::ShapeMismatch {
            expected: w.dim(),
            got: prior.entries.dim(),
        });
    }
    Ok(())
}

/// Mean absolute gap between `tanh(W)` and the ±1 prior signs.
pub fn loss_prior(w: &Array2<f64>, prior: &PriorMatrix) -> Result<f64> {
    check_shape(w, prior)?;
    if w.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = w
        .iter()
        .zip(&prior.entries)
        .map(|(w, p)| (w.tanh() - p).abs())
        .sum();
    Ok(total / w.len() as f64)
}

/// Gradient of [`loss_prior`]; the subgradient at `tanh(w) = p` is 0.
pub fn prior_gradient(w: &Array2<f64>, prior: &PriorMatrix) -> Result<Array2<f64>> {
    check_shape(w, prior)?;
    let scale = 1.0 / w.len().max(1) as f64;
    let mut g = w.mapv(f64::tanh);
    g.zip_mut_with(&prior.entries, |t, &p| {
        let diff = *t - p;
        let sign = if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        };
        *t = sign * (1.0 - *t * *t) * scale;
    });
    Ok(g)
}

fn check_batch(head: &LinearHead, x: ArrayView2<f64>, y: &[usize]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.ncols() != head.n_concepts() {
        return Err(Error::DimensionMismatch {
            expected: head.n_concepts(),
            got: x.ncols(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= head.n_classes()) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} out of range for {} classes",
            head.n_classes()
        )));
    }
    if y.is_empty() {
        return Err(Error::EmptySplit);
    }
    Ok(())
}

/// Row-wise softmax of the head's scores.
fn softmax_rows(head: &LinearHead, x: ArrayView2<f64>) -> Array2<f64> {
    let mut s = x.dot(&head.weights.t()) + &head.bias;
    for mut row in s.axis_iter_mut(Axis(0)) {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let z = row.sum();
        row /= z;
    }
    s
}

/// Mean softmax cross-entropy.
pub fn loss_ce(head: &LinearHead, x: ArrayView2<f64>, y: &[usize]) -> Result<f64> {
    check_batch(head, x, y)?;
    let s = x.dot(&head.weights.t()) + &head.bias;
    let total: f64 = s
        .axis_iter(Axis(0))
        .zip(y)
        .map(|(row, &c)| {
            let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            lse - row[c]
        })
        .sum();
    Ok(total / y.len() as f64)
}

/// Training objective: cross-entropy, plus `prior_weight · loss_prior` when a
/// prior is given, plus `l2/2 · ‖W‖²`.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub prior: Option<&'a PriorMatrix>,
    pub prior_weight: f64,
    pub l2: f64,
}

impl<'a> Objective<'a> {
    pub fn new(prior: Option<&'a PriorMatrix>) -> Self {
        Self {
            prior,
            prior_weight: 1.0,
            l2: 0.0,
        }
    }

    pub fn loss(&self, head: &LinearHead, x: ArrayView2<f64>, y: &[usize]) -> Result<f64> {
        let mut l = loss_ce(head, x, y)?;
        if let Some(p) = self.prior {
            l += self.prior_weight * loss_prior(&head.weights, p)?;
        }
        if self.l2 != 0.0 {
            l += 0.5 * self.l2 * head.weights.iter().map(|w| w * w).sum::<f64>();
        }
        Ok(l)
    }

    pub fn gradients(
        &self,
        head: &LinearHead,
        x: ArrayView2<f64>,
        y: &[usize],
    ) -> Result<(Array2<f64>, Array1<f64>)> {
        check_batch(head, x, y)?;
        let mut g = softmax_rows(head, x);
        for (mut row, &c) in g.axis_iter_mut(Axis(0)).zip(y) {
            row[c] -= 1.0;
        }
        g /= y.len() as f64;
        let mut dw = g.t().dot(&x);
        let db = if head.fit_bias {
            g.sum_axis(Axis(0))
        } else {
            Array1::zeros(head.n_classes())
        };
        if let Some(p) = self.prior {
            dw.scaled_add(self.prior_weight, &prior_gradient(&head.weights, p)?);
        }
        if self.l2 != 0.0 {
            dw.scaled_add(self.l2, &head.weights);
        }
        Ok((dw, db))
    }
}

/// `L_CE + loss_prior` (or `L_CE` alone without a prior).
pub fn loss_total(
    head: &LinearHead,
    x: ArrayView2<f64>,
    y: &[usize],
    prior: Option<&PriorMatrix>,
) -> Result<f64> {
    Objective::new(prior).loss(head, x, y)
}

/// Analytic `(∂L/∂W, ∂L/∂bias)` of [`loss_total`].
pub fn gradients(
    head: &LinearHead,
    x: ArrayView2<f64>,
    y: &[usize],
    prior: Option<&PriorMatrix>,
) -> Result<(Array2<f64>, Array1<f64>)> {
    Objective::new(prior).gradients(head, x, y)
}

/// Margin loss on a similarity `s ∈ [−1, 1]`: `y·max(0, m − s) + (1 − y)·s`.
pub fn contrastive_loss(y: bool, s: f64, margin: f64) -> f64 {
    if y {
        (margin - s).max(0.0)
    } else {
        s
    }
}
