//! Concept grounding: one binary logistic classifier per concept, trained on
//! pretraining image features labeled by annotating their paired reports.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concepts::{cosine, Embedder, HashedTrigramEmbedder, SupportCounter};
use crate::error::{Error, Result};
use crate::oracle::{AnnotationLabel, AnnotationOracle};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainPair {
    pub pair_id: String,
    pub report_text: String,
    pub image_features: Vec<f64>,
}

/// Pretraining pairs with their report embeddings computed once.
pub struct PretrainSet {
    pairs: Vec<PretrainPair>,
    report_embeddings: Vec<Vec<f64>>,
    dim: usize,
}

impl PretrainSet {
    pub fn new(pairs: Vec<PretrainPair>) -> Result<Self> {
        let dim = pairs.first().map_or(0, |p| p.image_features.len());
        for p in &pairs {
            if p.image_features.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.image_features.len(),
                });
            }
            if p.image_features.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "pair {} has non-finite features",
                    p.pair_id
                )));
            }
        }
        let emb = HashedTrigramEmbedder::default();
        let report_embeddings = pairs
            .par_iter()
            .map(|p| emb.embed(&p.report_text))
            .collect();
        Ok(Self {
            pairs,
            report_embeddings,
            dim,
        })
    }

    pub fn pairs(&self) -> &[PretrainPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.dim
    }

    /// Indices of the reports to annotate for `question`: the `n_sim` most
    /// similar reports by embedding cosine, then `n_rand` drawn without
    /// replacement from the rest. Requests larger than the set return every
    /// pair.
    pub fn sample_for_concept(
        &self,
        question: &str,
        n_sim: usize,
        n_rand: usize,
        seed: u64,
    ) -> Vec<usize> {
        let n = self.pairs.len();
        if n_sim + n_rand == 0 || n == 0 {
            return Vec::new();
        }
        let q = HashedTrigramEmbedder::default().embed(question);
        let mut ranked: Vec<(usize, f64)> = self
            .report_embeddings
            .iter()
            .enumerate()
            .map(|(i, e)| (i, cosine(&q, e)))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        if n_sim + n_rand >= n {
            if n_sim + n_rand > n {
                log::warn!(
                    "requested {n_sim}+{n_rand} reports for {question:?} but only {n} exist; using all"
                );
            }
            return dedup_by_pair_id(&self.pairs, ranked.into_iter().map(|(i, _)| i));
        }
        let mut out: Vec<usize> = ranked[..n_sim].iter().map(|&(i, _)| i).collect();
        let mut rest: Vec<usize> = ranked[n_sim..].iter().map(|&(i, _)| i).collect();
        rest.sort_unstable();
        let mut rng = seeded(seed);
        let (picked, _) = rest.partial_shuffle(&mut rng, n_rand);
        out.extend_from_slice(picked);
        dedup_by_pair_id(&self.pairs, out)
    }

    fn features(&self, idx: &[usize]) -> Array2<f64> {
        let mut x = Array2::zeros((idx.len(), self.dim));
        for (row, &i) in idx.iter().enumerate() {
            x.row_mut(row)
                .assign(&ArrayView1::from(&self.pairs[i].image_features));
        }
        x
    }
}

fn dedup_by_pair_id(pairs: &[PretrainPair], idx: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut seen = std::collections::HashSet::new();
    idx.into_iter()
        .filter(|&i| seen.insert(pairs[i].pair_id.as_str()))
        .collect()
}

pub fn annotate(
    report_text: &str,
    question: &str,
    oracle: &dyn AnnotationOracle,
) -> AnnotationLabel {
    oracle.annotate(report_text, question)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub val_fraction: f64,
    pub fit_bias: bool,
    /// Reports sampled by similarity per concept.
    pub n_sim: usize,
    /// Reports sampled at random per concept.
    pub n_rand: usize,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 200,
            seed: 0,
            val_fraction: 0.2,
            fit_bias: true,
            n_sim: 1000,
            n_rand: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingModel {
    pub concept: String,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Accuracy on the held-out fraction of the annotated pairs.
    pub val_accuracy: f64,
    pub n_positive: usize,
    pub n_negative: usize,
}

impl GroundingModel {
    pub fn zeros(concept: &str, dim: usize) -> Self {
        Self {
            concept: concept.to_string(),
            weights: vec![0.0; dim],
            bias: 0.0,
            val_accuracy: 0.0,
            n_positive: 0,
            n_negative: 0,
        }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean binary cross-entropy of `sigmoid(x·w + b)` against `y`.
pub fn bce_loss(x: ArrayView2<f64>, y: &[f64], w: ArrayView1<f64>, b: f64) -> f64 {
    let z = x.dot(&w) + b;
    z.iter()
        .zip(y)
        .map(|(&z, &t)| softplus(z) - t * z)
        .sum::<f64>()
        / y.len() as f64
}

/// Gradient of [`bce_loss`] with respect to `(w, b)`.
pub fn bce_gradient(
    x: ArrayView2<f64>,
    y: &[f64],
    w: ArrayView1<f64>,
    b: f64,
) -> (Array1<f64>, f64) {
    let z = x.dot(&w) + b;
    let r: Array1<f64> = z.iter().zip(y).map(|(&z, &t)| sigmoid(z) - t).collect();
    let m = y.len() as f64;
    (x.t().dot(&r) / m, r.sum() / m)
}

/// Result of a mini-batch logistic regression fit.
#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub weights: Array1<f64>,
    pub bias: f64,
    /// Full-data loss before training followed by the loss after each epoch.
    pub losses: Vec<f64>,
}

/// Plain mini-batch gradient descent on mean BCE from a zero start.
pub fn fit_logistic(
    x: ArrayView2<f64>,
    y: &[f64],
    cfg: &GroundingConfig,
    seed: u64,
) -> LogisticFit {
    let (n, d) = x.dim();
    let mut w = Array1::zeros(d);
    let mut b = 0.0;
    let mut losses = vec![bce_loss(x, y, w.view(), b)];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seeded(seed);
    let bs = cfg.batch_size.max(1);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(bs) {
            let xb = x.select(Axis(0), chunk);
            let yb: Vec<f64> = chunk.iter().map(|&i| y[i]).collect();
            let (gw, gb) = bce_gradient(xb.view(), &yb, w.view(), b);
            w.scaled_add(-cfg.learning_rate, &gw);
            if cfg.fit_bias {
                b -= cfg.learning_rate * gb;
            }
        }
        losses.push(bce_loss(x, y, w.view(), b));
    }
    LogisticFit {
        weights: w,
        bias: b,
        losses,
    }
}

/// Trains `g_c` on labeled features, holding out `val_fraction` (seeded) to
/// measure `val_accuracy`.
pub fn train_grounder(
    question: &str,
    x: ArrayView2<f64>,
    y: &[f64],
    cfg: &GroundingConfig,
) -> Result<GroundingModel> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let n_pos = y.iter().filter(|&&t| t > 0.5).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass(question.to_string()));
    }
    let seed = derive_seed(cfg.seed, question);
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.shuffle(&mut seeded(seed ^ 0x5eed));
    let n_val = ((y.len() as f64 * cfg.val_fraction).round() as usize).min(y.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let xt = x.select(Axis(0), train_idx);
    let yt: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
    let fit = fit_logistic(xt.view(), &yt, cfg, seed);
    let mut model = GroundingModel {
        concept: question.to_string(),
        weights: fit.weights.to_vec(),
        bias: fit.bias,
        val_accuracy: 0.0,
        n_positive: n_pos,
        n_negative: n_neg,
    };
    let eval_idx = if val_idx.is_empty() {
        train_idx
    } else {
        val_idx
    };
    let correct = eval_idx
        .iter()
        .filter(|&&i| {
            let z = x.row(i).dot(&ArrayView1::from(&model.weights)) + model.bias;
            (z >= 0.0) == (y[i] > 0.5)
        })
        .count();
    model.val_accuracy = correct as f64 / eval_idx.len() as f64;
    Ok(model)
}

/// Samples, annotates and trains the grounder for one concept.
pub fn ground_concept(
    question: &str,
    set: &PretrainSet,
    annotator: &dyn AnnotationOracle,
    cfg: &GroundingConfig,
) -> Result<GroundingModel> {
    let idx = set.sample_for_concept(
        question,
        cfg.n_sim,
        cfg.n_rand,
        derive_seed(cfg.seed, question),
    );
    let mut kept = Vec::with_capacity(idx.len());
    let mut y = Vec::with_capacity(idx.len());
    for i in idx {
        if let Some(t) = annotator
            .annotate(&set.pairs[i].report_text, question)
            .as_target()
        {
            kept.push(i);
            y.push(t);
        }
    }
    let x = set.features(&kept);
    train_grounder(question, x.view(), &y, cfg)
}

/// Trains every concept's grounder independently (in parallel); output order
/// follows `questions`.
pub fn train_grounders(
    questions: &[String],
    set: &PretrainSet,
    annotator: &dyn AnnotationOracle,
    cfg: &GroundingConfig,
) -> Result<Vec<GroundingModel>> {
    questions
        .par_iter()
        .map(|q| ground_concept(q, set, annotator, cfg))
        .collect()
}

/// Concept activations `σ(x·W_i + b_i)` in model order.
pub fn ground(features: &[f64], models: &[GroundingModel]) -> Result<Vec<f64>> {
    models
        .iter()
        .map(|m| {
            if m.weights.len() != features.len() {
                return Err(Error::DimensionMismatch {
                    expected: m.weights.len(),
                    got: features.len(),
                });
            }
            Ok(m.probability(features))
        })
        .collect()
}

/// Row-wise [`ground`] over a feature matrix.
pub fn ground_matrix(x: ArrayView2<f64>, models: &[GroundingModel]) -> Result<Array2<f64>> {
    let d = x.ncols();
    if let Some(m) = models.iter().find(|m| m.weights.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: m.weights.len(),
            got: d,
        });
    }
    let mut w = Array2::zeros((d, models.len()));
    let mut b = Array1::zeros(models.len());
    for (j, m) in models.iter().enumerate() {
        w.slice_mut(s![.., j]).assign(&ArrayView1::from(&m.weights));
        b[j] = m.bias;
    }
    Ok((x.dot(&w) + &b).mapv(sigmoid))
}

/// Keeps the `k` most accurate grounders; ties go to the alphabetically
/// smaller concept.
pub fn select_top_k(mut models: Vec<GroundingModel>, k: usize) -> Vec<GroundingModel> {
    models.sort_by(|a, b| {
        b.val_accuracy
            .total_cmp(&a.val_accuracy)
            .then_with(|| a.concept.cmp(&b.concept))
    });
    models.truncate(k);
    models
}

/// Support counts from annotating the sampled reports, as used by concept
/// validation.
pub struct AnnotatedSupport<'a> {
    pub set: &'a PretrainSet,
    pub annotator: &'a dyn AnnotationOracle,
    pub cfg: GroundingConfig,
}

impl SupportCounter for AnnotatedSupport<'_> {
    fn support(&self, question: &str) -> Result<(usize, usize)> {
        let idx = self.set.sample_for_concept(
            question,
            self.cfg.n_sim,
            self.cfg.n_rand,
            derive_seed(self.cfg.seed, question),
        );
        let (mut pos, mut neg) = (0, 0);
        for i in idx {
            match self
                .annotator
                .annotate(&self.set.pairs[i].report_text, question)
            {
                AnnotationLabel::Positive => pos += 1,
                AnnotationLabel::Negative => neg += 1,
                AnnotationLabel::Unknown => {}
            }
        }
        Ok((pos, neg))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrounderSet {
    pub feature_dim: usize,
    pub models: Vec<GroundingModel>,
}

impl GrounderSet {
    pub fn concepts(&self) -> Vec<String> {
        self.models.iter().map(|m| m.concept.clone()).collect()
    }
}
