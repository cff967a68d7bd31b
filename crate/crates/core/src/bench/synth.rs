use std::ops::Range;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{make_confounded_splits, ConfoundSpec, LabeledExample, Splits};
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::grounding::PretrainPair;
use crate::predictor::TruthPrior;
use crate::rng::{derive_seed, seeded};

const POSITIVE_FINDINGS: &[&str] = &[
    "lung opacity",
    "air bronchogram",
    "consolidation",
    "interstitial markings",
    "pleural effusion",
    "hilar enlargement",
    "bronchial wall thickening",
];
const NEGATIVE_FINDING: &str = "clear lung fields";
const MARKER: &str = "support device";
const CLASS_NAMES: [&str; 2] = ["normal", "pneumonia"];
const GROUP_NAMES: [&str; 2] = ["outpatient", "inpatient"];
/// Mentioned in the corpus but never visible in images.
const NON_VISUAL: &[&str] = &["fever", "productive cough"];
/// Visible in principle but absent from every report.
const RARE_VISUAL: &str = "rib fracture";

/// Knobs for the synthetic world. Features are laid out as
/// `[4 dims per concept | 8 confound dims | noise]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub d: usize,
    /// Pool examples generated per (class, group) cell.
    pub n_per_cell: usize,
    pub n_true_concepts: usize,
    /// Fraction of each class drawn from its paired group in train/val.
    pub confound_strength: f64,
    pub noise_std: f64,
    /// Mean offset of a concept's dims when present (negated when absent).
    pub concept_signal: f64,
    /// Mean offset of the confound dims by group.
    pub confound_signal: f64,
    pub confound_noise: f64,
    /// Rule weight of the group marker concept. Kept below the rule
    /// threshold margin so the marker never decides a label on its own.
    pub marker_weight: f64,
    /// Probability that a pretraining report misstates the marker.
    pub report_flip: f64,
    pub n_pretrain: usize,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub unconfounded_size: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            d: 64,
            n_per_cell: 1200,
            n_true_concepts: 4,
            confound_strength: 1.0,
            noise_std: 1.0,
            concept_signal: 1.5,
            confound_signal: 2.0,
            confound_noise: 0.3,
            marker_weight: 0.5,
            report_flip: 0.2,
            n_pretrain: 2000,
            train_size: 2000,
            val_size: 200,
            test_size: 500,
            unconfounded_size: 400,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConcept {
    pub phrase: String,
    /// Weight in the labeling rule; its sign is the true prior for class 1.
    pub rule_weight: f64,
    /// Feature dims driven by this concept (the confound block for the
    /// marker).
    pub dims: Range<usize>,
}

impl SyntheticConcept {
    pub fn question(&self) -> String {
        format!("Is there {}?", self.phrase)
    }
}

/// Everything the pipeline needs to run offline on synthetic data.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub config: SyntheticConfig,
    pub class_names: Vec<String>,
    pub group_names: Vec<String>,
    /// The labeling concepts followed by the group marker.
    pub concepts: Vec<SyntheticConcept>,
    pub threshold: f64,
    pub pool: Vec<LabeledExample>,
    pub pretrain: Vec<PretrainPair>,
    pub corpus: Vec<Document>,
    /// Phrases the mock proposer may suggest.
    pub lexicon: Vec<String>,
    /// Phrases the mock groundability oracle accepts.
    pub visual_keywords: Vec<String>,
    pub truth_prior: TruthPrior,
    pub spec: ConfoundSpec,
}

impl SyntheticWorld {
    pub fn true_concepts(&self) -> &[SyntheticConcept] {
        &self.concepts[..self.config.n_true_concepts]
    }

    pub fn marker(&self) -> &SyntheticConcept {
        &self.concepts[self.config.n_true_concepts]
    }

    pub fn questions(&self) -> Vec<String> {
        self.concepts
            .iter()
            .map(SyntheticConcept::question)
            .collect()
    }

    pub fn splits(&self) -> Result<Splits> {
        make_confounded_splits(
            &self.pool,
            &self.spec,
            derive_seed(self.config.seed, "splits"),
        )
    }

    /// Label for concept indicators `z` (true concepts) and marker `m`.
    pub fn label(&self, z: &[bool], marker: bool) -> usize {
        let mut s: f64 = self
            .true_concepts()
            .iter()
            .zip(z)
            .filter(|(_, &on)| on)
            .map(|(c, _)| c.rule_weight)
            .sum();
        if marker {
            s += self.config.marker_weight;
        }
        usize::from(s > self.threshold)
    }

    fn features(&self, z: &[bool], group: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let cfg = &self.config;
        let mut x: Vec<f64> = (0..cfg.d)
            .map(|_| cfg.noise_std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        for (c, &on) in self.true_concepts().iter().zip(z) {
            let mean = if on {
                cfg.concept_signal
            } else {
                -cfg.concept_signal
            };
            for j in c.dims.clone() {
                x[j] += mean;
            }
        }
        let mean = if group == 1 {
            cfg.confound_signal
        } else {
            -cfg.confound_signal
        };
        for j in self.marker().dims.clone() {
            x[j] = mean + cfg.confound_noise * rng.sample::<f64, _>(StandardNormal);
        }
        x
    }

    fn report(&self, z: &[bool], marker: bool) -> String {
        let found: Vec<&str> = self
            .true_concepts()
            .iter()
            .zip(z)
            .filter(|(_, &on)| on)
            .map(|(c, _)| c.phrase.as_str())
            .collect();
        let mut text = if found.is_empty() {
            "Findings: no acute findings.".to_string()
        } else {
            format!("Findings: {}.", found.join("; "))
        };
        if marker {
            text.push_str(&format!(" A {} is in place.", self.marker().phrase));
        }
        text
    }
}

fn concepts_for(cfg: &SyntheticConfig) -> Vec<SyntheticConcept> {
    let k = cfg.n_true_concepts;
    let mut out: Vec<SyntheticConcept> = (0..k)
        .map(|i| {
            let negative = k >= 2 && i == k - 1;
            let phrase = if negative {
                NEGATIVE_FINDING.to_string()
            } else {
                POSITIVE_FINDINGS
                    .get(i)
                    .map_or_else(|| format!("finding {i}"), |s| s.to_string())
            };
            SyntheticConcept {
                phrase,
                rule_weight: if negative { -1.0 } else { 1.0 },
                dims: 4 * i..4 * i + 4,
            }
        })
        .collect();
    out.push(SyntheticConcept {
        phrase: MARKER.to_string(),
        rule_weight: cfg.marker_weight,
        dims: 4 * k..4 * k + 8,
    });
    out
}

fn corpus_for(concepts: &[SyntheticConcept], n_true: usize) -> Vec<Document> {
    let (neg, pos) = (CLASS_NAMES[0], CLASS_NAMES[1]);
    let mut pos_text = format!("{pos} overview\n\n{pos} is an infection of the lung parenchyma.");
    let mut neg_text =
        format!("{neg} radiograph\n\nA {neg} chest radiograph shows no active disease.");
    for c in &concepts[..n_true] {
        if c.rule_weight > 0.0 {
            pos_text.push_str(&format!(
                " In {pos}, {} is common on the radiograph.",
                c.phrase
            ));
        } else {
            neg_text.push_str(&format!(" A {neg} radiograph shows {}.", c.phrase));
        }
    }
    for nv in NON_VISUAL {
        pos_text.push_str(&format!(" Patients with {pos} often report {nv}."));
    }
    let marker = &concepts[n_true].phrase;
    let care_text = format!(
        "hospital care\n\nPatients with {pos} admitted to hospital frequently have a {marker} visible on the film. \
         A {neg} outpatient film rarely shows a {RARE_VISUAL}."
    );
    let history = format!(
        "history\n\nChest radiography has been used for over a century.\n\n\
         Interpretation relies on pattern recognition by trained readers and on comparison with prior {neg} studies."
    );
    [
        ("doc-pos", pos_text),
        ("doc-neg", neg_text),
        ("doc-care", care_text),
        ("doc-history", history),
    ]
    .into_iter()
    .map(|(id, text)| Document {
        id: id.to_string(),
        title: String::new(),
        text,
    })
    .collect()
}

/// Builds a synthetic world: a labeled pool with `n_per_cell` examples in
/// each (class, group) cell, an unconfounded pretraining set of report/image
/// pairs, a small text corpus, and the ground-truth sign prior.
pub fn synth_generate(cfg: &SyntheticConfig) -> Result<SyntheticWorld> {
    let k = cfg.n_true_concepts;
    if k == 0 {
        return Err(Error::InvalidArgument(
            "need at least one true concept".into(),
        ));
    }
    if cfg.d < 4 * k + 8 {
        return Err(Error::InvalidArgument(format!(
            "d = {} is too small for {k} concepts; need at least {}",
            cfg.d,
            4 * k + 8
        )));
    }
    if !(0.0..=1.0).contains(&cfg.report_flip) {
        return Err(Error::InvalidArgument(
            "report_flip must be in [0, 1]".into(),
        ));
    }
    let concepts = concepts_for(cfg);
    let n_positive = concepts[..k].iter().filter(|c| c.rule_weight > 0.0).count();
    let threshold = (n_positive / 2) as f64 + 0.5;

    let class_names: Vec<String> = CLASS_NAMES.iter().map(|s| s.to_string()).collect();
    let group_names: Vec<String> = GROUP_NAMES.iter().map(|s| s.to_string()).collect();
    let marker_sign = if cfg.marker_weight < 0.0 { -1 } else { 1 };
    let mut truth_prior = TruthPrior::new(class_names.clone());
    for (i, c) in concepts.iter().enumerate() {
        let s = if i == k {
            marker_sign
        } else if c.rule_weight > 0.0 {
            1
        } else {
            -1
        };
        truth_prior = truth_prior.with(&c.phrase, vec![-s, s]);
    }

    let mut world = SyntheticWorld {
        config: *cfg,
        class_names: class_names.clone(),
        group_names: group_names.clone(),
        corpus: corpus_for(&concepts, k),
        lexicon: concepts
            .iter()
            .map(|c| c.phrase.clone())
            .chain(NON_VISUAL.iter().map(|s| s.to_string()))
            .chain([RARE_VISUAL.to_string()])
            .collect(),
        visual_keywords: concepts
            .iter()
            .map(|c| c.phrase.clone())
            .chain([RARE_VISUAL.to_string()])
            .collect(),
        concepts,
        threshold,
        pool: Vec::new(),
        pretrain: Vec::new(),
        truth_prior,
        spec: ConfoundSpec {
            class_names,
            group_names,
            train_pairing: vec![1, 0],
            train_size: cfg.train_size,
            val_size: cfg.val_size,
            test_size: cfg.test_size,
            unconfounded_size: cfg.unconfounded_size,
            strength: cfg.confound_strength,
        },
    };

    let mut rng = seeded(derive_seed(cfg.seed, "pool"));
    let mut pool = Vec::with_capacity(4 * cfg.n_per_cell);
    for class in 0..2 {
        for group in 0..2 {
            for _ in 0..cfg.n_per_cell {
                let z = (0..100_000)
                    .map(|_| (0..k).map(|_| rng.random_bool(0.5)).collect::<Vec<bool>>())
                    .find(|z| world.label(z, group == 1) == class)
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "class {class} is unreachable for group {group}"
                        ))
                    })?;
                let features = world.features(&z, group, &mut rng);
                pool.push(LabeledExample {
                    id: format!("ex{:05}", pool.len()),
                    features,
                    label: class,
                    group,
                    report_text: world.report(&z, group == 1),
                });
            }
        }
    }

    let mut rng = seeded(derive_seed(cfg.seed, "pretrain"));
    let mut pretrain = Vec::with_capacity(cfg.n_pretrain);
    for i in 0..cfg.n_pretrain {
        let z: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
        let group = usize::from(rng.random_bool(0.5));
        let flip = rng.random::<f64>() < cfg.report_flip;
        let features = world.features(&z, group, &mut rng);
        pretrain.push(PretrainPair {
            pair_id: format!("pt{i:05}"),
            report_text: world.report(&z, (group == 1) != flip),
            image_features: features,
        });
    }
    world.pool = pool;
    world.pretrain = pretrain;
    Ok(world)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            n_per_cell: 200,
            n_pretrain: 100,
            train_size: 200,
            val_size: 40,
            test_size: 100,
            unconfounded_size: 40,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = synth_generate(&small()).unwrap();
        let b = synth_generate(&small()).unwrap();
        assert_eq!(a.pool, b.pool);
        assert_eq!(a.pretrain, b.pretrain);
        let c = synth_generate(&SyntheticConfig { seed: 1, ..small() }).unwrap();
        assert_ne!(a.pool, c.pool);
    }

    #[test]
    fn marker_never_flips_a_label() {
        let w = synth_generate(&small()).unwrap();
        for bits in 0..16u32 {
            let z: Vec<bool> = (0..4).map(|i| bits >> i & 1 == 1).collect();
            assert_eq!(w.label(&z, false), w.label(&z, true));
        }
        assert_eq!(w.label(&[true, true, false, false], false), 1);
        assert_eq!(w.label(&[true, false, false, false], true), 0);
    }

    #[test]
    fn group_predicts_label_in_train() {
        let w = synth_generate(&small()).unwrap();
        let s = w.splits().unwrap();
        assert!(s
            .train
            .iter()
            .all(|e| e.group == w.spec.train_pairing[e.label]));
    }

    #[test]
    fn truth_prior_signs() {
        use crate::oracle::PriorOracle;
        let w = synth_generate(&small()).unwrap();
        let signs = w
            .truth_prior
            .prior_signs(&w.class_names, &w.questions())
            .unwrap();
        assert_eq!(signs[1], vec![1, 1, 1, -1, 1]);
        assert_eq!(signs[0], vec![-1, -1, -1, 1, -1]);
    }

    #[test]
    fn rejects_tiny_dimension() {
        assert!(synth_generate(&SyntheticConfig { d: 20, ..small() }).is_err());
        assert!(synth_generate(&SyntheticConfig {
            n_true_concepts: 0,
            ..small()
        })
        .is_err());
    }
}
