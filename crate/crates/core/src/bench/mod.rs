//! Confound-reversal benchmarking: balanced confounded splits, accuracy and
//! gap metrics, and a synthetic world with known concepts and confounds.

mod metrics;
mod synth;

pub use metrics::{compute_metrics, format_table, round_display, Metrics};
pub use synth::{synth_generate, SyntheticConcept, SyntheticConfig, SyntheticWorld};

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub features: Vec<f64>,
    pub label: usize,
    pub group: usize,
    #[serde(default)]
    pub report_text: String,
}

/// Which group each class is paired with during training, and how big each
/// split is. Tests reverse the pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfoundSpec {
    pub class_names: Vec<String>,
    pub group_names: Vec<String>,
    /// `train_pairing[class] = group`.
    pub train_pairing: Vec<usize>,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    /// Size of an extra split drawn evenly from all four cells; 0 skips it.
    #[serde(default)]
    pub unconfounded_size: usize,
    /// Fraction of each class drawn from its paired group in train/val (and
    /// from the reversed group in test).
    #[serde(default = "one")]
    pub strength: f64,
}

fn one() -> f64 {
    1.0
}

impl ConfoundSpec {
    pub fn validate(&self) -> Result<()> {
        if self.class_names.len() != 2 || self.group_names.len() != 2 {
            return Err(Error::InvalidArgument(
                "confounded splits need exactly 2 classes and 2 groups".into(),
            ));
        }
        let mut p = self.train_pairing.clone();
        p.sort_unstable();
        if p != [0, 1] {
            return Err(Error::InvalidArgument(format!(
                "train pairing {:?} must map the two classes to distinct groups",
                self.train_pairing
            )));
        }
        for (name, n) in [
            ("train", self.train_size),
            ("val", self.val_size),
            ("test", self.test_size),
        ] {
            if n % 2 != 0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} size {n} cannot be split evenly across 2 classes"
                )));
            }
        }
        if !self.unconfounded_size.is_multiple_of(4) {
            return Err(Error::InvalidArgument(format!(
                "unconfounded size {} cannot be split evenly across 4 cells",
                self.unconfounded_size
            )));
        }
        if !(0.0..=1.0).contains(&self.strength) {
            return Err(Error::InvalidArgument(format!(
                "confound strength {} outside [0, 1]",
                self.strength
            )));
        }
        Ok(())
    }

    /// Group paired with `class` in the test split.
    pub fn test_group(&self, class: usize) -> usize {
        1 - self.train_pairing[class]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<LabeledExample>,
    pub val: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    pub unconfounded: Vec<LabeledExample>,
}

impl Splits {
    pub fn named(&self) -> [(&'static str, &[LabeledExample]); 4] {
        [
            ("train", &self.train),
            ("val", &self.val),
            ("test", &self.test),
            ("unconfounded", &self.unconfounded),
        ]
    }
}

/// Draws train/val with the paired (class, group) cells and test with the
/// reversed cells, without replacement. Val and test are class-balanced.
pub fn make_confounded_splits(
    pool: &[LabeledExample],
    spec: &ConfoundSpec,
    seed: u64,
) -> Result<Splits> {
    spec.validate()?;
    let mut seen = HashSet::new();
    for ex in pool {
        if ex.label > 1 || ex.group > 1 {
            return Err(Error::InvalidArgument(format!(
                "example {} has label {} / group {} outside the 2x2 design",
                ex.id, ex.label, ex.group
            )));
        }
        if !seen.insert(ex.id.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "duplicate example id {}",
                ex.id
            )));
        }
    }
    let mut rng = seeded(seed);
    let mut cells: [[Vec<usize>; 2]; 2] = Default::default();
    for (i, ex) in pool.iter().enumerate() {
        cells[ex.label][ex.group].push(i);
    }
    for row in cells.iter_mut() {
        for cell in row.iter_mut() {
            cell.shuffle(&mut rng);
        }
    }

    // (class, group, count) requests for each split, in draw order.
    let per_class = |size: usize, reversed: bool| -> Vec<(usize, usize, usize)> {
        let half = size / 2;
        let aligned = (half as f64 * spec.strength).round() as usize;
        (0..2)
            .flat_map(|c| {
                let paired = if reversed {
                    spec.test_group(c)
                } else {
                    spec.train_pairing[c]
                };
                [(c, paired, aligned), (c, 1 - paired, half - aligned)]
            })
            .collect()
    };
    let q = spec.unconfounded_size / 4;
    let plan = [
        per_class(spec.train_size, false),
        per_class(spec.val_size, false),
        per_class(spec.test_size, true),
        vec![(0, 0, q), (0, 1, q), (1, 0, q), (1, 1, q)],
    ];

    let mut needed = [[0usize; 2]; 2];
    for &(c, g, n) in plan.iter().flatten() {
        needed[c][g] += n;
    }
    for c in 0..2 {
        for g in 0..2 {
            if needed[c][g] > cells[c][g].len() {
                return Err(Error::InsufficientCell {
                    class: spec.class_names[c].clone(),
                    group: spec.group_names[g].clone(),
                    needed: needed[c][g],
                    available: cells[c][g].len(),
                });
            }
        }
    }

    let mut out: Vec<Vec<LabeledExample>> = Vec::with_capacity(4);
    for requests in &plan {
        let mut split = Vec::new();
        for &(c, g, n) in requests {
            let cell = &mut cells[c][g];
            split.extend(cell.drain(..n).map(|i| pool[i].clone()));
        }
        split.shuffle(&mut rng);
        out.push(split);
    }
    let unconfounded = out.pop().unwrap_or_default();
    let test = out.pop().unwrap_or_default();
    let val = out.pop().unwrap_or_default();
    let train = out.pop().unwrap_or_default();
    Ok(Splits {
        train,
        val,
        test,
        unconfounded,
    })
}

/// Accuracy (in percent) of `predict` over a split.
pub fn evaluate<F: Fn(&[f64]) -> usize>(predict: F, split: &[LabeledExample]) -> Result<f64> {
    if split.is_empty() {
        return Err(Error::EmptySplit);
    }
    let correct = split
        .iter()
        .filter(|ex| predict(&ex.features) == ex.label)
        .count();
    Ok(100.0 * correct as f64 / split.len() as f64)
}

/// Stacks a split into a feature matrix and label vector.
pub fn split_matrix(split: &[LabeledExample]) -> Result<(Array2<f64>, Vec<usize>)> {
    let d = split.first().map_or(0, |e| e.features.len());
    let mut x = Array2::zeros((split.len(), d));
    for (mut row, ex) in x.rows_mut().into_iter().zip(split) {
        if ex.features.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: ex.features.len(),
            });
        }
        row.assign(&ndarray::ArrayView1::from(&ex.features));
    }
    Ok((x, split.iter().map(|e| e.label).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ExampleMeta {
    pair_id: String,
    label: usize,
    group: usize,
    split: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    report_text: String,
}

fn split_paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{name}.fmat")),
        dir.join(format!("{name}.jsonl")),
    )
}

/// Writes `{name}.fmat` (features) and `{name}.jsonl` (metadata) in `dir`.
pub fn write_split(dir: &Path, name: &str, split: &[LabeledExample]) -> Result<()> {
    let (fm, meta) = split_paths(dir, name);
    let (x, _) = split_matrix(split)?;
    crate::fmat::write(&fm, &x)?;
    let rows: Vec<ExampleMeta> = split
        .iter()
        .map(|e| ExampleMeta {
            pair_id: e.id.clone(),
            label: e.label,
            group: e.group,
            split: name.to_string(),
            report_text: e.report_text.clone(),
        })
        .collect();
    crate::io::write_jsonl(&meta, &rows)
}

pub fn read_split(dir: &Path, name: &str) -> Result<Vec<LabeledExample>> {
    let (fm, meta) = split_paths(dir, name);
    let x = crate::fmat::read(&fm)?;
    let rows: Vec<ExampleMeta> = crate::io::read_jsonl(&meta)?;
    if rows.len() != x.nrows() {
        return Err(Error::Format(format!(
            "{} has {} rows but {} has {}",
            fm.display(),
            x.nrows(),
            meta.display(),
            rows.len()
        )));
    }
    Ok(rows
        .into_iter()
        .zip(x.rows())
        .map(|(m, row)| LabeledExample {
            id: m.pair_id,
            features: row.to_vec(),
            label: m.label,
            group: m.group,
            report_text: m.report_text,
        })
        .collect())
}
