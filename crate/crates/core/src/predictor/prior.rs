use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::concepts::question_subject;
use crate::error::{Error, Result};
use crate::oracle::PriorOracle;

/// Preferred sign of every class/concept weight: `+1` where the concept
/// should raise the class score, `−1` where it should lower it.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorMatrix {
    pub entries: Array2<f64>,
    pub class_names: Vec<String>,
    pub concepts: Vec<String>,
}

impl PriorMatrix {
    pub fn new(
        class_names: Vec<String>,
        concepts: Vec<String>,
        entries: Array2<f64>,
    ) -> Result<Self> {
        if entries.dim() != (class_names.len(), concepts.len()) {
            return Err(Error::ShapeMismatch {
                expected: (class_names.len(), concepts.len()),
                got: entries.dim(),
            });
        }
        if let Some(bad) = entries.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidArgument(format!(
                "prior entries must be exactly +1 or -1, found {bad}"
            )));
        }
        Ok(Self {
            entries,
            class_names,
            concepts,
        })
    }

    pub fn anonymous(entries: Array2<f64>) -> Result<Self> {
        let (n, nc) = entries.dim();
        Self::new(
            (0..n).map(|c| format!("class_{c}")).collect(),
            (0..nc).map(|j| format!("feature_{j}")).collect(),
            entries,
        )
    }

    pub fn from_signs(
        class_names: Vec<String>,
        concepts: Vec<String>,
        signs: &[Vec<i8>],
    ) -> Result<Self> {
        let nc = concepts.len();
        if signs.len() != class_names.len() || signs.iter().any(|r| r.len() != nc) {
            return Err(Error::ShapeMismatch {
                expected: (class_names.len(), nc),
                got: (signs.len(), signs.first().map_or(0, Vec::len)),
            });
        }
        let flat: Vec<f64> = signs.iter().flatten().map(|&s| f64::from(s)).collect();
        let entries = Array2::from_shape_vec((class_names.len(), nc), flat).expect("shape checked");
        Self::new(class_names, concepts, entries)
    }

    /// Asks `oracle` for the signs of every class against every concept.
    pub fn from_oracle(
        oracle: &dyn PriorOracle,
        class_names: &[String],
        concepts: &[String],
    ) -> Result<Self> {
        let signs = oracle.prior_signs(class_names, concepts)?;
        Self::from_signs(class_names.to_vec(), concepts.to_vec(), &signs)
    }

    /// Fraction of entries where `sign(w)` agrees with the prior.
    pub fn agreement(&self, w: &Array2<f64>) -> f64 {
        let agree = w
            .iter()
            .zip(&self.entries)
            .filter(|(w, p)| w.signum() == **p && **w != 0.0)
            .count();
        agree as f64 / self.entries.len().max(1) as f64
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = PriorFile {
            shape: self.entries.dim(),
            entries: self.entries.iter().map(|&v| v as i8).collect(),
            class_names: self.class_names.clone(),
            concepts: self.concepts.clone(),
        };
        crate::io::write_json(path, &file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f: PriorFile = crate::io::read_json(path)?;
        let flat: Vec<f64> = f.entries.iter().map(|&s| f64::from(s)).collect();
        let entries = Array2::from_shape_vec(f.shape, flat)
            .map_err(|e| Error::Format(format!("prior entries: {e}")))?;
        Self::new(f.class_names, f.concepts, entries)
    }
}

#[derive(Serialize, Deserialize)]
struct PriorFile {
    shape: (usize, usize),
    entries: Vec<i8>,
    class_names: Vec<String>,
    concepts: Vec<String>,
}

/// Prior oracle backed by known concept/class signs, keyed by the concept
/// phrase (`"lung opacity"` answers `"Is there lung opacity?"`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TruthPrior {
    pub class_names: Vec<String>,
    pub signs: BTreeMap<String, Vec<i8>>,
}

impl TruthPrior {
    pub fn new(class_names: Vec<String>) -> Self {
        Self {
            class_names,
            signs: BTreeMap::new(),
        }
    }

    pub fn with(mut self, phrase: &str, per_class: Vec<i8>) -> Self {
        self.signs.insert(phrase.to_lowercase(), per_class);
        self
    }

    fn lookup(&self, question: &str) -> Option<&Vec<i8>> {
        let subject = question_subject(question).to_lowercase();
        self.signs.get(&subject).or_else(|| {
            let q = crate::text::tokenize(question);
            self.signs
                .iter()
                .filter(|(k, _)| crate::text::contains_phrase(&q, &crate::text::tokenize(k)))
                .max_by_key(|(k, _)| k.len())
                .map(|(_, v)| v)
        })
    }
}

impl PriorOracle for TruthPrior {
    fn prior_signs(&self, class_names: &[String], questions: &[String]) -> Result<Vec<Vec<i8>>> {
        if class_names != self.class_names.as_slice() {
            return Err(Error::InvalidArgument(format!(
                "prior knows classes {:?}, asked for {:?}",
                self.class_names, class_names
            )));
        }
        let cols = questions
            .iter()
            .map(|q| {
                self.lookup(q)
                    .cloned()
                    .ok_or_else(|| Error::InvalidArgument(format!("no prior sign for {q:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((0..class_names.len())
            .map(|c| cols.iter().map(|col| col[c]).collect())
            .collect())
    }
}

/// Signs of the class-conditional mean activation minus the overall mean.
///
/// Learned from labeled data, so it inherits whatever confounds that data
/// carries.
pub fn empirical_prior(
    activations: ArrayView2<f64>,
    labels: &[usize],
    class_names: Vec<String>,
    concepts: Vec<String>,
) -> Result<PriorMatrix> {
    if activations.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: activations.nrows(),
            got: labels.len(),
        });
    }
    let overall = activations.mean_axis(Axis(0)).ok_or(Error::EmptySplit)?;
    let mut entries = Array2::zeros((class_names.len(), activations.ncols()));
    for (c, mut row) in entries.axis_iter_mut(Axis(0)).enumerate() {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if idx.is_empty() {
            return Err(Error::EmptyClass(c));
        }
        let mean = activations
            .select(Axis(0), &idx)
            .mean_axis(Axis(0))
            .expect("nonempty");
        for (e, (m, o)) in row.iter_mut().zip(mean.iter().zip(&overall)) {
            *e = if m >= o { 1.0 } else { -1.0 };
        }
    }
    PriorMatrix::new(class_names, concepts, entries)
}
