//! Concept bottleneck construction: iterative retrieve-propose-validate
//! generation, concept embeddings and bottleneck diversity.

mod concept;
mod embed;
mod generate;
mod validate;

pub use concept::{question_subject, Bottleneck, Concept, Proposal};
pub use embed::{cosine, Embedder, HashedTrigramEmbedder, DEFAULT_EMBED_DIM};
pub use generate::{generate_bottleneck, GenerationConfig};
pub use validate::{
    validate_concept, ConceptValidator, FixedSupport, RejectReason, SupportCounter,
    ValidationConfig, Verdict,
};

use crate::error::{Error, Result};

pub(crate) fn fnv1a64_str(s: &str) -> u64 {
    embed::fnv1a64(s.as_bytes())
}

/// Embeds `text` with the default hashed 3-gram embedder.
pub fn embed_concept(text: &str) -> Vec<f64> {
    HashedTrigramEmbedder::default().embed(text)
}

/// Mean `1 - cos` over all ordered pairs of distinct concepts.
pub fn diversity(bottleneck: &Bottleneck) -> Result<f64> {
    let embeddings = bottleneck
        .concepts
        .iter()
        .map(|c| {
            c.embedding.as_deref().ok_or_else(|| {
                Error::InvalidArgument(format!("concept `{}` has no embedding", c.text))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    diversity_of(&embeddings)
}

/// Diversity from raw embeddings. Uses `sum_{i != j} cos = |sum_i u_i|^2 - n`
/// over the normalized vectors `u_i`, which is linear in the number of concepts.
pub fn diversity_of<V: AsRef<[f64]>>(embeddings: &[V]) -> Result<f64> {
    let n = embeddings.len();
    if n < 2 {
        return Err(Error::DiversityUndefined(n));
    }
    let dim = embeddings[0].as_ref().len();
    let mut sum = vec![0.0; dim];
    for e in embeddings {
        let e = e.as_ref();
        if e.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: e.len(),
            });
        }
        let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero embedding".into()));
        }
        sum.iter_mut().zip(e).for_each(|(s, x)| *s += x / norm);
    }
    let sq: f64 = sum.iter().map(|x| x * x).sum();
    let nf = n as f64;
    let off_diag_cos = sq - nf;
    Ok(1.0 - off_diag_cos / (nf * nf - nf))
}
