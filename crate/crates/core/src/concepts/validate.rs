use serde::{Deserialize, Serialize};

use super::{cosine, Bottleneck, Embedder, Proposal};
use crate::error::{Error, Result};
use crate::oracle::GroundabilityOracle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationConfig {
    /// Candidates at or above this cosine similarity to an existing concept
    /// are duplicates.
    pub dedup_similarity_threshold: f64,
    pub min_support_pos: usize,
    pub min_support_neg: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            dedup_similarity_threshold: 0.9,
            min_support_pos: 50,
            min_support_neg: 50,
        }
    }
}

impl ValidationConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.dedup_similarity_threshold;
        if !(t > 0.0 && t <= 1.0) || self.min_support_pos == 0 || self.min_support_neg == 0 {
            return Err(Error::InvalidArgument(format!(
                "bad validation config: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    ParseError { message: String },
    Duplicate { similar_to: String, similarity: f64 },
    NotGroundable,
    InsufficientSupport { pos: usize, neg: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

/// Counts positive and negative annotated reports available for a concept.
pub trait SupportCounter: Send + Sync {
    fn support(&self, question: &str) -> Result<(usize, usize)>;
}

/// Reports the same counts for every concept.
#[derive(Debug, Clone, Copy)]
pub struct FixedSupport(pub usize, pub usize);

impl SupportCounter for FixedSupport {
    fn support(&self, _question: &str) -> Result<(usize, usize)> {
        Ok((self.0, self.1))
    }
}

fn closest_existing(
    candidate: &[f64],
    bottleneck: &Bottleneck,
    embedder: &dyn Embedder,
) -> Option<(String, f64)> {
    bottleneck
        .concepts
        .iter()
        .map(|c| {
            let sim = match &c.embedding {
                Some(e) => cosine(candidate, e),
                None => cosine(candidate, &embedder.embed(&c.text)),
            };
            (c.text.clone(), sim)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

fn duplicate_check(
    candidate: &Proposal,
    bottleneck: &Bottleneck,
    cfg: &ValidationConfig,
    embedder: &dyn Embedder,
) -> Option<RejectReason> {
    if bottleneck.contains_text(&candidate.concept_text) {
        return Some(RejectReason::Duplicate {
            similar_to: candidate.concept_text.clone(),
            similarity: 1.0,
        });
    }
    let emb = embedder.embed(&candidate.concept_text);
    match closest_existing(&emb, bottleneck, embedder) {
        Some((text, sim)) if sim >= cfg.dedup_similarity_threshold => {
            Some(RejectReason::Duplicate {
                similar_to: text,
                similarity: sim,
            })
        }
        _ => None,
    }
}

fn support_check(counts: (usize, usize), cfg: &ValidationConfig) -> Option<RejectReason> {
    let (pos, neg) = counts;
    (pos < cfg.min_support_pos || neg < cfg.min_support_neg)
        .then_some(RejectReason::InsufficientSupport { pos, neg })
}

/// Applies the three acceptance gates in order: distinct from existing
/// concepts, visually groundable, enough positive and negative support.
pub fn validate_concept(
    candidate: &Proposal,
    bottleneck: &Bottleneck,
    support_counts: (usize, usize),
    cfg: &ValidationConfig,
    groundability: &dyn GroundabilityOracle,
    embedder: &dyn Embedder,
) -> Result<Verdict> {
    if let Some(r) = duplicate_check(candidate, bottleneck, cfg, embedder) {
        return Ok(Verdict::Reject(r));
    }
    if !groundability.is_groundable(&candidate.concept_text)? {
        return Ok(Verdict::Reject(RejectReason::NotGroundable));
    }
    Ok(support_check(support_counts, cfg).map_or(Verdict::Accept, Verdict::Reject))
}

/// Bundles the gates with their oracles. Support is only counted for
/// candidates that pass the cheaper gates.
pub struct ConceptValidator<'a> {
    pub cfg: ValidationConfig,
    pub groundability: &'a dyn GroundabilityOracle,
    pub support: &'a dyn SupportCounter,
    pub embedder: &'a dyn Embedder,
}

impl ConceptValidator<'_> {
    pub fn check(&self, candidate: &Proposal, bottleneck: &Bottleneck) -> Result<Verdict> {
        if let Some(r) = duplicate_check(candidate, bottleneck, &self.cfg, self.embedder) {
            return Ok(Verdict::Reject(r));
        }
        if !self.groundability.is_groundable(&candidate.concept_text)? {
            return Ok(Verdict::Reject(RejectReason::NotGroundable));
        }
        let counts = self.support.support(&candidate.concept_text)?;
        Ok(support_check(counts, &self.cfg).map_or(Verdict::Accept, Verdict::Reject))
    }

    /// Parses a raw proposer line first; malformed lines are rejected.
    pub fn check_line(&self, line: &str, bottleneck: &Bottleneck) -> Result<Verdict> {
        match Proposal::parse(line) {
            Ok(p) => self.check(&p, bottleneck),
            Err(e) => Ok(Verdict::Reject(RejectReason::ParseError {
                message: e.to_string(),
            })),
        }
    }
}
