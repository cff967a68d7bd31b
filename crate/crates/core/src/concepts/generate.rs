use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Bottleneck, Concept, ConceptValidator, Proposal, Verdict};
use crate::corpus::{Bm25Params, InvertedIndex};
use crate::error::{Error, Result};
use crate::oracle::{ConceptProposer, ProposalRequest, SnippetText};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    /// Bottleneck size `N_C`.
    pub target_size: usize,
    /// Snippets retrieved per query.
    pub retrieve_k: usize,
    pub bm25: Bm25Params,
    /// Proposer calls per query before giving up.
    pub max_attempts: usize,
    pub retry_backoff_ms: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            target_size: 150,
            retrieve_k: 10,
            bm25: Bm25Params::default(),
            max_attempts: 3,
            retry_backoff_ms: 250,
        }
    }
}

fn propose_with_retry(
    proposer: &dyn ConceptProposer,
    request: &ProposalRequest,
    cfg: &GenerationConfig,
) -> Result<String> {
    let attempts = cfg.max_attempts.max(1);
    let mut last = None;
    for attempt in 1..=attempts {
        match proposer.propose(request) {
            Ok(text) => return Ok(text),
            Err(e) => {
                log::warn!(
                    "proposer failed for {:?} (attempt {attempt}/{attempts}): {e}",
                    request.query
                );
                last = Some(e);
                if attempt < attempts {
                    std::thread::sleep(Duration::from_millis(cfg.retry_backoff_ms));
                }
            }
        }
    }
    Err(Error::Remote(format!(
        "proposer gave up on {:?}: {}",
        request.query,
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Grows a bottleneck from the class names outward.
///
/// Each round retrieves snippets for every query in the frontier, asks the
/// proposer for concepts, and keeps those passing the validator. Accepted
/// concepts become the next frontier. Rounds repeat until the bottleneck
/// holds `target_size` concepts or the frontier empties (the stall case).
/// Overflow from the last round is trimmed in arrival order.
///
/// Proposals for one round are fetched in parallel; acceptance runs in query
/// order then line order, so the result does not depend on scheduling.
pub fn generate_bottleneck(
    class_names: &[String],
    index: &InvertedIndex,
    proposer: &dyn ConceptProposer,
    validator: &ConceptValidator<'_>,
    cfg: &GenerationConfig,
) -> Result<Bottleneck> {
    let mut bottleneck = Bottleneck::new(class_names.to_vec(), cfg.target_size);
    let mut queries: Vec<String> = class_names.to_vec();
    let mut round = 0;
    while bottleneck.len() < cfg.target_size {
        if queries.is_empty() {
            bottleneck.stalled = true;
            log::warn!(
                "concept generation stalled at {}/{} concepts after {round} round(s)",
                bottleneck.len(),
                cfg.target_size
            );
            break;
        }
        round += 1;
        let responses: Vec<Result<String>> = queries
            .par_iter()
            .map(|q| {
                let hits = index.retrieve_top_k(q, cfg.retrieve_k, cfg.bm25);
                let request = ProposalRequest {
                    query: q.clone(),
                    class_names: class_names.to_vec(),
                    snippets: hits
                        .iter()
                        .map(|h| {
                            let ord = index
                                .ordinal_of(&h.snippet_id)
                                .expect("hit from this index");
                            SnippetText {
                                id: h.snippet_id.clone(),
                                text: index.snippet_text(ord).to_string(),
                            }
                        })
                        .collect(),
                };
                propose_with_retry(proposer, &request, cfg)
            })
            .collect();

        let mut next = Vec::new();
        for (query, response) in queries.iter().zip(responses) {
            for line in response?.lines().filter(|l| !l.trim().is_empty()) {
                let proposal = match Proposal::parse(line) {
                    Ok(p) => p,
                    Err(e) => {
                        log::warn!("dropping proposer line: {e}");
                        continue;
                    }
                };
                match validator.check(&proposal, &bottleneck)? {
                    Verdict::Accept => {
                        let mut concept = Concept::from_proposal(&proposal, query);
                        concept.embedding = Some(validator.embedder.embed(&concept.text));
                        next.push(concept.text.clone());
                        bottleneck.concepts.push(concept);
                    }
                    Verdict::Reject(reason) => {
                        log::debug!("rejected {:?}: {reason:?}", proposal.concept_text);
                    }
                }
            }
        }
        log::info!(
            "round {round}: {} queries, bottleneck now {}",
            queries.len(),
            bottleneck.len()
        );
        queries = next;
    }
    bottleneck.concepts.truncate(cfg.target_size);
    Ok(bottleneck)
}
