//! Language-model-backed decisions behind traits: concept proposal,
//! groundability, report annotation and class/concept prior signs. Each has
//! a deterministic offline mock and an HTTP adapter.

mod mock;
mod remote;

pub use mock::{KeywordAnnotator, KeywordGroundability, LexiconProposer};
pub use remote::{
    RemoteAnnotator, RemoteEndpoint, RemoteGroundability, RemotePrior, RemoteProposer,
    DEFAULT_ENDPOINT_ENV,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetText {
    pub id: String,
    pub text: String,
}

/// What a proposer sees for one query: the query itself, the task's class
/// names, and the retrieved snippets in rank order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposalRequest {
    pub query: String,
    pub class_names: Vec<String>,
    pub snippets: Vec<SnippetText>,
}

/// Returns plain-text lines in the `question | document ID | reference
/// sentence` format. Unparseable lines are dropped by the caller.
pub trait ConceptProposer: Send + Sync {
    fn propose(&self, request: &ProposalRequest) -> Result<String>;
}

/// Decides whether a question is visually identifiable from the image.
pub trait GroundabilityOracle: Send + Sync {
    fn is_groundable(&self, question: &str) -> Result<bool>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationLabel {
    Positive,
    Negative,
    Unknown,
}

impl AnnotationLabel {
    pub fn as_target(self) -> Option<f64> {
        match self {
            AnnotationLabel::Positive => Some(1.0),
            AnnotationLabel::Negative => Some(0.0),
            AnnotationLabel::Unknown => None,
        }
    }
}

/// Does `report` imply the concept asked by `question`? Failures surface as
/// [`AnnotationLabel::Unknown`], never as errors.
pub trait AnnotationOracle: Send + Sync {
    fn annotate(&self, report: &str, question: &str) -> AnnotationLabel;
}

/// Produces an `N x N_C` matrix of preferred correlation signs, one row per
/// class and one column per concept question.
pub trait PriorOracle: Send + Sync {
    fn prior_signs(&self, class_names: &[String], questions: &[String]) -> Result<Vec<Vec<i8>>>;
}
