use std::collections::{BTreeMap, HashSet};

use super::{
    AnnotationLabel, AnnotationOracle, ConceptProposer, GroundabilityOracle, ProposalRequest,
};
use crate::concepts::question_subject;
use crate::error::Result;
use crate::text::{contains_phrase, tokenize};

/// Offline proposer: emits `Is there <phrase>?` for every lexicon phrase found
/// in the retrieved snippets, citing the snippet's document and the sentence
/// that mentions it. Phrases naming a class are skipped.
#[derive(Debug, Clone)]
pub struct LexiconProposer {
    phrases: Vec<(String, Vec<String>)>,
    pub max_per_call: usize,
}

impl LexiconProposer {
    pub fn new<S: AsRef<str>>(phrases: &[S]) -> Self {
        Self {
            phrases: phrases
                .iter()
                .map(|p| (p.as_ref().to_string(), tokenize(p.as_ref())))
                .filter(|(_, toks)| !toks.is_empty())
                .collect(),
            max_per_call: usize::MAX,
        }
    }

    pub fn with_max_per_call(mut self, n: usize) -> Self {
        self.max_per_call = n;
        self
    }
}

pub(crate) fn sentence_containing<'a>(text: &'a str, phrase: &[String]) -> &'a str {
    text.split_inclusive(['.', '!', '?', '\n'])
        .map(str::trim)
        .find(|s| contains_phrase(&tokenize(s), phrase))
        .unwrap_or(text.trim())
}

impl ConceptProposer for LexiconProposer {
    fn propose(&self, request: &ProposalRequest) -> Result<String> {
        let class_tokens: Vec<Vec<String>> =
            request.class_names.iter().map(|c| tokenize(c)).collect();
        let mut emitted = HashSet::new();
        let mut lines = Vec::new();
        'outer: for snip in &request.snippets {
            let toks = tokenize(&snip.text);
            let doc_id = snip
                .id
                .rsplit_once('#')
                .map_or(snip.id.as_str(), |(d, _)| d);
            for (phrase, ptoks) in &self.phrases {
                if lines.len() >= self.max_per_call {
                    break 'outer;
                }
                if !contains_phrase(&toks, ptoks)
                    || class_tokens.iter().any(|c| contains_phrase(ptoks, c))
                    || !emitted.insert(phrase.as_str())
                {
                    continue;
                }
                let sentence = sentence_containing(&snip.text, ptoks).replace('|', "/");
                lines.push(format!("Is there {phrase}? | {doc_id} | {sentence}"));
            }
        }
        Ok(lines.join("\n"))
    }
}

/// Accepts a question when it mentions any keyword of a visual lexicon.
#[derive(Debug, Clone)]
pub struct KeywordGroundability {
    keywords: Vec<Vec<String>>,
}

impl KeywordGroundability {
    pub fn new<S: AsRef<str>>(keywords: &[S]) -> Self {
        Self {
            keywords: keywords
                .iter()
                .map(|k| tokenize(k.as_ref()))
                .filter(|k| !k.is_empty())
                .collect(),
        }
    }
}

impl GroundabilityOracle for KeywordGroundability {
    fn is_groundable(&self, question: &str) -> Result<bool> {
        let toks = tokenize(question);
        Ok(self.keywords.iter().any(|k| contains_phrase(&toks, k)))
    }
}

/// Positive when the report mentions any of the concept's keywords.
///
/// Keywords default to the question's subject (`"Is there lung opacity?"` ->
/// `["lung opacity"]`); per-question overrides can be registered.
#[derive(Debug, Clone, Default)]
pub struct KeywordAnnotator {
    overrides: BTreeMap<String, Vec<Vec<String>>>,
}

impl KeywordAnnotator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_keywords<S: AsRef<str>>(mut self, question: &str, keywords: &[S]) -> Self {
        self.overrides.insert(
            question.to_string(),
            keywords.iter().map(|k| tokenize(k.as_ref())).collect(),
        );
        self
    }

    fn keywords(&self, question: &str) -> Vec<Vec<String>> {
        self.overrides
            .get(question)
            .cloned()
            .unwrap_or_else(|| vec![tokenize(&question_subject(question))])
    }
}

impl AnnotationOracle for KeywordAnnotator {
    fn annotate(&self, report: &str, question: &str) -> AnnotationLabel {
        let toks = tokenize(report);
        if self
            .keywords(question)
            .iter()
            .any(|k| contains_phrase(&toks, k))
        {
            AnnotationLabel::Positive
        } else {
            AnnotationLabel::Negative
        }
    }
}
