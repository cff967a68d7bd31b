use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary question with the provenance that makes it attributable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub text: String,
    pub source_doc_id: String,
    pub reference_sentence: String,
    pub origin_query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
}

impl Concept {
    pub fn from_proposal(p: &Proposal, origin_query: &str) -> Self {
        Self {
            text: p.concept_text.clone(),
            source_doc_id: p.doc_id.clone(),
            reference_sentence: p.reference_sentence.clone(),
            origin_query: origin_query.to_string(),
            embedding: None,
        }
    }

    /// The phrase a question asks about, e.g. `"lung opacity"` for
    /// `"Is there lung opacity?"`. Used as the default keyword list for the
    /// keyword annotator.
    pub fn subject(&self) -> String {
        question_subject(&self.text)
    }
}

const QUESTION_PREFIXES: &[&str] = &[
    "is there any ",
    "are there any ",
    "is there an ",
    "is there a ",
    "is there ",
    "are there ",
    "does the image show ",
    "is the ",
    "are the ",
    "is it ",
    "is ",
    "are ",
    "does ",
    "do ",
];

pub fn question_subject(question: &str) -> String {
    let q = question.trim().trim_end_matches('?').trim();
    let lower = q.to_lowercase();
    for p in QUESTION_PREFIXES {
        if lower.starts_with(p) && lower.len() > p.len() {
            return lower[p.len()..].trim().to_string();
        }
    }
    lower
}

/// One parsed proposer line: `question | document ID | reference sentence`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub concept_text: String,
    pub doc_id: String,
    pub reference_sentence: String,
}

impl Proposal {
    pub fn parse(line: &str) -> Result<Self> {
        let mut parts = line.splitn(3, '|').map(str::trim);
        let (Some(q), Some(doc), Some(reference)) = (parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::Format(format!(
                "expected 3 `|`-separated fields: {line:?}"
            )));
        };
        if q.is_empty() || !q.ends_with('?') || q.len() < 2 {
            return Err(Error::Format(format!("not a binary question: {q:?}")));
        }
        if doc.is_empty() || reference.is_empty() {
            return Err(Error::Format(format!("missing provenance: {line:?}")));
        }
        Ok(Self {
            concept_text: q.to_string(),
            doc_id: doc.to_string(),
            reference_sentence: reference.to_string(),
        })
    }

    pub fn to_line(&self) -> String {
        format!(
            "{} | {} | {}",
            self.concept_text, self.doc_id, self.reference_sentence
        )
    }
}

/// Ordered concept set forming the bottleneck layer.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Bottleneck {
    pub concepts: Vec<Concept>,
    pub target_size: usize,
    pub class_names: Vec<String>,
    /// Set when generation ran out of queries before reaching `target_size`.
    #[serde(default)]
    pub stalled: bool,
}

impl Bottleneck {
    pub fn new(class_names: Vec<String>, target_size: usize) -> Self {
        Self {
            concepts: Vec::new(),
            target_size,
            class_names,
            stalled: false,
        }
    }

    pub fn from_concepts(concepts: Vec<Concept>) -> Self {
        Self {
            target_size: concepts.len(),
            concepts,
            class_names: Vec::new(),
            stalled: false,
        }
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn texts(&self) -> Vec<String> {
        self.concepts.iter().map(|c| c.text.clone()).collect()
    }

    pub fn contains_text(&self, text: &str) -> bool {
        let folded = text.to_lowercase();
        self.concepts
            .iter()
            .any(|c| c.text.to_lowercase() == folded)
    }

    /// Keeps only the named concepts, in the given order.
    pub fn reorder(&mut self, texts: &[String]) -> Result<()> {
        let mut out = Vec::with_capacity(texts.len());
        for t in texts {
            let c =
                self.concepts.iter().find(|c| &c.text == t).ok_or_else(|| {
                    Error::InvalidArgument(format!("concept not in bottleneck: {t}"))
                })?;
            out.push(c.clone());
        }
        self.concepts = out;
        Ok(())
    }

    pub fn save_jsonl(&self, path: &std::path::Path) -> Result<()> {
        crate::io::write_jsonl(path, &self.concepts)
    }

    pub fn load_jsonl(path: &std::path::Path) -> Result<Self> {
        Ok(Self::from_concepts(crate::io::read_jsonl(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_proposer_lines() {
        let p = Proposal::parse(
            "Is there lung opacity? | 1234 | lung opacity is a common finding for ...",
        )
        .unwrap();
        assert_eq!(p.concept_text, "Is there lung opacity?");
        assert_eq!(p.doc_id, "1234");
        assert_eq!(
            p.reference_sentence,
            "lung opacity is a common finding for ..."
        );
        let p = Proposal::parse("Is it? | d | a | b").unwrap();
        assert_eq!(p.reference_sentence, "a | b");
        assert_eq!(Proposal::parse(&p.to_line()).unwrap(), p);
    }

    #[test]
    fn malformed_lines() {
        for bad in [
            "skip",
            "Is there opacity? | 12",
            "There is opacity | 1 | ref",
            "Is there opacity? |  | ref",
            "Is there opacity? | 1 |  ",
        ] {
            assert!(Proposal::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn subjects() {
        assert_eq!(question_subject("Is there lung opacity?"), "lung opacity");
        assert_eq!(
            question_subject("Is the lesion asymmetric?"),
            "lesion asymmetric"
        );
        assert_eq!(question_subject("Are there any nodules?"), "nodules");
        assert_eq!(question_subject("Cardiomegaly?"), "cardiomegaly");
    }
}
