//! Background corpus: documents, snippet segmentation and BM25 retrieval.

mod index;

pub use index::{Bm25Params, InvertedIndex, RetrievalResult, INDEX_MAGIC, INDEX_VERSION};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{token_spans, tokenize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

/// A retrievable unit of a document. `snippet_id` is `"{doc_id}#{ordinal}"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snippet {
    pub snippet_id: String,
    pub doc_id: String,
    pub text: String,
    pub tokens: Vec<String>,
}

impl Snippet {
    pub fn new(doc_id: &str, ordinal: usize, text: &str) -> Self {
        Self {
            snippet_id: format!("{doc_id}#{ordinal}"),
            doc_id: doc_id.to_string(),
            text: text.to_string(),
            tokens: tokenize(text),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentParams {
    pub max_tokens: usize,
    pub overlap: usize,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self {
            max_tokens: 128,
            overlap: 32,
        }
    }
}

/// Splits a document on blank lines, then cuts long paragraphs into sliding
/// windows of `max_tokens` tokens overlapping by `overlap`.
pub fn segment_document(doc: &Document, params: SegmentParams) -> Result<Vec<Snippet>> {
    let SegmentParams {
        max_tokens,
        overlap,
    } = params;
    if max_tokens == 0 || overlap >= max_tokens {
        return Err(Error::InvalidArgument(format!(
            "segmentation needs max_tokens > overlap >= 0 (got {max_tokens}/{overlap})"
        )));
    }
    let stride = max_tokens - overlap;
    let mut out = Vec::new();
    for para in paragraphs(&doc.text) {
        let spans = token_spans(para);
        if spans.is_empty() {
            continue;
        }
        let mut start = 0;
        loop {
            let end = (start + max_tokens).min(spans.len());
            let text = &para[spans[start].0..spans[end - 1].1];
            out.push(Snippet::new(&doc.id, out.len(), text));
            if end == spans.len() {
                break;
            }
            start += stride;
        }
    }
    Ok(out)
}

fn paragraphs(text: &str) -> Vec<&str> {
    let mut paras = Vec::new();
    let mut start: Option<usize> = None;
    let mut end = 0;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim().is_empty() {
            if let Some(s) = start.take() {
                paras.push(&text[s..end]);
            }
        } else {
            if start.is_none() {
                start = Some(offset);
            }
            end = offset + line.len();
        }
        offset += line.len();
    }
    if let Some(s) = start {
        paras.push(&text[s..end]);
    }
    paras
}

/// Segments every document of a corpus in order. Document ids must be unique
/// and non-empty.
pub fn segment_corpus(docs: &[Document], params: SegmentParams) -> Result<Vec<Snippet>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for doc in docs {
        if doc.id.is_empty() {
            return Err(Error::Format("document with empty id".into()));
        }
        if !seen.insert(doc.id.as_str()) {
            return Err(Error::Format(format!("duplicate document id `{}`", doc.id)));
        }
        out.extend(segment_document(doc, params)?);
    }
    Ok(out)
}

/// Loads a JSON-lines corpus (`{"id", "title", "text"}` per line).
pub fn read_corpus(path: &Path) -> Result<Vec<Document>> {
    let text = std::fs::read_to_string(path)?;
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(line)
            .map_err(|e| Error::Format(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        if doc.id.is_empty() {
            return Err(Error::Format(format!(
                "{}: line {}: empty \"id\"",
                path.display(),
                i + 1
            )));
        }
        docs.push(doc);
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(text: &str) -> Document {
        Document {
            id: "d".into(),
            title: String::new(),
            text: text.into(),
        }
    }

    fn words(n: usize, prefix: &str) -> String {
        (0..n)
            .map(|i| format!("{prefix}{i}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn two_short_paragraphs() {
        let d = doc(&format!("{}\n\n{}", words(10, "a"), words(10, "b")));
        let s = segment_document(&d, SegmentParams::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].snippet_id, "d#0");
        assert_eq!(s[1].snippet_id, "d#1");
        assert_eq!(s[1].tokens[0], "b0");
    }

    #[test]
    fn long_paragraph_windows() {
        let d = doc(&words(300, "w"));
        let s = segment_document(&d, SegmentParams::default()).unwrap();
        assert_eq!(s.len(), 3);
        let first = |sn: &Snippet| {
            sn.tokens[0]
                .trim_start_matches('w')
                .parse::<usize>()
                .unwrap()
        };
        assert_eq!((first(&s[0]), s[0].tokens.len()), (0, 128));
        assert_eq!((first(&s[1]), s[1].tokens.len()), (96, 128));
        assert_eq!((first(&s[2]), s[2].tokens.len()), (192, 108));
    }

    #[test]
    fn empty_and_blank_documents() {
        assert!(segment_document(&doc(""), SegmentParams::default())
            .unwrap()
            .is_empty());
        assert!(
            segment_document(&doc("\n \n\t\n"), SegmentParams::default())
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn snippet_tokens_match_text() {
        let d = doc(&format!("{}, end.\n\nNext -- para!", words(200, "x")));
        for s in segment_document(&d, SegmentParams::default()).unwrap() {
            assert_eq!(s.tokens, tokenize(&s.text));
        }
    }

    #[test]
    fn bad_window_params() {
        let p = SegmentParams {
            max_tokens: 4,
            overlap: 4,
        };
        assert!(segment_document(&doc("a b"), p).is_err());
    }
}
