use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Snippet;
use crate::error::{Error, Result};
use crate::io::{put_str, put_u32, put_u64, write_atomic, Cursor};
use crate::text::tokenize;

pub const INDEX_MAGIC: &[u8; 4] = b"KIDX";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if self.k1.is_nan() || self.k1 < 0.0 || !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidArgument(format!(
                "BM25 needs k1 >= 0 and b in [0,1] (got k1={}, b={})",
                self.k1, self.b
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub snippet_id: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct StoredSnippet {
    id: String,
    doc_id: String,
    text: String,
}

/// Immutable BM25 index over a snippet collection.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    /// term -> (snippet ordinal, term frequency), ordinals ascending.
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    doc_lengths: Vec<u32>,
    avgdl: Option<f64>,
    snippets: Vec<StoredSnippet>,
}

impl InvertedIndex {
    pub fn build(snippets: &[Snippet]) -> Result<Self> {
        let mut seen = HashSet::with_capacity(snippets.len());
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(snippets.len());
        let mut stored = Vec::with_capacity(snippets.len());
        for (ordinal, s) in snippets.iter().enumerate() {
            if !seen.insert(s.snippet_id.as_str()) {
                return Err(Error::DuplicateSnippet(s.snippet_id.clone()));
            }
            let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &s.tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
            for (term, tf) in counts {
                postings
                    .entry(term.to_string())
                    .or_default()
                    .push((ordinal as u32, tf));
            }
            doc_lengths.push(s.tokens.len() as u32);
            stored.push(StoredSnippet {
                id: s.snippet_id.clone(),
                doc_id: s.doc_id.clone(),
                text: s.text.clone(),
            });
        }
        Ok(Self::from_parts(postings, doc_lengths, stored))
    }

    fn from_parts(
        postings: BTreeMap<String, Vec<(u32, u32)>>,
        doc_lengths: Vec<u32>,
        snippets: Vec<StoredSnippet>,
    ) -> Self {
        let avgdl = if doc_lengths.is_empty() {
            None
        } else {
            Some(doc_lengths.iter().map(|&l| l as f64).sum::<f64>() / doc_lengths.len() as f64)
        };
        Self {
            postings,
            doc_lengths,
            avgdl,
            snippets,
        }
    }

    pub fn n_snippets(&self) -> usize {
        self.doc_lengths.len()
    }

    /// Mean snippet length; `None` for an empty index.
    pub fn avgdl(&self) -> Option<f64> {
        self.avgdl
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn postings(&self, term: &str) -> &[(u32, u32)] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn n_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn snippet_id(&self, ordinal: usize) -> &str {
        &self.snippets[ordinal].id
    }

    pub fn snippet_text(&self, ordinal: usize) -> &str {
        &self.snippets[ordinal].text
    }

    pub fn snippet_doc_id(&self, ordinal: usize) -> &str {
        &self.snippets[ordinal].doc_id
    }

    pub fn ordinal_of(&self, snippet_id: &str) -> Option<usize> {
        self.snippets.iter().position(|s| s.id == snippet_id)
    }

    /// `ln((n - df + 0.5) / (df + 0.5) + 1)`, never negative.
    pub fn idf(&self, df: usize) -> f64 {
        let n = self.n_snippets() as f64;
        let df = df as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Top-`k` snippets by BM25 score. Query terms are deduplicated; snippets
    /// scoring zero are dropped; ties go to the smaller snippet id.
    pub fn retrieve_top_k(
        &self,
        query: &str,
        k: usize,
        params: Bm25Params,
    ) -> Vec<RetrievalResult> {
        let Some(avgdl) = self.avgdl else {
            return Vec::new();
        };
        if k == 0 {
            return Vec::new();
        }
        // Each snippet's per-term contributions are summed in ascending
        // order so that equal contributions always give bit-identical scores,
        // whatever the query's term order. Exact ties then fall to the id.
        let mut parts: Vec<(usize, f64)> = Vec::new();
        for term in unique_terms(query) {
            let plist = self.postings(&term);
            if plist.is_empty() {
                continue;
            }
            let idf = self.idf(plist.len());
            for &(ord, tf) in plist {
                let ord = ord as usize;
                parts.push((
                    ord,
                    term_score(idf, tf as f64, self.doc_lengths[ord] as f64, avgdl, params),
                ));
            }
        }
        parts.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut hits: Vec<(usize, f64)> = Vec::new();
        for (ord, part) in parts {
            match hits.last_mut() {
                Some((last, score)) if *last == ord => *score += part,
                _ => hits.push((ord, part)),
            }
        }
        hits.retain(|&(_, s)| s > 0.0);
        hits.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.snippets[a.0].id.cmp(&self.snippets[b.0].id))
        });
        hits.truncate(k);
        hits.into_iter()
            .enumerate()
            .map(|(i, (o, score))| RetrievalResult {
                snippet_id: self.snippets[o].id.clone(),
                score,
                rank: i + 1,
            })
            .collect()
    }

    /// Serializes to the `KIDX` layout:
    ///
    /// ```text
    /// "KIDX" | version: u32
    /// n_snippets: u64 | n_snippets × { id: str, doc_id: str, text: str, length: u32 }
    /// n_terms: u64    | n_terms × { term: str, n_postings: u32, n_postings × { ordinal: u32, tf: u32 } }
    /// ```
    ///
    /// `str` is a u32 byte length followed by UTF-8 bytes; all integers are
    /// little-endian and terms are written in byte order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(INDEX_MAGIC);
        put_u32(&mut out, INDEX_VERSION);
        put_u64(&mut out, self.snippets.len() as u64);
        for (s, &len) in self.snippets.iter().zip(&self.doc_lengths) {
            put_str(&mut out, &s.id);
            put_str(&mut out, &s.doc_id);
            put_str(&mut out, &s.text);
            put_u32(&mut out, len);
        }
        put_u64(&mut out, self.postings.len() as u64);
        for (term, plist) in &self.postings {
            put_str(&mut out, term);
            put_u32(&mut out, plist.len() as u32);
            for &(ord, tf) in plist {
                put_u32(&mut out, ord);
                put_u32(&mut out, tf);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut c = Cursor::new(bytes);
        if c.take(4)? != INDEX_MAGIC {
            return Err(Error::Format("not a KIDX index (bad magic)".into()));
        }
        let version = c.u32()?;
        if version != INDEX_VERSION {
            return Err(Error::Format(format!(
                "KIDX version {version} is not supported (expected {INDEX_VERSION})"
            )));
        }
        let n = c.u64()? as usize;
        let mut snippets = Vec::with_capacity(n.min(1 << 20));
        let mut doc_lengths = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let id = c.string()?;
            let doc_id = c.string()?;
            let text = c.string()?;
            doc_lengths.push(c.u32()?);
            snippets.push(StoredSnippet { id, doc_id, text });
        }
        let n_terms = c.u64()? as usize;
        let mut postings = BTreeMap::new();
        for _ in 0..n_terms {
            let term = c.string()?;
            let m = c.u32()? as usize;
            let mut plist = Vec::with_capacity(m.min(n));
            for _ in 0..m {
                let ord = c.u32()?;
                let tf = c.u32()?;
                if ord as usize >= n || tf == 0 {
                    return Err(Error::Format(format!(
                        "corrupt posting for `{term}`: ordinal {ord}, tf {tf}"
                    )));
                }
                plist.push((ord, tf));
            }
            postings.insert(term, plist);
        }
        if !c.is_empty() {
            return Err(Error::Format("trailing bytes after KIDX index".into()));
        }
        Ok(Self::from_parts(postings, doc_lengths, snippets))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn unique_terms(query: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    tokenize(query)
        .into_iter()
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

#[inline]
fn term_score(idf: f64, tf: f64, len: f64, avgdl: f64, p: Bm25Params) -> f64 {
    idf * (tf * (p.k1 + 1.0)) / (tf + p.k1 * (1.0 - p.b + p.b * len / avgdl))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snips(texts: &[&str]) -> Vec<Snippet> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Snippet::new(&format!("d{}", i + 1), 0, t))
            .collect()
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn hand_computed_three_doc_ranking() {
        let idx = InvertedIndex::build(&snips(&[
            "lung opacity present",
            "no opacity",
            "heart size normal",
        ]))
        .unwrap();
        let r = idx.retrieve_top_k("opacity", 10, Bm25Params::default());
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].snippet_id, "d2#0");
        assert_eq!(r[1].snippet_id, "d1#0");
        // idf = ln(1.6); d2: 2.2/1.975, d1: 2.2/2.3125
        assert!((r[0].score - 0.5235).abs() < 5e-4);
        assert!((r[1].score - 0.4471).abs() < 5e-4);
        assert!((r[0].score - 1.6f64.ln() * 2.2 / 1.975).abs() < 1e-12);
        assert_eq!((r[0].rank, r[1].rank), (1, 2));
    }

    #[test]
    fn posting_list_lengths() {
        let idx = InvertedIndex::build(&snips(&["opacity a", "b opacity opacity", "c"])).unwrap();
        assert_eq!(idx.postings("opacity"), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn empty_index_and_absent_terms() {
        let idx = InvertedIndex::build(&[]).unwrap();
        assert!(idx.avgdl().is_none());
        assert!(idx
            .retrieve_top_k("anything", 5, Bm25Params::default())
            .is_empty());
        let idx = InvertedIndex::build(&snips(&["a b"])).unwrap();
        assert!(idx
            .retrieve_top_k("zzz", 5, Bm25Params::default())
            .is_empty());
        assert!(idx.retrieve_top_k("a", 0, Bm25Params::default()).is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let s = Snippet::new("d", 0, "x");
        match InvertedIndex::build(&[s.clone(), s]) {
            Err(Error::DuplicateSnippet(id)) => assert_eq!(id, "d#0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bytes_roundtrip_and_version_check() {
        let idx =
            InvertedIndex::build(&snips(&["lung opacity", "pleural effusion opacity"])).unwrap();
        let bytes = idx.to_bytes();
        assert_eq!(&bytes[..4], b"KIDX");
        assert_eq!(InvertedIndex::from_bytes(&bytes).unwrap(), idx);
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(
            InvertedIndex::from_bytes(&bad),
            Err(Error::Format(_))
        ));
        assert!(InvertedIndex::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn ties_break_by_snippet_id() {
        let idx = InvertedIndex::build(&snips(&["x y", "x y", "x y"])).unwrap();
        let ids: Vec<_> = idx
            .retrieve_top_k("x", 3, Bm25Params::default())
            .into_iter()
            .map(|r| r.snippet_id)
            .collect();
        assert_eq!(ids, ["d1#0", "d2#0", "d3#0"]);
    }
}
