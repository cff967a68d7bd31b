//! Segment a handful of documents and rank snippets for a query with BM25.
//!
//! ```text
//! cargo run --example bm25_retrieval -- "pleural effusion"
//! ```

use knowledge_bottleneck::corpus::{
    segment_corpus, Bm25Params, Document, InvertedIndex, SegmentParams,
};

fn main() -> anyhow::Result<()> {
    let query = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "lung opacity pneumonia".to_string());
    let docs = vec![
        Document {
            id: "pneumonia".into(),
            title: "Pneumonia".into(),
            text: "Pneumonia is an infection of the lung.\n\n\
                   On chest radiographs it appears as a lung opacity, often with an air bronchogram."
                .into(),
        },
        Document {
            id: "effusion".into(),
            title: "Pleural effusion".into(),
            text: "A pleural effusion blunts the costophrenic angle.\n\n\
                   Large effusions can hide an underlying lung opacity."
                .into(),
        },
        Document {
            id: "cardiomegaly".into(),
            title: "Cardiomegaly".into(),
            text: "Cardiomegaly is an enlarged cardiac silhouette with a cardiothoracic ratio above one half."
                .into(),
        },
    ];
    let snippets = segment_corpus(&docs, SegmentParams::default())?;
    let index = InvertedIndex::build(&snippets)?;
    println!(
        "{} snippets, {} terms, average length {:.2} tokens",
        index.n_snippets(),
        index.n_terms(),
        index.avgdl().unwrap_or(0.0)
    );
    println!("query: {query:?}");
    for hit in index.retrieve_top_k(&query, 5, Bm25Params::default()) {
        let ord = index
            .ordinal_of(&hit.snippet_id)
            .expect("hit comes from the index");
        println!(
            "{:>2}. {:<14} {:.4}  {}",
            hit.rank,
            hit.snippet_id,
            hit.score,
            index.snippet_text(ord)
        );
    }
    Ok(())
}
