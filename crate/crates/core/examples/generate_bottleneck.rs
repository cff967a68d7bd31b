//! Grow a concept bottleneck from class names with retrieval, keyword mock
//! oracles and report-based support counts.
//!
//! Concepts that are not visual ("fever") or never appear in reports
//! ("rib fracture") are rejected; generation stalls once no new concepts
//! appear.

use knowledge_bottleneck::bench::{synth_generate, SyntheticConfig};
use knowledge_bottleneck::concepts::{
    diversity, generate_bottleneck, ConceptValidator, GenerationConfig, HashedTrigramEmbedder,
    ValidationConfig,
};
use knowledge_bottleneck::corpus::{segment_corpus, InvertedIndex, SegmentParams};
use knowledge_bottleneck::grounding::{AnnotatedSupport, GroundingConfig, PretrainSet};
use knowledge_bottleneck::oracle::{KeywordAnnotator, KeywordGroundability, LexiconProposer};

fn main() -> anyhow::Result<()> {
    let world = synth_generate(&SyntheticConfig::default())?;
    let index = InvertedIndex::build(&segment_corpus(&world.corpus, SegmentParams::default())?)?;
    let pretrain = PretrainSet::new(world.pretrain.clone())?;

    let proposer = LexiconProposer::new(&world.lexicon);
    let groundability = KeywordGroundability::new(&world.visual_keywords);
    let annotator = KeywordAnnotator::new();
    let support = AnnotatedSupport {
        set: &pretrain,
        annotator: &annotator,
        cfg: GroundingConfig::default(),
    };
    let embedder = HashedTrigramEmbedder::default();
    let validator = ConceptValidator {
        cfg: ValidationConfig::default(),
        groundability: &groundability,
        support: &support,
        embedder: &embedder,
    };
    let cfg = GenerationConfig {
        target_size: 10,
        ..GenerationConfig::default()
    };
    let bottleneck = generate_bottleneck(&world.class_names, &index, &proposer, &validator, &cfg)?;

    println!(
        "{} of {} requested concepts{}",
        bottleneck.len(),
        cfg.target_size,
        if bottleneck.stalled { " (stalled)" } else { "" }
    );
    for c in &bottleneck.concepts {
        println!(
            "  {:<32} from {:<10} via {:?}",
            c.text, c.source_doc_id, c.origin_query
        );
        println!("      \"{}\"", c.reference_sentence);
    }
    println!("diversity: {:.4}", diversity(&bottleneck)?);
    Ok(())
}
