//! Train one logistic grounder per concept from report-annotated image
//! features and keep the most accurate ones.

use knowledge_bottleneck::bench::{synth_generate, SyntheticConfig};
use knowledge_bottleneck::grounding::{
    ground, select_top_k, train_grounders, GroundingConfig, PretrainSet,
};
use knowledge_bottleneck::oracle::KeywordAnnotator;

fn main() -> anyhow::Result<()> {
    let world = synth_generate(&SyntheticConfig::default())?;
    let set = PretrainSet::new(world.pretrain.clone())?;
    let mut questions = world.questions();
    questions.push("Is there no acute findings?".into());

    let cfg = GroundingConfig::default();
    let models = train_grounders(&questions, &set, &KeywordAnnotator::new(), &cfg)?;
    println!(
        "{:<36} {:>5} {:>5} {:>8}",
        "concept", "pos", "neg", "val acc"
    );
    for m in &models {
        println!(
            "{:<36} {:>5} {:>5} {:>8.3}",
            m.concept, m.n_positive, m.n_negative, m.val_accuracy
        );
    }

    let top = select_top_k(models, 4);
    let example = &world.pool[0];
    println!("\nreport: {}", example.report_text);
    for (m, a) in top.iter().zip(ground(&example.features, &top)?) {
        println!("  P({}) = {a:.3}", m.concept);
    }
    Ok(())
}
