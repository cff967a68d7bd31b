//! The file-based pipeline in one process: synthesize a dataset, index the
//! corpus, generate and ground concepts, fetch the prior, train and evaluate.
//!
//! ```text
//! cargo run --release --example end_to_end -- /tmp/kbn-demo
//! ```

use knowledge_bottleneck::pipeline::{self, HeadKind, Oracles, PipelineConfig, Workspace};

fn main() -> anyhow::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("kbn-end-to-end"));
    let ws = Workspace::new(&dir);
    let cfg = PipelineConfig::default().resolve()?;

    pipeline::cmd_synth(&ws, &cfg)?;
    let idx = pipeline::cmd_index(&ws, &ws.corpus(), &cfg)?;
    println!("indexed {} snippets", idx.n_snippets);

    let oracles = Oracles::mock(&ws.load_task()?);
    let bottleneck = pipeline::cmd_generate(&ws, &cfg, &oracles)?;
    println!("bottleneck: {:?}", bottleneck.texts());
    let grounders = pipeline::cmd_ground(&ws, &cfg, &oracles)?;
    for m in &grounders.models {
        println!("  {:<32} val acc {:.3}", m.concept, m.val_accuracy);
    }
    pipeline::cmd_prior(&ws, &cfg, &oracles)?;

    let mut rows = Vec::new();
    for kind in [HeadKind::Bottleneck, HeadKind::LinearProbe] {
        pipeline::cmd_train(&ws, &cfg, kind)?;
        let report = pipeline::cmd_eval(&ws, &cfg, kind)?;
        rows.push((report.method.clone(), report.metrics));
    }
    print!("{}", knowledge_bottleneck::bench::format_table(&rows));
    println!("artifacts in {}", dir.display());
    Ok(())
}
