//! `kbn`: run the concept-bottleneck pipeline stage by stage over a workspace
//! directory.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 remote oracle failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use knowledge_bottleneck::pipeline::{
    self, HeadKind, OracleMode, Oracles, PipelineConfig, Workspace,
};
use knowledge_bottleneck::probe::FeaturizerKind;
use knowledge_bottleneck::Error;

#[derive(Parser, Debug)]
#[command(
    name = "kbn",
    version,
    about = "Concept-bottleneck pipeline over a workspace directory"
)]
struct Cli {
    /// JSON pipeline config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every stochastic stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the offline keyword oracles even if the config selects remote ones.
    #[arg(long, global = true)]
    mock: bool,
    /// Environment variable holding the remote endpoint URL (token in `{VAR}_TOKEN`).
    #[arg(long, global = true)]
    endpoint_env: Option<String>,
    /// Workspace directory for inputs and outputs.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic confounded dataset, corpus and task into the workspace.
    Synth,
    /// Segment a JSON-lines corpus and build the BM25 index.
    Index {
        /// Defaults to `corpus.jsonl` in the workspace.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Generate the concept bottleneck.
    Generate {
        /// Bottleneck size.
        #[arg(long)]
        target: Option<usize>,
    },
    /// Train one grounding classifier per concept.
    Ground {
        /// Keep only the k most accurate grounders.
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Ask the prior oracle for class/concept signs.
    Prior,
    /// Train the linear head.
    Train {
        /// Train without the prior term.
        #[arg(long)]
        no_prior: bool,
        /// Weight of the prior term.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Train the raw-feature linear probe instead.
        #[arg(long)]
        probe: bool,
    },
    /// Evaluate a trained head, or compute metrics from a numbers file.
    Eval {
        /// File with ID, OOD and optional unconfounded accuracies.
        #[arg(long)]
        numbers: Option<PathBuf>,
        /// Evaluate the raw-feature linear probe.
        #[arg(long)]
        probe: bool,
    },
    /// Linear probes over pixel and random-network features of images.
    Probe {
        /// Directory with `images.jsonl` + PGMs, or `{train,test}.fmat/.jsonl`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        featurizer: FeaturizerArg,
    },
    /// Mean pairwise cosine distance of the bottleneck's concepts.
    Diversity {
        /// Defaults to `bottleneck.jsonl` in the workspace.
        #[arg(long)]
        bottleneck: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FeaturizerArg {
    Pixel,
    RandomNet,
    Both,
}

fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            PipelineConfig::load(p).with_context(|| format!("loading config {}", p.display()))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.mock {
        cfg.mode = OracleMode::Mock;
    }
    if let Some(var) = &cli.endpoint_env {
        cfg.endpoint_env = var.clone();
    }
    match &cli.command {
        Command::Generate { target: Some(t) } => cfg.generation.target_size = *t,
        Command::Ground { top_k: Some(k) } => cfg.top_k = Some(*k),
        Command::Train {
            no_prior,
            lambda,
            epochs,
            lr,
            ..
        } => {
            if *no_prior {
                cfg.train.prior_enabled = false;
            }
            if let Some(l) = lambda {
                cfg.train.prior_weight = *l;
            }
            if let Some(e) = epochs {
                cfg.train.epochs = *e;
            }
            if let Some(lr) = lr {
                cfg.train.learning_rate = *lr;
            }
        }
        _ => {}
    }
    Ok(cfg.resolve()?)
}

fn emit<T: serde::Serialize>(json: bool, value: &T, human: impl FnOnce() -> String) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        print!("{}", human());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    let ws = Workspace::new(&cli.out);
    std::fs::create_dir_all(&ws.root).with_context(|| format!("creating {}", ws.root.display()))?;
    let oracles = || -> Result<Oracles> {
        let task = ws.load_task_or_default()?;
        Ok(Oracles::from_config(&cfg, &task)?)
    };
    match &cli.command {
        Command::Synth => {
            let s = pipeline::cmd_synth(&ws, &cfg)?;
            emit(cli.json, &s, || {
                let mut out = format!(
                    "documents: {}\npretraining pairs: {}\n",
                    s.n_documents, s.n_pretrain
                );
                for (name, n) in &s.split_sizes {
                    out.push_str(&format!("{name}: {n}\n"));
                }
                out
            })
        }
        Command::Index { corpus } => {
            let corpus = corpus.clone().unwrap_or_else(|| ws.corpus());
            let s = pipeline::cmd_index(&ws, &corpus, &cfg)?;
            emit(cli.json, &s, || {
                format!(
                    "documents: {}\nsnippets: {}\nterms: {}\nindex: {}\n",
                    s.n_documents,
                    s.n_snippets,
                    s.n_terms,
                    ws.index().display()
                )
            })
        }
        Command::Generate { .. } => {
            let b = pipeline::cmd_generate(&ws, &cfg, &oracles()?)?;
            emit(cli.json, &b.texts(), || {
                let mut out = format!(
                    "{} / {} concepts{}\n",
                    b.len(),
                    b.target_size,
                    if b.stalled {
                        " (stalled: no new queries)"
                    } else {
                        ""
                    }
                );
                for c in &b.concepts {
                    out.push_str(&format!("  {}  [{}]\n", c.text, c.source_doc_id));
                }
                out
            })
        }
        Command::Ground { .. } => {
            let g = pipeline::cmd_ground(&ws, &cfg, &oracles()?)?;
            let rows: Vec<_> = g
                .models
                .iter()
                .map(|m| (m.concept.clone(), m.val_accuracy))
                .collect();
            emit(cli.json, &rows, || {
                let mut out = format!("{:<48} {:>8}\n", "concept", "val acc");
                for (c, a) in &rows {
                    out.push_str(&format!("{c:<48} {a:>8.3}\n"));
                }
                out
            })
        }
        Command::Prior => {
            let p = pipeline::cmd_prior(&ws, &cfg, &oracles()?)?;
            let rows: Vec<Vec<i8>> = p
                .entries
                .rows()
                .into_iter()
                .map(|r| r.iter().map(|&v| v as i8).collect())
                .collect();
            emit(cli.json, &rows, || {
                let mut out = String::new();
                for (j, c) in p.concepts.iter().enumerate() {
                    let signs: Vec<String> = rows.iter().map(|r| format!("{:+}", r[j])).collect();
                    out.push_str(&format!("{c:<48} {}\n", signs.join(" ")));
                }
                out
            })
        }
        Command::Train { probe, .. } => {
            let kind = if *probe {
                HeadKind::LinearProbe
            } else {
                HeadKind::Bottleneck
            };
            let s = pipeline::cmd_train(&ws, &cfg, kind)?;
            emit(cli.json, &s, || {
                format!(
                    "trained on {} examples (prior {}), best epoch {}, val accuracy {}\n",
                    s.n_train,
                    if s.prior_enabled { "on" } else { "off" },
                    s.best_epoch,
                    s.val_accuracy.map_or("-".into(), |a| format!("{a:.1}"))
                )
            })
        }
        Command::Eval { numbers, probe } => {
            let report = match numbers {
                Some(p) => pipeline::eval_numbers(p)?,
                None => {
                    let kind = if *probe {
                        HeadKind::LinearProbe
                    } else {
                        HeadKind::Bottleneck
                    };
                    pipeline::cmd_eval(&ws, &cfg, kind)?
                }
            };
            emit(cli.json, &report, || {
                format!("{}\n{}", report.row, report.table())
            })
        }
        Command::Probe { data, featurizer } => {
            let kinds = match featurizer {
                FeaturizerArg::Pixel => vec![FeaturizerKind::Pixel],
                FeaturizerArg::RandomNet => vec![FeaturizerKind::RandomNet],
                FeaturizerArg::Both => vec![FeaturizerKind::Pixel, FeaturizerKind::RandomNet],
            };
            let reports = pipeline::cmd_probe(&ws, &cfg, data, &kinds)?;
            emit(cli.json, &reports, || {
                let mut out = format!("{:<12} {:>6} {:>9}\n", "features", "dim", "accuracy");
                for r in &reports {
                    out.push_str(&format!(
                        "{:<12} {:>6} {:>9.1}\n",
                        format!("{:?}", r.featurizer),
                        r.dim,
                        r.accuracy
                    ));
                }
                out
            })
        }
        Command::Diversity { bottleneck } => {
            let path = bottleneck.clone().unwrap_or_else(|| ws.bottleneck());
            let r = pipeline::cmd_diversity(&ws, &cfg, &path)?;
            emit(cli.json, &r, || {
                format!(
                    "concepts: {}\ndiversity: {:.6}\n",
                    r.n_concepts, r.diversity
                )
            })
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Remote(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
