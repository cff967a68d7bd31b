//! File-based pipeline commands. Each command reads its inputs from a
//! workspace directory, writes its outputs there atomically, and records a
//! manifest echoing the resolved configuration.
//!
//! Workspace layout:
//!
//! ```text
//! corpus.jsonl            documents {id, title?, text}
//! task.json               class names, mock lexicon and keywords, known prior signs
//! pretrain.fmat/.jsonl    pretraining image features and {pair_id, report_text}
//! splits/{train,val,test,unconfounded}.fmat/.jsonl
//! index.kidx              BM25 index
//! bottleneck.jsonl        generated concepts
//! grounders.json          per-concept grounding models
//! prior.json              class/concept sign prior
//! head.json               bottleneck predictor (probe_head.json for the raw-feature probe)
//! metrics.json            evaluation report
//! manifest-{command}.json resolved config, inputs and outputs of the last run
//! ```

use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::bench::{
    compute_metrics, format_table, read_split, split_matrix, synth_generate, write_split,
    LabeledExample, Metrics, SyntheticConfig,
};
use crate::concepts::{
    diversity, generate_bottleneck, Bottleneck, ConceptValidator, GenerationConfig,
    HashedTrigramEmbedder, ValidationConfig,
};
use crate::corpus::{
    read_corpus, segment_corpus, Bm25Params, Document, InvertedIndex, SegmentParams,
};
use crate::error::{Error, Result};
use crate::grounding::{
    ground_matrix, select_top_k, train_grounders, AnnotatedSupport, GrounderSet, GroundingConfig,
    PretrainPair, PretrainSet,
};
use crate::oracle::{
    AnnotationOracle, ConceptProposer, GroundabilityOracle, KeywordAnnotator, KeywordGroundability,
    LexiconProposer, PriorOracle, RemoteAnnotator, RemoteEndpoint, RemoteGroundability,
    RemotePrior, RemoteProposer, DEFAULT_ENDPOINT_ENV,
};
use crate::predictor::{
    evaluate_accuracy, train_head, LinearHead, PriorMatrix, TrainConfig, TruthPrior,
};
use crate::probe::{
    parse_pgm, probe, thumbnail, Featurizer, FeaturizerKind, GrayImage, PROBE_SIDE,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    #[default]
    Mock,
    Remote,
}

/// Everything a pipeline run depends on. Loaded from JSON; missing fields take
/// their defaults. The top-level `seed` overrides the seeds of every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub mode: OracleMode,
    /// Name of the environment variable holding the remote endpoint URL.
    pub endpoint_env: String,
    pub timeout_secs: u64,
    /// Overrides the class names from `task.json` when nonempty.
    pub class_names: Vec<String>,
    pub segment: SegmentParams,
    pub generation: GenerationConfig,
    pub validation: ValidationConfig,
    pub grounding: GroundingConfig,
    /// Keep only the most accurate grounders.
    pub top_k: Option<usize>,
    pub train: TrainConfig,
    pub synthetic: SyntheticConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mode: OracleMode::Mock,
            endpoint_env: DEFAULT_ENDPOINT_ENV.to_string(),
            timeout_secs: 60,
            class_names: Vec::new(),
            segment: SegmentParams::default(),
            generation: GenerationConfig::default(),
            validation: ValidationConfig::default(),
            grounding: GroundingConfig::default(),
            top_k: None,
            train: TrainConfig::default(),
            synthetic: SyntheticConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        require(path)?;
        crate::io::read_json(path)
    }

    /// Copies the top-level seed into every stage and validates.
    pub fn resolve(mut self) -> Result<Self> {
        self.grounding.seed = self.seed;
        self.train.seed = self.seed;
        self.synthetic.seed = self.seed;
        self.validation.validate()?;
        self.generation.bm25.validate()?;
        self.train.validate()?;
        Ok(self)
    }

    pub fn bm25(&self) -> Bm25Params {
        self.generation.bm25
    }
}

/// Task description used by the mock oracles and to name classes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskSpec {
    pub class_names: Vec<String>,
    /// Phrases the mock proposer can suggest.
    pub lexicon: Vec<String>,
    /// Phrases the mock groundability oracle accepts.
    pub visual_keywords: Vec<String>,
    /// Known signs for the mock prior oracle.
    pub prior: Option<TruthPrior>,
}

/// The four language-model roles.
pub struct Oracles {
    pub proposer: Box<dyn ConceptProposer>,
    pub groundability: Box<dyn GroundabilityOracle>,
    pub annotator: Box<dyn AnnotationOracle>,
    pub prior: Box<dyn PriorOracle>,
}

impl Oracles {
    pub fn mock(task: &TaskSpec) -> Self {
        Self {
            proposer: Box::new(LexiconProposer::new(&task.lexicon)),
            groundability: Box::new(KeywordGroundability::new(&task.visual_keywords)),
            annotator: Box::new(KeywordAnnotator::new()),
            prior: Box::new(
                task.prior
                    .clone()
                    .unwrap_or_else(|| TruthPrior::new(task.class_names.clone())),
            ),
        }
    }

    pub fn remote(endpoint: RemoteEndpoint) -> Self {
        Self {
            proposer: Box::new(RemoteProposer(endpoint.clone())),
            groundability: Box::new(RemoteGroundability(endpoint.clone())),
            annotator: Box::new(RemoteAnnotator(endpoint.clone())),
            prior: Box::new(RemotePrior(endpoint)),
        }
    }

    pub fn from_config(cfg: &PipelineConfig, task: &TaskSpec) -> Result<Self> {
        match cfg.mode {
            OracleMode::Mock => Ok(Self::mock(task)),
            OracleMode::Remote => Ok(Self::remote(RemoteEndpoint::from_env(
                &cfg.endpoint_env,
                Duration::from_secs(cfg.timeout_secs),
            )?)),
        }
    }
}

/// Paths inside a workspace directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn corpus(&self) -> PathBuf {
        self.path("corpus.jsonl")
    }

    pub fn task(&self) -> PathBuf {
        self.path("task.json")
    }

    pub fn index(&self) -> PathBuf {
        self.path("index.kidx")
    }

    pub fn splits(&self) -> PathBuf {
        self.path("splits")
    }

    pub fn bottleneck(&self) -> PathBuf {
        self.path("bottleneck.jsonl")
    }

    pub fn grounders(&self) -> PathBuf {
        self.path("grounders.json")
    }

    pub fn prior(&self) -> PathBuf {
        self.path("prior.json")
    }

    pub fn head(&self, kind: HeadKind) -> PathBuf {
        match kind {
            HeadKind::Bottleneck => self.path("head.json"),
            HeadKind::LinearProbe => self.path("probe_head.json"),
        }
    }

    pub fn metrics(&self) -> PathBuf {
        self.path("metrics.json")
    }

    pub fn manifest(&self, command: &str) -> PathBuf {
        self.path(&format!("manifest-{command}.json"))
    }

    pub fn load_task(&self) -> Result<TaskSpec> {
        let p = self.task();
        require(&p)?;
        crate::io::read_json(&p)
    }

    pub fn load_task_or_default(&self) -> Result<TaskSpec> {
        if self.task().exists() {
            self.load_task()
        } else {
            Ok(TaskSpec::default())
        }
    }
}

/// Fails with [`Error::MissingInput`] naming `path` when it does not exist.
pub fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingInput(path.display().to_string()))
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    timestamp: u64,
    version: &'a str,
    config: &'a PipelineConfig,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

pub fn write_manifest(
    ws: &Workspace,
    command: &str,
    cfg: &PipelineConfig,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<()> {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let m = Manifest {
        command,
        timestamp,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    crate::io::write_json(&ws.manifest(command), &m)
}

#[derive(Serialize, Deserialize)]
struct PretrainMeta {
    pair_id: String,
    report_text: String,
}

pub fn write_pretrain(ws: &Workspace, pairs: &[PretrainPair]) -> Result<()> {
    let d = pairs.first().map_or(0, |p| p.image_features.len());
    let mut x = Array2::zeros((pairs.len(), d));
    for (mut row, p) in x.rows_mut().into_iter().zip(pairs) {
        row.assign(&ndarray::ArrayView1::from(&p.image_features));
    }
    crate::fmat::write(&ws.path("pretrain.fmat"), &x)?;
    let meta: Vec<PretrainMeta> = pairs
        .iter()
        .map(|p| PretrainMeta {
            pair_id: p.pair_id.clone(),
            report_text: p.report_text.clone(),
        })
        .collect();
    crate::io::write_jsonl(&ws.path("pretrain.jsonl"), &meta)
}

pub fn read_pretrain(ws: &Workspace) -> Result<Vec<PretrainPair>> {
    let (fm, meta) = (ws.path("pretrain.fmat"), ws.path("pretrain.jsonl"));
    require(&fm)?;
    require(&meta)?;
    let x = crate::fmat::read(&fm)?;
    let rows: Vec<PretrainMeta> = crate::io::read_jsonl(&meta)?;
    if rows.len() != x.nrows() {
        return Err(Error::Format(format!(
            "pretrain.fmat has {} rows but pretrain.jsonl has {}",
            x.nrows(),
            rows.len()
        )));
    }
    Ok(rows
        .into_iter()
        .zip(x.rows())
        .map(|(m, r)| PretrainPair {
            pair_id: m.pair_id,
            report_text: m.report_text,
            image_features: r.to_vec(),
        })
        .collect())
}

fn load_split(ws: &Workspace, name: &str) -> Result<Vec<LabeledExample>> {
    let dir = ws.splits();
    require(&dir.join(format!("{name}.fmat")))?;
    require(&dir.join(format!("{name}.jsonl")))?;
    read_split(&dir, name)
}

fn class_names(cfg: &PipelineConfig, task: &TaskSpec) -> Result<Vec<String>> {
    let names = if cfg.class_names.is_empty() {
        task.class_names.clone()
    } else {
        cfg.class_names.clone()
    };
    if names.len() < 2 {
        return Err(Error::InvalidArgument(
            "at least 2 class names are needed (config `class_names` or task.json)".into(),
        ));
    }
    Ok(names)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSummary {
    pub n_documents: usize,
    pub n_pretrain: usize,
    pub split_sizes: Vec<(String, usize)>,
    pub concepts: Vec<String>,
}

/// Writes a synthetic world into the workspace: corpus, task, pretraining
/// pairs and confounded splits.
pub fn cmd_synth(ws: &Workspace, cfg: &PipelineConfig) -> Result<SynthSummary> {
    let world = synth_generate(&cfg.synthetic)?;
    let splits = world.splits()?;
    crate::io::write_jsonl(&ws.corpus(), &world.corpus)?;
    let task = TaskSpec {
        class_names: world.class_names.clone(),
        lexicon: world.lexicon.clone(),
        visual_keywords: world.visual_keywords.clone(),
        prior: Some(world.truth_prior.clone()),
    };
    crate::io::write_json(&ws.task(), &task)?;
    write_pretrain(ws, &world.pretrain)?;
    let mut outputs = vec![ws.corpus(), ws.task(), ws.path("pretrain.fmat")];
    let mut split_sizes = Vec::new();
    for (name, split) in splits.named() {
        write_split(&ws.splits(), name, split)?;
        outputs.push(ws.splits().join(format!("{name}.fmat")));
        split_sizes.push((name.to_string(), split.len()));
    }
    write_manifest(ws, "synth", cfg, &[], &outputs)?;
    Ok(SynthSummary {
        n_documents: world.corpus.len(),
        n_pretrain: world.pretrain.len(),
        split_sizes,
        concepts: world.questions(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexSummary {
    pub n_documents: usize,
    pub n_snippets: usize,
    pub n_terms: usize,
}

/// Segments `corpus` and writes the BM25 index to the workspace.
pub fn cmd_index(ws: &Workspace, corpus: &Path, cfg: &PipelineConfig) -> Result<IndexSummary> {
    require(corpus)?;
    let docs: Vec<Document> = read_corpus(corpus)?;
    let snippets = segment_corpus(&docs, cfg.segment)?;
    let index = InvertedIndex::build(&snippets)?;
    index.save(&ws.index())?;
    write_manifest(ws, "index", cfg, &[corpus.to_path_buf()], &[ws.index()])?;
    Ok(IndexSummary {
        n_documents: docs.len(),
        n_snippets: index.n_snippets(),
        n_terms: index.n_terms(),
    })
}

/// Runs concept generation against the workspace index.
pub fn cmd_generate(ws: &Workspace, cfg: &PipelineConfig, oracles: &Oracles) -> Result<Bottleneck> {
    require(&ws.index())?;
    let task = ws.load_task_or_default()?;
    let classes = class_names(cfg, &task)?;
    let index = InvertedIndex::load(&ws.index())?;
    let set = PretrainSet::new(read_pretrain(ws)?)?;
    let support = AnnotatedSupport {
        set: &set,
        annotator: oracles.annotator.as_ref(),
        cfg: cfg.grounding,
    };
    let embedder = HashedTrigramEmbedder::default();
    let validator = ConceptValidator {
        cfg: cfg.validation,
        groundability: oracles.groundability.as_ref(),
        support: &support,
        embedder: &embedder,
    };
    let bottleneck = generate_bottleneck(
        &classes,
        &index,
        oracles.proposer.as_ref(),
        &validator,
        &cfg.generation,
    )?;
    bottleneck.save_jsonl(&ws.bottleneck())?;
    write_manifest(
        ws,
        "generate",
        cfg,
        &[ws.index(), ws.path("pretrain.jsonl")],
        &[ws.bottleneck()],
    )?;
    Ok(bottleneck)
}

/// Trains one grounder per bottleneck concept.
pub fn cmd_ground(ws: &Workspace, cfg: &PipelineConfig, oracles: &Oracles) -> Result<GrounderSet> {
    require(&ws.bottleneck())?;
    let mut bottleneck = Bottleneck::load_jsonl(&ws.bottleneck())?;
    let set = PretrainSet::new(read_pretrain(ws)?)?;
    let mut models = train_grounders(
        &bottleneck.texts(),
        &set,
        oracles.annotator.as_ref(),
        &cfg.grounding,
    )?;
    if let Some(k) = cfg.top_k {
        models = select_top_k(models, k);
        let kept: Vec<String> = models.iter().map(|m| m.concept.clone()).collect();
        bottleneck.concepts.retain(|c| kept.contains(&c.text));
        bottleneck.reorder(&kept)?;
        bottleneck.save_jsonl(&ws.bottleneck())?;
    }
    let grounders = GrounderSet {
        feature_dim: set.feature_dim(),
        models,
    };
    crate::io::write_json(&ws.grounders(), &grounders)?;
    write_manifest(
        ws,
        "ground",
        cfg,
        &[ws.bottleneck(), ws.path("pretrain.jsonl")],
        &[ws.grounders()],
    )?;
    Ok(grounders)
}

fn load_grounders(ws: &Workspace) -> Result<GrounderSet> {
    require(&ws.grounders())?;
    crate::io::read_json(&ws.grounders())
}

/// Asks the prior oracle for signs over the grounded concepts.
pub fn cmd_prior(ws: &Workspace, cfg: &PipelineConfig, oracles: &Oracles) -> Result<PriorMatrix> {
    let grounders = load_grounders(ws)?;
    let task = ws.load_task_or_default()?;
    let classes = class_names(cfg, &task)?;
    let prior = PriorMatrix::from_oracle(oracles.prior.as_ref(), &classes, &grounders.concepts())?;
    prior.save(&ws.prior())?;
    write_manifest(ws, "prior", cfg, &[ws.grounders()], &[ws.prior()])?;
    Ok(prior)
}

/// Which head to train or evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    /// Linear head over grounded concept activations.
    Bottleneck,
    /// Linear head over the raw image features, without a prior.
    LinearProbe,
}

fn inputs_for(
    kind: HeadKind,
    grounders: Option<&GrounderSet>,
    split: &[LabeledExample],
) -> Result<(Array2<f64>, Vec<usize>)> {
    let (x, y) = split_matrix(split)?;
    match (kind, grounders) {
        (HeadKind::Bottleneck, Some(g)) => Ok((ground_matrix(x.view(), &g.models)?, y)),
        _ => Ok((x, y)),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSummary {
    pub kind: HeadKind,
    pub prior_enabled: bool,
    pub best_epoch: usize,
    pub val_accuracy: Option<f64>,
    pub n_train: usize,
}

/// Trains a head on the train split, checkpointing on the val split.
pub fn cmd_train(ws: &Workspace, cfg: &PipelineConfig, kind: HeadKind) -> Result<TrainSummary> {
    let task = ws.load_task_or_default()?;
    let train = load_split(ws, "train")?;
    let val = load_split(ws, "val")?;
    let classes = if cfg.class_names.is_empty() && task.class_names.is_empty() {
        let n = train.iter().map(|e| e.label).max().unwrap_or(0) + 1;
        (0..n.max(2)).map(|c| format!("class_{c}")).collect()
    } else {
        class_names(cfg, &task)?
    };
    let mut inputs = vec![ws.splits().join("train.fmat"), ws.splits().join("val.fmat")];
    let (grounders, columns, tcfg) = match kind {
        HeadKind::Bottleneck => {
            let g = load_grounders(ws)?;
            inputs.push(ws.grounders());
            let cols = g.concepts();
            (Some(g), cols, cfg.train)
        }
        HeadKind::LinearProbe => {
            let d = train.first().map_or(0, |e| e.features.len());
            let tcfg = TrainConfig {
                prior_enabled: false,
                ..cfg.train
            };
            (None, (0..d).map(|j| format!("feature_{j}")).collect(), tcfg)
        }
    };
    let prior = if tcfg.prior_enabled {
        require(&ws.prior())?;
        inputs.push(ws.prior());
        let p = PriorMatrix::load(&ws.prior())?;
        if p.concepts != columns || p.class_names != classes {
            return Err(Error::InvalidArgument(
                "prior.json does not match the grounded concepts or class names; rerun `prior`"
                    .into(),
            ));
        }
        Some(p)
    } else {
        None
    };
    let (xtr, ytr) = inputs_for(kind, grounders.as_ref(), &train)?;
    let (xv, yv) = inputs_for(kind, grounders.as_ref(), &val)?;
    let trained = train_head(
        xtr.view(),
        &ytr,
        Some((xv.view(), &yv)),
        classes,
        columns,
        &tcfg,
        prior.as_ref(),
    )?;
    let out = ws.head(kind);
    trained.head.save(&out)?;
    let name = match kind {
        HeadKind::Bottleneck => "train",
        HeadKind::LinearProbe => "train-probe",
    };
    write_manifest(ws, name, cfg, &inputs, &[out])?;
    Ok(TrainSummary {
        kind,
        prior_enabled: tcfg.prior_enabled,
        best_epoch: trained.best_epoch,
        val_accuracy: trained.best_val_accuracy,
        n_train: ytr.len(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub metrics: Metrics,
    /// `ID / OOD / Δ / Avg` rounded for display.
    pub row: String,
}

impl EvalReport {
    pub fn table(&self) -> String {
        format_table(&[(self.method.clone(), self.metrics)])
    }
}

/// Evaluates a trained head: val is in-domain, test is out-of-domain, and
/// the unconfounded split (when present) feeds the overall score.
pub fn cmd_eval(ws: &Workspace, cfg: &PipelineConfig, kind: HeadKind) -> Result<EvalReport> {
    let head_path = ws.head(kind);
    require(&head_path)?;
    let head = LinearHead::load(&head_path)?;
    let grounders = match kind {
        HeadKind::Bottleneck => {
            let g = load_grounders(ws)?;
            if g.concepts() != head.concepts {
                return Err(Error::InvalidArgument(
                    "head columns do not match grounders.json; retrain the head".into(),
                ));
            }
            Some(g)
        }
        HeadKind::LinearProbe => None,
    };
    let acc = |name: &str| -> Result<f64> {
        let split = load_split(ws, name)?;
        let (x, y) = inputs_for(kind, grounders.as_ref(), &split)?;
        evaluate_accuracy(&head, x.view(), &y)
    };
    let id = acc("val")?;
    let ood = acc("test")?;
    let unconf_path = ws.splits().join("unconfounded.jsonl");
    let unconf = if unconf_path.exists() && std::fs::metadata(&unconf_path)?.len() > 0 {
        Some(acc("unconfounded")?)
    } else {
        None
    };
    let metrics = compute_metrics(id, ood, unconf);
    let method = match kind {
        HeadKind::Bottleneck => "bottleneck",
        HeadKind::LinearProbe => "linear probe",
    };
    let report = EvalReport {
        method: method.to_string(),
        metrics,
        row: metrics.headline(),
    };
    crate::io::write_json(&ws.metrics(), &report)?;
    write_manifest(ws, "eval", cfg, &[head_path], &[ws.metrics()])?;
    Ok(report)
}

/// Accuracies typed in by hand, as JSON `{"id": .., "ood": .., "unconfounded": ..}`
/// or as 2-3 whitespace-separated numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyNumbers {
    pub id: f64,
    pub ood: f64,
    #[serde(default)]
    pub unconfounded: Option<f64>,
}

pub fn read_numbers(path: &Path) -> Result<AccuracyNumbers> {
    require(path)?;
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(&text)?);
    }
    let values: Vec<f64> = text
        .split(|c: char| c.is_whitespace() || c == ',' || c == '/')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Format(format!("{}: {t:?} is not a number", path.display())))
        })
        .collect::<Result<_>>()?;
    match values[..] {
        [id, ood] => Ok(AccuracyNumbers {
            id,
            ood,
            unconfounded: None,
        }),
        [id, ood, u] => Ok(AccuracyNumbers {
            id,
            ood,
            unconfounded: Some(u),
        }),
        _ => Err(Error::Format(format!(
            "{}: expected 2 or 3 numbers (ID, OOD[, unconfounded]), found {}",
            path.display(),
            values.len()
        ))),
    }
}

pub fn eval_numbers(path: &Path) -> Result<EvalReport> {
    let n = read_numbers(path)?;
    for v in [Some(n.id), Some(n.ood), n.unconfounded]
        .into_iter()
        .flatten()
    {
        if !(0.0..=100.0).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "accuracy {v} outside [0, 100]"
            )));
        }
    }
    let metrics = compute_metrics(n.id, n.ood, n.unconfounded);
    Ok(EvalReport {
        method: path.file_stem().map_or_else(
            || "numbers".to_string(),
            |s| s.to_string_lossy().into_owned(),
        ),
        metrics,
        row: metrics.headline(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiversityReport {
    pub n_concepts: usize,
    pub diversity: f64,
}

pub fn cmd_diversity(
    ws: &Workspace,
    cfg: &PipelineConfig,
    bottleneck: &Path,
) -> Result<DiversityReport> {
    require(bottleneck)?;
    let mut b = Bottleneck::load_jsonl(bottleneck)?;
    for c in &mut b.concepts {
        if c.embedding.is_none() {
            c.embedding = Some(crate::concepts::embed_concept(&c.text));
        }
    }
    let report = DiversityReport {
        n_concepts: b.len(),
        diversity: diversity(&b)?,
    };
    let out = ws.path("diversity.json");
    crate::io::write_json(&out, &report)?;
    write_manifest(ws, "diversity", cfg, &[bottleneck.to_path_buf()], &[out])?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ImageRow {
    path: String,
    label: usize,
    split: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LabelRow {
    label: usize,
}

/// Labeled 28×28 thumbnails for the train and test parts of a probe.
pub type ProbeData = (Vec<(Vec<f64>, usize)>, Vec<(Vec<f64>, usize)>);

/// Loads probe images from `dir`: either `images.jsonl` rows
/// `{path, label, split}` pointing at binary PGMs, or `{train,test}.fmat`
/// holding flattened square images in `[0, 1]` with `{train,test}.jsonl`
/// rows `{label}`.
pub fn load_probe_data(dir: &Path) -> Result<ProbeData> {
    let listing = dir.join("images.jsonl");
    if listing.exists() {
        let rows: Vec<ImageRow> = crate::io::read_jsonl(&listing)?;
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for r in rows {
            let p = dir.join(&r.path);
            require(&p)?;
            let img = parse_pgm(&std::fs::read(&p)?)?;
            let item = (thumbnail(&img), r.label);
            match r.split.as_str() {
                "train" => train.push(item),
                "test" => test.push(item),
                other => {
                    return Err(Error::Format(format!(
                        "{}: split must be train or test, got {other:?}",
                        listing.display()
                    )))
                }
            }
        }
        return Ok((train, test));
    }
    let load = |name: &str| -> Result<Vec<(Vec<f64>, usize)>> {
        let fm = dir.join(format!("{name}.fmat"));
        let meta = dir.join(format!("{name}.jsonl"));
        require(&fm)?;
        require(&meta)?;
        let x = crate::fmat::read(&fm)?;
        let labels: Vec<LabelRow> = crate::io::read_jsonl(&meta)?;
        if labels.len() != x.nrows() {
            return Err(Error::Format(format!(
                "{} and {} disagree on row count",
                fm.display(),
                meta.display()
            )));
        }
        let side = (x.ncols() as f64).sqrt().round() as usize;
        if side * side != x.ncols() || side == 0 {
            return Err(Error::Format(format!(
                "{}: {} columns is not a square image",
                fm.display(),
                x.ncols()
            )));
        }
        Ok(x.rows()
            .into_iter()
            .zip(labels)
            .map(|(r, l)| {
                let t = crate::probe::resize_bilinear(
                    r.as_slice().expect("row-major"),
                    side,
                    side,
                    PROBE_SIDE,
                    PROBE_SIDE,
                );
                (t, l.label)
            })
            .collect())
    };
    Ok((load("train")?, load("test")?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    pub featurizer: FeaturizerKind,
    pub dim: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
}

/// Linear probes over the listed featurizers on images from `data`.
pub fn cmd_probe(
    ws: &Workspace,
    cfg: &PipelineConfig,
    data: &Path,
    kinds: &[FeaturizerKind],
) -> Result<Vec<ProbeReport>> {
    require(data)?;
    let (train, test) = load_probe_data(data)?;
    let n_classes = train
        .iter()
        .chain(&test)
        .map(|(_, y)| y + 1)
        .max()
        .unwrap_or(0)
        .max(2);
    let mut reports = Vec::new();
    for &kind in kinds {
        let f = match kind {
            FeaturizerKind::Pixel => Featurizer::pixel(crate::probe::DEFAULT_FEATURE_DIM)?,
            FeaturizerKind::RandomNet => Featurizer::random_net(cfg.seed),
        };
        let accuracy = probe(&f, &train, &test, n_classes, &cfg.train)?;
        reports.push(ProbeReport {
            featurizer: kind,
            dim: f.dim(),
            n_train: train.len(),
            n_test: test.len(),
            accuracy,
        });
    }
    let out = ws.path("probe.json");
    crate::io::write_json(&out, &reports)?;
    write_manifest(ws, "probe", cfg, &[data.to_path_buf()], &[out])?;
    Ok(reports)
}

/// Builds a gray image from `[0, 1]` floats, for writing probe fixtures.
pub fn gray_from_unit(width: usize, height: usize, values: &[f64]) -> Result<GrayImage> {
    GrayImage::new(
        width,
        height,
        values
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect(),
    )
}
