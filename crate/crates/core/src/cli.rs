//! Command-line front end: `validate`, `gen-pairs`, `train`, `resolve`,
//! `score` and `baseline`.
//!
//! Every option can also come from a TOML file passed with `--config`;
//! flags take precedence. Exit codes: 0 success, 1 validation, scoring or
//! runtime failure, 2 usage error.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    train_coref, train_singleton, ClassifierError, CorefModel, FeatureGroupSelection, HyperConfig, ModelKind,
    ModelMetadata, Preset, SingletonModel, TrainReport, DEFAULT_SINGLETON_THRESHOLD,
};
use crate::clustering::{
    best_first_cluster, exclude_singletons, parse_predictions, random_scorer, ClusteringConfig, PredictionRecord,
    SingletonMode,
};
use crate::corpus::{gold_partition, parse_corpus, validate_corpus, CorpusDocument, Partition};
use crate::embeddings::{load_word2vec_text, EmbeddingTable};
use crate::metrics::{score_system, ScoreReport};
use crate::nn::{ModelParams, Parameters};
use crate::pairgen::{PairExample, PairStrategy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing arguments.
    Usage(String),
    /// The command ran but the input was invalid or an operation failed.
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => m,
        }
    }
}

fn fail(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

/// A confidence cut-off for linking, or `none` to link unconditionally.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThresholdRepr", into = "ThresholdRepr")]
pub struct LinkThreshold(pub Option<f64>);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ThresholdRepr {
    Value(f64),
    Keyword(String),
}

impl TryFrom<ThresholdRepr> for LinkThreshold {
    type Error = String;

    fn try_from(r: ThresholdRepr) -> Result<Self, Self::Error> {
        match r {
            ThresholdRepr::Value(v) => Ok(LinkThreshold(Some(v))),
            ThresholdRepr::Keyword(s) => s.parse(),
        }
    }
}

impl From<LinkThreshold> for ThresholdRepr {
    fn from(t: LinkThreshold) -> Self {
        match t.0 {
            Some(v) => ThresholdRepr::Value(v),
            None => ThresholdRepr::Keyword("none".into()),
        }
    }
}

impl FromStr for LinkThreshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("none") {
            return Ok(LinkThreshold(None));
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(|v| LinkThreshold(Some(v)))
            .ok_or_else(|| format!("invalid link threshold {s:?} (expected a number or \"none\")"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    /// The trained coreference classifier.
    #[default]
    Model,
    /// Seeded pseudo-random confidences.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TrainTarget {
    #[default]
    Both,
    Singleton,
    Coref,
}

/// Options read from a `--config` TOML file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub features: Option<String>,
    pub pairs: Option<PairStrategy>,
    pub singleton_mode: Option<SingletonMode>,
    pub singleton_threshold: Option<f64>,
    pub link_threshold: Option<LinkThreshold>,
    pub scorer: Option<ScorerKind>,
    pub train: Option<TrainTarget>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Parser)]
#[command(name = "mpcoref", version, about = "Mention-pair coreference resolution toolkit")]
pub struct Cli {
    /// TOML file with default values for any option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for per-document and per-batch parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a corpus file, listing every violation.
    Validate(ValidateArgs),
    /// Emit labeled mention pairs, one "doc antecedent anaphor label" per line.
    GenPairs(GenPairsArgs),
    /// Train the singleton and/or coreference classifier.
    Train(TrainArgs),
    /// Cluster the mentions of every document and write predictions.
    Resolve(ResolveArgs),
    /// Score predictions against a gold corpus.
    Score(ScoreArgs),
    /// Resolve with random confidences and score the result.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenPairsArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// `default` or `reduced`.
    #[arg(long)]
    pub pairs: Option<PairStrategy>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// word2vec text-format embeddings.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Directory receiving `singleton.knn`/`.json` and `coref.knn`/`.json`.
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    /// `proposed` or `wu_ma`.
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Singleton feature groups: comma-separated `words`, `context`, `feats`, or `all`.
    #[arg(long)]
    pub features: Option<String>,
    /// Pair generation for the coreference classifier.
    #[arg(long)]
    pub pairs: Option<PairStrategy>,
    #[arg(long, value_enum)]
    pub train: Option<TrainTarget>,
    /// Probability below which the singleton model marks a singleton.
    #[arg(long)]
    pub singleton_threshold: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ResolveArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scorer: Option<ScorerKind>,
    /// `none`, `trained` or `gold`.
    #[arg(long)]
    pub singleton_mode: Option<SingletonMode>,
    /// Overrides the threshold stored with the singleton model.
    #[arg(long)]
    pub singleton_threshold: Option<f64>,
    /// Minimum confidence for a link, or `none`.
    #[arg(long)]
    pub link_threshold: Option<LinkThreshold>,
    /// Seed of the random scorer.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Predictions file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Gold corpus.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the random predictions here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Runs a parsed command line. `Ok` carries the exit code of commands that
/// report failure without an error (validation with violations).
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let jobs = cli.jobs.or(config.jobs);
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = jobs {
            if n == 0 {
                return Err(CliError::Usage("--jobs must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(fail)?
    };
    // Output is buffered so the command can run on the pool's threads.
    let (mut out_buf, mut err_buf) = (Vec::<u8>::new(), Vec::<u8>::new());
    let result = pool.install(|| dispatch(cli.command, &config, &mut out_buf, &mut err_buf));
    out.write_all(&out_buf).map_err(fail)?;
    err.write_all(&err_buf).map_err(fail)?;
    result
}

fn dispatch(command: Command, config: &RunConfig, out: &mut Vec<u8>, err: &mut Vec<u8>) -> Result<i32, CliError> {
    match command {
        Command::Validate(a) => cmd_validate(&required(a.corpus, &config.corpus, "--corpus")?, out),
        Command::GenPairs(a) => {
            let corpus = required(a.corpus, &config.corpus, "--corpus")?;
            let strategy = a.pairs.or(config.pairs).unwrap_or_default();
            let output = a.out.or(config.out.clone());
            cmd_gen_pairs(&corpus, strategy, output.as_deref(), out, err).map(|_| EXIT_OK)
        }
        Command::Train(a) => cmd_train(&train_options(a, config)?, out, err).map(|_| EXIT_OK),
        Command::Resolve(a) => cmd_resolve(&resolve_options(a, config)?, out, err).map(|_| EXIT_OK),
        Command::Score(a) => {
            let corpus = required(a.corpus, &config.corpus, "--corpus")?;
            let predictions = required(a.predictions, &config.predictions, "--predictions")?;
            cmd_score(&corpus, &predictions, out).map(|_| EXIT_OK)
        }
        Command::Baseline(a) => {
            let corpus = required(a.corpus, &config.corpus, "--corpus")?;
            let seed = a.seed.or(config.seed).unwrap_or(0);
            let output = a.out.or(config.out.clone());
            cmd_baseline(&corpus, seed, output.as_deref(), out, err).map(|_| EXIT_OK)
        }
    }
}

fn required(flag: Option<PathBuf>, from_config: &Option<PathBuf>, name: &str) -> Result<PathBuf, CliError> {
    flag.or_else(|| from_config.clone())
        .ok_or_else(|| CliError::Usage(format!("missing required option {name}")))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusDocument>, CliError> {
    parse_corpus(open(path)?).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable, CliError> {
    load_word2vec_text(open(path)?).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

/// Prints the validation report; exit code 0 only when nothing is wrong.
pub fn cmd_validate(corpus: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let report = validate_corpus(open(corpus)?).map_err(fail)?;
    writeln!(out, "{report}").map_err(fail)?;
    Ok(if report.is_valid() { EXIT_OK } else { EXIT_FAILURE })
}

fn write_lines<T: std::fmt::Display>(items: &[T], path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            for item in items {
                writeln!(w, "{item}").map_err(fail)?;
            }
            w.flush().map_err(fail)
        }
        None => {
            for item in items {
                writeln!(out, "{item}").map_err(fail)?;
            }
            Ok(())
        }
    }
}

fn generate_pairs(
    docs: &[CorpusDocument],
    strategy: PairStrategy,
    err: &mut dyn Write,
) -> Result<Vec<PairExample>, CliError> {
    if strategy.is_approximation() {
        writeln!(
            err,
            "note: pair strategy \"reduced\" is an approximation of a method whose exact rules are unpublished"
        )
        .map_err(fail)?;
    }
    let mut pairs = Vec::new();
    for doc in docs {
        let doc_pairs = strategy.generate(doc);
        writeln!(
            err,
            "pairs {}: {} mentions, {} pairs",
            doc.doc_id,
            doc.mentions.len(),
            doc_pairs.len()
        )
        .map_err(fail)?;
        pairs.extend(doc_pairs);
    }
    Ok(pairs)
}

pub fn cmd_gen_pairs(
    corpus: &Path,
    strategy: PairStrategy,
    output: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<Vec<PairExample>, CliError> {
    let docs = load_corpus(corpus)?;
    let pairs = generate_pairs(&docs, strategy, err)?;
    write_lines(&pairs, output, out)?;
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub corpus: PathBuf,
    pub embeddings: PathBuf,
    pub model_dir: PathBuf,
    pub target: TrainTarget,
    pub config: HyperConfig,
    pub selection: FeatureGroupSelection,
    pub pairs: PairStrategy,
    pub singleton_threshold: f64,
}

fn train_options(a: TrainArgs, c: &RunConfig) -> Result<TrainOptions, CliError> {
    let embeddings = a
        .embeddings
        .or_else(|| c.embeddings.clone())
        .ok_or_else(|| CliError::Usage("missing embeddings: pass --embeddings".into()))?;
    let mut config = HyperConfig::for_preset(a.preset.or(c.preset).unwrap_or(Preset::Proposed));
    config.seed = a.seed.or(c.seed).unwrap_or(0);
    if let Some(e) = a.epochs.or(c.epochs) {
        config.epochs = e;
    }
    if let Some(b) = a.batch_size.or(c.batch_size) {
        config.batch_size = b;
    }
    if let Some(lr) = a.learning_rate.or(c.learning_rate) {
        config.learning_rate = lr;
    }
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let selection = match a.features.or_else(|| c.features.clone()) {
        Some(s) => FeatureGroupSelection::parse(&s).map_err(CliError::Usage)?,
        None => FeatureGroupSelection::ALL,
    };
    Ok(TrainOptions {
        corpus: required(a.corpus, &c.corpus, "--corpus")?,
        embeddings,
        model_dir: required(a.model_dir, &c.model_dir, "--model-dir")?,
        target: a.train.or(c.train).unwrap_or_default(),
        config,
        selection,
        pairs: a.pairs.or(c.pairs).unwrap_or_default(),
        singleton_threshold: a
            .singleton_threshold
            .or(c.singleton_threshold)
            .unwrap_or(DEFAULT_SINGLETON_THRESHOLD),
    })
}

pub fn model_paths(dir: &Path, kind: ModelKind) -> (PathBuf, PathBuf) {
    let stem = match kind {
        ModelKind::Singleton => "singleton",
        ModelKind::Coreference => "coref",
    };
    (dir.join(format!("{stem}.knn")), dir.join(format!("{stem}.json")))
}

fn save_model<P: Parameters>(dir: &Path, model: &P, meta: &ModelMetadata) -> Result<(), CliError> {
    let (params_path, meta_path) = model_paths(dir, meta.kind);
    let mut w = create(&params_path)?;
    model.to_model_params().write_to(&mut w).map_err(fail)?;
    w.flush().map_err(fail)?;
    let json = serde_json::to_string_pretty(meta).map_err(fail)?;
    std::fs::write(&meta_path, json + "\n").map_err(|e| CliError::Failure(format!("{}: {e}", meta_path.display())))
}

fn load_metadata(dir: &Path, kind: ModelKind) -> Result<(ModelMetadata, ModelParams), CliError> {
    let (params_path, meta_path) = model_paths(dir, kind);
    let text = std::fs::read_to_string(&meta_path).map_err(|e| CliError::Failure(format!("{}: {e}", meta_path.display())))?;
    let meta: ModelMetadata =
        serde_json::from_str(&text).map_err(|e| CliError::Failure(format!("{}: {e}", meta_path.display())))?;
    if meta.kind != kind {
        return Err(CliError::Failure(format!("{}: holds a {:?} model", meta_path.display(), meta.kind)));
    }
    let params =
        ModelParams::read_from(open(&params_path)?).map_err(|e| CliError::Failure(format!("{}: {e}", params_path.display())))?;
    Ok((meta, params))
}

fn check_dim(meta: &ModelMetadata, table: &EmbeddingTable) -> Result<(), CliError> {
    if meta.embedding_dim != table.dim() {
        return Err(CliError::Failure(format!(
            "embedding dimension mismatch: model expects {}, embeddings have {}",
            meta.embedding_dim,
            table.dim()
        )));
    }
    Ok(())
}

pub fn load_coref_model(dir: &Path, table: &EmbeddingTable) -> Result<(CorefModel, ModelMetadata), CliError> {
    let (meta, params) = load_metadata(dir, ModelKind::Coreference)?;
    check_dim(&meta, table)?;
    let mut model = CorefModel::new(&meta.config, meta.embedding_dim).map_err(fail)?;
    model.load_model_params(&params).map_err(fail)?;
    Ok((model, meta))
}

pub fn load_singleton_model(dir: &Path, table: &EmbeddingTable) -> Result<(SingletonModel, ModelMetadata), CliError> {
    let (meta, params) = load_metadata(dir, ModelKind::Singleton)?;
    check_dim(&meta, table)?;
    let mut model = SingletonModel::new(&meta.config, meta.selection, meta.embedding_dim).map_err(fail)?;
    model.load_model_params(&params).map_err(fail)?;
    Ok((model, meta))
}

fn print_losses(out: &mut dyn Write, name: &str, report: &TrainReport) -> Result<(), CliError> {
    for (i, loss) in report.epoch_losses.iter().enumerate() {
        writeln!(out, "{name} epoch {} loss {loss:.6}", i + 1).map_err(fail)?;
    }
    Ok(())
}

/// Trains the requested models and writes them under `model_dir`.
pub fn cmd_train(opts: &TrainOptions, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let docs = load_corpus(&opts.corpus)?;
    if docs.is_empty() {
        return Err(CliError::Failure(format!("{}: corpus is empty", opts.corpus.display())));
    }
    let table = load_embeddings(&opts.embeddings)?;
    std::fs::create_dir_all(&opts.model_dir).map_err(|e| CliError::Failure(format!("{}: {e}", opts.model_dir.display())))?;
    writeln!(err, "seed {} preset {}", opts.config.seed, opts.config.preset).map_err(fail)?;
    let classifier_err = |e: ClassifierError| CliError::Failure(e.to_string());

    if matches!(opts.target, TrainTarget::Both | TrainTarget::Singleton) {
        let mut model = SingletonModel::new(&opts.config, opts.selection, table.dim()).map_err(classifier_err)?;
        let report = train_singleton(&mut model, &docs, &table).map_err(classifier_err)?;
        for w in &report.warnings {
            writeln!(err, "warning: singleton: {w}").map_err(fail)?;
        }
        print_losses(out, "singleton", &report)?;
        let meta = ModelMetadata {
            kind: ModelKind::Singleton,
            config: opts.config.clone(),
            selection: opts.selection,
            seed: opts.config.seed,
            embedding_dim: table.dim(),
            threshold: opts.singleton_threshold,
            pair_strategy: None,
            approximation: false,
        };
        save_model(&opts.model_dir, &model, &meta)?;
    }

    if matches!(opts.target, TrainTarget::Both | TrainTarget::Coref) {
        let pairs = generate_pairs(&docs, opts.pairs, err)?;
        let mut model = CorefModel::new(&opts.config, table.dim()).map_err(classifier_err)?;
        let report = train_coref(&mut model, &pairs, &docs, &table).map_err(classifier_err)?;
        for w in &report.warnings {
            writeln!(err, "warning: coref: {w}").map_err(fail)?;
        }
        print_losses(out, "coref", &report)?;
        let meta = ModelMetadata {
            kind: ModelKind::Coreference,
            config: opts.config.clone(),
            selection: FeatureGroupSelection::ALL,
            seed: opts.config.seed,
            embedding_dim: table.dim(),
            threshold: opts.singleton_threshold,
            pair_strategy: Some(opts.pairs),
            approximation: opts.pairs.is_approximation(),
        };
        save_model(&opts.model_dir, &model, &meta)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolveOptions {
    pub corpus: PathBuf,
    pub embeddings: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
    pub scorer: ScorerKind,
    pub singleton_mode: SingletonMode,
    pub singleton_threshold: Option<f64>,
    pub link_threshold: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

fn resolve_options(a: ResolveArgs, c: &RunConfig) -> Result<ResolveOptions, CliError> {
    let opts = ResolveOptions {
        corpus: required(a.corpus, &c.corpus, "--corpus")?,
        embeddings: a.embeddings.or_else(|| c.embeddings.clone()),
        model_dir: a.model_dir.or_else(|| c.model_dir.clone()),
        scorer: a.scorer.or(c.scorer).unwrap_or_default(),
        singleton_mode: a.singleton_mode.or(c.singleton_mode).unwrap_or_default(),
        singleton_threshold: a.singleton_threshold.or(c.singleton_threshold),
        link_threshold: a.link_threshold.or(c.link_threshold).and_then(|t| t.0),
        seed: a.seed.or(c.seed).unwrap_or(0),
        out: a.out.or_else(|| c.out.clone()),
    };
    let needs_models = opts.scorer == ScorerKind::Model || opts.singleton_mode == SingletonMode::Trained;
    if needs_models && (opts.embeddings.is_none() || opts.model_dir.is_none()) {
        return Err(CliError::Usage(
            "trained models need --embeddings and --model-dir".into(),
        ));
    }
    Ok(opts)
}

/// Clusters every document of `docs`. Documents run in parallel; results
/// keep corpus order.
pub fn resolve_documents(
    docs: &[CorpusDocument],
    coref: Option<&CorefModel>,
    singleton: Option<(&SingletonModel, f64)>,
    table: Option<&EmbeddingTable>,
    scorer: ScorerKind,
    config: &ClusteringConfig,
    seed: u64,
) -> Result<Vec<PredictionRecord>, CliError> {
    docs.par_iter()
        .map(|doc| {
            let model = singleton.zip(table).map(|((m, _), t)| (m, t));
            let threshold = singleton.map_or(DEFAULT_SINGLETON_THRESHOLD, |(_, t)| t);
            let excluded = exclude_singletons(doc, config.singleton_mode, model, threshold).map_err(fail)?;
            let partition: Partition = match scorer {
                ScorerKind::Random => best_first_cluster(doc, &random_scorer(seed), &excluded, config).map_err(fail)?,
                ScorerKind::Model => {
                    let (model, table) = coref
                        .zip(table)
                        .ok_or_else(|| CliError::Usage("model scorer needs a coreference model".into()))?;
                    let s = model.document_scorer(doc, table).map_err(fail)?;
                    best_first_cluster(doc, &s, &excluded, config).map_err(fail)?
                }
            };
            Ok(PredictionRecord::new(doc.doc_id.clone(), &partition))
        })
        .collect()
}

pub fn cmd_resolve(opts: &ResolveOptions, out: &mut dyn Write, err: &mut dyn Write) -> Result<Vec<PredictionRecord>, CliError> {
    let docs = load_corpus(&opts.corpus)?;
    let table = opts.embeddings.as_deref().map(load_embeddings).transpose()?;
    let coref = match (opts.scorer, &table, &opts.model_dir) {
        (ScorerKind::Model, Some(t), Some(dir)) => Some(load_coref_model(dir, t)?.0),
        _ => None,
    };
    let singleton = match (opts.singleton_mode, &table, &opts.model_dir) {
        (SingletonMode::Trained, Some(t), Some(dir)) => {
            let (model, meta) = load_singleton_model(dir, t)?;
            Some((model, opts.singleton_threshold.unwrap_or(meta.threshold)))
        }
        _ => None,
    };
    let config = ClusteringConfig {
        link_threshold: opts.link_threshold,
        singleton_mode: opts.singleton_mode,
    };
    writeln!(
        err,
        "seed {} scorer {:?} singleton_mode {} link_threshold {}",
        opts.seed,
        opts.scorer,
        opts.singleton_mode,
        opts.link_threshold.map_or("none".to_string(), |t| t.to_string())
    )
    .map_err(fail)?;
    let records = resolve_documents(
        &docs,
        coref.as_ref(),
        singleton.as_ref().map(|(m, t)| (m, *t)),
        table.as_ref(),
        opts.scorer,
        &config,
        opts.seed,
    )?;
    let lines: Vec<String> = records.iter().map(PredictionRecord::to_json_line).collect();
    write_lines(&lines, opts.out.as_deref(), out)?;
    Ok(records)
}

/// Scores predictions (by document id) against the gold corpus.
pub fn score_predictions(docs: &[CorpusDocument], predictions: &[PredictionRecord]) -> Result<ScoreReport, CliError> {
    let key: Vec<(String, Partition)> = docs.iter().map(|d| (d.doc_id.clone(), gold_partition(d))).collect();
    let response: Vec<(String, Partition)> = predictions.iter().map(|p| (p.doc_id.clone(), p.partition())).collect();
    score_system(&key, &response).map_err(fail)
}

fn print_report(out: &mut dyn Write, report: &ScoreReport) -> Result<(), CliError> {
    write!(out, "{}", report.table()).map_err(fail)?;
    writeln!(out, "{}", report.to_json()).map_err(fail)
}

pub fn cmd_score(corpus: &Path, predictions: &Path, out: &mut dyn Write) -> Result<ScoreReport, CliError> {
    let docs = load_corpus(corpus)?;
    let records = read_predictions(predictions)?;
    let report = score_predictions(&docs, &records)?;
    print_report(out, &report)?;
    Ok(report)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, CliError> {
    let reader: Box<dyn BufRead> = Box::new(open(path)?);
    parse_predictions(reader).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))
}

/// Random confidences, no exclusion, no link threshold.
pub fn cmd_baseline(
    corpus: &Path,
    seed: u64,
    output: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<ScoreReport, CliError> {
    let docs = load_corpus(corpus)?;
    writeln!(err, "seed {seed}").map_err(fail)?;
    let records = resolve_documents(&docs, None, None, None, ScorerKind::Random, &ClusteringConfig::default(), seed)?;
    if let Some(p) = output {
        let lines: Vec<String> = records.iter().map(PredictionRecord::to_json_line).collect();
        write_lines(&lines, Some(p), out)?;
    }
    let report = score_predictions(&docs, &records)?;
    print_report(out, &report)?;
    Ok(report)
}
