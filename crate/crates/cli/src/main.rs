//! `namesake`: ingest DBLP, inspect blocks, train and apply block models.
//!
//! Exit status is 0 on success, 1 on an operational failure and 2 on a
//! usage error. Every parsed run appends one line to the run manifest.

mod config;
mod manifest;

use std::ffi::OsString;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use namesake::blocking::{corpus_stats, largest_blocks};
use namesake::corpus::{parse_dblp_stream, read_corpus_store, write_corpus_store};
use namesake::disambiguate::{predict_author, route_name, Aggregation, Route};
use namesake::encoders::Encoders;
use namesake::evaluation::{evaluate_block, results_table, BlockColumn, EvalMode};
use namesake::names::build_author_registry;
use namesake::neural::{AdamConfig, Checkpoint, ModelConfig};
use namesake::pipeline::{split_per_author, train_block_model, Split, TrainRunConfig, VariateMode};
use namesake::synth::{gen_synth, SynthConfig};
use namesake::{block_stats, build_block, AuthorRegistry, BibRecord, RecordKind};
use rayon::prelude::*;
use serde_json::{json, Value};

use manifest::Manifest;

/// A usage error; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser)]
#[command(name = "namesake", version, about = "Author name disambiguation over DBLP records")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` file of flag settings; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run manifest; one JSON line is appended per run.
    #[arg(long, global = true, value_name = "FILE", default_value = "namesake-manifest.jsonl")]
    manifest: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a DBLP XML dump into a corpus store.
    Ingest(IngestArgs),
    /// Corpus counters, or the counters of named blocks.
    Stats(StatsArgs),
    /// Split a block's records per author into TRAIN/VAL/TEST.
    Split(SplitArgs),
    /// Train one model per block.
    Train(TrainArgs),
    /// Route a name and, if ambiguous, predict its author in a record.
    Predict(PredictArgs),
    /// Score trained block models on their TEST records.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic homonym corpus with ground truth.
    GenSynth(GenSynthArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Stats(_) => "stats",
            Command::Split(_) => "split",
            Command::Train(_) => "train",
            Command::Predict(_) => "predict",
            Command::Evaluate(_) => "evaluate",
            Command::GenSynth(_) => "gen-synth",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Full names and abbreviated names.
    All,
    /// Abbreviated names only.
    Anv,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::All => EvalMode::All,
            ModeArg::Anv => EvalMode::Anv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AggArg {
    Sum,
    Max,
}

impl From<AggArg> for Aggregation {
    fn from(a: AggArg) -> Self {
        match a {
            AggArg::Sum => Aggregation::Sum,
            AggArg::Max => Aggregation::Max,
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    xml: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated publication kinds to keep.
    #[arg(long, default_value = "article,inproceedings")]
    kinds: String,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated atomic name variates, e.g. "Y Wang,J Lee".
    #[arg(long)]
    block: Option<String>,
    /// Without --block, list this many of the largest blocks.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    block: String,
    /// Tab-separated `record_key author split` lines.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated atomic name variates.
    #[arg(long)]
    block: String,
    /// Directory for checkpoints, histories and splits.
    #[arg(long)]
    out: PathBuf,
    /// Blocks trained concurrently.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 50)]
    patience: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 10)]
    reassign_interval: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// The author name to resolve, as written in the record.
    #[arg(long)]
    name: String,
    /// Key of the record the name appears in.
    #[arg(long)]
    record: Option<String>,
    /// Directory written by `train`.
    #[arg(long)]
    models: Option<PathBuf>,
    #[arg(long, value_enum, ignore_case = true, default_value = "all")]
    mode: ModeArg,
    #[arg(long, value_enum, ignore_case = true, default_value = "sum")]
    agg: AggArg,
    #[arg(long, default_value_t = 3)]
    top_k: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated atomic name variates.
    #[arg(long)]
    block: String,
    /// Directory written by `train`.
    #[arg(long)]
    models: PathBuf,
    /// Evaluate one mode only; both by default.
    #[arg(long, value_enum, ignore_case = true)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum, ignore_case = true, default_value = "sum")]
    agg: AggArg,
    /// Also write one JSON report per block and mode here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenSynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Tab-separated `record_key author` ground truth.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    authors: usize,
    /// Atomic name variate every author shares.
    #[arg(long, default_value = "Y Chen")]
    variate: String,
    #[arg(long, default_value_t = 5)]
    clique: usize,
    #[arg(long, default_value_t = 40)]
    records: usize,
    #[arg(long, default_value_t = 30)]
    vocab: usize,
    #[arg(long, default_value_t = 6)]
    title_words: usize,
    #[arg(long, default_value_t = 8)]
    venues: usize,
    /// Give every author the same full name.
    #[arg(long)]
    same_full_name: bool,
    /// Draw every title from one vocabulary.
    #[arg(long)]
    shared_vocab: bool,
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let (cli, argv) = match parse(argv) {
        Ok(parsed) => parsed,
        Err(code) => return code,
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut manifest = Manifest::new(cli.command.name(), argv, cli.seed);
    if let Some(path) = &cli.config {
        manifest.input(path);
    }

    let result = run(&cli, &mut manifest);
    let (mut code, error) = match &result {
        Ok(()) => (0, None),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.downcast_ref::<Usage>().is_some() { 2 } else { 1 };
            (code, Some(format!("{e:#}")))
        }
    };
    if let Err(e) = manifest.append(&cli.manifest, code, error.as_deref()) {
        eprintln!("error: cannot append to manifest {}: {e}", cli.manifest.display());
        if code == 0 {
            code = 1;
        }
    }
    ExitCode::from(code as u8)
}

/// Parses the command line with the config file's settings spliced in.
fn parse(argv: Vec<OsString>) -> std::result::Result<(Cli, Vec<OsString>), ExitCode> {
    let mut command = Cli::command()
        .args_override_self(true)
        .mut_subcommands(|s| s.args_override_self(true));
    let argv = match config::config_path(&argv) {
        Some(path) => match config::config_args(Path::new(&path)) {
            Ok(extra) => {
                let names: Vec<String> = command.get_subcommands().map(|s| s.get_name().to_string()).collect();
                config::splice(argv, &names, extra)
            }
            Err(e) => {
                eprintln!("error: {e}");
                return Err(ExitCode::from(2));
            }
        },
        None => argv,
    };
    let parsed = command
        .try_get_matches_from_mut(&argv)
        .and_then(|m| Cli::from_arg_matches(&m));
    match parsed {
        Ok(cli) => Ok((cli, argv)),
        Err(e) => {
            let _ = e.print();
            Err(ExitCode::from(e.exit_code() as u8))
        }
    }
}

fn run(cli: &Cli, m: &mut Manifest) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => ingest(a, m),
        Command::Stats(a) => stats(a, m),
        Command::Split(a) => split(a, cli.seed, m),
        Command::Train(a) => train(a, cli.seed, m),
        Command::Predict(a) => predict(a, m),
        Command::Evaluate(a) => evaluate(a, cli.seed, m),
        Command::GenSynth(a) => synth(a, cli.seed, m),
    }
}

fn load_corpus(path: &Path, m: &mut Manifest) -> Result<(Vec<BibRecord>, AuthorRegistry)> {
    let corpus = read_corpus_store(path)?;
    m.input(path);
    let registry = build_author_registry(&corpus);
    Ok((corpus, registry))
}

fn block_keys(list: &str) -> Result<Vec<String>> {
    let keys: Vec<String> = list
        .split(',')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .map(String::from)
        .collect();
    if keys.is_empty() {
        return Err(Usage("--block names no block".into()).into());
    }
    Ok(keys)
}

/// File stem for a block's artifacts: "Y Chen" -> "Y_Chen".
fn slug(variate_key: &str) -> String {
    variate_key
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
        }
        _ => Ok(()),
    }
}

fn ingest(a: &IngestArgs, m: &mut Manifest) -> Result<()> {
    let kinds = a
        .kinds
        .split(',')
        .map(|k| k.parse::<RecordKind>().map_err(|e| Usage(e.to_string())))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let file = File::open(&a.xml).with_context(|| format!("opening {}", a.xml.display()))?;
    m.input(&a.xml);
    let mut parser = parse_dblp_stream(BufReader::with_capacity(1 << 20, file), &kinds);
    let records = parser.by_ref().collect::<namesake::Result<Vec<_>>>()?;
    let counters = parser.counters();
    create_parent(&a.out)?;
    let summary = write_corpus_store(&records, &a.out)?;
    m.output(&a.out);
    let report = json!({
        "records": summary.records,
        "mentions": summary.mentions,
        "parse": counters,
    });
    m.counter("ingest", report.clone());
    println!("{report}");
    Ok(())
}

fn stats(a: &StatsArgs, m: &mut Manifest) -> Result<()> {
    let (corpus, registry) = load_corpus(&a.corpus, m)?;
    let totals = serde_json::to_value(corpus_stats(&corpus, &registry))?;
    println!("{totals}");
    m.counter("corpus", totals);
    match &a.block {
        Some(list) => {
            for key in block_keys(list)? {
                let block = build_block(&corpus, &registry, &key)?;
                let mut line = serde_json::to_value(block_stats(&block))?;
                line["block"] = json!(block.variate_key);
                println!("{line}");
                m.counter(&format!("block:{}", block.variate_key), line);
            }
        }
        None => {
            for (key, authors) in largest_blocks(&registry, a.top) {
                println!("{}", json!({ "block": key, "authors": authors }));
            }
        }
    }
    Ok(())
}

fn split(a: &SplitArgs, seed: u64, m: &mut Manifest) -> Result<()> {
    let (corpus, registry) = load_corpus(&a.corpus, m)?;
    let block = build_block(&corpus, &registry, a.block.trim())?;
    let assignment = split_per_author(&block, seed);
    create_parent(&a.out)?;
    let mut out = BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    assignment.export(&block, &mut out)?;
    out.flush()?;
    m.output(&a.out);
    let report = json!({
        "block": block.variate_key,
        "train": assignment.entries(Split::Train).len(),
        "val": assignment.entries(Split::Val).len(),
        "test": assignment.entries(Split::Test).len(),
    });
    m.counter("split", report.clone());
    println!("{report}");
    Ok(())
}

struct Trained {
    summary: Value,
    outputs: Vec<PathBuf>,
}

fn train_one(corpus: &[BibRecord], registry: &AuthorRegistry, key: &str, a: &TrainArgs, seed: u64) -> Result<Trained> {
    let block = build_block(corpus, registry, key)?;
    let split = split_per_author(&block, seed);
    let model = ModelConfig {
        dropout_rate: a.dropout,
        seed,
        ..ModelConfig::new(block.n_classes())
    };
    let run = TrainRunConfig {
        max_epochs: a.epochs,
        patience: a.patience,
        reassign_interval: a.reassign_interval,
        batch_size: a.batch_size,
        seed,
        adam: AdamConfig {
            learning_rate: a.lr,
            ..AdamConfig::default()
        },
    };
    let encoders = Encoders::<f64>::builtin();
    let outcome = train_block_model(&block, &split, &model, &run, &encoders)
        .with_context(|| format!("training block `{}`", block.variate_key))?;

    let stem = a.out.join(slug(&block.variate_key));
    let paths = [
        stem.with_extension("ndm"),
        stem.with_extension("history.jsonl"),
        stem.with_extension("split.tsv"),
    ];
    let best_epoch = outcome.history.best_epoch;
    let epochs = outcome.history.epochs.len();
    let mut checkpoint = Checkpoint::new(outcome.network, None, block.authors.clone(), &block.variate_key);
    checkpoint.meta.insert("seed".into(), seed.to_string());
    checkpoint.meta.insert("best_epoch".into(), best_epoch.to_string());
    checkpoint.meta.insert("epochs".into(), epochs.to_string());
    checkpoint.save(&paths[0])?;

    let mut history = BufWriter::new(File::create(&paths[1])?);
    outcome.history.write_jsonl(&mut history)?;
    history.flush()?;
    let mut splits = BufWriter::new(File::create(&paths[2])?);
    split.export(&block, &mut splits)?;
    splits.flush()?;

    Ok(Trained {
        summary: json!({
            "block": block.variate_key,
            "classes": block.n_classes(),
            "records": block.records.len(),
            "epochs": epochs,
            "best_epoch": best_epoch,
            "best_val_accuracy": outcome.history.best_accuracy(),
            "stopped_early": outcome.history.stopped_early,
            "validating_on_train": outcome.validating_on_train,
            "unvalidated_classes": outcome.unvalidated_classes.len(),
        }),
        outputs: paths.to_vec(),
    })
}

fn train(a: &TrainArgs, seed: u64, m: &mut Manifest) -> Result<()> {
    if a.parallel == 0 {
        bail!(Usage("--parallel must be at least 1".into()));
    }
    let keys = block_keys(&a.block)?;
    let (corpus, registry) = load_corpus(&a.corpus, m)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.parallel).build()?;
    let results: Vec<Result<Trained>> = pool.install(|| {
        keys.par_iter()
            .map(|k| train_one(&corpus, &registry, k, a, seed))
            .collect()
    });

    let mut failures = Vec::new();
    for (key, result) in keys.iter().zip(results) {
        match result {
            Ok(t) => {
                println!("{}", t.summary);
                for p in &t.outputs {
                    m.output(p);
                }
                m.counter(&format!("block:{key}"), t.summary);
            }
            Err(e) => failures.push(format!("{key}: {e:#}")),
        }
    }
    if !failures.is_empty() {
        bail!(
            "{} of {} blocks failed: {}",
            failures.len(),
            keys.len(),
            failures.join("; ")
        );
    }
    Ok(())
}

fn predict(a: &PredictArgs, m: &mut Manifest) -> Result<()> {
    let (corpus, registry) = load_corpus(&a.corpus, m)?;
    let route = route_name(&registry, &a.name);
    println!("{route}");
    m.counter("route", json!(route.to_string()));
    let Route::Ambiguous { variate_key, .. } = route else {
        return Ok(());
    };
    let Some(key) = &a.record else {
        return Ok(());
    };
    let models = a
        .models
        .as_ref()
        .ok_or_else(|| Usage("--models is required to predict an ambiguous name".into()))?;
    let record = corpus
        .iter()
        .find(|r| &r.record_key == key)
        .ok_or_else(|| anyhow!("record `{key}` is not in the corpus"))?;
    let path = models.join(slug(&variate_key)).with_extension("ndm");
    let checkpoint = Checkpoint::<f64>::load(&path)?;
    m.input(&path);
    if checkpoint.variate_key != variate_key {
        bail!(
            "{} was trained for block `{}`, not `{variate_key}`",
            path.display(),
            checkpoint.variate_key
        );
    }
    let encoders = Encoders::<f64>::builtin();
    let modes = EvalMode::from(a.mode).variate_modes();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for &mode in modes {
        let p = predict_author(
            &checkpoint.network,
            &checkpoint.classes,
            record,
            &a.name,
            mode,
            &encoders,
            a.agg.into(),
        )?;
        write!(out, "{}\t", mode.as_str())?;
        p.write_record(&checkpoint.classes, a.top_k, &mut out)?;
        if mode == VariateMode::Anv || modes.len() == 1 {
            m.counter("author", json!(p.author.to_string()));
        }
    }
    Ok(())
}

fn evaluate(a: &EvaluateArgs, seed: u64, m: &mut Manifest) -> Result<()> {
    let keys = block_keys(&a.block)?;
    let (corpus, registry) = load_corpus(&a.corpus, m)?;
    let encoders = Encoders::<f64>::builtin();
    let modes: Vec<EvalMode> = match a.mode {
        Some(mode) => vec![mode.into()],
        None => vec![EvalMode::Anv, EvalMode::All],
    };
    let mut reports = Vec::new();
    let mut columns = Vec::new();
    for key in keys {
        let block = build_block(&corpus, &registry, &key)?;
        let path = a.models.join(slug(&block.variate_key)).with_extension("ndm");
        let checkpoint = Checkpoint::<f64>::load_for_block(&path, &block)?;
        m.input(&path);
        // The split is replayed from the seed the model was trained with.
        let split_seed = match checkpoint.meta.get("seed") {
            Some(s) => s
                .parse()
                .with_context(|| format!("{}: bad seed `{s}`", path.display()))?,
            None => seed,
        };
        let split = split_per_author(&block, split_seed);
        let mut column = BlockColumn {
            block: block.variate_key.clone(),
            anv: None,
            all: None,
        };
        for &mode in &modes {
            let report = evaluate_block(&checkpoint.network, &block, &split, mode, &encoders, a.agg.into())?;
            let line = json!({
                "block": block.variate_key,
                "mode": mode.label(),
                "instances": report.instances,
                "micro_precision": report.micro_precision,
                "micro_recall": report.micro_recall,
                "micro_f1": report.micro_f1,
                "macro_precision": report.macro_precision,
                "macro_recall": report.macro_recall,
                "macro_f1": report.macro_f1,
            });
            m.counter(&format!("{}:{}", block.variate_key, mode.label()), line.clone());
            reports.push(line);
            match mode {
                EvalMode::Anv => column.anv = Some(report),
                EvalMode::All => column.all = Some(report),
            }
        }
        columns.push(column);
    }
    print!("{}", results_table(&columns));
    if let Some(out) = &a.out {
        create_parent(out)?;
        let mut w = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
        for r in &reports {
            writeln!(w, "{r}")?;
        }
        w.flush()?;
        m.output(out);
    }
    Ok(())
}

fn synth(a: &GenSynthArgs, seed: u64, m: &mut Manifest) -> Result<()> {
    let config = SynthConfig {
        title_words: a.title_words,
        venues: a.venues,
        same_full_name: a.same_full_name,
        shared_vocab: a.shared_vocab,
        ..SynthConfig::new(a.authors, &a.variate, a.clique, a.records, a.vocab, seed)
    };
    let corpus = gen_synth(&config).map_err(|e| Usage(e.to_string()))?;
    create_parent(&a.out)?;
    let summary = write_corpus_store(&corpus.records, &a.out)?;
    m.output(&a.out);
    if let Some(path) = &a.truth {
        create_parent(path)?;
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        corpus.write_truth(&mut w)?;
        w.flush()?;
        m.output(path);
    }
    let report = json!({
        "records": summary.records,
        "mentions": summary.mentions,
        "authors": config.n_authors,
        "variate": config.variate_key,
    });
    m.counter("gen-synth", report.clone());
    println!("{report}");
    Ok(())
}
