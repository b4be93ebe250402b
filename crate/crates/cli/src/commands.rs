use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use wordrank_core::eval::{
    eval_analogy, eval_similarity, nearest_neighbors, AnalogyDataset, AnalogyMethod, EvalReport,
    SimilarityDataset,
};
use wordrank_core::train::{load_checkpoint, save_checkpoint, train, TrainHooks};
use wordrank_core::{
    build_cooccurrence, build_vocabulary, CooccurConfig, CooccurrenceMatrix, EmbeddingModel,
    Error, LossKind, LossSpec, Result, RhoKind, RhoSpec, Tokenizer, TrainConfig, TrainState,
    VectorMode, Vocabulary, WeightConfig,
};

use crate::config::FileConfig;

/// Train and evaluate ranking-based word embeddings.
#[derive(Parser)]
#[command(name = "wordrank", version, about)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a frequency-ranked vocabulary from a text corpus.
    Vocab(VocabArgs),
    /// Count windowed co-occurrences into the binary matrix format.
    Cooccur(CooccurArgs),
    /// Train embeddings with the two-stage ranking optimizer.
    Train(TrainArgs),
    /// Score a word-similarity benchmark (Spearman correlation).
    EvalSim(EvalSimArgs),
    /// Score a Google-format analogy benchmark (3CosAdd / 3CosMul).
    EvalAnalogy(EvalAnalogyArgs),
    /// List nearest neighbors of a word by cosine similarity.
    Nn(NnArgs),
    /// Export embeddings as text, one word per line.
    Export(ExportArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// key=value config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VocabArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Corpus path, or "-" for standard input.
    #[arg(long)]
    corpus: Option<String>,
    /// Output vocabulary path.
    #[arg(long)]
    out: Option<String>,
    /// Keep at most this many tokens.
    #[arg(long)]
    cap: Option<usize>,
    /// Drop tokens appearing fewer times than this.
    #[arg(long = "min-count")]
    min_count: Option<u64>,
}

#[derive(Args)]
struct CooccurArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    corpus: Option<String>,
    /// Vocabulary file from `wordrank vocab`.
    #[arg(long)]
    vocab: Option<String>,
    /// Output co-occurrence binary (a .meta file is written next to it).
    #[arg(long)]
    out: Option<String>,
    /// Symmetric window size.
    #[arg(long)]
    window: Option<usize>,
    /// In-memory shard budget in MiB before spilling to disk.
    #[arg(long = "shard-mb")]
    shard_mb: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Co-occurrence binary from `wordrank cooccur`.
    #[arg(long)]
    cooccur: Option<String>,
    #[arg(long)]
    vocab: Option<String>,
    /// Output checkpoint path (rewritten every outer iteration).
    #[arg(long)]
    out: Option<String>,
    /// Ranking loss: identity, log, dcg, or logt.
    #[arg(long)]
    rho: Option<String>,
    /// Exponent for the logt ranking loss.
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Surrogate loss: logistic or hinge.
    #[arg(long)]
    loss: Option<String>,
    /// Saturation point of the count weights.
    #[arg(long = "x-max", allow_negative_numbers = true)]
    x_max: Option<f64>,
    /// Exponent of the count weights.
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Embedding dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Step size.
    #[arg(long, allow_negative_numbers = true)]
    eta: Option<f64>,
    /// Outer iterations (each ends with an exact auxiliary update).
    #[arg(long)]
    outer: Option<usize>,
    /// Passes over the observations per outer iteration.
    #[arg(long)]
    passes: Option<usize>,
    /// Parallel workers; defaults to the available cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Count weights on the pairs: on or off.
    #[arg(long)]
    weights: Option<String>,
    /// Word rows per score block in the auxiliary update.
    #[arg(long = "block-rows")]
    block_rows: Option<usize>,
    /// Write per-epoch log lines here instead of standard error.
    #[arg(long)]
    log: Option<String>,
}

#[derive(Args)]
struct EvalSimArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trained checkpoint.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    vocab: Option<String>,
    /// Similarity dataset: "word1 word2 score" lines.
    #[arg(long)]
    dataset: Option<String>,
    /// Vectors to use: u or u_plus_v.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct EvalAnalogyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    vocab: Option<String>,
    /// Google analogy dataset with ": section" headers.
    #[arg(long)]
    dataset: Option<String>,
    /// Answering rule: add (3CosAdd) or mul (3CosMul).
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated section-name prefixes classified as syntactic.
    #[arg(long = "syntactic-prefix")]
    syntactic_prefix: Option<String>,
}

#[derive(Args)]
struct NnArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    vocab: Option<String>,
    /// Query word.
    #[arg(long)]
    word: Option<String>,
    /// Neighbors to list.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    vocab: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Vectors to export: u or u_plus_v.
    #[arg(long)]
    mode: Option<String>,
    /// Leading "<vocab_size> <dim>" line: on or off.
    #[arg(long)]
    header: Option<String>,
}

pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Vocab(a) => cmd_vocab(a),
        Command::Cooccur(a) => cmd_cooccur(a),
        Command::Train(a) => cmd_train(a),
        Command::EvalSim(a) => cmd_eval_sim(a),
        Command::EvalAnalogy(a) => cmd_eval_analogy(a),
        Command::Nn(a) => cmd_nn(a),
        Command::Export(a) => cmd_export(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e @ (Error::Config(_) | Error::Validation(_))) => {
            eprintln!("error: {e}");
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn parse_rho(s: &str) -> Result<RhoKind> {
    match s {
        "identity" | "id" => Ok(RhoKind::Identity),
        "log" => Ok(RhoKind::Log),
        "dcg" | "neg-dcg" => Ok(RhoKind::NegDcg),
        "logt" | "log-t" => Ok(RhoKind::LogT),
        _ => Err(Error::Config(format!(
            "unknown rho {s:?}; expected identity, log, dcg or logt"
        ))),
    }
}

fn parse_loss(s: &str) -> Result<LossKind> {
    match s {
        "logistic" => Ok(LossKind::Logistic),
        "hinge" => Ok(LossKind::Hinge),
        _ => Err(Error::Config(format!(
            "unknown loss {s:?}; expected logistic or hinge"
        ))),
    }
}

fn parse_mode(s: &str) -> Result<VectorMode> {
    match s {
        "u" => Ok(VectorMode::Word),
        "u_plus_v" | "u+v" => Ok(VectorMode::WordPlusContext),
        _ => Err(Error::Config(format!(
            "unknown vector mode {s:?}; expected u or u_plus_v"
        ))),
    }
}

fn parse_method(s: &str) -> Result<AnalogyMethod> {
    match s {
        "add" | "3cosadd" => Ok(AnalogyMethod::CosAdd),
        "mul" | "3cosmul" => Ok(AnalogyMethod::CosMul),
        _ => Err(Error::Config(format!(
            "unknown method {s:?}; expected add or mul"
        ))),
    }
}

fn parse_on_off(s: &str, what: &str) -> Result<bool> {
    match s {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{what} must be on or off, got {s:?}"))),
    }
}

fn corpus_reader(path: &str) -> Result<Box<dyn BufRead>> {
    if path == "-" {
        Ok(Box::new(BufReader::new(std::io::stdin())))
    } else {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path.to_string(), e))?;
        Ok(Box::new(BufReader::new(file)))
    }
}

fn default_workers(contexts: usize) -> usize {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    avail.min((contexts / 2).max(1))
}

fn print_report(rep: &EvalReport) {
    println!(
        "{:<22} {:>10.4}   answered {}/{}   oov {}",
        rep.metric, rep.value, rep.answered, rep.total, rep.oov
    );
    println!(
        "{{\"metric\":\"{}\",\"value\":{:.6},\"answered\":{},\"total\":{},\"oov\":{}}}",
        rep.metric, rep.value, rep.answered, rep.total, rep.oov
    );
    if rep.zero_vectors > 0 {
        eprintln!(
            "warning: {} cosine queries hit an all-zero vector and scored 0",
            rep.zero_vectors
        );
    }
}

fn cmd_vocab(args: VocabArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let corpus = file.require(args.corpus, "corpus")?;
    let out: String = file.require(args.out, "out")?;
    let cfg = CooccurConfig {
        vocab_size_cap: file.resolve(args.cap, "cap", 71_000)?,
        min_count: file.resolve(args.min_count, "min-count", 5)?,
        ..CooccurConfig::default()
    };
    if cfg.vocab_size_cap == 0 {
        return Err(Error::Config("cap must be at least 1".into()));
    }
    let vocab = build_vocabulary(Tokenizer::new(corpus_reader(&corpus)?), &cfg)?;
    vocab.save(Path::new(&out))?;
    println!("vocabulary: {} tokens -> {}", vocab.len(), out);
    Ok(())
}

fn cmd_cooccur(args: CooccurArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let corpus = file.require(args.corpus, "corpus")?;
    let vocab_path: String = file.require(args.vocab, "vocab")?;
    let out: String = file.require(args.out, "out")?;
    let cfg = CooccurConfig {
        window: file.resolve(args.window, "window", 15)?,
        shard_bytes: file.resolve(args.shard_mb, "shard-mb", 1024)? << 20,
        ..CooccurConfig::default()
    };
    if cfg.window == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    let vocab = Vocabulary::load(Path::new(&vocab_path))?;
    let matrix = build_cooccurrence(Tokenizer::new(corpus_reader(&corpus)?), &vocab, &cfg)?;
    matrix.save(Path::new(&out))?;
    println!(
        "co-occurrences: {} records over {} words -> {}",
        matrix.len(),
        matrix.words(),
        out
    );
    Ok(())
}

fn build_train_config(args: &TrainArgs, file: &FileConfig, contexts: usize) -> Result<TrainConfig> {
    let rho_kind = parse_rho(&file.resolve(args.rho.clone(), "rho", "log".into())?)?;
    let loss_kind = parse_loss(&file.resolve(args.loss.clone(), "loss", "logistic".into())?)?;
    let weights_on = parse_on_off(
        &file.resolve(args.weights.clone(), "weights", "on".into())?,
        "weights",
    )?;
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        rho: RhoSpec {
            kind: rho_kind,
            t: file.resolve(args.t, "t", defaults.rho.t)?,
            alpha: file.resolve(args.alpha, "alpha", defaults.rho.alpha)?,
            beta: file.resolve(args.beta, "beta", defaults.rho.beta)?,
        },
        loss: LossSpec { kind: loss_kind },
        weights: WeightConfig {
            x_max: file.resolve(args.x_max, "x-max", 100.0)?,
            epsilon: file.resolve(args.epsilon, "epsilon", 0.75)?,
        },
        uniform_weights: !weights_on,
        eta: file.resolve(args.eta, "eta", defaults.eta)?,
        outer_iters: file.resolve(args.outer, "outer", defaults.outer_iters)?,
        stage1_passes: file.resolve(args.passes, "passes", defaults.stage1_passes)?,
        workers: file.resolve(args.workers, "workers", default_workers(contexts))?,
        seed: file.resolve(args.seed, "seed", defaults.seed)?,
        dim: file.resolve(args.dim, "dim", defaults.dim)?,
        score_block_rows: file.resolve(args.block_rows, "block-rows", defaults.score_block_rows)?,
    };
    cfg.validate(contexts)?;
    Ok(cfg)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let cooccur_path: String = file.require(args.cooccur.clone(), "cooccur")?;
    let vocab_path: String = file.require(args.vocab.clone(), "vocab")?;
    let out: String = file.require(args.out.clone(), "out")?;
    let log_path: Option<String> = file.resolve_opt(args.log.clone(), "log")?;

    let vocab = Vocabulary::load(Path::new(&vocab_path))?;
    let omega = CooccurrenceMatrix::load(Path::new(&cooccur_path))?;
    if vocab.len() != omega.words() {
        return Err(Error::Validation(format!(
            "vocabulary has {} tokens but the matrix was built over {} words",
            vocab.len(),
            omega.words()
        )));
    }
    let cfg = build_train_config(&args, &file, omega.contexts())?;

    eprintln!(
        "training: {} pairs, {}x{} vocab, k={}, rho={:?}, loss={:?}, eta={}, \
         outer={}, passes={}, workers={}, seed={}",
        omega.len(),
        omega.words(),
        omega.contexts(),
        cfg.dim,
        cfg.rho.kind,
        cfg.loss.kind,
        cfg.eta,
        cfg.outer_iters,
        cfg.stage1_passes,
        cfg.workers,
        cfg.seed
    );

    let model = EmbeddingModel::init(omega.words(), omega.contexts(), cfg.dim, cfg.seed);
    let mut state = TrainState::new(model, &omega)?;
    let out_path = PathBuf::from(&out);
    let mut log_file: Box<dyn Write> = match &log_path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| Error::io(p.clone(), e))?,
        )),
        None => Box::new(std::io::stderr()),
    };
    let mut hooks = TrainHooks {
        checkpoint_path: Some(&out_path),
        log: Some(&mut log_file),
    };
    train(&mut state, &omega, &cfg, &mut hooks)?;
    save_checkpoint(&state.model, &state.aux, &out_path)?;
    println!(
        "trained {} epochs; final bound estimate {:.6e}; checkpoint -> {}",
        state.epochs_done, state.jbar_estimate, out
    );
    Ok(())
}

fn load_model_vocab(
    file: &FileConfig,
    model: Option<String>,
    vocab: Option<String>,
) -> Result<(EmbeddingModel, Vocabulary)> {
    let model_path: String = file.require(model, "model")?;
    let vocab_path: String = file.require(vocab, "vocab")?;
    let ckpt = load_checkpoint(Path::new(&model_path))?;
    let vocab = Vocabulary::load(Path::new(&vocab_path))?;
    Ok((ckpt.model, vocab))
}

fn cmd_eval_sim(args: EvalSimArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let (model, vocab) = load_model_vocab(&file, args.model, args.vocab)?;
    let dataset_path: String = file.require(args.dataset, "dataset")?;
    let mode = parse_mode(&file.resolve(args.mode, "mode", "u".into())?)?;
    let dataset = SimilarityDataset::load(Path::new(&dataset_path))?;
    if dataset.skipped > 0 {
        eprintln!("warning: skipped {} malformed dataset lines", dataset.skipped);
    }
    let report = eval_similarity(&model, &vocab, &dataset, mode)?;
    print_report(&report);
    Ok(())
}

fn cmd_eval_analogy(args: EvalAnalogyArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let (model, vocab) = load_model_vocab(&file, args.model, args.vocab)?;
    let dataset_path: String = file.require(args.dataset, "dataset")?;
    let method = parse_method(&file.resolve(args.method, "method", "add".into())?)?;
    let mode = parse_mode(&file.resolve(args.mode, "mode", "u_plus_v".into())?)?;
    let workers = file.resolve(args.workers, "workers", default_workers(usize::MAX))?;
    let prefixes: String =
        file.resolve(args.syntactic_prefix, "syntactic-prefix", "gram".into())?;
    let prefixes: Vec<String> = prefixes
        .split(',')
        .filter(|p| !p.is_empty())
        .map(str::to_string)
        .collect();
    let dataset = AnalogyDataset::load(Path::new(&dataset_path))?;
    if dataset.skipped > 0 {
        eprintln!("warning: skipped {} malformed dataset lines", dataset.skipped);
    }
    let breakdown = eval_analogy(&model, &vocab, &dataset, method, mode, &prefixes, workers)?;
    print_report(&breakdown.overall);
    print_report(&breakdown.semantic);
    print_report(&breakdown.syntactic);
    Ok(())
}

fn cmd_nn(args: NnArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let (model, vocab) = load_model_vocab(&file, args.model, args.vocab)?;
    let word: String = file.require(args.word, "word")?;
    let n = file.resolve(args.n, "n", 10)?;
    let mode = parse_mode(&file.resolve(args.mode, "mode", "u".into())?)?;
    if n == 0 {
        return Err(Error::Config("n must be at least 1".into()));
    }
    for (token, sim) in nearest_neighbors(&model, &vocab, &word.to_lowercase(), n, mode)? {
        println!("{token} {sim:.6}");
    }
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let (model, vocab) = load_model_vocab(&file, args.model, args.vocab)?;
    let out: String = file.require(args.out, "out")?;
    let mode = parse_mode(&file.resolve(args.mode, "mode", "u".into())?)?;
    let header = parse_on_off(&file.resolve(args.header, "header", "on".into())?, "header")?;
    model.export_text(
        &vocab,
        Path::new(&out),
        mode == VectorMode::WordPlusContext,
        header,
    )?;
    println!("exported {} vectors -> {}", model.words(), out);
    Ok(())
}

