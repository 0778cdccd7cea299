mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use dbs_core::bridge::{self, Endpoint};
use dbs_core::embeddings::{synthetic_embeddings, EmbeddingTable, DEFAULT_DIM};
use dbs_core::engine::{write_trace, DirectedBeamSearch};
use dbs_core::eval::{
    build_keyword_sets, read_word_list, run_sweep, sample_sets, write_csv, write_jsonl, KeywordSet,
    SweepGrid, SweepResults, SweepSettings, DISCARDED, LIST_LEN, SET_SIZE,
};
use dbs_core::{
    Error, GuidanceConfig, LanguageModel, NgramModel, QualityConfig, SamplingConfig, SamplingMode,
    SimilarityCache,
};
use serde_json::{json, Value};

use config::{parse_list, ConfigFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config values or input files.
    #[error("{0}")]
    Config(String),
    /// The model backend or its connection failed.
    #[error("backend error: {0}")]
    Backend(Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Backend(_) => 3,
            CliError::Other(_) => 1,
        }
    }

    /// Classifies a library error raised while setting up a run.
    fn setup(e: Error) -> Self {
        if e.is_backend() {
            CliError::Backend(e)
        } else {
            CliError::Config(e.to_string())
        }
    }

    /// Classifies a library error raised while a run is under way.
    fn running(e: Error) -> Self {
        if e.is_backend() {
            CliError::Backend(e)
        } else {
            CliError::Other(e.to_string())
        }
    }
}

fn io_error<'a>(what: &'a str, path: &'a Path) -> impl FnOnce(io::Error) -> CliError + 'a {
    move |e| CliError::Other(format!("cannot {what} {}: {e}", path.display()))
}

#[derive(Parser)]
#[command(
    name = "dbs",
    version,
    about = "Directed Beam Search: steer a language model toward an ordered list of guide words"
)]
struct Cli {
    /// More diagnostics on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one text guided by a list of keywords.
    Generate(GenerateArgs),
    /// Run the keyword-to-phrase evaluation at one configuration.
    Evaluate(EvaluateArgs),
    /// Run the keyword-to-phrase evaluation over a hyperparameter grid.
    Sweep(SweepArgs),
    /// Serve a model over the line-delimited JSON bridge protocol.
    Serve(ServeArgs),
    /// Write deterministic stand-in embeddings for the words of a corpus.
    SynthEmbeddings(SynthArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// `key = value` file supplying defaults for any option below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Train the built-in n-gram model on this text file.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// N-gram order [default: 2].
    #[arg(long)]
    order: Option<usize>,
    /// Additive smoothing for the n-gram model [default: 0.0001].
    #[arg(long)]
    smoothing: Option<f64>,
    /// External model server: tcp:HOST:PORT or stdio:COMMAND [ARGS...].
    #[arg(long)]
    bridge: Option<String>,
    /// Bridge request timeout in milliseconds [default: 30000].
    #[arg(long)]
    bridge_timeout_ms: Option<u64>,
    /// Bridge retries after a timeout [default: 2].
    #[arg(long)]
    bridge_retries: Option<u32>,
    /// Word vectors in GloVe text format (optionally .gz).
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct DecodeArgs {
    /// Text the generation continues [default: "It is"].
    #[arg(long)]
    context: Option<String>,
    /// Guidance strength [default: 20].
    #[arg(long)]
    lambda: Option<f64>,
    /// Beams kept per step [default: 7].
    #[arg(short = 'b', long = "beams")]
    b: Option<usize>,
    /// Candidates per beam [default: 10].
    #[arg(short = 's', long = "candidates")]
    s: Option<usize>,
    /// Tokens per chunk [default: 5].
    #[arg(short = 'k', long = "chunk-tokens")]
    k: Option<usize>,
    /// Tokens to generate [default: 90].
    #[arg(long)]
    max_tokens: Option<usize>,
    /// Nucleus mass [default: 0.9].
    #[arg(long)]
    top_p: Option<f64>,
    /// Softmax temperature [default: 1].
    #[arg(long)]
    temperature: Option<f64>,
    /// Master seed [default: $DBS_SEED or 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Perplexity weight in the quality score [default: 0.001].
    #[arg(long)]
    alpha: Option<f64>,
    /// Penalty for chunks without the guide word [default: 2].
    #[arg(long)]
    c_star: Option<f64>,
    /// Take the most likely token instead of sampling.
    #[arg(long)]
    greedy: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    decode: DecodeArgs,
    /// Comma-separated guide words, in order; empty for unguided sampling.
    #[arg(long)]
    keywords: Option<String>,
    /// Write one JSON line per candidate chunk to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct EvalInputArgs {
    /// Frequency-ranked word list, one word per line.
    #[arg(long)]
    words: Option<PathBuf>,
    /// Stop words to exclude, one per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Number of keyword sets [default: 50].
    #[arg(long)]
    sets: Option<usize>,
    /// Keep only keywords the generator has as single tokens.
    #[arg(long)]
    in_vocab_only: bool,
    /// Directory for results.csv and results.jsonl [default: .].
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Train the evaluator n-gram model on this file.
    #[arg(long)]
    evaluator_corpus: Option<PathBuf>,
    /// Evaluator model server (same syntax as --bridge).
    #[arg(long)]
    evaluator_bridge: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    decode: DecodeArgs,
    #[command(flatten)]
    input: EvalInputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    decode: DecodeArgs,
    #[command(flatten)]
    input: EvalInputArgs,
    /// Guidance strengths [default: 5,10,15,20,25].
    #[arg(long)]
    lambdas: Option<String>,
    /// Beam counts [default: 3,5,7,10].
    #[arg(long)]
    bs: Option<String>,
    /// Candidate counts [default: 3,5,7,10].
    #[arg(long)]
    ss: Option<String>,
    /// Chunk lengths [default: 2,5,10].
    #[arg(long)]
    ks: Option<String>,
    /// Runs per grid point and keyword set [default: 1].
    #[arg(long)]
    repeat: Option<usize>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Answer requests on stdin/stdout.
    #[arg(long, conflicts_with = "port")]
    stdio: bool,
    /// Listen on this TCP port.
    #[arg(long)]
    port: Option<u16>,
    /// Address to bind with --port.
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
}

#[derive(Args)]
struct SynthArgs {
    /// Text whose words get vectors.
    #[arg(long)]
    corpus: PathBuf,
    /// Output file (GloVe text format).
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Everything a generation needs, after layering flags over the config file.
struct Resolved {
    file: ConfigFile,
    guidance: GuidanceConfig,
    sampling: SamplingConfig,
    quality: QualityConfig,
    context: String,
    echo: Value,
}

fn load_config(path: Option<&PathBuf>) -> Result<ConfigFile, CliError> {
    path.map_or_else(|| Ok(ConfigFile::default()), |p| ConfigFile::load(p))
}

fn resolve(
    model: &ModelArgs,
    decode: &DecodeArgs,
    keywords: Option<String>,
) -> Result<Resolved, CliError> {
    let file = load_config(model.config.as_ref())?;
    let keywords = file.pick(keywords, "keywords", String::new())?;
    let guidance = GuidanceConfig {
        guide_words: parse_list::<String>(&keywords, "keywords")?,
        lambda: file.pick(decode.lambda, "lambda", 20.0)?,
        chunk_tokens: file.pick(decode.k, "k", 5)?,
        beams: file.pick(decode.b, "b", 7)?,
        candidates: file.pick(decode.s, "s", 10)?,
        max_tokens: file.pick(decode.max_tokens, "max_tokens", 90)?,
    };
    let greedy = decode.greedy || file.pick(None, "greedy", false)?;
    let sampling = SamplingConfig {
        top_p: file.pick(decode.top_p, "top_p", 0.9)?,
        temperature: file.pick(decode.temperature, "temperature", 1.0)?,
        seed: file.seed(decode.seed)?,
        mode: if greedy {
            SamplingMode::Greedy
        } else {
            SamplingMode::Stochastic
        },
    };
    let quality = QualityConfig {
        alpha: file.pick(decode.alpha, "alpha", 0.001)?,
        c_star: file.pick(decode.c_star, "c_star", 2.0)?,
    };
    let context = file.pick(decode.context.clone(), "context", "It is".to_owned())?;
    guidance.validate().map_err(CliError::setup)?;
    sampling.validate().map_err(CliError::setup)?;
    quality.validate().map_err(CliError::setup)?;
    let echo = json!({
        "backend": backend_label(model, &file)?,
        "embeddings": file.layer(model.embeddings.clone().map(path_str), "embeddings")?,
        "context": &context,
        "lambda": guidance.lambda,
        "b": guidance.beams,
        "s": guidance.candidates,
        "k": guidance.chunk_tokens,
        "max_tokens": guidance.max_tokens,
        "top_p": sampling.top_p,
        "temperature": sampling.temperature,
        "seed": sampling.seed,
        "greedy": greedy,
        "alpha": quality.alpha,
        "c_star": quality.c_star,
    });
    Ok(Resolved {
        file,
        guidance,
        sampling,
        quality,
        context,
        echo,
    })
}

fn path_str(p: PathBuf) -> String {
    p.to_string_lossy().into_owned()
}

fn backend_label(model: &ModelArgs, file: &ConfigFile) -> Result<Value, CliError> {
    if let Some(b) = file.layer(model.bridge.clone(), "bridge")? {
        return Ok(json!({ "bridge": b }));
    }
    Ok(json!({
        "corpus": file.layer(model.corpus.clone().map(path_str), "corpus")?,
        "order": file.pick(model.order, "order", 2usize)?,
        "smoothing": file.pick(model.smoothing, "smoothing", 1e-4)?,
    }))
}

fn open_bridge(
    spec: &str,
    model: &ModelArgs,
    file: &ConfigFile,
) -> Result<Box<dyn LanguageModel>, CliError> {
    let mut endpoint = Endpoint::parse(spec).map_err(CliError::setup)?;
    if let Some(ms) = file.layer(model.bridge_timeout_ms, "bridge_timeout_ms")? {
        endpoint.timeout = Duration::from_millis(ms);
    }
    if let Some(r) = file.layer(model.bridge_retries, "bridge_retries")? {
        endpoint.max_retries = r;
    }
    log::info!("connecting to {spec}");
    let lm = bridge::connect(&endpoint).map_err(CliError::setup)?;
    Ok(Box::new(lm))
}

fn train_ngram(
    corpus: &Path,
    model: &ModelArgs,
    file: &ConfigFile,
) -> Result<Box<dyn LanguageModel>, CliError> {
    let order = file.pick(model.order, "order", 2)?;
    let smoothing = file.pick(model.smoothing, "smoothing", 1e-4)?;
    if !corpus.is_file() {
        return Err(CliError::Config(format!(
            "corpus {} not found",
            corpus.display()
        )));
    }
    log::info!("training order-{order} model on {}", corpus.display());
    let lm = NgramModel::from_file(corpus, order, smoothing).map_err(CliError::setup)?;
    Ok(Box::new(lm))
}

fn open_model(model: &ModelArgs, file: &ConfigFile) -> Result<Box<dyn LanguageModel>, CliError> {
    let bridge = file.layer(model.bridge.clone(), "bridge")?;
    let corpus = file.layer(model.corpus.clone(), "corpus")?;
    match (bridge, corpus) {
        (Some(_), Some(_)) => Err(CliError::Config(
            "give either --corpus or --bridge, not both".into(),
        )),
        (Some(spec), None) => open_bridge(&spec, model, file),
        (None, Some(corpus)) => train_ngram(&corpus, model, file),
        (None, None) => Err(CliError::Config(
            "no model: give --corpus FILE or --bridge ENDPOINT".into(),
        )),
    }
}

fn open_evaluator(
    input: &EvalInputArgs,
    model: &ModelArgs,
    file: &ConfigFile,
) -> Result<Option<Box<dyn LanguageModel>>, CliError> {
    if let Some(spec) = file.layer(input.evaluator_bridge.clone(), "evaluator_bridge")? {
        return open_bridge(&spec, model, file).map(Some);
    }
    if let Some(corpus) = file.layer(input.evaluator_corpus.clone(), "evaluator_corpus")? {
        return train_ngram(&corpus, model, file).map(Some);
    }
    log::warn!("no evaluator model given; perplexity is measured with the generator itself");
    Ok(None)
}

/// Loads the embedding table; without guide words none is needed.
fn load_embeddings(
    model: &ModelArgs,
    file: &ConfigFile,
    needed: bool,
) -> Result<EmbeddingTable, CliError> {
    match file.layer(model.embeddings.clone(), "embeddings")? {
        Some(path) => {
            if !path.is_file() {
                return Err(CliError::Config(format!(
                    "embeddings file {} not found",
                    path.display()
                )));
            }
            let table = EmbeddingTable::load_inferred(&path).map_err(CliError::setup)?;
            Ok(table)
        }
        None if needed => Err(CliError::Config(
            "guide words need --embeddings FILE".into(),
        )),
        None => Ok(EmbeddingTable::new(1)),
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let r = resolve(&args.model, &args.decode, args.keywords.clone())?;
    let embeddings = load_embeddings(&args.model, &r.file, !r.guidance.guide_words.is_empty())?;
    let trace_path = r.file.layer(args.trace.clone(), "trace")?;
    let lm = open_model(&args.model, &r.file)?;
    let cache = SimilarityCache::new(lm.vocab(), &embeddings);
    let n = r.guidance.guide_words.len();
    let search = DirectedBeamSearch::new(
        lm.as_ref(),
        &cache,
        r.guidance,
        r.sampling,
        r.quality,
        &r.context,
    )
    .map_err(CliError::setup)?;
    let result = search.run().map_err(CliError::running)?;
    let mut all = search.context().to_vec();
    all.extend_from_slice(&result.best.tokens);
    println!("{}", lm.detokenize(&all).map_err(CliError::running)?);
    eprintln!(
        "guide words reached: {}/{n}; cumulative quality {:.6}",
        result.satisfied, result.best.cumulative_q
    );
    if let Some(path) = trace_path {
        let f = File::create(&path).map_err(io_error("create", &path))?;
        write_trace(&result.trace, BufWriter::new(f)).map_err(CliError::running)?;
    }
    Ok(())
}

/// Keyword sets for an evaluation run.
fn keyword_sets(
    input: &EvalInputArgs,
    file: &ConfigFile,
    lm: &dyn LanguageModel,
    seed: u64,
) -> Result<Vec<KeywordSet>, CliError> {
    let words_path = file
        .layer(input.words.clone(), "words")?
        .ok_or_else(|| CliError::Config("evaluation needs --words FILE".into()))?;
    let words = read_word_list(&words_path).map_err(CliError::setup)?;
    let stopwords = match file.layer(input.stopwords.clone(), "stopwords")? {
        Some(p) => read_word_list(&p).map_err(CliError::setup)?,
        None => Vec::new(),
    };
    let count = file.pick(input.sets, "sets", 50)?;
    let in_vocab = input.in_vocab_only || file.pick(None, "in_vocab_only", false)?;
    if !in_vocab {
        return build_keyword_sets(&words, &stopwords, count, seed).map_err(CliError::setup);
    }
    if words.len() < LIST_LEN {
        return Err(CliError::Config(format!(
            "word list needs at least {LIST_LEN} entries, got {}",
            words.len()
        )));
    }
    let stop: std::collections::HashSet<String> =
        stopwords.iter().map(|w| w.to_lowercase()).collect();
    let pool: Vec<(usize, &str)> = words[..LIST_LEN]
        .iter()
        .enumerate()
        .skip(DISCARDED)
        .filter(|(_, w)| !stop.contains(&w.to_lowercase()) && lm.vocab().lookup(w).is_some())
        .map(|(i, w)| (i, w.as_str()))
        .collect();
    sample_sets(&pool, SET_SIZE, count, seed).map_err(CliError::setup)
}

fn write_results(
    results: &SweepResults,
    input: &EvalInputArgs,
    file: &ConfigFile,
) -> Result<(), CliError> {
    let dir = file.pick(input.out_dir.clone(), "out_dir", PathBuf::from("."))?;
    std::fs::create_dir_all(&dir).map_err(io_error("create", &dir))?;
    let csv_path = dir.join("results.csv");
    let f = File::create(&csv_path).map_err(io_error("create", &csv_path))?;
    write_csv(results, BufWriter::new(f)).map_err(CliError::running)?;
    let jsonl_path = dir.join("results.jsonl");
    let f = File::create(&jsonl_path).map_err(io_error("create", &jsonl_path))?;
    write_jsonl(&results.rows, BufWriter::new(f)).map_err(CliError::running)?;
    log::info!("wrote {} and {}", csv_path.display(), jsonl_path.display());
    Ok(())
}

fn run_evaluation(
    model: &ModelArgs,
    input: &EvalInputArgs,
    r: &Resolved,
    grid: SweepGrid,
) -> Result<SweepResults, CliError> {
    let embeddings = load_embeddings(model, &r.file, true)?;
    let lm = open_model(model, &r.file)?;
    let evaluator = open_evaluator(input, model, &r.file)?;
    let sets = keyword_sets(input, &r.file, lm.as_ref(), r.sampling.seed)?;
    let settings = SweepSettings {
        context: r.context.clone(),
        max_tokens: r.guidance.max_tokens,
        sampling: r.sampling,
        quality: r.quality,
        echo: r.echo.clone(),
    };
    let evaluator = evaluator.as_deref().unwrap_or(lm.as_ref());
    let results = run_sweep(&grid, &sets, &settings, lm.as_ref(), &embeddings, evaluator)
        .map_err(CliError::setup)?;
    if let Some(e) = results.rows.iter().find_map(|r| r.error.as_ref()) {
        log::warn!(
            "{} runs failed, first: {e}",
            results.rows.iter().filter(|r| r.error.is_some()).count()
        );
    }
    write_results(&results, input, &r.file)?;
    Ok(results)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let r = resolve(&args.model, &args.decode, Some(String::new()))?;
    let grid = SweepGrid::point(&r.guidance, r.sampling.seed);
    let results = run_evaluation(&args.model, &args.input, &r, grid)?;
    let a = &results.aggregates[0];
    println!(
        "runs={} failures={} success_rate={:.4} perplexity={:.4} success_length={:.2}",
        a.runs, a.failures, a.success_rate, a.perplexity, a.success_length
    );
    if a.failures == a.runs {
        return Err(CliError::Other("every run failed".into()));
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let r = resolve(&args.model, &args.decode, Some(String::new()))?;
    let list = |flag: &Option<String>, key: &str, default: &str| -> Result<String, CliError> {
        r.file.pick(flag.clone(), key, default.to_owned())
    };
    let grid = SweepGrid {
        lambdas: parse_list(&list(&args.lambdas, "lambdas", "5,10,15,20,25")?, "lambdas")?,
        beams: parse_list(&list(&args.bs, "bs", "3,5,7,10")?, "bs")?,
        candidates: parse_list(&list(&args.ss, "ss", "3,5,7,10")?, "ss")?,
        chunk_tokens: parse_list(&list(&args.ks, "ks", "2,5,10")?, "ks")?,
        repetitions: r.file.pick(args.repeat, "repeat", 1)?,
        seed: r.sampling.seed,
    };
    grid.validate().map_err(CliError::setup)?;
    for p in grid.points() {
        GuidanceConfig {
            lambda: p.lambda,
            beams: p.b,
            candidates: p.s,
            chunk_tokens: p.k,
            ..r.guidance.clone()
        }
        .validate()
        .map_err(CliError::setup)?;
    }
    let results = run_evaluation(&args.model, &args.input, &r, grid)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let _ = writeln!(
        out,
        "lambda\tb\ts\tk\truns\tsuccess_rate\tperplexity\tsuccess_length\tseconds"
    );
    for a in &results.aggregates {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.2}\t{:.3}",
            a.point.lambda,
            a.point.b,
            a.point.s,
            a.point.k,
            a.runs,
            a.success_rate,
            a.perplexity,
            a.success_length,
            a.seconds
        );
    }
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<(), CliError> {
    let file = load_config(args.model.config.as_ref())?;
    if !args.stdio && args.port.is_none() {
        return Err(CliError::Config(
            "serve needs --stdio or --port PORT".into(),
        ));
    }
    let lm = open_model(&args.model, &file)?;
    if args.stdio {
        let stdin = io::stdin();
        let stdout = io::stdout();
        return bridge::serve(lm.as_ref(), stdin.lock(), stdout.lock()).map_err(CliError::running);
    }
    let addr = format!("{}:{}", args.host, args.port.unwrap_or_default());
    let listener = TcpListener::bind(&addr)
        .map_err(|e| CliError::Config(format!("cannot listen on {addr}: {e}")))?;
    eprintln!(
        "listening on {}",
        listener.local_addr().map(|a| a.to_string()).unwrap_or(addr)
    );
    bridge::serve_tcp(lm.as_ref(), &listener).map_err(CliError::running)
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    if args.dim == 0 {
        return Err(CliError::Config("--dim must be positive".into()));
    }
    let text = std::fs::read_to_string(&args.corpus)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.corpus.display())))?;
    let table = synthetic_embeddings(dbs_core::scoring::words(&text), args.dim, args.seed);
    let f = File::create(&args.out).map_err(io_error("create", &args.out))?;
    let mut w = BufWriter::new(f);
    table
        .write_text(&mut w)
        .and_then(|_| w.flush())
        .map_err(io_error("write", &args.out))?;
    eprintln!(
        "{} vectors of dimension {} written to {}",
        table.len(),
        args.dim,
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Serve(a) => cmd_serve(a),
        Command::SynthEmbeddings(a) => cmd_synth(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
