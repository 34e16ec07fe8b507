//! `dezh` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::fs;
use std::io::{self, Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use dezh_core::ablation::{bundled_wordlist, load_wordlist, run_ablation, ReferenceMode};
use dezh_core::corpus_io::{read_plain_pairs, read_tsv, split, Provenance};
use dezh_core::de_inserter::{DeInserter, InsertionPolicy};
use dezh_core::lexicon::{load_lexicon, Lexicon, PosTagset};
use dezh_core::metrics::{evaluate, MetricsConfig};
use dezh_core::mt_client::{backend_from_spec, Backend, BackendConfig, CachedBackend};
use dezh_core::pipeline::{load_titles, run_experiment, ExperimentConfig};
use dezh_core::segmenter::analyze;

#[derive(Parser)]
#[command(
    name = "dezh",
    version,
    about = "Chinese DE-insertion and function-word ablation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment and POS-tag sentences, one per line.
    Segment(SegmentArgs),
    /// Insert 的 between attributive noun pairs.
    InsertDe(InsertDeArgs),
    /// Delete each function word from a corpus and score the effect.
    Ablate(AblateArgs),
    /// Translate sentences, one per line.
    Translate(TranslateArgs),
    /// Score hypotheses against references with BLEU and chrF.
    Score(ScoreArgs),
    /// Split a parallel corpus into seeded disjoint parts.
    Split(SplitArgs),
    /// Run the full title experiment and write its output tree.
    RunExperiment(ExperimentArgs),
    /// Serve a review session over HTTP.
    Serve(ServeArgs),
}

#[derive(Args)]
struct BackendArgs {
    /// `http:<url>` or `mock:<dict.tsv>`.
    #[arg(long)]
    backend: String,
    #[arg(long, default_value = "zh")]
    src_lang: String,
    #[arg(long, default_value = "en")]
    tgt_lang: String,
    /// Texts per HTTP request.
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 30)]
    timeout: u64,
    /// Retries per batch after the first attempt.
    #[arg(long, default_value_t = 2)]
    retries: usize,
    /// Concurrent HTTP requests.
    #[arg(long, default_value_t = 4)]
    parallel: usize,
    /// Cache translations on disk under this directory.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

impl BackendArgs {
    fn build(&self) -> Result<Box<dyn Backend>> {
        let mut config = BackendConfig::new(String::new());
        config.src_lang = self.src_lang.clone();
        config.tgt_lang = self.tgt_lang.clone();
        config.batch_size = self.batch_size;
        config.timeout = Duration::from_secs(self.timeout);
        config.max_retries = self.retries;
        config.max_parallel = self.parallel;
        config.bearer_token = std::env::var("DEZH_API_TOKEN").ok().filter(|t| !t.is_empty());
        let backend = backend_from_spec(&self.backend, &config).map_err(usage)?;
        Ok(match &self.cache_dir {
            Some(dir) => {
                let namespace = format!("{}#{}-{}", backend.backend_id(), self.src_lang, self.tgt_lang);
                Box::new(CachedBackend::new(backend, dir, namespace)?)
            }
            None => backend,
        })
    }
}

#[derive(Args)]
struct SegmentArgs {
    /// Input file, one sentence per line; stdin when absent.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Lexicon TSV (bundled lexicon when absent).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Emit one JSON object per sentence instead of `word/tag` lines.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InsertDeArgs {
    /// Titles: bare lines or `id<TAB>title[<TAB>reference]`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Policy file (bundled policy when absent).
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Modified titles, one per line.
    #[arg(long)]
    out: PathBuf,
    /// Every candidate as JSON lines.
    #[arg(long)]
    candidates: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    /// Corpus, one sentence per line.
    #[arg(long)]
    corpus: PathBuf,
    /// `surface<TAB>category` wordlist (bundled 82-word list when absent).
    #[arg(long)]
    words: Option<PathBuf>,
    #[command(flatten)]
    backend: BackendArgs,
    /// Gold references, one per line; baseline translations otherwise.
    #[arg(long)]
    references: Option<PathBuf>,
    /// Also write the report (report.tsv, report.json) here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Print JSON instead of TSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct TranslateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Print the full report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SplitArgs {
    /// Corpus TSV (or plain `source<TAB>target` with --plain).
    #[arg(long = "in")]
    input: PathBuf,
    /// Part sizes, e.g. `1000,500`; the residual becomes the last part.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Parts are written to `<prefix>.<n>.tsv`.
    #[arg(long)]
    out_prefix: String,
    #[arg(long)]
    plain: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    titles: PathBuf,
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[command(flatten)]
    backend: BackendArgs,
    /// Decision log; only accepted candidates are applied when given.
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Dev part size of the tuning split; 0 disables the split.
    #[arg(long, default_value_t = 0)]
    dev_size: usize,
}

#[derive(Args)]
struct ServeArgs {
    /// Session directory (e.g. a run-experiment output tree).
    #[arg(long)]
    session: PathBuf,
    #[arg(long, default_value_t = 8787)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
}

/// An error caused by how the command was invoked.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    UsageError(e.to_string()).into()
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect())
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn lexicon(path: Option<&Path>, tagset: &PosTagset) -> Result<Lexicon> {
    Ok(match path {
        Some(p) => load_lexicon(p, tagset)?,
        None => Lexicon::bundled(),
    })
}

fn cmd_segment(args: SegmentArgs) -> Result<()> {
    let tagset = PosTagset::default();
    let lexicon = lexicon(args.lexicon.as_deref(), &tagset)?;
    let text = match &args.input {
        Some(p) => read_text(p)?,
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            s
        }
    };
    let mut out = String::new();
    for line in text.lines() {
        let sentence = analyze(line, &lexicon, &tagset);
        if args.json {
            out.push_str(&serde_json::to_string(&sentence)?);
        } else {
            out.push_str(&sentence.to_tagged_string());
        }
        out.push('\n');
    }
    write_output(args.out.as_deref(), &out)
}

fn cmd_insert_de(args: InsertDeArgs) -> Result<()> {
    let tagset = PosTagset::default();
    let lexicon = lexicon(args.lexicon.as_deref(), &tagset)?;
    let policy = match &args.policy {
        Some(p) => InsertionPolicy::load(p, &tagset)?,
        None => InsertionPolicy::bundled(&tagset),
    };
    let inserter = DeInserter::new(&lexicon, &tagset, &policy);
    let mut modified = String::new();
    let mut candidates = String::new();
    for title in load_titles(&args.input)? {
        let outcome = inserter.auto_insert(&title.id, &title.title)?;
        modified.push_str(&outcome.text);
        modified.push('\n');
        for c in &outcome.candidates {
            candidates.push_str(&serde_json::to_string(c)?);
            candidates.push('\n');
        }
    }
    write_output(Some(&args.out), &modified)?;
    if let Some(p) = &args.candidates {
        write_output(Some(p), &candidates)?;
    }
    Ok(())
}

fn cmd_ablate(args: AblateArgs) -> Result<()> {
    let corpus = read_lines(&args.corpus)?;
    let words = match &args.words {
        Some(p) => load_wordlist(p)?,
        None => bundled_wordlist(),
    };
    let mode = match &args.references {
        Some(p) => ReferenceMode::Gold(read_lines(p)?),
        None => ReferenceMode::BaselineAsReference,
    };
    let backend = args.backend.build()?;
    let report = run_ablation(&corpus, &words, backend.as_ref(), &MetricsConfig::default(), &mode)?;
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_output(Some(&dir.join("report.tsv")), &report.to_tsv())?;
        write_output(Some(&dir.join("report.json")), &(report.to_json()? + "\n"))?;
    }
    if args.json {
        write_output(None, &(report.to_json()? + "\n"))
    } else {
        write_output(None, &report.to_tsv())
    }
}

fn cmd_translate(args: TranslateArgs) -> Result<()> {
    let texts = read_lines(&args.input)?;
    let backend = args.backend.build()?;
    let mut out = backend.translate(&texts)?.join("\n");
    out.push('\n');
    write_output(args.out.as_deref(), &out)
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let hyps = read_lines(&args.hyp)?;
    let refs = read_lines(&args.reference)?;
    let report = evaluate(&hyps, &refs, &MetricsConfig::default())?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("bleu={:.1} chrf={:.1}", report.bleu, report.chrf);
    }
    Ok(())
}

fn cmd_split(args: SplitArgs) -> Result<()> {
    let corpus = if args.plain {
        read_plain_pairs(&args.input, Provenance::Original)?
    } else {
        read_tsv(&args.input)?
    };
    let parts = split(&corpus, &args.sizes, args.seed)?;
    for (i, part) in parts.iter().enumerate() {
        let path = PathBuf::from(format!("{}.{}.tsv", args.out_prefix, i + 1));
        write_output(Some(&path), &part.to_tsv()?)?;
        eprintln!("{}\t{}", path.display(), part.len());
    }
    Ok(())
}

fn cmd_run_experiment(args: ExperimentArgs) -> Result<()> {
    let backend = args.backend.build()?;
    let mut config = ExperimentConfig::new(&args.titles, &args.out_dir);
    config.policy_path = args.policy;
    config.lexicon_path = args.lexicon;
    config.annotations_path = args.annotations;
    config.seed = args.seed;
    config.dev_size = args.dev_size;
    let stats = run_experiment(&config, backend.as_ref())?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<()> {
    let session = dezh_review::Session::open(&args.session)?;
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = dezh_review::bind(addr).await?;
        eprintln!(
            "serving {} on http://{}",
            args.session.display(),
            listener.local_addr()?
        );
        dezh_review::serve_with_shutdown(listener, session, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok::<_, anyhow::Error>(())
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Segment(a) => cmd_segment(a),
        Command::InsertDe(a) => cmd_insert_de(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Translate(a) => cmd_translate(a),
        Command::Score(a) => cmd_score(a),
        Command::Split(a) => cmd_split(a),
        Command::RunExperiment(a) => cmd_run_experiment(a),
        Command::Serve(a) => cmd_serve(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
