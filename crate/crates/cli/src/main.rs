use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use deprnn::corpus::{read_vocab, write_vocab};
use deprnn::evaluation::completion_perplexity;
use deprnn::rnn::{deserialize, serialize};
use deprnn::scoring::score_sentence;
use deprnn::training::EpochRecord;
use deprnn::{
    assign_classes, collect_labels, evaluate, load_completion_set, parse_conll, split_dev_test, train,
    Mode, Model, ModelShape, RawSentence, TrainConfig, Vocabulary,
};
use log::{info, warn};

/// Dependency-tree recurrent neural network language models.
#[derive(Parser, Debug)]
#[command(name = "deprnn", version)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count words in CoNLL files and write a vocabulary with frequency classes.
    BuildVocab(BuildVocabArgs),
    /// Train a model and write it with a `.history` sidecar.
    Train(TrainArgs),
    /// Print the log-probability of every sentence in a CoNLL file.
    Score(ScoreArgs),
    /// Answer five-way sentence completion problems.
    Complete(CompleteArgs),
}

#[derive(Args, Debug)]
struct BuildVocabArgs {
    /// CoNLL corpus files.
    #[arg(required = true)]
    corpus: Vec<PathBuf>,
    /// Words seen fewer times become `<unk>`.
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    /// Number of frequency classes, capped at the vocabulary size.
    #[arg(long, default_value_t = 250, value_parser = clap::value_parser!(u64).range(1..))]
    classes: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// CoNLL corpus files.
    #[arg(required = true)]
    corpus: Vec<PathBuf>,
    /// Vocabulary file from `build-vocab`; built from the corpus when absent.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Completion problems used for annealing and checkpoint selection.
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "dep", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    hidden: u64,
    /// Longest direct-connection n-gram; 1 disables context features.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=9))]
    order: u64,
    /// Size of the hashed direct-connection table (the reference setup uses 1000000000).
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    direct_size: u64,
    /// Only used when `--vocab` is absent.
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    /// Only used when `--vocab` is absent.
    #[arg(long, default_value_t = 250, value_parser = clap::value_parser!(u64).range(1..))]
    classes: u64,
    #[arg(long, default_value_t = 5)]
    bptt: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 0.66)]
    decay: f64,
    #[arg(long, default_value_t = 20)]
    max_epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    min_lr: f64,
    /// Parameter initialization seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    shuffle_seed: u64,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    /// CoNLL file to score.
    input: PathBuf,
    /// Defaults to the mode the model was trained in.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
}

#[derive(Args, Debug)]
struct CompleteArgs {
    #[arg(long)]
    model: PathBuf,
    /// Completion problem file.
    problems: PathBuf,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: deprnn::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .format_timestamp(None)
        .init();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = match cli.command {
        Command::BuildVocab(a) => build_vocab(a),
        Command::Train(a) => cmd_train(a, &mut out),
        Command::Score(a) => score(a, &mut out),
        Command::Complete(a) => complete(a, &mut out),
    }
    .and_then(|()| out.flush().context("writing output"));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn read_corpus(paths: &[PathBuf]) -> Result<Vec<RawSentence>> {
    let mut sentences = Vec::new();
    for path in paths {
        let part = parse_conll(open(path)?).with_context(|| format!("reading {}", path.display()))?;
        info!("{}: {} sentences", path.display(), part.len());
        sentences.extend(part);
    }
    Ok(sentences)
}

fn load_model(path: &Path) -> Result<Model> {
    deserialize(open(path)?).with_context(|| format!("loading model {}", path.display()))
}

fn vocab_with_classes(corpus: &[RawSentence], min_count: u64, classes: u64) -> Result<(Vocabulary, deprnn::ClassAssignment)> {
    if corpus.is_empty() {
        warn!("corpus is empty; the vocabulary holds only the sentinels");
    }
    let vocab = Vocabulary::build(corpus, min_count);
    let requested = usize::try_from(classes).unwrap_or(usize::MAX);
    let c = requested.min(vocab.len());
    if c < requested {
        warn!("{requested} classes requested for {} words; using {c}", vocab.len());
    }
    let assignment = assign_classes(&vocab, c)?;
    Ok((vocab, assignment))
}

fn build_vocab(args: BuildVocabArgs) -> Result<()> {
    let corpus = read_corpus(&args.corpus)?;
    let (vocab, classes) = vocab_with_classes(&corpus, args.min_count, args.classes)?;
    info!("{} words in {} classes", vocab.len(), classes.num_classes());
    let mut out = create(&args.out)?;
    write_vocab(&mut out, &vocab, &classes)?;
    out.flush()?;
    Ok(())
}

fn cmd_train(args: TrainArgs, out: &mut impl Write) -> Result<()> {
    let valid = args.lr > 0.0 && args.decay > 0.0 && args.decay <= 1.0 && args.min_lr >= 0.0;
    if !valid {
        bail!("need --lr > 0, 0 < --decay <= 1 and --min-lr >= 0");
    }
    let corpus = read_corpus(&args.corpus)?;
    let (vocab, classes) = match &args.vocab {
        Some(path) => read_vocab(open(path)?).with_context(|| format!("reading vocabulary {}", path.display()))?,
        None => vocab_with_classes(&corpus, args.min_count, args.classes)?,
    };
    let dev = match &args.dev {
        Some(path) => load_completion_set(open(path)?).with_context(|| format!("reading {}", path.display()))?,
        None => Vec::new(),
    };
    let labels = collect_labels(&corpus);
    let shape = ModelShape {
        hidden: args.hidden as usize,
        order: args.order as usize,
        direct_size: args.direct_size as usize,
        seed: args.seed,
    };
    let model = Model::new(args.mode, vocab, classes, labels, &shape)?;
    let config = TrainConfig {
        initial_lr: args.lr,
        decay: args.decay,
        bptt_steps: args.bptt,
        max_epochs: args.max_epochs,
        min_lr: args.min_lr,
        mode: args.mode,
        shuffle_seed: args.shuffle_seed,
    };

    let mut history = String::new();
    let mut io_result = Ok(());
    let outcome = train(model, &corpus, &dev, &config, |r: &EpochRecord| {
        let line = r.history_line();
        history.push_str(&line);
        history.push('\n');
        if io_result.is_ok() {
            io_result = writeln!(out, "{line}").and_then(|()| out.flush());
        }
    });
    io_result.context("writing output")?;

    let mut file = create(&args.out)?;
    serialize(&outcome.model, &mut file)?;
    file.flush()?;
    let mut sidecar = args.out.clone().into_os_string();
    sidecar.push(".history");
    std::fs::write(&sidecar, history).with_context(|| format!("writing {}", Path::new(&sidecar).display()))?;
    Ok(())
}

fn resolve_mode(model: &Model, requested: Option<Mode>) -> Mode {
    let mode = requested.unwrap_or(model.mode);
    if mode.uses_labels() && !model.hyper().uses_labels() {
        warn!("model has no label features; --mode {mode} scores without labels");
    }
    mode
}

fn score(args: ScoreArgs, out: &mut impl Write) -> Result<()> {
    let model = load_model(&args.model)?;
    let mode = resolve_mode(&model, args.mode);
    let corpus = parse_conll(open(&args.input)?).with_context(|| format!("reading {}", args.input.display()))?;
    for (i, sentence) in corpus.iter().enumerate() {
        let s = score_sentence(&model, sentence, mode).with_context(|| format!("sentence {}", i + 1))?;
        write!(out, "{}\t{}\t", s.total, s.token_count)?;
        let items: Vec<String> = s
            .per_token
            .iter()
            .map(|(&slot, lp)| {
                let surface = sentence.get(slot).map_or(deprnn::corpus::END_TOKEN, |t| t.surface.as_str());
                format!("{surface}:{lp}")
            })
            .collect();
        writeln!(out, "{}", items.join(" "))?;
    }
    Ok(())
}

fn complete(args: CompleteArgs, out: &mut impl Write) -> Result<()> {
    let model = load_model(&args.model)?;
    let mode = resolve_mode(&model, args.mode);
    let problems = load_completion_set(open(&args.problems)?)
        .with_context(|| format!("reading {}", args.problems.display()))?;
    if problems.is_empty() {
        bail!("{} contains no problems", args.problems.display());
    }
    let all = evaluate(&model, &problems, mode, "all");
    let (dev, test) = split_dev_test(&problems);
    let dev_report = all.subset("dev", 0..dev.len());
    let test_report = all.subset("test", dev.len()..dev.len() + test.len());
    if let Ok((gold, every)) = completion_perplexity(&model, &problems, mode) {
        info!("perplexity: gold candidates {gold:.4}, all candidates {every:.4}");
    }
    write!(out, "{}", all.table())?;
    writeln!(out, "{}", dev_report.footer())?;
    writeln!(out, "{}", test_report.footer())?;
    writeln!(out, "{}", all.footer())?;
    Ok(())
}
