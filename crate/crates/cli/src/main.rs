use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use contsent::corpus::{tokenize, ConvertedSts};
use contsent::eval::evaluate;
use contsent::harness::{
    run_protocol_with_states, write_run, EncoderKind, ExperimentConfig, ExperimentData,
    DATA_DIR_ENV, DEFAULT_EMBEDDINGS_FILE, DEFAULT_FREQUENCIES_FILE,
};
use contsent::{
    CaState, Conceptor, Corpus, EncoderState, FrequencyTable, Genre, Lexicon, SentenceEncoder,
    StopWordList, StsDataset, WordVectorTable,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "contsent", version, about = "Conceptor-aided continual sentence encoders")]
struct Cli {
    /// Default location of the embeddings, frequencies and `sts/` directory.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sequential-corpus protocol and write results.
    Run(RunArgs),
    /// Split upstream STS files into one `<genre>.tsv` per genre.
    ConvertSts(ConvertArgs),
    /// Compute a conceptor from a corpus or from stop-word vectors.
    BuildConceptor(BuildArgs),
    /// Combine conceptor files with Boolean OR.
    MergeConceptors(MergeArgs),
    /// Print sentence embeddings for lines read from stdin.
    Embed(EmbedArgs),
    /// Score a saved encoder state on an STS dataset.
    Eval(EvalArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    reverse: bool,
    #[arg(long)]
    no_stopword_init: bool,
    /// Comma-separated encoder names.
    #[arg(long, value_delimiter = ',')]
    encoders: Option<Vec<EncoderKind>>,
    #[arg(long)]
    vocab_limit: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "contsent-run")]
    out: PathBuf,
    /// Skip writing encoder states.
    #[arg(long)]
    no_states: bool,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args)]
struct LexiconArgs {
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    frequencies: Option<PathBuf>,
    /// Read at most this many rows of the embeddings file.
    #[arg(long)]
    vocab_limit: Option<usize>,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, default_value_t = contsent::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = contsent::DEFAULT_A)]
    a: f64,
    /// STS file in `gold TAB s1 TAB s2` form; both sentences are used.
    #[arg(long, conflicts_with_all = ["sentences", "from_stopwords"])]
    dataset: Option<PathBuf>,
    /// Plain text, one sentence per line.
    #[arg(long, conflicts_with = "from_stopwords")]
    sentences: Option<PathBuf>,
    /// Build the initial conceptor from raw stop-word vectors.
    #[arg(long)]
    from_stopwords: bool,
    /// Stop-word file; the bundled English list by default.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    lexicon: LexiconArgs,
}

#[derive(Args)]
struct MergeArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    state: PathBuf,
    /// SIF parameter for bare conceptor files, which do not record it.
    #[arg(long, default_value_t = contsent::DEFAULT_A)]
    a: f64,
    #[command(flatten)]
    lexicon: LexiconArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Genre label; taken from the dataset file name when omitted.
    #[arg(long)]
    genre: Option<Genre>,
    /// Encoder label for the output row; derived from the state by default.
    #[arg(long)]
    encoder: Option<String>,
    /// Training corpora recorded in the output row.
    #[arg(long, value_delimiter = ',')]
    train: Vec<Genre>,
    #[arg(long, default_value_t = contsent::DEFAULT_A)]
    a: f64,
    #[command(flatten)]
    lexicon: LexiconArgs,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let data_dir = cli.data_dir.as_deref();
    match cli.command {
        Command::Run(args) => run(args, data_dir),
        Command::ConvertSts(args) => convert_sts(args),
        Command::BuildConceptor(args) => build_conceptor(args, data_dir),
        Command::MergeConceptors(args) => merge_conceptors(args),
        Command::Embed(args) => embed(args, data_dir),
        Command::Eval(args) => eval(args, data_dir),
    }
}

fn run(args: RunArgs, data_dir: Option<&Path>) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.config)?;
    config.reverse |= args.reverse;
    config.no_stopword_init |= args.no_stopword_init;
    if let Some(encoders) = args.encoders {
        config.encoders = encoders;
    }
    if args.vocab_limit.is_some() {
        config.vocab_limit = args.vocab_limit;
    }
    config.resolve_paths(data_dir)?;
    config.validate()?;

    let data = ExperimentData::load(&config)?;
    let (table, states) = run_protocol_with_states(&config, &data)?;
    let states = (!args.no_states).then_some(&states);
    write_run(&args.out, &config, &table, states)?;
    print!("{}", table.summary());
    log::info!("results written to {}", args.out.display());
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn convert_sts(args: ConvertArgs) -> Result<()> {
    let mut converted = ConvertedSts::default();
    for path in &args.files {
        converted
            .push_upstream(open(path)?)
            .with_context(|| format!("reading {}", path.display()))?;
    }
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    for genre in Genre::ALL {
        let path = args.out_dir.join(genre.file_name());
        let mut w = BufWriter::new(
            File::create(&path).with_context(|| format!("cannot create {}", path.display()))?,
        );
        for line in converted.by_genre.get(&genre).into_iter().flatten() {
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        println!("{genre}\t{}", converted.count(genre));
    }
    log::info!(
        "{} lines read, {} unmapped, {} rejected",
        converted.lines,
        converted.unmapped,
        converted.rejected
    );
    Ok(())
}

fn data_path(given: &Option<PathBuf>, data_dir: Option<&Path>, file: &str) -> Result<PathBuf> {
    match (given, data_dir) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(dir)) => Ok(dir.join(file)),
        (None, None) => bail!("no path for {file} given and {DATA_DIR_ENV} is not set"),
    }
}

/// Loads vectors for `vocab` only, plus the full frequency table.
fn load_lexicon(
    args: &LexiconArgs,
    data_dir: Option<&Path>,
    vocab: &HashSet<String>,
) -> Result<(WordVectorTable, FrequencyTable)> {
    let vpath = data_path(&args.embeddings, data_dir, DEFAULT_EMBEDDINGS_FILE)?;
    let fpath = data_path(&args.frequencies, data_dir, DEFAULT_FREQUENCIES_FILE)?;
    let (vectors, report) =
        WordVectorTable::load_filtered(open(&vpath)?, args.vocab_limit, |w| vocab.contains(w))
            .with_context(|| format!("reading {}", vpath.display()))?;
    log::info!(
        "{} word vectors kept of {} rows read",
        vectors.len(),
        report.rows_read
    );
    let (frequencies, _) =
        FrequencyTable::load(open(&fpath)?).with_context(|| format!("reading {}", fpath.display()))?;
    Ok((vectors, frequencies))
}

fn load_stopwords(path: &Option<PathBuf>) -> Result<StopWordList> {
    match path {
        Some(p) => StopWordList::load(open(p)?).with_context(|| format!("reading {}", p.display())),
        None => Ok(StopWordList::english()),
    }
}

fn genre_for(path: &Path, given: Option<Genre>) -> Result<Genre> {
    if let Some(g) = given {
        return Ok(g);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    stem.parse()
        .with_context(|| format!("cannot tell the genre of {}; pass --genre", path.display()))
}

fn load_dataset(path: &Path, genre: Genre) -> Result<StsDataset> {
    let (ds, report) =
        StsDataset::load(open(path)?, genre).with_context(|| format!("reading {}", path.display()))?;
    if report.rejected > 0 {
        log::warn!("{}: {} rejected lines", path.display(), report.rejected);
    }
    Ok(ds)
}

fn corpus_vocab(corpus: &Corpus) -> HashSet<String> {
    corpus
        .sentences
        .iter()
        .flat_map(|s| s.tokens().iter().cloned())
        .collect()
}

fn build_conceptor(args: BuildArgs, data_dir: Option<&Path>) -> Result<()> {
    let conceptor = if args.from_stopwords {
        let stopwords = load_stopwords(&args.stopwords)?;
        let vocab = stopwords.words().iter().cloned().collect();
        let (vectors, _) = load_lexicon(&args.lexicon, data_dir, &vocab)?;
        CaState::init(&stopwords, &vectors, args.alpha, args.a)?
            .conceptor()
            .clone()
    } else {
        let corpus = if let Some(path) = &args.dataset {
            // only the sentences matter here, so any genre label will do
            let genre = genre_for(path, None).unwrap_or(Genre::News);
            load_dataset(path, genre)?.corpus()
        } else if let Some(path) = &args.sentences {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            Corpus::from_lines(path.display().to_string(), text.lines().filter(|l| !l.trim().is_empty()))
        } else {
            bail!("one of --dataset, --sentences or --from-stopwords is required");
        };
        let (vectors, frequencies) = load_lexicon(&args.lexicon, data_dir, &corpus_vocab(&corpus))?;
        let lex = Lexicon::new(&vectors, &frequencies);
        CaState::init_zero(vectors.dim(), args.alpha, args.a)?
            .update(&corpus, &lex)?
            .conceptor()
            .clone()
    };
    write_file(&args.out, &conceptor.to_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    open(path)?.read_to_end(&mut bytes)?;
    Ok(bytes)
}

/// A bare conceptor, or the conceptor inside a CA state file.
fn read_conceptor(path: &Path) -> Result<Conceptor> {
    let bytes = read_file(path)?;
    match EncoderState::from_bytes_or_conceptor(&bytes, contsent::DEFAULT_A)
        .with_context(|| format!("reading {}", path.display()))?
    {
        EncoderState::Ca(state) => Ok(state.conceptor().clone()),
        _ => bail!("{} holds a SIF direction, not a conceptor", path.display()),
    }
}

fn merge_conceptors(args: MergeArgs) -> Result<()> {
    let mut inputs = args.inputs.iter();
    let first = inputs.next().expect("clap requires one input");
    let mut merged = read_conceptor(first)?;
    for path in inputs {
        let next = read_conceptor(path)?;
        merged = merged
            .or(&next)
            .with_context(|| format!("merging {}", path.display()))?;
    }
    write_file(&args.out, &merged.to_bytes())
}

fn read_state(path: &Path, a: f64) -> Result<EncoderState> {
    let bytes = read_file(path)?;
    EncoderState::from_bytes_or_conceptor(&bytes, a)
        .with_context(|| format!("reading {}", path.display()))
}

fn embed(args: EmbedArgs, data_dir: Option<&Path>) -> Result<()> {
    let state = read_state(&args.state, args.a)?;
    let sentences: Vec<_> = io::stdin()
        .lock()
        .lines()
        .map(|l| l.map(|l| tokenize(&l)))
        .collect::<io::Result<_>>()?;
    let vocab = sentences
        .iter()
        .flat_map(|s| s.tokens().iter().cloned())
        .collect();
    let (vectors, frequencies) = load_lexicon(&args.lexicon, data_dir, &vocab)?;
    let lex = Lexicon::new(&vectors, &frequencies);
    let mut out = BufWriter::new(io::stdout().lock());
    for s in &sentences {
        let f = state.encode(s, &lex)?;
        let line = f.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EvalRow {
    encoder: String,
    train_corpora: Vec<Genre>,
    test_genre: Genre,
    pcc: f64,
    pairs_used: usize,
    pairs_skipped: usize,
}

fn eval(args: EvalArgs, data_dir: Option<&Path>) -> Result<()> {
    let state = read_state(&args.state, args.a)?;
    let genre = genre_for(&args.dataset, args.genre)?;
    let dataset = load_dataset(&args.dataset, genre)?;
    let vocab = corpus_vocab(&dataset.corpus());
    let (vectors, frequencies) = load_lexicon(&args.lexicon, data_dir, &vocab)?;
    let lex = Lexicon::new(&vectors, &frequencies);
    let result = evaluate(&state, &dataset, &lex)?;
    let encoder = args.encoder.unwrap_or_else(|| {
        match state {
            EncoderState::Sif(_) => "sif",
            EncoderState::Ca(_) => EncoderKind::Ca.as_str(),
            EncoderState::Deletion(_) => EncoderKind::IncrementalDeletion.as_str(),
        }
        .to_string()
    });
    let row = EvalRow {
        encoder,
        train_corpora: args.train,
        test_genre: genre,
        pcc: result.pcc,
        pairs_used: result.pairs_used,
        pairs_skipped: result.pairs_skipped,
    };
    println!("{}", serde_json::to_string(&row)?);
    Ok(())
}
