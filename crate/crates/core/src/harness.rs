//! The sequential-corpus protocol.
//!
//! Corpora are presented one genre at a time. After each presentation every
//! enabled encoder is scored on all five genres:
//!
//! * `sif_scratch` is refit on the union of all corpora seen so far;
//! * `ca` ORs the new corpus' conceptor into its running conceptor;
//! * `incremental_deletion` appends the new corpus' common direction;
//! * `zero_shot_ca` only uses the stop-word conceptor and is scored once;
//! * `corpus_specialized_sif` is fit and tested on each genre by itself.
//!
//! Constant encoders are repeated at every step so each encoder has one
//! cell per (step, genre).

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Genre, StsDataset};
use crate::embeddings::{FrequencyTable, StopWordList, WordVectorTable};
use crate::encoders::{CaState, DeletionListState, EncoderState, Lexicon, SifState};
use crate::error::{Error, Result};
use crate::eval::{evaluate, PccResult};

/// Environment variable naming the default data directory.
pub const DATA_DIR_ENV: &str = "CONTSENT_DATA_DIR";

pub const DEFAULT_EMBEDDINGS_FILE: &str = "glove.840B.300d.txt";
pub const DEFAULT_FREQUENCIES_FILE: &str = "enwiki_vocab_min200.txt";
pub const DEFAULT_DATASET_DIR: &str = "sts";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    SifScratch,
    Ca,
    ZeroShotCa,
    IncrementalDeletion,
    CorpusSpecializedSif,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 5] = [
        EncoderKind::SifScratch,
        EncoderKind::Ca,
        EncoderKind::ZeroShotCa,
        EncoderKind::IncrementalDeletion,
        EncoderKind::CorpusSpecializedSif,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::SifScratch => "sif_scratch",
            EncoderKind::Ca => "ca",
            EncoderKind::ZeroShotCa => "zero_shot_ca",
            EncoderKind::IncrementalDeletion => "incremental_deletion",
            EncoderKind::CorpusSpecializedSif => "corpus_specialized_sif",
        }
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().replace('-', "_");
        EncoderKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown encoder {s:?}")))
    }
}

/// Input locations. Missing entries fall back to the data directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub embeddings: Option<PathBuf>,
    pub frequencies: Option<PathBuf>,
    /// Stop-word file; the bundled English list when absent.
    pub stopwords: Option<PathBuf>,
    /// Directory holding `<genre>.tsv` for each of the five genres.
    pub dataset_dir: Option<PathBuf>,
}

fn default_order() -> Vec<Genre> {
    Genre::ALL.to_vec()
}

fn default_encoders() -> Vec<EncoderKind> {
    vec![
        EncoderKind::SifScratch,
        EncoderKind::Ca,
        EncoderKind::ZeroShotCa,
    ]
}

fn default_a() -> f64 {
    crate::DEFAULT_A
}

fn default_alpha() -> f64 {
    crate::DEFAULT_ALPHA
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_order")]
    pub corpus_order: Vec<Genre>,
    #[serde(default)]
    pub reverse: bool,
    #[serde(default = "default_encoders")]
    pub encoders: Vec<EncoderKind>,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Start CA from the zero conceptor instead of the stop-word conceptor.
    #[serde(default)]
    pub no_stopword_init: bool,
    #[serde(default)]
    pub vocab_limit: Option<usize>,
    #[serde(default)]
    pub paths: DataPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            corpus_order: default_order(),
            reverse: false,
            encoders: default_encoders(),
            a: default_a(),
            alpha: default_alpha(),
            no_stopword_init: false,
            vocab_limit: None,
            paths: DataPaths::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).at_path(path))?;
        Self::from_toml_str(&text).map_err(|e| e.at_path(path))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Presentation order after applying `reverse`.
    pub fn effective_order(&self) -> Vec<Genre> {
        let mut order = self.corpus_order.clone();
        if self.reverse {
            order.reverse();
        }
        order
    }

    pub fn validate(&self) -> Result<()> {
        let mut sorted = self.corpus_order.clone();
        sorted.sort();
        if sorted != Genre::ALL.to_vec() {
            return Err(Error::Config(format!(
                "corpus_order must be a permutation of the five genres, got {:?}",
                self.corpus_order
            )));
        }
        if self.encoders.is_empty() {
            return Err(Error::Config("encoder set is empty".into()));
        }
        let unique: HashSet<_> = self.encoders.iter().collect();
        if unique.len() != self.encoders.len() {
            return Err(Error::Config("encoder listed twice".into()));
        }
        for (name, v) in [("a", self.a), ("alpha", self.alpha)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Fills unset paths from `data_dir` (normally `$CONTSENT_DATA_DIR`).
    pub fn resolve_paths(&mut self, data_dir: Option<&Path>) -> Result<()> {
        let fill = |slot: &mut Option<PathBuf>, name: &str, what: &str| -> Result<()> {
            if slot.is_none() {
                let dir = data_dir.ok_or_else(|| {
                    Error::Config(format!("no {what} path given and {DATA_DIR_ENV} is not set"))
                })?;
                *slot = Some(dir.join(name));
            }
            Ok(())
        };
        fill(&mut self.paths.embeddings, DEFAULT_EMBEDDINGS_FILE, "embeddings")?;
        fill(&mut self.paths.frequencies, DEFAULT_FREQUENCIES_FILE, "frequencies")?;
        fill(&mut self.paths.dataset_dir, DEFAULT_DATASET_DIR, "dataset")?;
        Ok(())
    }
}

/// Everything the protocol reads, loaded once.
#[derive(Clone, Debug)]
pub struct ExperimentData {
    pub datasets: BTreeMap<Genre, StsDataset>,
    pub vectors: WordVectorTable,
    pub frequencies: FrequencyTable,
    pub stopwords: StopWordList,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::from(e).at_path(path))
}

impl ExperimentData {
    /// Loads all inputs named by a config whose paths are resolved.
    ///
    /// Only vectors for words occurring in the datasets or the stop-word list
    /// are kept.
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        let missing = |what: &str| Error::Config(format!("{what} path is not set"));
        let paths = &config.paths;
        let dataset_dir = paths.dataset_dir.as_ref().ok_or_else(|| missing("dataset"))?;
        let embeddings = paths.embeddings.as_ref().ok_or_else(|| missing("embeddings"))?;
        let frequencies = paths.frequencies.as_ref().ok_or_else(|| missing("frequencies"))?;

        let mut datasets = BTreeMap::new();
        for genre in Genre::ALL {
            let path = dataset_dir.join(genre.file_name());
            let (ds, report) =
                StsDataset::load(open(&path)?, genre).map_err(|e| e.at_path(&path))?;
            if report.rejected > 0 {
                log::warn!("{}: {} rejected lines", path.display(), report.rejected);
            }
            log::info!("{genre}: {} pairs", ds.len());
            datasets.insert(genre, ds);
        }

        let stopwords = match &paths.stopwords {
            Some(p) => StopWordList::load(open(p)?).map_err(|e| e.at_path(p))?,
            None => StopWordList::english(),
        };

        let mut vocab: HashSet<String> = stopwords.words().iter().cloned().collect();
        for ds in datasets.values() {
            for p in &ds.pairs {
                for s in [&p.sentence_a, &p.sentence_b] {
                    vocab.extend(s.tokens().iter().cloned());
                }
            }
        }
        let (vectors, vreport) =
            WordVectorTable::load_filtered(open(embeddings)?, config.vocab_limit, |w| {
                vocab.contains(w)
            })
            .map_err(|e| e.at_path(embeddings))?;
        log::info!(
            "loaded {} of {} needed word vectors (dim {}, {} rows read, {} rejected)",
            vectors.len(),
            vocab.len(),
            vectors.dim(),
            vreport.rows_read,
            vreport.rejected
        );

        let (freq_table, freport) =
            FrequencyTable::load(open(frequencies)?).map_err(|e| e.at_path(frequencies))?;
        if freport.rejected > 0 {
            log::warn!("{}: {} rejected lines", frequencies.display(), freport.rejected);
        }
        Ok(Self {
            datasets,
            vectors,
            frequencies: freq_table,
            stopwords,
        })
    }

    pub fn lexicon(&self) -> Lexicon<'_> {
        Lexicon::new(&self.vectors, &self.frequencies)
    }

    fn dataset(&self, genre: Genre) -> Result<&StsDataset> {
        self.datasets
            .get(&genre)
            .ok_or_else(|| Error::Config(format!("no dataset for genre {genre}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub encoder: EncoderKind,
    /// 1-based presentation step.
    pub step: usize,
    pub train_corpora: Vec<Genre>,
    pub test_genre: Genre,
    pub result: PccResult,
}

/// PCC per (encoder, step, test genre).
#[derive(Clone, Debug, PartialEq)]
pub struct TimeCourseTable {
    pub order: Vec<Genre>,
    pub encoders: Vec<EncoderKind>,
    pub cells: Vec<Cell>,
}

impl TimeCourseTable {
    pub fn steps(&self) -> usize {
        self.order.len()
    }

    pub fn get(&self, encoder: EncoderKind, step: usize, genre: Genre) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.encoder == encoder && c.step == step && c.test_genre == genre)
    }

    /// Mean PCC over steps `1..=M`.
    pub fn average(&self, encoder: EncoderKind, genre: Genre) -> Option<f64> {
        let values: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.encoder == encoder && c.test_genre == genre)
            .map(|c| c.result.pcc)
            .collect();
        if values.is_empty() {
            return None;
        }
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }

    pub fn rows(&self) -> Vec<ResultRow> {
        let joined = |gs: &[Genre]| {
            gs.iter()
                .map(|g| g.as_str())
                .collect::<Vec<_>>()
                .join("+")
        };
        let mut rows: Vec<ResultRow> = self
            .cells
            .iter()
            .map(|c| ResultRow {
                kind: RowKind::Step,
                encoder: c.encoder,
                step: Some(c.step),
                train_corpora: joined(&c.train_corpora),
                test_genre: c.test_genre,
                pcc: c.result.pcc,
                pairs_used: Some(c.result.pairs_used),
                pairs_skipped: Some(c.result.pairs_skipped),
            })
            .collect();
        for &encoder in &self.encoders {
            for genre in Genre::ALL {
                if let Some(avg) = self.average(encoder, genre) {
                    rows.push(ResultRow {
                        kind: RowKind::Average,
                        encoder,
                        step: None,
                        train_corpora: joined(&self.order),
                        test_genre: genre,
                        pcc: avg,
                        pairs_used: None,
                        pairs_skipped: None,
                    });
                }
            }
        }
        rows
    }

    /// Time-course averages, scaled by 100 with one decimal.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<26}", "time-course average (x100)");
        for g in Genre::ALL {
            let _ = write!(out, "{:>10}", g.as_str());
        }
        out.push('\n');
        for &encoder in &self.encoders {
            let _ = write!(out, "{:<26}", encoder.as_str());
            for g in Genre::ALL {
                match self.average(encoder, g) {
                    Some(v) => {
                        let _ = write!(out, "{:>10.1}", 100.0 * v);
                    }
                    None => {
                        let _ = write!(out, "{:>10}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Step,
    Average,
}

/// One machine-readable result line. Average rows have no step and no
/// pair counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub kind: RowKind,
    pub encoder: EncoderKind,
    pub step: Option<usize>,
    pub train_corpora: String,
    pub test_genre: Genre,
    pub pcc: f64,
    pub pairs_used: Option<usize>,
    pub pairs_skipped: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Jsonl => "jsonl",
        }
    }
}

pub fn emit_results<W: Write>(table: &TimeCourseTable, format: OutputFormat, w: W) -> Result<()> {
    let rows = table.rows();
    match format {
        OutputFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(w);
            for row in &rows {
                wtr.serialize(row)?;
            }
            wtr.flush()?;
        }
        OutputFormat::Jsonl => {
            let mut w = w;
            for row in &rows {
                serde_json::to_writer(&mut w, row)?;
                w.write_all(b"\n")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Encoder states produced by a protocol run, keyed by file stem
/// (`ca_step3`, `zero_shot_ca`, `corpus_specialized_sif_news`, ...).
pub type NamedStates = Vec<(String, EncoderState)>;

pub fn run_protocol(config: &ExperimentConfig, data: &ExperimentData) -> Result<TimeCourseTable> {
    Ok(run_protocol_with_states(config, data)?.0)
}

pub fn run_protocol_with_states(
    config: &ExperimentConfig,
    data: &ExperimentData,
) -> Result<(TimeCourseTable, NamedStates)> {
    config.validate()?;
    let order = config.effective_order();
    let lex = data.lexicon();
    let enabled = |k| config.encoders.contains(&k);
    let corpora: BTreeMap<Genre, Corpus> = data
        .datasets
        .iter()
        .map(|(g, ds)| (*g, ds.corpus()))
        .collect();
    let corpus = |g: Genre| {
        corpora
            .get(&g)
            .ok_or_else(|| Error::Config(format!("no dataset for genre {g}")))
    };

    let mut cells = Vec::new();
    let mut states: NamedStates = Vec::new();

    let score_all = |encoder: &EncoderState| -> Result<Vec<(Genre, PccResult)>> {
        Genre::ALL
            .into_iter()
            .map(|g| Ok((g, evaluate(encoder, data.dataset(g)?, &lex)?)))
            .collect()
    };

    let c0 = if config.no_stopword_init {
        CaState::init_zero(data.vectors.dim(), config.alpha, config.a)?
    } else {
        CaState::init(&data.stopwords, &data.vectors, config.alpha, config.a)?
    };

    let zero_shot = if enabled(EncoderKind::ZeroShotCa) {
        log::info!("zero_shot_ca: scoring the initial conceptor");
        let state = EncoderState::from(c0.clone());
        let scores = score_all(&state)?;
        states.push(("zero_shot_ca".into(), state));
        Some(scores)
    } else {
        None
    };

    let specialized = if enabled(EncoderKind::CorpusSpecializedSif) {
        let mut scores = Vec::new();
        for g in Genre::ALL {
            let state = EncoderState::from(SifState::fit(&[corpus(g)?], &lex, config.a)?);
            scores.push((g, evaluate(&state, data.dataset(g)?, &lex)?));
            states.push((format!("corpus_specialized_sif_{g}"), state));
        }
        log::info!("corpus_specialized_sif: fit and scored per genre");
        Some(scores)
    } else {
        None
    };

    let mut ca = c0;
    let mut deletion = DeletionListState::new(config.a)?;

    for (i, &genre) in order.iter().enumerate() {
        let step = i + 1;
        let seen = order[..step].to_vec();
        let at_step = |e: Error| Error::Step {
            step,
            source: Box::new(e),
        };
        log::info!("step {step}: presenting {genre}");
        let push = |cells: &mut Vec<Cell>, encoder, train: &[Genre], scores: &[(Genre, PccResult)]| {
            for &(g, result) in scores {
                cells.push(Cell {
                    encoder,
                    step,
                    train_corpora: train.to_vec(),
                    test_genre: g,
                    result,
                });
            }
        };

        for &kind in &config.encoders {
            match kind {
                EncoderKind::SifScratch => {
                    let train: Vec<&Corpus> =
                        seen.iter().map(|&g| corpus(g)).collect::<Result<_>>()?;
                    let state = EncoderState::from(
                        SifState::fit(&train, &lex, config.a).map_err(at_step)?,
                    );
                    let scores = score_all(&state).map_err(at_step)?;
                    log::info!("step {step}: sif_scratch refit on {} corpora", train.len());
                    push(&mut cells, kind, &seen, &scores);
                    states.push((format!("sif_scratch_step{step}"), state));
                }
                EncoderKind::Ca => {
                    ca = ca.update(corpus(genre)?, &lex).map_err(at_step)?;
                    let state = EncoderState::from(ca.clone());
                    let scores = score_all(&state).map_err(at_step)?;
                    log::info!("step {step}: ca updated with {genre}");
                    push(&mut cells, kind, &seen, &scores);
                    states.push((format!("ca_step{step}"), state));
                }
                EncoderKind::IncrementalDeletion => {
                    deletion = deletion.fit_next(corpus(genre)?, &lex).map_err(at_step)?;
                    let state = EncoderState::from(deletion.clone());
                    let scores = score_all(&state).map_err(at_step)?;
                    push(&mut cells, kind, &seen, &scores);
                    states.push((format!("incremental_deletion_step{step}"), state));
                }
                EncoderKind::ZeroShotCa => {
                    push(&mut cells, kind, &[], zero_shot.as_deref().unwrap_or_default());
                }
                EncoderKind::CorpusSpecializedSif => {
                    for &(g, result) in specialized.as_deref().unwrap_or_default() {
                        cells.push(Cell {
                            encoder: kind,
                            step,
                            train_corpora: vec![g],
                            test_genre: g,
                            result,
                        });
                    }
                }
            }
        }
    }

    Ok((
        TimeCourseTable {
            order,
            encoders: config.encoders.clone(),
            cells,
        },
        states,
    ))
}

/// Writes `results.csv`, `results.jsonl`, `summary.txt`,
/// `resolved_config.toml` and, optionally, `states/<name>.state`.
pub fn write_run(
    dir: &Path,
    config: &ExperimentConfig,
    table: &TimeCourseTable,
    states: Option<&NamedStates>,
) -> Result<()> {
    let create = |name: &str| -> Result<BufWriter<File>> {
        let path = dir.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| Error::from(e).at_path(path))
    };
    fs::create_dir_all(dir).map_err(|e| Error::from(e).at_path(dir))?;
    for format in [OutputFormat::Csv, OutputFormat::Jsonl] {
        let name = format!("results.{}", format.extension());
        emit_results(table, format, create(&name)?).map_err(|e| e.at_path(dir.join(&name)))?;
    }
    create("summary.txt")?.write_all(table.summary().as_bytes())?;
    create("resolved_config.toml")?.write_all(config.to_toml_string()?.as_bytes())?;
    if let Some(states) = states {
        let sdir = dir.join("states");
        fs::create_dir_all(&sdir).map_err(|e| Error::from(e).at_path(&sdir))?;
        for (name, state) in states {
            let path = sdir.join(format!("{name}.state"));
            fs::write(&path, state.to_bytes()).map_err(|e| Error::from(e).at_path(&path))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let c = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(c.corpus_order, Genre::ALL.to_vec());
        assert_eq!(c.a, 1e-3);
        assert_eq!(c.alpha, 1.0);
        c.validate().unwrap();

        let c = ExperimentConfig::from_toml_str(
            "corpus_order = [\"news\", \"news\", \"wordnet\", \"forums\", \"tweets\"]",
        )
        .unwrap();
        assert!(c.validate().is_err());

        let c = ExperimentConfig::from_toml_str("encoders = []").unwrap();
        assert!(c.validate().is_err());

        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn reverse_flips_order() {
        let c = ExperimentConfig {
            reverse: true,
            ..Default::default()
        };
        assert_eq!(c.effective_order()[0], Genre::Tweets);
        assert_eq!(c.effective_order()[4], Genre::News);
    }

    #[test]
    fn paths_fall_back_to_data_dir() {
        let mut c = ExperimentConfig::default();
        assert!(c.clone().resolve_paths(None).is_err());
        c.paths.embeddings = Some("/x/vecs.txt".into());
        c.resolve_paths(Some(Path::new("/data"))).unwrap();
        assert_eq!(c.paths.embeddings.as_deref(), Some(Path::new("/x/vecs.txt")));
        assert_eq!(
            c.paths.dataset_dir.as_deref(),
            Some(Path::new("/data/sts"))
        );
    }

    #[test]
    fn config_toml_round_trips() {
        let mut c = ExperimentConfig {
            encoders: EncoderKind::ALL.to_vec(),
            vocab_limit: Some(100),
            ..Default::default()
        };
        c.resolve_paths(Some(Path::new("/data"))).unwrap();
        let text = c.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn encoder_names_parse() {
        for k in EncoderKind::ALL {
            assert_eq!(k.as_str().parse::<EncoderKind>().unwrap(), k);
        }
        assert_eq!(
            "zero-shot-ca".parse::<EncoderKind>().unwrap(),
            EncoderKind::ZeroShotCa
        );
    }

    fn fake_table(encoders: Vec<EncoderKind>) -> TimeCourseTable {
        let order = Genre::ALL.to_vec();
        let mut cells = Vec::new();
        for &e in &encoders {
            for step in 1..=5 {
                for (gi, g) in Genre::ALL.into_iter().enumerate() {
                    cells.push(Cell {
                        encoder: e,
                        step,
                        train_corpora: order[..step].to_vec(),
                        test_genre: g,
                        result: PccResult {
                            pcc: 0.1 * step as f64 + 0.01 * gi as f64,
                            pairs_used: 10,
                            pairs_skipped: 1,
                        },
                    });
                }
            }
        }
        TimeCourseTable {
            order,
            encoders,
            cells,
        }
    }

    #[test]
    fn row_counts_and_averages() {
        let t = fake_table(vec![EncoderKind::SifScratch, EncoderKind::Ca]);
        let rows = t.rows();
        assert_eq!(rows.iter().filter(|r| r.kind == RowKind::Step).count(), 50);
        assert_eq!(rows.iter().filter(|r| r.kind == RowKind::Average).count(), 10);
        let avg = t.average(EncoderKind::Ca, Genre::Wordnet).unwrap();
        assert!((avg - (0.3 + 0.02)).abs() < 1e-12);
        assert!(t.summary().contains("32.0"));
    }

    #[test]
    fn csv_and_jsonl_agree() {
        let t = fake_table(vec![EncoderKind::Ca]);
        let mut csv_out = Vec::new();
        emit_results(&t, OutputFormat::Csv, &mut csv_out).unwrap();
        let mut json_out = Vec::new();
        emit_results(&t, OutputFormat::Jsonl, &mut json_out).unwrap();

        let from_csv: Vec<ResultRow> = csv::Reader::from_reader(csv_out.as_slice())
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .unwrap();
        let from_json: Vec<ResultRow> = std::str::from_utf8(&json_out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(from_csv, from_json);
        assert_eq!(from_csv, t.rows());
        let header = std::str::from_utf8(&csv_out).unwrap().lines().next().unwrap();
        assert_eq!(
            header,
            "kind,encoder,step,train_corpora,test_genre,pcc,pairs_used,pairs_skipped"
        );
    }
}
