//! Tokenization and STS dataset ingestion.
//!
//! Normalization (version 1): lowercase, split on Unicode whitespace, strip
//! leading and trailing non-alphanumeric characters from each token, drop
//! empty tokens. Internal punctuation such as apostrophes is kept.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embeddings::MAX_REJECT_FRACTION;
use crate::error::{Error, Result};

/// A sentence as a multiset of normalized tokens.
///
/// Tokens are kept in their original order so that downstream sums are
/// reproducible bit for bit; order carries no meaning otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    raw: String,
    tokens: Vec<String>,
}

pub fn tokenize(raw: &str) -> Sentence {
    let tokens = raw
        .to_lowercase()
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect();
    Sentence {
        raw: raw.to_string(),
        tokens,
    }
}

impl Sentence {
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Multiset cardinality `|s|`.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn counts(&self) -> BTreeMap<&str, usize> {
        let mut out = BTreeMap::new();
        for t in &self.tokens {
            *out.entry(t.as_str()).or_insert(0) += 1;
        }
        out
    }
}

impl From<&str> for Sentence {
    fn from(raw: &str) -> Self {
        tokenize(raw)
    }
}

/// A named collection of sentences.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub sentences: Vec<Sentence>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, sentences: Vec<Sentence>) -> Self {
        Self {
            name: name.into(),
            sentences,
        }
    }

    pub fn from_lines<'a>(name: impl Into<String>, lines: impl IntoIterator<Item = &'a str>) -> Self {
        Self::new(name, lines.into_iter().map(tokenize).collect())
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// The five STS genres.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Genre {
    News,
    Captions,
    Wordnet,
    Forums,
    Tweets,
}

impl Genre {
    /// Default presentation order, largest corpus first.
    pub const ALL: [Genre; 5] = [
        Genre::News,
        Genre::Captions,
        Genre::Wordnet,
        Genre::Forums,
        Genre::Tweets,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Genre::News => "news",
            Genre::Captions => "captions",
            Genre::Wordnet => "wordnet",
            Genre::Forums => "forums",
            Genre::Tweets => "tweets",
        }
    }

    /// Canonical dataset file name inside a dataset directory.
    pub fn file_name(self) -> String {
        format!("{}.tsv", self.as_str())
    }

    /// Which genre an upstream STS task file belongs to, if any.
    pub fn classify_upstream(file: &str, year: u16) -> Option<Genre> {
        UPSTREAM_GENRES
            .iter()
            .find(|(name, lo, hi, _)| name.eq_ignore_ascii_case(file) && (*lo..=*hi).contains(&year))
            .map(|&(_, _, _, g)| g)
    }
}

/// Upstream task file, first and last year, target genre.
const UPSTREAM_GENRES: &[(&str, u16, u16, Genre)] = &[
    ("MSRpar", 2012, 2012, Genre::News),
    ("headlines", 2013, 2016, Genre::News),
    ("deft-news", 2014, 2014, Genre::News),
    ("MSRvid", 2012, 2012, Genre::Captions),
    ("images", 2014, 2015, Genre::Captions),
    ("track5.en-en", 2017, 2017, Genre::Captions),
    ("deft-forum", 2014, 2014, Genre::Forums),
    ("answers-forums", 2015, 2015, Genre::Forums),
    ("answer-answer", 2016, 2016, Genre::Forums),
    ("tweet-news", 2014, 2014, Genre::Tweets),
    ("OnWN", 2012, 2014, Genre::Wordnet),
];

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Genre {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Genre::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown genre {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StsPair {
    pub sentence_a: Sentence,
    pub sentence_b: Sentence,
    pub gold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StsDataset {
    pub genre: Genre,
    pub pairs: Vec<StsPair>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub lines: usize,
    pub rejected: usize,
    pub first_rejection: Option<String>,
}

fn parse_gold(field: &str) -> Option<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|g| g.is_finite() && (0.0..=5.0).contains(g))
}

impl StsDataset {
    /// Reads the canonical `gold TAB sentence_a TAB sentence_b` format.
    pub fn load<R: BufRead>(reader: R, genre: Genre) -> Result<(Self, IngestReport)> {
        let mut pairs = Vec::new();
        let mut report = IngestReport::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            report.lines += 1;
            let fields: Vec<&str> = line.split('\t').collect();
            let pair = match fields[..] {
                [gold, a, b] => parse_gold(gold).map(|gold| StsPair {
                    sentence_a: tokenize(a),
                    sentence_b: tokenize(b),
                    gold,
                }),
                _ => None,
            };
            match pair {
                Some(p) => pairs.push(p),
                None => {
                    report.rejected += 1;
                    if report.first_rejection.is_none() {
                        report.first_rejection = Some(format!("line {}: {line:?}", i + 1));
                    }
                }
            }
        }
        if report.rejected as f64 > MAX_REJECT_FRACTION * report.lines as f64 {
            return Err(Error::TooManyRejects {
                what: "STS pairs",
                rejected: report.rejected,
                total: report.lines,
                first: report.first_rejection.clone().unwrap_or_default(),
            });
        }
        if pairs.is_empty() {
            return Err(Error::Empty("STS dataset has no pairs"));
        }
        Ok((Self { genre, pairs }, report))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Both sentences of every pair, in file order.
    pub fn corpus(&self) -> Corpus {
        let sentences = self
            .pairs
            .iter()
            .flat_map(|p| [p.sentence_a.clone(), p.sentence_b.clone()])
            .collect();
        Corpus::new(self.genre.as_str(), sentences)
    }
}

/// Canonical lines per genre produced from upstream STS files.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvertedSts {
    pub by_genre: BTreeMap<Genre, Vec<String>>,
    pub lines: usize,
    pub unmapped: usize,
    pub rejected: usize,
}

impl ConvertedSts {
    /// Converts the 7-column upstream format
    /// `genre TAB file TAB year TAB index TAB score TAB s1 TAB s2 [TAB ...]`.
    ///
    /// Rows are assigned to genres by task file and year; rows from other
    /// tasks are counted as unmapped.
    pub fn push_upstream<R: BufRead>(&mut self, reader: R) -> Result<()> {
        for line in reader.lines() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            self.lines += 1;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 7 {
                self.rejected += 1;
                continue;
            }
            let year: Option<u16> = fields[2]
                .get(..4)
                .and_then(|y| y.parse().ok());
            let (Some(year), Some(gold)) = (year, parse_gold(fields[4])) else {
                self.rejected += 1;
                continue;
            };
            let (s1, s2) = (fields[5].trim(), fields[6].trim());
            match Genre::classify_upstream(fields[1].trim(), year) {
                Some(g) => self
                    .by_genre
                    .entry(g)
                    .or_default()
                    .push(format!("{gold}\t{s1}\t{s2}")),
                None => self.unmapped += 1,
            }
        }
        Ok(())
    }

    pub fn count(&self, genre: Genre) -> usize {
        self.by_genre.get(&genre).map_or(0, Vec::len)
    }
}
