//! Pre-trained word vectors, unigram frequencies and stop words.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Share of rejected rows above which a vector file is refused outright.
pub const MAX_REJECT_FRACTION: f64 = 0.01;

const BUNDLED_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// Word vectors keyed by word, all of one dimension.
#[derive(Clone, Debug, Default)]
pub struct WordVectorTable {
    index: HashMap<String, usize>,
    words: Vec<String>,
    data: Vec<f64>,
    dim: usize,
}

/// Tallies from reading a vector file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VectorLoadReport {
    pub header_skipped: bool,
    pub rows_read: usize,
    pub loaded: usize,
    pub filtered_out: usize,
    pub duplicates: usize,
    pub rejected: usize,
    pub first_rejection: Option<String>,
}

impl VectorLoadReport {
    fn reject(&mut self, line_no: usize, why: impl std::fmt::Display) {
        self.rejected += 1;
        if self.first_rejection.is_none() {
            self.first_rejection = Some(format!("line {line_no}: {why}"));
        }
    }
}

impl WordVectorTable {
    /// Builds a table from in-memory rows. Later duplicates are ignored.
    pub fn from_rows<I, S>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = Self::default();
        for (word, vector) in rows {
            if table.dim == 0 {
                if vector.is_empty() {
                    return Err(Error::Empty("word vector has no components"));
                }
                table.dim = vector.len();
            }
            if vector.len() != table.dim {
                return Err(Error::DimensionMismatch {
                    expected: table.dim,
                    got: vector.len(),
                });
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("word vector"));
            }
            table.insert(word.into(), &vector);
        }
        if table.is_empty() {
            return Err(Error::Empty("no word vectors"));
        }
        Ok(table)
    }

    /// Reads the whitespace-separated text format (`word v1 ... vn` per line).
    pub fn load<R: BufRead>(reader: R, limit: Option<usize>) -> Result<(Self, VectorLoadReport)> {
        Self::load_filtered(reader, limit, |_| true)
    }

    /// Like [`load`](Self::load) but only keeps rows whose word satisfies `keep`.
    ///
    /// Filtered rows still count towards `limit`.
    pub fn load_filtered<R, F>(
        mut reader: R,
        limit: Option<usize>,
        keep: F,
    ) -> Result<(Self, VectorLoadReport)>
    where
        R: BufRead,
        F: Fn(&str) -> bool,
    {
        let mut table = Self::default();
        let mut report = VectorLoadReport::default();
        let mut expected_dim: Option<usize> = None;
        let mut seen_first = false;
        let mut buf = Vec::new();
        let mut line_no = 0usize;

        loop {
            if limit.is_some_and(|l| report.rows_read >= l) {
                break;
            }
            buf.clear();
            if reader.read_until(b'\n', &mut buf)? == 0 {
                break;
            }
            line_no += 1;
            let Ok(line) = std::str::from_utf8(&buf) else {
                report.rows_read += 1;
                report.reject(line_no, "invalid UTF-8");
                continue;
            };
            let line = line.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !seen_first {
                seen_first = true;
                if let [count, dim] = fields[..] {
                    if let (Ok(_), Ok(dim)) = (count.parse::<usize>(), dim.parse::<usize>()) {
                        report.header_skipped = true;
                        if dim > 0 {
                            expected_dim = Some(dim);
                        }
                        continue;
                    }
                }
            }
            report.rows_read += 1;

            let dim = match expected_dim {
                Some(d) => d,
                None if fields.len() >= 2 => {
                    expected_dim = Some(fields.len() - 1);
                    fields.len() - 1
                }
                None => {
                    report.reject(line_no, "row has no vector components");
                    continue;
                }
            };
            if fields.len() < dim + 1 {
                report.reject(
                    line_no,
                    format!("expected {dim} components, found {}", fields.len() - 1),
                );
                continue;
            }
            // Tokens containing spaces: everything before the last `dim` fields is the word.
            let split = fields.len() - dim;
            let word = fields[..split].join(" ");
            let mut vector = Vec::with_capacity(dim);
            let mut bad = None;
            for f in &fields[split..] {
                match f.parse::<f64>() {
                    Ok(v) if v.is_finite() => vector.push(v),
                    _ => {
                        bad = Some(*f);
                        break;
                    }
                }
            }
            if let Some(f) = bad {
                report.reject(line_no, format!("unparseable value {f:?}"));
                continue;
            }
            if !keep(&word) {
                report.filtered_out += 1;
                continue;
            }
            if table.index.contains_key(&word) {
                report.duplicates += 1;
                continue;
            }
            table.dim = dim;
            table.insert(word, &vector);
            report.loaded += 1;
        }

        if report.rejected as f64 > MAX_REJECT_FRACTION * report.rows_read as f64 {
            return Err(Error::TooManyRejects {
                what: "word vectors",
                rejected: report.rejected,
                total: report.rows_read,
                first: report.first_rejection.clone().unwrap_or_default(),
            });
        }
        if table.is_empty() {
            return Err(Error::Empty("no word vectors loaded"));
        }
        if report.duplicates > 0 {
            log::warn!("ignored {} duplicate word vector rows", report.duplicates);
        }
        Ok((table, report))
    }

    fn insert(&mut self, word: String, vector: &[f64]) {
        if self.index.contains_key(&word) {
            return;
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
    }

    /// Writes rows back in load order using shortest round-trip formatting.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for (word, vector) in self.iter() {
            write!(w, "{word}")?;
            for v in vector {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Exact match first, then the lowercased form.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        let idx = match self.index.get(word) {
            Some(&i) => i,
            None => {
                let lower = word.to_lowercase();
                if lower == word {
                    return None;
                }
                *self.index.get(&lower)?
            }
        };
        Some(&self.data[idx * self.dim..(idx + 1) * self.dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.words
            .iter()
            .enumerate()
            .map(move |(i, w)| (w.as_str(), &self.data[i * self.dim..(i + 1) * self.dim]))
    }
}

/// Unigram counts; `p(w) = count(w) / total`.
#[derive(Clone, Debug, Default)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    total: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrequencyLoadReport {
    pub lines: usize,
    pub rejected: usize,
    pub duplicates: usize,
    pub first_rejection: Option<String>,
}

impl FrequencyTable {
    /// Duplicate words have their counts summed.
    pub fn from_counts<I, S>(counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut table = Self::default();
        for (w, c) in counts {
            table.add(w.into(), c);
        }
        if table.total == 0 {
            return Err(Error::Empty("frequency table total is zero"));
        }
        Ok(table)
    }

    fn add(&mut self, word: String, count: u64) -> bool {
        self.total += count;
        match self.counts.entry(word) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                *e.get_mut() += count;
                true
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(count);
                false
            }
        }
    }

    /// Reads `word<space or tab>count` lines.
    pub fn load<R: BufRead>(reader: R) -> Result<(Self, FrequencyLoadReport)> {
        let mut table = Self::default();
        let mut report = FrequencyLoadReport::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            report.lines += 1;
            let parsed = line
                .trim()
                .rsplit_once([' ', '\t'])
                .and_then(|(w, c)| Some((w.trim(), c.parse::<u64>().ok()?)))
                .filter(|(w, _)| !w.is_empty());
            match parsed {
                Some((word, count)) => {
                    if table.add(word.to_string(), count) {
                        report.duplicates += 1;
                    }
                }
                None => {
                    report.rejected += 1;
                    if report.first_rejection.is_none() {
                        report.first_rejection = Some(format!("line {}: {line:?}", i + 1));
                    }
                }
            }
        }
        if table.total == 0 {
            return Err(Error::Empty("frequency table total is zero"));
        }
        Ok((table, report))
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `p(w)`; zero for unknown words.
    pub fn probability(&self, word: &str) -> f64 {
        self.count(word) as f64 / self.total as f64
    }

    /// `a / (p(w) + a)`.
    pub fn sif_weight(&self, word: &str, a: f64) -> f64 {
        sif_weight(self.probability(word), a)
    }
}

/// Smoothed inverse frequency weight `a / (p + a)`.
#[inline]
pub fn sif_weight(probability: f64, a: f64) -> f64 {
    a / (probability + a)
}

/// Ordered, de-duplicated stop-word list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StopWordList {
    words: Vec<String>,
}

impl StopWordList {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = HashSet::new();
        let words = words
            .into_iter()
            .map(Into::into)
            .filter(|w| seen.insert(w.clone()))
            .collect();
        Self { words }
    }

    /// One word per line; blank and `#` lines are ignored.
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut words = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let w = line.trim();
            if w.is_empty() || w.starts_with('#') {
                continue;
            }
            words.push(w.to_string());
        }
        Ok(Self::from_words(words))
    }

    /// The bundled English list.
    pub fn english() -> Self {
        Self::load(BUNDLED_STOPWORDS.as_bytes()).expect("bundled list is valid")
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loads_plain_rows() {
        let (t, r) = WordVectorTable::load("a 1.0 0.0\nb 0.0 1.0".as_bytes(), None).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 2);
        assert_eq!(t.get("b").unwrap(), &[0.0, 1.0]);
        assert!(!r.header_skipped);
    }

    #[test]
    fn skips_header_line() {
        let (t, r) = WordVectorTable::load("2 3\na 1 2 3\nb 4 5 6\n".as_bytes(), None).unwrap();
        assert!(r.header_skipped);
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 3);
    }

    #[test]
    fn tallies_a_single_malformed_row() {
        let mut text = String::new();
        for i in 0..1000 {
            if i == 500 {
                text.push_str("bad 1.0 oops\n");
            } else {
                text.push_str(&format!("w{i} {i}.5 -1\n"));
            }
        }
        let (t, r) = WordVectorTable::load(text.as_bytes(), None).unwrap();
        assert_eq!(t.len(), 999);
        assert_eq!(r.rejected, 1);
        assert!(r.first_rejection.unwrap().contains("line 501"));
    }

    #[test]
    fn too_many_rejects_is_fatal() {
        let text = "a 1 2\nb 1\nc 1 2\n";
        assert!(matches!(
            WordVectorTable::load(text.as_bytes(), None),
            Err(Error::TooManyRejects { rejected: 1, total: 3, .. })
        ));
    }

    #[test]
    fn limit_caps_rows_and_duplicates_are_ignored() {
        let text = "a 1 2\na 3 4\nb 5 6\nc 7 8\n";
        let (t, r) = WordVectorTable::load(text.as_bytes(), Some(3)).unwrap();
        assert_eq!(r.rows_read, 3);
        assert_eq!(r.duplicates, 1);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("a").unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn words_with_spaces_keep_trailing_vector() {
        let text = "x 1 2\n. . . 3 4\n";
        let (t, _) = WordVectorTable::load(text.as_bytes(), None).unwrap();
        assert_eq!(t.get(". . .").unwrap(), &[3.0, 4.0]);
    }

    #[test]
    fn lookup_falls_back_to_lowercase() {
        let t = WordVectorTable::from_rows([("Paris", vec![1.0]), ("paris", vec![2.0]), ("the", vec![3.0])])
            .unwrap();
        assert_eq!(t.get("Paris").unwrap(), &[1.0]);
        assert_eq!(t.get("paris").unwrap(), &[2.0]);
        assert_eq!(t.get("THE").unwrap(), &[3.0]);
        assert!(t.get("zzz").is_none());
    }

    #[test]
    fn frequency_probabilities() {
        let (f, _) = FrequencyTable::load("the 100\ncat 50".as_bytes()).unwrap();
        assert_eq!(f.total(), 150);
        assert!((f.probability("the") - 2.0 / 3.0).abs() < 1e-15);
        assert!((f.probability("cat") - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.probability("dog"), 0.0);
    }

    #[test]
    fn frequency_edge_cases() {
        assert!(matches!(FrequencyTable::load("".as_bytes()), Err(Error::Empty(_))));
        let (f, r) = FrequencyTable::load("a\t3\na 2\nb -1\nc x\n".as_bytes()).unwrap();
        assert_eq!(f.count("a"), 5);
        assert_eq!(r.duplicates, 1);
        assert_eq!(r.rejected, 2);
        assert_eq!(f.total(), 5);
    }

    #[test]
    fn sif_weight_examples() {
        let f = FrequencyTable::from_counts([("w", 1u64), ("x", 999)]).unwrap();
        assert!((f.sif_weight("w", 0.001) - 0.5).abs() < 1e-12);
        assert_eq!(f.sif_weight("unknown", 0.001), 1.0);
        assert!((sif_weight(0.003, 0.001) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bundled_stopwords() {
        let z = StopWordList::english();
        assert!(z.len() >= 100);
        assert!(z.words().iter().any(|w| w == "the"));
        let z = StopWordList::load("# c\nthe\n\nof\nthe\n".as_bytes()).unwrap();
        assert_eq!(z.words(), &["the".to_string(), "of".to_string()]);
    }

    proptest! {
        #[test]
        fn sif_weight_in_unit_interval_and_decreasing(p in 0.0f64..1.0, dp in 1e-6f64..1.0, a in 1e-6f64..1.0) {
            let w = sif_weight(p, a);
            prop_assert!(w > 0.0 && w <= 1.0);
            prop_assert!(sif_weight(p + dp, a) < w);
        }

        #[test]
        fn write_back_round_trips(rows in proptest::collection::vec(
            ("[a-z]{1,8}", proptest::collection::vec(-1e6f64..1e6, 3)), 1..20)
        ) {
            let table = WordVectorTable::from_rows(rows).unwrap();
            let mut out = Vec::new();
            table.write_to(&mut out).unwrap();
            let (back, _) = WordVectorTable::load(out.as_slice(), None).unwrap();
            prop_assert_eq!(back.len(), table.len());
            for (w, v) in table.iter() {
                let b = back.get(w).unwrap();
                for (x, y) in v.iter().zip(b) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }
}
