//! Linear sentence encoders built on SIF-weighted averages.
//!
//! Every encoder first computes the weighted average
//! `q_s = (1/|s|) sum_{w in s} a/(p(w)+a) v_w` and then removes common
//! discourse directions with a linear map:
//!
//! | encoder                | removal                               |
//! |------------------------|---------------------------------------|
//! | [`SifState`]           | `q - u u^T q`                         |
//! | [`CaState`]            | `q - C q`                             |
//! | [`DeletionListState`]  | `q - u_i u_i^T q` for each stored `u_i` |

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::conceptor::Conceptor;
use crate::corpus::{Corpus, Sentence};
use crate::embeddings::{FrequencyTable, StopWordList, WordVectorTable};
use crate::error::{Error, Result};
use crate::linalg::sym_eigen;

/// Components with magnitude at or below this do not decide the sign of a
/// singular vector.
const SIGN_TOL: f64 = 1e-12;

/// Word vectors together with the frequencies used for SIF weights.
#[derive(Clone, Copy, Debug)]
pub struct Lexicon<'a> {
    pub vectors: &'a WordVectorTable,
    pub frequencies: &'a FrequencyTable,
}

impl<'a> Lexicon<'a> {
    pub fn new(vectors: &'a WordVectorTable, frequencies: &'a FrequencyTable) -> Self {
        Self {
            vectors,
            frequencies,
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedAverage {
    pub vector: Vec<f64>,
    /// In-vocabulary tokens that contributed to `vector`.
    pub token_hits: usize,
}

/// SIF-weighted average of the word vectors in `s`.
///
/// The divisor is the full token count, out-of-vocabulary tokens included.
pub fn weighted_average(s: &Sentence, lex: &Lexicon<'_>, a: f64) -> WeightedAverage {
    let mut vector = vec![0.0; lex.dim()];
    let mut token_hits = 0;
    for token in s.tokens() {
        let Some(v) = lex.vectors.get(token) else {
            continue;
        };
        let w = lex.frequencies.sif_weight(token, a);
        for (acc, x) in vector.iter_mut().zip(v) {
            *acc += w * x;
        }
        token_hits += 1;
    }
    if token_hits > 0 {
        let n = s.len() as f64;
        vector.iter_mut().for_each(|x| *x /= n);
    }
    WeightedAverage { vector, token_hits }
}

/// Column-stacked `q_s` for every sentence in `corpora`, in order.
pub fn sentence_matrix(corpora: &[&Corpus], lex: &Lexicon<'_>, a: f64) -> Result<DMatrix<f64>> {
    let sentences: Vec<&Sentence> = corpora.iter().flat_map(|c| c.sentences.iter()).collect();
    let averages: Vec<WeightedAverage> = sentences
        .par_iter()
        .map(|s| weighted_average(s, lex, a))
        .collect();
    if averages.iter().all(|q| q.token_hits == 0) {
        return Err(Error::DegenerateCorpus);
    }
    let dim = lex.dim();
    let mut q = DMatrix::zeros(dim, averages.len());
    for (j, avg) in averages.iter().enumerate() {
        q.column_mut(j).copy_from_slice(&avg.vector);
    }
    Ok(q)
}

/// Unit left singular vector of `q` for the largest singular value, with
/// its first non-negligible component made positive.
pub fn first_singular_vector(q: &DMatrix<f64>) -> Result<Vec<f64>> {
    if q.nrows() == 0 || q.ncols() == 0 {
        return Err(Error::DegenerateCorpus);
    }
    let gram = q * q.transpose();
    let (values, vectors) = sym_eigen(&gram);
    let top = values.len() - 1;
    if values[top] <= 0.0 {
        return Err(Error::DegenerateCorpus);
    }
    let mut u: Vec<f64> = vectors.column(top).iter().copied().collect();
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter_mut().for_each(|x| *x /= norm);
    fix_sign(&mut u);
    Ok(u)
}

fn fix_sign(u: &mut [f64]) {
    if let Some(first) = u.iter().find(|x| x.abs() > SIGN_TOL) {
        if *first < 0.0 {
            u.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `f - u u^T f` in place.
fn remove_direction(f: &mut [f64], u: &[f64]) {
    let p = dot(u, f);
    for (x, ui) in f.iter_mut().zip(u) {
        *x -= p * ui;
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// A fitted sentence encoder.
pub trait SentenceEncoder {
    /// SIF smoothing parameter used for `q_s`.
    fn a(&self) -> f64;

    fn dim(&self) -> usize;

    /// Applies the removal step to a weighted average.
    fn transform(&self, q: &[f64]) -> Result<Vec<f64>>;

    fn encode(&self, s: &Sentence, lex: &Lexicon<'_>) -> Result<Vec<f64>> {
        check_dim(self.dim(), lex.dim())?;
        let q = weighted_average(s, lex, self.a());
        if q.token_hits == 0 {
            return Ok(q.vector);
        }
        self.transform(&q.vector)
    }
}

/// SIF: removal of the single common direction `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct SifState {
    u: Vec<f64>,
    a: f64,
}

impl SifState {
    /// Fits `u` on all sentences of `corpora` taken together.
    pub fn fit(corpora: &[&Corpus], lex: &Lexicon<'_>, a: f64) -> Result<Self> {
        check_a(a)?;
        let q = sentence_matrix(corpora, lex, a)?;
        Ok(Self {
            u: first_singular_vector(&q)?,
            a,
        })
    }

    /// Wraps a direction, normalizing it to unit length.
    pub fn from_direction(mut u: Vec<f64>, a: f64) -> Result<Self> {
        check_a(a)?;
        normalize(&mut u)?;
        Ok(Self { u, a })
    }

    /// Wraps a direction already known to be unit length.
    pub(crate) fn from_unit(u: Vec<f64>, a: f64) -> Result<Self> {
        check_a(a)?;
        Ok(Self { u, a })
    }

    pub fn direction(&self) -> &[f64] {
        &self.u
    }
}

impl SentenceEncoder for SifState {
    fn a(&self) -> f64 {
        self.a
    }

    fn dim(&self) -> usize {
        self.u.len()
    }

    fn transform(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), q.len())?;
        let mut f = q.to_vec();
        remove_direction(&mut f, &self.u);
        Ok(f)
    }
}

fn check_a(a: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "SIF parameter a must be positive, got {a}"
        )));
    }
    Ok(())
}

fn normalize(u: &mut [f64]) -> Result<()> {
    let norm = dot(u, u).sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::InvalidParameter("direction must be nonzero and finite".into()));
    }
    u.iter_mut().for_each(|x| *x /= norm);
    Ok(())
}

/// Conceptor-aided encoder: `f = q - C q`, with `C` grown by OR over corpora.
#[derive(Clone, Debug, PartialEq)]
pub struct CaState {
    conceptor: Conceptor,
    alpha: f64,
    a: f64,
    corpora_seen: u64,
}

impl CaState {
    /// `C0` from the raw (unweighted) vectors of the in-vocabulary stop words.
    pub fn init(
        stopwords: &StopWordList,
        vectors: &WordVectorTable,
        alpha: f64,
        a: f64,
    ) -> Result<Self> {
        check_a(a)?;
        let found: Vec<&[f64]> = stopwords
            .words()
            .iter()
            .filter_map(|w| vectors.get(w))
            .collect();
        if found.is_empty() {
            return Err(Error::NoStopWords);
        }
        log::debug!(
            "stop-word conceptor from {} of {} stop words",
            found.len(),
            stopwords.len()
        );
        let x = DMatrix::from_fn(vectors.dim(), found.len(), |i, j| found[j][i]);
        Ok(Self {
            conceptor: Conceptor::from_data(&x, alpha)?,
            alpha,
            a,
            corpora_seen: 0,
        })
    }

    /// `C0 = 0`: no stop-word initialization.
    pub fn init_zero(dim: usize, alpha: f64, a: f64) -> Result<Self> {
        check_a(a)?;
        Ok(Self {
            conceptor: Conceptor::zero(dim, alpha)?,
            alpha,
            a,
            corpora_seen: 0,
        })
    }

    pub fn from_parts(conceptor: Conceptor, alpha: f64, a: f64, corpora_seen: u64) -> Result<Self> {
        check_a(a)?;
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "aperture must be positive, got {alpha}"
            )));
        }
        Ok(Self {
            conceptor,
            alpha,
            a,
            corpora_seen,
        })
    }

    /// `C_i = C(Q_D, alpha) OR C_{i-1}`; `self` is left untouched.
    pub fn update(&self, corpus: &Corpus, lex: &Lexicon<'_>) -> Result<Self> {
        check_dim(self.dim(), lex.dim())?;
        let q = sentence_matrix(&[corpus], lex, self.a)?;
        let temp = Conceptor::from_data(&q, self.alpha)?;
        Ok(Self {
            conceptor: temp.or(&self.conceptor)?,
            alpha: self.alpha,
            a: self.a,
            corpora_seen: self.corpora_seen + 1,
        })
    }

    pub fn conceptor(&self) -> &Conceptor {
        &self.conceptor
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn corpora_seen(&self) -> u64 {
        self.corpora_seen
    }
}

impl SentenceEncoder for CaState {
    fn a(&self) -> f64 {
        self.a
    }

    fn dim(&self) -> usize {
        self.conceptor.dim()
    }

    fn transform(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), q.len())?;
        let cq = self.conceptor.apply(q);
        Ok(q.iter().zip(cq).map(|(x, c)| x - c).collect())
    }
}

/// SIF with incremental deletions: one stored direction per corpus seen,
/// removed one after another in storage order.
#[derive(Clone, Debug, PartialEq)]
pub struct DeletionListState {
    directions: Vec<Vec<f64>>,
    a: f64,
}

impl DeletionListState {
    pub fn new(a: f64) -> Result<Self> {
        check_a(a)?;
        Ok(Self {
            directions: Vec::new(),
            a,
        })
    }

    pub fn from_directions(directions: Vec<Vec<f64>>, a: f64) -> Result<Self> {
        let mut state = Self::new(a)?;
        for mut u in directions {
            if let Some(first) = state.directions.first() {
                check_dim(first.len(), u.len())?;
            }
            normalize(&mut u)?;
            state.directions.push(u);
        }
        Ok(state)
    }

    pub(crate) fn from_unit_directions(directions: Vec<Vec<f64>>, a: f64) -> Result<Self> {
        check_a(a)?;
        if let Some(first) = directions.first() {
            for u in &directions {
                check_dim(first.len(), u.len())?;
            }
        }
        Ok(Self { directions, a })
    }

    /// Appends the common direction of `corpus`.
    pub fn fit_next(&self, corpus: &Corpus, lex: &Lexicon<'_>) -> Result<Self> {
        if let Some(first) = self.directions.first() {
            check_dim(first.len(), lex.dim())?;
        }
        let sif = SifState::fit(&[corpus], lex, self.a)?;
        let mut directions = self.directions.clone();
        directions.push(sif.u);
        Ok(Self {
            directions,
            a: self.a,
        })
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }
}

impl SentenceEncoder for DeletionListState {
    fn a(&self) -> f64 {
        self.a
    }

    fn dim(&self) -> usize {
        self.directions.first().map_or(0, Vec::len)
    }

    fn transform(&self, q: &[f64]) -> Result<Vec<f64>> {
        if self.directions.is_empty() {
            return Err(Error::EmptyDeletionList);
        }
        check_dim(self.dim(), q.len())?;
        let mut f = q.to_vec();
        for u in &self.directions {
            remove_direction(&mut f, u);
        }
        Ok(f)
    }

    fn encode(&self, s: &Sentence, lex: &Lexicon<'_>) -> Result<Vec<f64>> {
        if self.directions.is_empty() {
            return Err(Error::EmptyDeletionList);
        }
        check_dim(self.dim(), lex.dim())?;
        let q = weighted_average(s, lex, self.a);
        if q.token_hits == 0 {
            return Ok(q.vector);
        }
        self.transform(&q.vector)
    }
}

/// Any of the fitted encoder states.
#[derive(Clone, Debug, PartialEq)]
pub enum EncoderState {
    Sif(SifState),
    Ca(CaState),
    Deletion(DeletionListState),
}

impl SentenceEncoder for EncoderState {
    fn a(&self) -> f64 {
        match self {
            EncoderState::Sif(s) => s.a(),
            EncoderState::Ca(s) => s.a(),
            EncoderState::Deletion(s) => s.a(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            EncoderState::Sif(s) => s.dim(),
            EncoderState::Ca(s) => s.dim(),
            EncoderState::Deletion(s) => s.dim(),
        }
    }

    fn transform(&self, q: &[f64]) -> Result<Vec<f64>> {
        match self {
            EncoderState::Sif(s) => s.transform(q),
            EncoderState::Ca(s) => s.transform(q),
            EncoderState::Deletion(s) => s.transform(q),
        }
    }

    fn encode(&self, s: &Sentence, lex: &Lexicon<'_>) -> Result<Vec<f64>> {
        match self {
            EncoderState::Sif(st) => st.encode(s, lex),
            EncoderState::Ca(st) => st.encode(s, lex),
            EncoderState::Deletion(st) => st.encode(s, lex),
        }
    }
}

impl From<SifState> for EncoderState {
    fn from(s: SifState) -> Self {
        EncoderState::Sif(s)
    }
}

impl From<CaState> for EncoderState {
    fn from(s: CaState) -> Self {
        EncoderState::Ca(s)
    }
}

impl From<DeletionListState> for EncoderState {
    fn from(s: DeletionListState) -> Self {
        EncoderState::Deletion(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn tables() -> (WordVectorTable, FrequencyTable) {
        let vecs = WordVectorTable::from_rows([
            ("w", vec![2.0, 0.0]),
            ("x", vec![0.0, 3.0]),
            ("the", vec![1.0, 0.0]),
        ])
        .unwrap();
        // p(w) = 0.001
        let freq = FrequencyTable::from_counts([("w", 1u64), ("rest", 999)]).unwrap();
        (vecs, freq)
    }

    #[test]
    fn weighted_average_examples() {
        let (vecs, freq) = tables();
        let lex = Lexicon::new(&vecs, &freq);
        let q = weighted_average(&tokenize("w"), &lex, 0.001);
        assert_eq!(q.token_hits, 1);
        assert!((q.vector[0] - 1.0).abs() < 1e-12 && q.vector[1] == 0.0);

        let q = weighted_average(&tokenize(""), &lex, 0.001);
        assert_eq!(q.token_hits, 0);
        assert_eq!(q.vector, vec![0.0, 0.0]);

        let q = weighted_average(&tokenize("w oov"), &lex, 0.001);
        assert_eq!(q.token_hits, 1);
        assert!((q.vector[0] - 0.5).abs() < 1e-12 && q.vector[1] == 0.0);
    }

    #[test]
    fn fit_sif_trivial_cases() {
        let (vecs, freq) = tables();
        let lex = Lexicon::new(&vecs, &freq);
        let corpus = Corpus::from_lines("c", ["w", "w w", "the"]);
        let sif = SifState::fit(&[&corpus], &lex, 0.001).unwrap();
        assert!((sif.direction()[0] - 1.0).abs() < 1e-12);
        assert!(sif.direction()[1].abs() < 1e-12);

        let q = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        assert_eq!(first_singular_vector(&q).unwrap(), vec![1.0, 0.0]);
        let q = DMatrix::from_column_slice(2, 1, &[0.0, -2.0]);
        assert_eq!(first_singular_vector(&q).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn degenerate_corpus_is_rejected() {
        let (vecs, freq) = tables();
        let lex = Lexicon::new(&vecs, &freq);
        let corpus = Corpus::from_lines("c", ["oov only", ""]);
        assert!(matches!(
            SifState::fit(&[&corpus], &lex, 0.001),
            Err(Error::DegenerateCorpus)
        ));
        let ca = CaState::init_zero(2, 1.0, 0.001).unwrap();
        assert!(matches!(ca.update(&corpus, &lex), Err(Error::DegenerateCorpus)));
        let del = DeletionListState::new(0.001).unwrap();
        assert!(matches!(del.fit_next(&corpus, &lex), Err(Error::DegenerateCorpus)));
    }

    #[test]
    fn encode_sif_examples() {
        let sif = SifState::from_direction(vec![1.0, 0.0], 0.001).unwrap();
        assert_eq!(sif.transform(&[3.0, 4.0]).unwrap(), vec![0.0, 4.0]);
        assert_eq!(sif.transform(&[0.0, 4.0]).unwrap(), vec![0.0, 4.0]);
        let sif = SifState::from_direction(vec![1.0, 1.0], 0.001).unwrap();
        let f = sif.transform(&[2.5, 2.5]).unwrap();
        assert!(f.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn init_ca_examples() {
        let (vecs, _) = tables();
        let none = StopWordList::from_words(["zzz", "qqq"]);
        assert!(matches!(
            CaState::init(&none, &vecs, 1.0, 0.001),
            Err(Error::NoStopWords)
        ));
        let z = StopWordList::from_words(["the", "zzz"]);
        let ca = CaState::init(&z, &vecs, 1.0, 0.001).unwrap();
        assert_eq!(ca.corpora_seen(), 0);
        let m = ca.conceptor().matrix();
        assert!((m[(0, 0)] - 0.5).abs() < 1e-15);
        assert!(m[(0, 1)].abs() < 1e-15 && m[(1, 1)].abs() < 1e-15);

        let zero = CaState::init_zero(2, 1.0, 0.001).unwrap();
        assert_eq!(zero.conceptor().matrix(), &DMatrix::zeros(2, 2));
    }

    #[test]
    fn encode_ca_examples() {
        let c = |m: DMatrix<f64>| {
            CaState::from_parts(Conceptor::from_matrix(m, 1.0).unwrap(), 1.0, 0.001, 0).unwrap()
        };
        let zero = c(DMatrix::zeros(2, 2));
        assert_eq!(zero.transform(&[2.0, -3.0]).unwrap(), vec![2.0, -3.0]);

        let eps = 1e-3;
        let near = c(DMatrix::identity(2, 2) * (1.0 - eps));
        let f = near.transform(&[2.0, -3.0]).unwrap();
        assert!((f[0] - 2.0 * eps).abs() < 1e-15 && (f[1] + 3.0 * eps).abs() < 1e-15);

        let half = c(DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]));
        assert_eq!(half.transform(&[2.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn ca_update_is_functional_and_counts_corpora() {
        let (vecs, freq) = tables();
        let lex = Lexicon::new(&vecs, &freq);
        let c0 = CaState::init_zero(2, 1.0, 0.001).unwrap();
        let corpus = Corpus::from_lines("c", ["w x", "x", "the w"]);
        let c1 = c0.update(&corpus, &lex).unwrap();
        assert_eq!(c0.corpora_seen(), 0);
        assert_eq!(c0.conceptor().matrix(), &DMatrix::zeros(2, 2));
        assert_eq!(c1.corpora_seen(), 1);

        let q = sentence_matrix(&[&corpus], &lex, 0.001).unwrap();
        let direct = Conceptor::from_data(&q, 1.0).unwrap();
        assert!((c1.conceptor().matrix() - direct.matrix()).norm() < 1e-12);
    }

    #[test]
    fn deletion_list_contract() {
        let (vecs, freq) = tables();
        let lex = Lexicon::new(&vecs, &freq);
        let empty = DeletionListState::new(0.001).unwrap();
        assert!(matches!(empty.transform(&[1.0, 0.0]), Err(Error::EmptyDeletionList)));
        assert!(matches!(
            empty.encode(&tokenize("w"), &lex),
            Err(Error::EmptyDeletionList)
        ));

        let a = Corpus::from_lines("a", ["w", "w x"]);
        let b = Corpus::from_lines("b", ["x", "x the"]);
        let s1 = empty.fit_next(&a, &lex).unwrap();
        let s2 = s1.fit_next(&b, &lex).unwrap();
        let s3 = s2.fit_next(&b, &lex).unwrap();
        assert_eq!(s3.directions().len(), 3);
        assert_eq!(s3.directions()[1], s3.directions()[2]);
        let sif_a = SifState::fit(&[&a], &lex, 0.001).unwrap();
        assert_eq!(s1.directions()[0], sif_a.direction());

        let ortho = DeletionListState::from_directions(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 0.001)
            .unwrap();
        assert_eq!(ortho.transform(&[3.0, -7.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_on_encode() {
        let (vecs, freq) = tables();
        let lex = Lexicon::new(&vecs, &freq);
        let ca = CaState::init_zero(3, 1.0, 0.001).unwrap();
        assert!(matches!(
            ca.encode(&tokenize("w"), &lex),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }
}
