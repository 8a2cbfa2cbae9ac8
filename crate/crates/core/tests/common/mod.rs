//! Independent oracles and synthetic data shared by the integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use contsent::{Corpus, FrequencyTable, Genre, Sentence, WordVectorTable};
use contsent::corpus::tokenize;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `Y Y^T / k` for a Gaussian `N x k` matrix `Y`.
pub fn random_psd(rng: &mut impl Rng, n: usize, k: usize) -> DMatrix<f64> {
    let y = gaussian_matrix(rng, n, k);
    let mut r = &y * y.transpose() / k as f64;
    // exact symmetry so from_correlation never sees round-off asymmetry
    for i in 0..n {
        for j in 0..i {
            r[(i, j)] = r[(j, i)];
        }
    }
    r
}

/// `(1/n) sum ||x_i - C x_i||^2 + alpha^-2 ||C||_F^2`, evaluated sample by sample.
pub fn conceptor_objective(x: &DMatrix<f64>, c: &DMatrix<f64>, alpha: f64) -> f64 {
    let n = x.ncols() as f64;
    let mut fit = 0.0;
    for col in x.column_iter() {
        let r = col - c * col;
        fit += r.norm_squared();
    }
    fit / n + alpha.powi(-2) * c.norm_squared()
}

/// Gradient descent on the conceptor objective. The gradient
/// `2 (C R - R + alpha^-2 C)` only needs `R = X X^T / n`; no inverse is formed.
/// Step `1/L` with `L = 2 (trace(R) + alpha^-2)`.
pub fn conceptor_by_gradient_descent(x: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let (dim, n) = (x.nrows(), x.ncols());
    let ridge = alpha.powi(-2);
    let r = x * x.transpose() / n as f64;
    let step = 1.0 / (2.0 * (r.trace() + ridge));
    let mut c = DMatrix::<f64>::zeros(dim, dim);
    for _ in 0..200_000 {
        let grad = (&c * &r - &r + &c * ridge) * 2.0;
        if grad.norm() < 1e-13 {
            break;
        }
        c -= grad * step;
    }
    c
}

/// Unit left singular vector for the top singular value via a dense SVD,
/// sign normalized to first significant component positive.
pub fn top_left_singular_vector(q: &DMatrix<f64>) -> Vec<f64> {
    let svd = q.clone().svd(true, false);
    let u = svd.u.unwrap();
    let (best, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let mut v: Vec<f64> = u.column(best).iter().copied().collect();
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    v
}

pub fn frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm()
}

/// Gold score and the two sentences of one pair.
pub type Row = (f64, String, String);

/// A small self-consistent world: vocabulary, vectors, frequencies and five
/// STS-style genre datasets.
pub struct SyntheticWorld {
    pub dim: usize,
    pub words: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub counts: Vec<u64>,
    pub stopwords: Vec<String>,
    pub datasets: Vec<(Genre, Vec<Row>)>,
}

impl SyntheticWorld {
    /// `vocab` words in `dim` dimensions; `pairs` STS pairs per genre.
    pub fn new(seed: u64, dim: usize, vocab: usize, pairs: usize) -> Self {
        let mut rng = rng(seed);
        let common: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let words: Vec<String> = (0..vocab).map(|i| format!("w{i}")).collect();
        let vectors: Vec<Vec<f64>> = (0..vocab)
            .map(|i| {
                // frequent words lean towards a shared direction
                let lean = 2.0 / (1.0 + i as f64 / 10.0);
                (0..dim)
                    .map(|d| {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        g + lean * common[d]
                    })
                    .collect()
            })
            .collect();
        let counts: Vec<u64> = (0..vocab).map(|i| 100_000 / (i as u64 + 1)).collect();
        let stopwords: Vec<String> = words[..10].to_vec();

        let mut datasets = Vec::new();
        for (gi, genre) in Genre::ALL.into_iter().enumerate() {
            // each genre draws content words mostly from its own band
            let band = 10 + gi * (vocab - 10) / 5..10 + (gi + 1) * (vocab - 10) / 5;
            let mut rows = Vec::new();
            for _ in 0..pairs {
                let len = rng.random_range(4..10);
                let mut a = Vec::new();
                for _ in 0..len {
                    let w = if rng.random_bool(0.35) {
                        rng.random_range(0..10)
                    } else if rng.random_bool(0.8) {
                        rng.random_range(band.clone())
                    } else {
                        rng.random_range(10..vocab)
                    };
                    a.push(w);
                }
                let keep = rng.random_range(0..=len);
                let mut b: Vec<usize> = a[..keep].to_vec();
                while b.len() < len {
                    b.push(rng.random_range(band.clone()));
                }
                let gold = 5.0 * keep as f64 / len as f64;
                let text = |ids: &[usize]| {
                    let mut s = ids
                        .iter()
                        .map(|&i| words[i].clone())
                        .collect::<Vec<_>>()
                        .join(" ");
                    if rng_punct(ids.len()) {
                        s.push('.');
                    }
                    s
                };
                rows.push((gold, text(&a), text(&b)));
            }
            datasets.push((genre, rows));
        }
        Self {
            dim,
            words,
            vectors,
            counts,
            stopwords,
            datasets,
        }
    }

    pub fn vectors_text(&self) -> String {
        let mut out = String::new();
        for (w, v) in self.words.iter().zip(&self.vectors) {
            out.push_str(w);
            for x in v {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn frequencies_text(&self) -> String {
        let mut out = String::new();
        for (w, c) in self.words.iter().zip(&self.counts) {
            let _ = writeln!(out, "{w} {c}");
        }
        out
    }

    pub fn dataset_text(&self, genre: Genre) -> String {
        let rows = &self.datasets.iter().find(|(g, _)| *g == genre).unwrap().1;
        let mut out = String::new();
        for (gold, a, b) in rows {
            let _ = writeln!(out, "{gold}\t{a}\t{b}");
        }
        out
    }

    /// Writes `vectors.txt`, `freq.txt`, `stopwords.txt` and `sts/<genre>.tsv`.
    pub fn write_to(&self, dir: &Path) {
        fs::create_dir_all(dir.join("sts")).unwrap();
        fs::write(dir.join("vectors.txt"), self.vectors_text()).unwrap();
        fs::write(dir.join("freq.txt"), self.frequencies_text()).unwrap();
        fs::write(dir.join("stopwords.txt"), self.stopwords.join("\n")).unwrap();
        for g in Genre::ALL {
            fs::write(dir.join("sts").join(g.file_name()), self.dataset_text(g)).unwrap();
        }
    }

    pub fn config_toml(&self, dir: &Path, extra: &str) -> String {
        format!(
            "{extra}\n[paths]\nembeddings = {:?}\nfrequencies = {:?}\nstopwords = {:?}\ndataset_dir = {:?}\n",
            dir.join("vectors.txt"),
            dir.join("freq.txt"),
            dir.join("stopwords.txt"),
            dir.join("sts"),
        )
    }
}

fn rng_punct(len: usize) -> bool {
    len.is_multiple_of(2)
}

/// Gaussian vectors and Zipf counts for words `w0..w{vocab}`.
pub fn random_lexicon(rng: &mut impl Rng, dim: usize, vocab: usize) -> (WordVectorTable, FrequencyTable) {
    let rows: Vec<(String, Vec<f64>)> = (0..vocab)
        .map(|i| {
            let v = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            (format!("w{i}"), v)
        })
        .collect();
    let counts = (0..vocab).map(|i| (format!("w{i}"), 10_000 / (i as u64 + 1)));
    (
        WordVectorTable::from_rows(rows).unwrap(),
        FrequencyTable::from_counts(counts).unwrap(),
    )
}

/// `n` sentences of 3 to 8 words drawn from `w{lo}..w{hi}`.
pub fn random_corpus(rng: &mut impl Rng, name: &str, n: usize, lo: usize, hi: usize) -> Corpus {
    let sentences: Vec<Sentence> = (0..n)
        .map(|_| {
            let len = rng.random_range(3..=8);
            let words: Vec<String> = (0..len)
                .map(|_| format!("w{}", rng.random_range(lo..hi)))
                .collect();
            tokenize(&words.join(" "))
        })
        .collect();
    Corpus::new(name, sentences)
}
