//! STS scoring: cosine similarity per pair, Pearson correlation with gold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::StsDataset;
use crate::encoders::{Lexicon, SentenceEncoder};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PccResult {
    /// Raw correlation in `[-1, 1]`.
    pub pcc: f64,
    pub pairs_used: usize,
    /// Pairs where either embedding was the zero vector.
    pub pairs_skipped: usize,
}

/// Cosine similarity; `None` when either vector is zero.
pub fn cosine(x: &[f64], y: &[f64]) -> Option<f64> {
    let nx = pairwise_sum(&x.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
    let ny = pairwise_sum(&y.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt();
    if nx == 0.0 || ny == 0.0 {
        return None;
    }
    let dot = pairwise_sum(&x.iter().zip(y).map(|(a, b)| a * b).collect::<Vec<_>>());
    Some((dot / (nx * ny)).clamp(-1.0, 1.0))
}

/// Sample Pearson correlation coefficient.
pub fn pearson(pred: &[f64], gold: &[f64]) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: pred.len(),
            got: gold.len(),
        });
    }
    if pred.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two observations"));
    }
    let n = pred.len() as f64;
    let mp = pairwise_sum(pred) / n;
    let mg = pairwise_sum(gold) / n;
    let dp: Vec<f64> = pred.iter().map(|p| p - mp).collect();
    let dg: Vec<f64> = gold.iter().map(|g| g - mg).collect();
    let spp = pairwise_sum(&dp.iter().map(|d| d * d).collect::<Vec<_>>());
    let sgg = pairwise_sum(&dg.iter().map(|d| d * d).collect::<Vec<_>>());
    if spp == 0.0 || sgg == 0.0 {
        return Err(Error::UndefinedCorrelation("constant series"));
    }
    let spg = pairwise_sum(&dp.iter().zip(&dg).map(|(a, b)| a * b).collect::<Vec<_>>());
    Ok((spg / (spp.sqrt() * sgg.sqrt())).clamp(-1.0, 1.0))
}

/// Pairwise (cascade) summation; the split points depend only on length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Encodes both sides of every pair, correlates cosines with gold scores.
///
/// Pairs with a zero embedding on either side are skipped and counted.
pub fn evaluate<E>(encoder: &E, dataset: &StsDataset, lex: &Lexicon<'_>) -> Result<PccResult>
where
    E: SentenceEncoder + Sync + ?Sized,
{
    if dataset.pairs.is_empty() {
        return Err(Error::Empty("STS dataset has no pairs"));
    }
    let sims: Vec<Option<f64>> = dataset
        .pairs
        .par_iter()
        .map(|p| {
            let a = encoder.encode(&p.sentence_a, lex)?;
            let b = encoder.encode(&p.sentence_b, lex)?;
            Ok(cosine(&a, &b))
        })
        .collect::<Result<_>>()?;
    let mut pred = Vec::with_capacity(sims.len());
    let mut gold = Vec::with_capacity(sims.len());
    for (sim, pair) in sims.iter().zip(&dataset.pairs) {
        if let Some(s) = sim {
            pred.push(*s);
            gold.push(pair.gold);
        }
    }
    let pairs_skipped = sims.len() - pred.len();
    if pred.is_empty() {
        return Err(Error::AllPairsSkipped(sims.len()));
    }
    Ok(PccResult {
        pcc: pearson(&pred, &gold)?,
        pairs_used: pred.len(),
        pairs_skipped,
    })
}
