//! Category retrieval: every row queries all the others, and precision@K is
//! averaged first over each class's queries, then over classes.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::{FeatureMatrix, Labels};
use crate::error::{Error, Result};
use crate::matrix::{squared_euclidean, Matrix};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RetrievalDistance {
    /// Euclidean distance between embeddings.
    L2OnEmbedding,
    L1Raw,
    L2Raw,
    Chi2Raw,
}

impl RetrievalDistance {
    /// Any monotone transform of the distance ranks identically, so L2 uses
    /// the squared form.
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            RetrievalDistance::L2OnEmbedding | RetrievalDistance::L2Raw => squared_euclidean(a, b),
            RetrievalDistance::L1Raw => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            RetrievalDistance::Chi2Raw => chi2_distance(a, b),
        }
    }
}

/// `Σ_c (a_c − b_c)² / (|a_c| + |b_c|)`, with 0/0 terms taken as 0.
pub fn chi2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let den = x.abs() + y.abs();
            if den == 0.0 {
                0.0
            } else {
                (x - y) * (x - y) / den
            }
        })
        .sum()
}

impl fmt::Display for RetrievalDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RetrievalDistance::L2OnEmbedding => "l2_on_embedding",
            RetrievalDistance::L1Raw => "l1_raw",
            RetrievalDistance::L2Raw => "l2_raw",
            RetrievalDistance::Chi2Raw => "chi2_raw",
        })
    }
}

impl FromStr for RetrievalDistance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2_on_embedding" => Ok(Self::L2OnEmbedding),
            "l1_raw" | "l1" => Ok(Self::L1Raw),
            "l2_raw" | "l2" => Ok(Self::L2Raw),
            "chi2_raw" | "chi2" => Ok(Self::Chi2Raw),
            other => Err(Error::InvalidParameter(format!("unknown distance {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalConfig {
    k_values: Vec<usize>,
    pub distance: RetrievalDistance,
}

impl RetrievalConfig {
    /// Cutoffs must be positive and distinct; they are stored sorted.
    pub fn new(mut k_values: Vec<usize>, distance: RetrievalDistance) -> Result<Self> {
        if k_values.is_empty() || k_values.contains(&0) {
            return Err(Error::InvalidParameter(
                "cutoffs K must be positive and non-empty".into(),
            ));
        }
        k_values.sort_unstable();
        if k_values.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("cutoffs K must be distinct".into()));
        }
        Ok(Self { k_values, distance })
    }

    pub fn k_values(&self) -> &[usize] {
        &self.k_values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub k_values: Vec<usize>,
    /// Per class, precision@K aligned with `k_values`.
    pub per_class_precision: BTreeMap<u32, Vec<f64>>,
    /// Unweighted class mean, aligned with `k_values`.
    pub mprec: Vec<f64>,
    pub num_queries: usize,
}

impl EvalReport {
    pub fn mprec_at(&self, k: usize) -> Option<f64> {
        self.k_values.iter().position(|&x| x == k).map(|p| self.mprec[p])
    }

    /// `K,class,precision` rows.
    pub fn write_per_class_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "K,class,precision")?;
        for (p, k) in self.k_values.iter().enumerate() {
            for (class, prec) in &self.per_class_precision {
                writeln!(w, "{k},{class},{}", prec[p])?;
            }
        }
        Ok(())
    }

    /// `K,mprec` rows.
    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "K,mprec")?;
        for (k, m) in self.k_values.iter().zip(&self.mprec) {
            writeln!(w, "{k},{m}")?;
        }
        Ok(())
    }
}

/// Gallery row indices of `query`'s neighbours, nearest first, ties broken by
/// ascending index.
pub fn ranking(vectors: &Matrix, query: usize, distance: RetrievalDistance) -> Vec<usize> {
    let q = vectors.row(query);
    let mut scored: Vec<(f64, usize)> = (0..vectors.rows())
        .filter(|&r| r != query)
        .map(|r| (distance.eval(q, vectors.row(r)), r))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, r)| r).collect()
}

/// Leave-one-out retrieval over the rows of `vectors`.
pub fn retrieve(vectors: &Matrix, labels: &Labels, cfg: &RetrievalConfig) -> Result<EvalReport> {
    let n = vectors.rows();
    if labels.len() != n {
        return Err(Error::LabelCountMismatch {
            labels: labels.len(),
            rows: n,
        });
    }
    if n < 2 {
        return Err(Error::InvalidParameter("retrieval needs at least two rows".into()));
    }
    let k_values = cfg.k_values().to_vec();
    let k_max = *k_values.last().expect("non-empty");
    if k_max > n - 1 {
        return Err(Error::KExceedsGallery {
            k: k_max,
            gallery: n - 1,
        });
    }

    let hits: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|q| {
            let ranked = ranking(vectors, q, cfg.distance);
            let own = labels.get(q);
            let mut out = Vec::with_capacity(k_values.len());
            let mut same = 0;
            let mut upto = 0;
            for &k in &k_values {
                same += ranked[upto..k].iter().filter(|&&r| labels.get(r) == own).count();
                upto = k;
                out.push(same);
            }
            out
        })
        .collect();

    let mut sums: BTreeMap<u32, (Vec<f64>, usize)> = BTreeMap::new();
    for (q, h) in hits.iter().enumerate() {
        let entry = sums
            .entry(labels.get(q))
            .or_insert_with(|| (vec![0.0; k_values.len()], 0));
        for (p, (&count, &k)) in h.iter().zip(&k_values).enumerate() {
            entry.0[p] += count as f64 / k as f64;
        }
        entry.1 += 1;
    }
    let per_class_precision: BTreeMap<u32, Vec<f64>> = sums
        .into_iter()
        .map(|(c, (s, count))| (c, s.into_iter().map(|v| v / count as f64).collect()))
        .collect();
    let classes = per_class_precision.len() as f64;
    let mprec = (0..k_values.len())
        .map(|p| per_class_precision.values().map(|v| v[p]).sum::<f64>() / classes)
        .collect();
    Ok(EvalReport {
        k_values,
        per_class_precision,
        mprec,
        num_queries: n,
    })
}

/// Embeds `features` with `model` (or leaves them as they are) and runs
/// [`retrieve`].
pub fn eval_pipeline(
    model: Option<&Model>,
    features: &FeatureMatrix,
    labels: &Labels,
    cfg: &RetrievalConfig,
) -> Result<EvalReport> {
    labels.check_matches(features)?;
    match model {
        Some(m) => retrieve(&m.as_embedding().embed_all(features)?, labels, cfg),
        None => retrieve(features.values(), labels, cfg),
    }
}

/// Classes with fewer than `k + 1` members, whose queries cannot reach
/// precision 1 at `k`.
pub fn undersized_classes(labels: &Labels, k: usize) -> Vec<u32> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &l in labels.as_slice() {
        *counts.entry(l).or_default() += 1;
    }
    counts.into_iter().filter(|&(_, c)| c < k + 1).map(|(l, _)| l).collect()
}
