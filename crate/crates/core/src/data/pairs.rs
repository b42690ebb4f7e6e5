use log::warn;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;

use super::Labels;
use crate::error::{Error, Result};
use crate::rng::seeded_rng;

pub const DEFAULT_POS_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairLabel {
    Similar,
    Dissimilar,
}

impl PairLabel {
    /// `+1` for similar pairs, `-1` for dissimilar ones.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            PairLabel::Similar => 1.0,
            PairLabel::Dissimilar => -1.0,
        }
    }

    pub fn from_sign(y: i64) -> Option<Self> {
        match y {
            1 => Some(PairLabel::Similar),
            -1 => Some(PairLabel::Dissimilar),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairConstraint {
    pub i: usize,
    pub j: usize,
    pub label: PairLabel,
}

impl PairConstraint {
    pub fn new(i: usize, j: usize, label: PairLabel) -> Result<Self> {
        if i == j {
            return Err(Error::InvalidPair {
                line: 0,
                reason: format!("pair ({i}, {j}) joins a row with itself"),
            });
        }
        Ok(Self { i, j, label })
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.label.sign()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairSet {
    pairs: Vec<PairConstraint>,
    pos_count: usize,
    neg_count: usize,
}

impl PairSet {
    pub fn new(pairs: Vec<PairConstraint>) -> Result<Self> {
        if let Some(p) = pairs.iter().find(|p| p.i == p.j) {
            return Err(Error::InvalidPair {
                line: 0,
                reason: format!("pair ({}, {}) joins a row with itself", p.i, p.j),
            });
        }
        let pos_count = pairs.iter().filter(|p| p.label == PairLabel::Similar).count();
        let neg_count = pairs.len() - pos_count;
        Ok(Self {
            pairs,
            pos_count,
            neg_count,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pos_count(&self) -> usize {
        self.pos_count
    }

    pub fn neg_count(&self) -> usize {
        self.neg_count
    }

    pub fn as_slice(&self) -> &[PairConstraint] {
        &self.pairs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PairConstraint> {
        self.pairs.iter()
    }

    /// Checks every index against a feature matrix with `rows` rows.
    pub fn check_bounds(&self, rows: usize) -> Result<()> {
        for (k, p) in self.pairs.iter().enumerate() {
            if p.i >= rows || p.j >= rows {
                return Err(Error::InvalidPair {
                    line: k + 1,
                    reason: format!("index out of range for {rows} rows"),
                });
            }
        }
        Ok(())
    }

    /// The first `n` pairs (or all of them).
    pub fn head(&self, n: usize) -> PairSet {
        PairSet::new(self.pairs[..n.min(self.len())].to_vec()).expect("subset of a valid set")
    }
}

/// Samples similar (same-class) and dissimilar (cross-class) index pairs.
///
/// Each pool is sampled uniformly with replacement over unordered index
/// pairs; pairs are emitted as `(min, max)` in shuffled order. The number of
/// pairs is `min(budget, available)` where `available` counts the distinct
/// unordered pairs the labels admit, split between the pools by
/// `pos_fraction`.
pub fn generate_pairs(labels: &Labels, budget: usize, pos_fraction: f64, seed: u64) -> Result<PairSet> {
    if !(pos_fraction > 0.0 && pos_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "pos_fraction must lie in (0, 1), got {pos_fraction}"
        )));
    }
    let classes = labels.classes();
    let members: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| (0..labels.len()).filter(|&i| labels.get(i) == c).collect())
        .collect();

    let choose2 = |n: usize| (n as u128) * (n.saturating_sub(1) as u128) / 2;
    let pos_weights: Vec<u128> = members.iter().map(|m| choose2(m.len())).collect();
    let pos_avail: u128 = pos_weights.iter().sum();
    if pos_avail == 0 {
        return Err(Error::NoPositivePairs);
    }
    if classes.len() < 2 {
        return Err(Error::NoNegativePairs);
    }
    let neg_avail = choose2(labels.len()) - pos_avail;

    let available = pos_avail + neg_avail;
    let total = if (budget as u128) > available {
        warn!("pair budget {budget} exceeds the {available} distinct pairs available; emitting {available}");
        available as usize
    } else {
        budget
    };
    let n_pos = ((total as f64) * pos_fraction).round() as usize;
    let n_neg = total - n_pos;

    let mut rng = seeded_rng(seed);
    let mut pairs = Vec::with_capacity(total);

    // Class chosen in proportion to its number of unordered pairs, then two
    // distinct members: uniform over the whole similar pool.
    let class_dist = WeightedIndex::new(pos_weights.iter().map(|&w| w as f64))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    for _ in 0..n_pos {
        let m = &members[class_dist.sample(&mut rng)];
        let a = rng.random_range(0..m.len());
        let mut b = rng.random_range(0..m.len() - 1);
        if b >= a {
            b += 1;
        }
        let (i, j) = (m[a].min(m[b]), m[a].max(m[b]));
        pairs.push(PairConstraint {
            i,
            j,
            label: PairLabel::Similar,
        });
    }

    // Rejection over uniform ordered pairs is uniform over the cross-class pool.
    let n = labels.len();
    for _ in 0..n_neg {
        loop {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if labels.get(a) != labels.get(b) {
                pairs.push(PairConstraint {
                    i: a.min(b),
                    j: a.max(b),
                    label: PairLabel::Dissimilar,
                });
                break;
            }
        }
    }
    pairs.shuffle(&mut rng);
    PairSet::new(pairs)
}
