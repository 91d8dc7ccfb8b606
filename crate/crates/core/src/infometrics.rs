//! Entropy, mutual information and cumulative-threshold selection.
//!
//! All quantities are in bits and use empirical (maximum-likelihood)
//! frequencies; cells with zero count contribute nothing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum InfoError {
    #[error("probability vector has a negative entry")]
    NegativeProbability,
    #[error("probability vector sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("joint table has no observations")]
    Empty,
    #[error("expected a {expected}-way table, got {got}-way")]
    Dimension { expected: usize, got: usize },
}

/// Dense contingency table, row-major over `dims`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointCounts {
    dims: Vec<usize>,
    counts: Vec<u64>,
}

impl JointCounts {
    pub fn zeros(dims: &[usize]) -> Self {
        Self { dims: dims.to_vec(), counts: vec![0; dims.iter().product()] }
    }

    /// Wraps row-major counts. Panics if the length does not match `dims`.
    pub fn from_counts(dims: &[usize], counts: Vec<u64>) -> Self {
        assert_eq!(dims.iter().product::<usize>(), counts.len(), "count vector does not match dims");
        Self { dims: dims.to_vec(), counts }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn add2(&mut self, a: usize, b: usize) {
        self.counts[a * self.dims[1] + b] += 1;
    }

    pub fn add3(&mut self, a: usize, b: usize, c: usize) {
        self.counts[(a * self.dims[1] + b) * self.dims[2] + c] += 1;
    }

    pub fn get2(&self, a: usize, b: usize) -> u64 {
        self.counts[a * self.dims[1] + b]
    }

    pub fn get3(&self, a: usize, b: usize, c: usize) -> u64 {
        self.counts[(a * self.dims[1] + b) * self.dims[2] + c]
    }

    /// Swaps the two axes of a 2-way table.
    pub fn transposed(&self) -> Self {
        assert_eq!(self.dims.len(), 2);
        let (r, c) = (self.dims[0], self.dims[1]);
        let mut out = Self::zeros(&[c, r]);
        for i in 0..r {
            for j in 0..c {
                out.counts[j * r + i] = self.counts[i * c + j];
            }
        }
        out
    }
}

/// Shannon entropy in bits of a probability vector.
pub fn entropy(dist: &[f64]) -> Result<f64, InfoError> {
    if dist.iter().any(|&p| p < 0.0 || p.is_nan()) {
        return Err(InfoError::NegativeProbability);
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(InfoError::NotNormalized(sum));
    }
    Ok(dist.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum())
}

fn check(joint: &JointCounts, ways: usize) -> Result<u64, InfoError> {
    if joint.dims.len() != ways {
        return Err(InfoError::Dimension { expected: ways, got: joint.dims.len() });
    }
    let total = joint.total();
    if total == 0 {
        return Err(InfoError::Empty);
    }
    Ok(total)
}

fn mi_2way(joint: &JointCounts, log: impl Fn(f64) -> f64) -> Result<f64, InfoError> {
    let total = check(joint, 2)?;
    let (r, c) = (joint.dims[0], joint.dims[1]);
    let mut row = vec![0u64; r];
    let mut col = vec![0u64; c];
    for i in 0..r {
        for j in 0..c {
            let n = joint.counts[i * c + j];
            row[i] += n;
            col[j] += n;
        }
    }
    let n = total as f64;
    let mut mi = 0.0;
    for i in 0..r {
        for j in 0..c {
            let nij = joint.counts[i * c + j];
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            mi += nij / n * log(nij * n / (row[i] as f64 * col[j] as f64));
        }
    }
    Ok(mi)
}

/// MI between the two axes of a 2-way table, in bits.
pub fn mutual_information(joint: &JointCounts) -> Result<f64, InfoError> {
    mi_2way(joint, f64::log2)
}

/// MI in an arbitrary logarithm base.
pub fn mutual_information_base(joint: &JointCounts, base: f64) -> Result<f64, InfoError> {
    let ln_base = base.ln();
    mi_2way(joint, move |x| x.ln() / ln_base)
}

/// MI between axes 1 and 2 conditional on axis 0, in bits: the
/// class-weighted average of the per-slice MI.
pub fn conditional_mutual_information(joint: &JointCounts) -> Result<f64, InfoError> {
    let total = check(joint, 3)?;
    let (k, r, c) = (joint.dims[0], joint.dims[1], joint.dims[2]);
    let mut row = vec![0u64; r];
    let mut col = vec![0u64; c];
    let mut cmi = 0.0;
    for z in 0..k {
        let slice = &joint.counts[z * r * c..(z + 1) * r * c];
        let nz: u64 = slice.iter().sum();
        if nz == 0 {
            continue;
        }
        row.iter_mut().for_each(|x| *x = 0);
        col.iter_mut().for_each(|x| *x = 0);
        for i in 0..r {
            for j in 0..c {
                row[i] += slice[i * c + j];
                col[j] += slice[i * c + j];
            }
        }
        let nzf = nz as f64;
        let mut mi = 0.0;
        for i in 0..r {
            for j in 0..c {
                let nij = slice[i * c + j];
                if nij == 0 {
                    continue;
                }
                let nij = nij as f64;
                mi += nij / nzf * (nij * nzf / (row[i] as f64 * col[j] as f64)).log2();
            }
        }
        cmi += nzf / total as f64 * mi;
    }
    Ok(cmi)
}

/// What an MI score was computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subject {
    Node(usize),
    /// Unordered pair of nodes, smaller index first.
    Pair(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiScore {
    pub subject: Subject,
    pub value: f64,
}

/// Relative slack on the `cumulative >= T * total` test, absorbing the
/// rounding of a running float sum.
pub(crate) const CUMULATIVE_SLACK: f64 = 1e-9;

pub(crate) fn reached(cumulative: f64, total: f64, t: f64) -> bool {
    cumulative >= t * total - CUMULATIVE_SLACK * total
}

/// Takes scores in descending order (stable, so input order breaks ties)
/// until their running sum reaches fraction `t` of the sum of all scores.
/// Zero scores are never selected.
pub fn select_by_cumulative(scores: &[MiScore], t: f64) -> Vec<MiScore> {
    let total: f64 = scores.iter().map(|s| s.value.max(0.0)).sum();
    if total <= 0.0 {
        return Vec::new();
    }
    let mut ranked: Vec<MiScore> = scores.to_vec();
    ranked.sort_by(|a, b| b.value.total_cmp(&a.value));
    let mut selected = Vec::new();
    let mut cumulative = 0.0;
    for s in ranked {
        if s.value <= 0.0 {
            break;
        }
        cumulative += s.value;
        selected.push(s);
        if reached(cumulative, total, t) {
            break;
        }
    }
    selected
}
