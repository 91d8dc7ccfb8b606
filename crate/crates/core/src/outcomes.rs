//! Outcome alphabets for every variable, built in the first training pass.
//!
//! Categorical variables take the set of values observed in the data.
//! Continuous variables are cut into bins, either by supervised greedy
//! information-gain splitting or by equal frequency, computed from a
//! class-labelled reservoir sample so the pass stays memory bounded.
//! Every alphabet ends with the MISSING symbol.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CsvSource, DataError};
use crate::schema::{Discretizer, Schema, VarKind};

/// Symbol of the missing outcome, always the last entry of an alphabet.
pub const MISSING: &str = "?";

/// Gains at or below this are treated as no gain at all.
const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum OutcomeError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("variable `{var}` has more than {cap} distinct outcomes")]
    Cardinality { var: String, cap: usize },
    #[error("variable `{var}` has no outcome `{symbol}`")]
    UnknownSymbol { var: String, symbol: String },
    #[error("class column `{0}` has fewer than two observed outcomes")]
    ConstantClass(String),
    #[error("bin edges must be finite and strictly increasing")]
    InvalidEdges,
}

/// Strictly increasing cut points. `k` edges define `k + 1` bins, bin `j`
/// being `[e_j, e_{j+1})` with the outer edges at minus and plus infinity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BinEdges(Vec<f64>);

impl TryFrom<Vec<f64>> for BinEdges {
    type Error = OutcomeError;

    fn try_from(edges: Vec<f64>) -> Result<Self, Self::Error> {
        BinEdges::new(edges)
    }
}

impl From<BinEdges> for Vec<f64> {
    fn from(e: BinEdges) -> Self {
        e.0
    }
}

impl BinEdges {
    pub fn new(edges: Vec<f64>) -> Result<Self, OutcomeError> {
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OutcomeError::InvalidEdges);
        }
        Ok(Self(edges))
    }

    pub fn edges(&self) -> &[f64] {
        &self.0
    }

    pub fn bins(&self) -> usize {
        self.0.len() + 1
    }

    /// Bin of a non-NaN value.
    pub fn bin(&self, value: f64) -> usize {
        self.0.partition_point(|&e| e <= value)
    }

    fn labels(&self) -> Vec<String> {
        (0..self.bins())
            .map(|j| {
                let lo = if j == 0 { "-inf".to_string() } else { self.0[j - 1].to_string() };
                let hi = if j == self.0.len() { "+inf".to_string() } else { self.0[j].to_string() };
                format!("[{lo},{hi})")
            })
            .collect()
    }
}

/// Bin index of `value`, or `None` for MISSING. NaN counts as missing.
pub fn discretize(value: Option<f64>, edges: &BinEdges) -> Option<usize> {
    match value {
        None => None,
        Some(v) if v.is_nan() => {
            log::warn!("NaN value treated as missing");
            None
        }
        Some(v) => Some(edges.bin(v)),
    }
}

/// Alphabet of one variable. Outcome indices run over `symbols` followed by
/// MISSING at index `symbols.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarOutcomes {
    pub name: String,
    #[serde(flatten)]
    pub kind: VarKind,
    /// Non-missing symbols; sorted for categorical variables, bin labels in
    /// order for continuous ones.
    pub symbols: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<BinEdges>,
}

impl VarOutcomes {
    pub fn categorical(name: impl Into<String>, values: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = values.into_iter().collect();
        Self { name: name.into(), kind: VarKind::Categorical, symbols: set.into_iter().collect(), edges: None }
    }

    pub fn continuous(name: impl Into<String>, discretizer: Discretizer, edges: BinEdges) -> Self {
        Self { name: name.into(), kind: VarKind::Continuous(discretizer), symbols: edges.labels(), edges: Some(edges) }
    }

    /// Alphabet size including MISSING.
    pub fn cardinality(&self) -> usize {
        self.symbols.len() + 1
    }

    pub fn missing_index(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbol(&self, idx: usize) -> &str {
        self.symbols.get(idx).map(String::as_str).unwrap_or(MISSING)
    }

    /// Maps a raw cell (`None` when missing) to its outcome index.
    pub fn encode(&self, raw: Option<&str>) -> Result<usize, OutcomeError> {
        let Some(raw) = raw else {
            return Ok(self.missing_index());
        };
        match &self.edges {
            Some(edges) => {
                let value: f64 = raw
                    .trim()
                    .parse()
                    .map_err(|_| OutcomeError::UnknownSymbol { var: self.name.clone(), symbol: raw.to_string() })?;
                Ok(discretize(Some(value), edges).unwrap_or(self.missing_index()))
            }
            None => {
                if raw == MISSING {
                    return Ok(self.missing_index());
                }
                self.symbols
                    .binary_search_by(|s| s.as_str().cmp(raw))
                    .map_err(|_| OutcomeError::UnknownSymbol { var: self.name.clone(), symbol: raw.to_string() })
            }
        }
    }

    pub fn encode_number(&self, value: Option<f64>) -> usize {
        match &self.edges {
            Some(edges) => discretize(value, edges).unwrap_or(self.missing_index()),
            None => self.missing_index(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeTable {
    /// Observed class labels, sorted.
    pub classes: Vec<String>,
    /// One entry per schema field, in declaration order.
    pub vars: Vec<VarOutcomes>,
}

impl OutcomeTable {
    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.binary_search_by(|c| c.as_str().cmp(label)).ok()
    }
}

/// Fixed-capacity uniform sample of `(value, class)` pairs (Algorithm R).
#[derive(Debug, Clone)]
pub struct ReservoirSample {
    capacity: usize,
    seen: u64,
    items: Vec<(f64, u32)>,
    rng: ChaCha8Rng,
}

impl ReservoirSample {
    pub fn new(capacity: usize, seed: u64) -> Self {
        Self {
            capacity,
            seen: 0,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn offer(&mut self, value: f64, class: u32) {
        self.seen += 1;
        if self.items.len() < self.capacity {
            self.items.push((value, class));
        } else if self.capacity > 0 {
            let j = self.rng.random_range(0..self.seen);
            if (j as usize) < self.capacity {
                self.items[j as usize] = (value, class);
            }
        }
    }

    pub fn items(&self) -> &[(f64, u32)] {
        &self.items
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }
}

fn entropy_of_counts(counts: &[u64], total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

#[derive(Debug)]
struct Segment {
    start: usize,
    end: usize,
    entropy: f64,
}

impl Segment {
    fn weight(&self) -> f64 {
        (self.end - self.start) as f64 * self.entropy
    }
}

/// Supervised discretization by greedy recursive binary splitting.
///
/// Each round takes the open segment holding the largest share of the
/// remaining class entropy (segment size times its entropy) and cuts it at the midpoint between adjacent distinct values that maximizes
/// information gain (leftmost on ties). A segment with no positive-gain cut
/// is closed. Stops at `max_bins` bins or when no segment is open.
pub fn entropy_bins(samples: &[(f64, usize)], max_bins: usize) -> BinEdges {
    if samples.is_empty() || max_bins <= 1 {
        return BinEdges::default();
    }
    let mut sorted: Vec<(f64, usize)> = samples.iter().copied().filter(|(v, _)| v.is_finite()).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let n_classes = sorted.iter().map(|s| s.1).max().map_or(0, |m| m + 1);

    let seg_entropy = |start: usize, end: usize| {
        let mut counts = vec![0u64; n_classes];
        for s in &sorted[start..end] {
            counts[s.1] += 1;
        }
        entropy_of_counts(&counts, (end - start) as u64)
    };

    let mut open = vec![Segment { start: 0, end: sorted.len(), entropy: seg_entropy(0, sorted.len()) }];
    let mut edges = Vec::new();
    let mut bins = 1;
    while bins < max_bins {
        // Largest weighted entropy first, leftmost on ties.
        let Some(pick) = open
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.weight().total_cmp(&b.weight()).then(b.start.cmp(&a.start)))
            .map(|(i, _)| i)
        else {
            break;
        };
        let seg = open.swap_remove(pick);
        let Some((cut, gain)) = best_cut(&sorted[seg.start..seg.end], n_classes, seg.entropy) else {
            continue;
        };
        if gain <= GAIN_EPS {
            continue;
        }
        let at = seg.start + cut;
        let (lo, hi) = (sorted[at - 1].0, sorted[at].0);
        let mid = lo + (hi - lo) / 2.0;
        edges.push(if mid > lo { mid } else { hi });
        bins += 1;
        open.push(Segment { start: seg.start, end: at, entropy: seg_entropy(seg.start, at) });
        open.push(Segment { start: at, end: seg.end, entropy: seg_entropy(at, seg.end) });
    }
    edges.sort_by(f64::total_cmp);
    BinEdges(edges)
}

/// Best cut inside a sorted segment as `(offset, gain)`; `None` when all
/// values are equal.
fn best_cut(seg: &[(f64, usize)], n_classes: usize, parent_entropy: f64) -> Option<(usize, f64)> {
    let n = seg.len() as u64;
    let mut right = vec![0u64; n_classes];
    for s in seg {
        right[s.1] += 1;
    }
    let mut left = vec![0u64; n_classes];
    let mut best: Option<(usize, f64)> = None;
    for i in 1..seg.len() {
        let c = seg[i - 1].1;
        left[c] += 1;
        right[c] -= 1;
        if seg[i - 1].0 >= seg[i].0 {
            continue;
        }
        let nl = i as u64;
        let nr = n - nl;
        let children =
            (nl as f64 * entropy_of_counts(&left, nl) + nr as f64 * entropy_of_counts(&right, nr)) / n as f64;
        let gain = parent_entropy - children;
        if best.is_none_or(|(_, g)| gain > g) {
            best = Some((i, gain));
        }
    }
    best
}

/// Equal-frequency cuts over the sample values.
pub fn quantile_bins(values: &[f64], max_bins: usize) -> BinEdges {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() || max_bins <= 1 {
        return BinEdges::default();
    }
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let mut edges: Vec<f64> = Vec::new();
    for j in 1..max_bins {
        let pos = j * m / max_bins;
        if pos == 0 || pos >= m {
            continue;
        }
        let (lo, hi) = (sorted[pos - 1], sorted[pos]);
        if lo >= hi {
            continue;
        }
        let mid = lo + (hi - lo) / 2.0;
        let edge = if mid > lo { mid } else { hi };
        if edges.last().is_none_or(|&last| edge > last) {
            edges.push(edge);
        }
    }
    BinEdges(edges)
}

/// First training pass: class labels, categorical alphabets and bin edges.
pub fn collect_outcomes(schema: &Schema, source: &CsvSource) -> Result<OutcomeTable, OutcomeError> {
    let q = schema.field_vars.len();
    let mut class_ids: HashMap<String, u32> = HashMap::new();
    let mut class_order: Vec<String> = Vec::new();
    let mut cats: Vec<Option<BTreeSet<String>>> =
        schema.field_vars.iter().map(|v| (!v.is_continuous()).then(BTreeSet::new)).collect();
    let mut reservoirs: Vec<Option<ReservoirSample>> = schema
        .field_vars
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.is_continuous().then(|| {
                ReservoirSample::new(
                    schema.reservoir_capacity,
                    schema.seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
                )
            })
        })
        .collect();

    source.iterate_pass::<OutcomeError, _>(schema, |rec| {
        let label = rec.class().expect("class required");
        let class = match class_ids.get(label) {
            Some(&c) => c,
            None => {
                let c = class_order.len() as u32;
                class_ids.insert(label.to_string(), c);
                class_order.push(label.to_string());
                c
            }
        };
        for i in 0..q {
            if let Some(set) = &mut cats[i] {
                if let Some(v) = rec.field(i) {
                    if !set.contains(v) {
                        if set.len() >= schema.max_outcomes {
                            return Err(OutcomeError::Cardinality {
                                var: schema.field_vars[i].name.clone(),
                                cap: schema.max_outcomes,
                            });
                        }
                        set.insert(v.to_string());
                    }
                }
            } else if let Some(res) = &mut reservoirs[i] {
                if let Some(v) = rec.number(i) {
                    if !v.is_nan() {
                        res.offer(v, class);
                    }
                }
            }
        }
        Ok(())
    })?;

    if class_order.len() < 2 {
        return Err(OutcomeError::ConstantClass(schema.class_var.clone()));
    }
    let mut classes = class_order.clone();
    classes.sort();
    // Reservoir class ids follow first appearance; remap to sorted order.
    let remap: Vec<usize> = class_order.iter().map(|c| classes.binary_search(c).expect("present")).collect();

    let vars = schema
        .field_vars
        .iter()
        .enumerate()
        .map(|(i, spec)| match spec.kind {
            VarKind::Categorical => VarOutcomes::categorical(spec.name.clone(), cats[i].take().unwrap_or_default()),
            VarKind::Continuous(d) => {
                let res = reservoirs[i].take().expect("continuous reservoir");
                let edges = match d {
                    Discretizer::Entropy => {
                        let samples: Vec<(f64, usize)> =
                            res.items().iter().map(|&(v, c)| (v, remap[c as usize])).collect();
                        entropy_bins(&samples, schema.max_bins)
                    }
                    Discretizer::Quantile => {
                        let values: Vec<f64> = res.items().iter().map(|&(v, _)| v).collect();
                        quantile_bins(&values, schema.max_bins)
                    }
                };
                VarOutcomes::continuous(spec.name.clone(), d, edges)
            }
        })
        .collect();
    Ok(OutcomeTable { classes, vars })
}
