//! Four-pass training of the class-rooted network.
//!
//! 1. outcome alphabets and bin edges,
//! 2. class-by-field counts, MI ranking and field selection against `t_prime`,
//! 3. class-by-field-by-field counts over selected pairs, conditional MI and
//!    dependency selection against `t_field`,
//! 4. conditional probability tables, fallback tables and the class prior.
//!
//! Every field node keeps the class as a parent; field-to-field edges always
//! point from the higher-ranked node to the lower-ranked one, so the graph
//! is acyclic without any search.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CsvSource, DataError, PassStats, Record};
use crate::inference::Windower;
use crate::infometrics::{
    conditional_mutual_information, mutual_information, reached, select_by_cumulative, JointCounts, MiScore, Subject,
};
use crate::outcomes::{collect_outcomes, OutcomeError, OutcomeTable};
use crate::schema::{Schema, SchemaError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    #[error("model too large: pair ({first}, {second}) brings the table to {cells} cells, limit {limit}")]
    PairSize { first: String, second: String, cells: u64, limit: u64 },
    #[error("model too large: tables need {cells} cells, limit {limit}")]
    ModelSize { cells: u64, limit: u64 },
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("positive class `{0}` was not observed in the class column")]
    UnknownPositive(String),
}

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("cannot access model file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid model file {path}: {source}")]
    Format { path: String, source: serde_json::Error },
}

/// Name of the node for variable `name` at window slot `slot`.
pub fn node_name(name: &str, slot: usize) -> String {
    if slot == 0 {
        name.to_string()
    } else {
        format!("{name}@{slot}")
    }
}

/// Conditional probability table `P{child | class, field parents}`.
///
/// Row `r = class * configs + config`, where `config` is the mixed-radix
/// index of the field parents' outcomes (first parent most significant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub classes: usize,
    pub parent_cards: Vec<usize>,
    pub child_card: usize,
    /// `rows() * child_card` probabilities, row-major.
    pub probs: Vec<f64>,
    /// Rows that had no training data.
    pub unseen: Vec<bool>,
}

impl Cpt {
    pub fn configs(&self) -> usize {
        self.parent_cards.iter().product()
    }

    pub fn rows(&self) -> usize {
        self.classes * self.configs()
    }

    pub fn cells(&self) -> u64 {
        (self.rows() * self.child_card) as u64
    }

    pub fn row_index(&self, class: usize, parents: &[usize]) -> usize {
        let config = parents.iter().zip(&self.parent_cards).fold(0, |acc, (&v, &card)| acc * card + v);
        class * self.configs() + config
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.probs[r * self.child_card..(r + 1) * self.child_card]
    }

    /// Estimates rows as `(count + alpha) / (row_total + alpha * child_card)`.
    /// Rows with no data are flagged unseen; they hold zeros when `alpha` is
    /// zero and the uniform distribution otherwise.
    pub fn from_counts(
        classes: usize,
        parent_cards: Vec<usize>,
        child_card: usize,
        counts: &[u64],
        alpha: f64,
    ) -> Self {
        let rows = classes * parent_cards.iter().product::<usize>();
        assert_eq!(counts.len(), rows * child_card);
        let mut probs = vec![0.0; counts.len()];
        let mut unseen = vec![false; rows];
        for r in 0..rows {
            let cells = &counts[r * child_card..(r + 1) * child_card];
            let total: u64 = cells.iter().sum();
            if total == 0 {
                unseen[r] = true;
            }
            let denom = total as f64 + alpha * child_card as f64;
            if denom > 0.0 {
                for (p, &c) in probs[r * child_card..(r + 1) * child_card].iter_mut().zip(cells) {
                    *p = (c as f64 + alpha) / denom;
                }
            }
        }
        Self { classes, parent_cards, child_card, probs, unseen }
    }
}

/// Empirical class frequencies.
pub fn estimate_prior(class_counts: &[u64]) -> Vec<f64> {
    let n: u64 = class_counts.iter().sum();
    class_counts.iter().map(|&c| c as f64 / n as f64).collect()
}

/// A node of the trained network, in rank order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldNode {
    pub name: String,
    /// Index into the schema's field variables.
    pub var: usize,
    /// Window slot: 0 is the current record, `s` its `s`-th predecessor.
    pub slot: usize,
    /// MI with the class, in bits.
    pub mi: f64,
    /// Field parents as positions in `NetworkModel::nodes`, all earlier
    /// than this node.
    pub parents: Vec<usize>,
    pub cpt: Cpt,
    /// `P{node | class}`, used when a field parent is missing.
    pub fallback: Cpt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeScore {
    pub node: String,
    pub mi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub first: String,
    pub second: String,
    pub cmi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dependency {
    pub parent: String,
    pub child: String,
    pub cmi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub schema: Schema,
    pub outcomes: OutcomeTable,
    pub class_counts: Vec<u64>,
    pub prior: Vec<f64>,
    /// Class reported as positive by `classify`.
    pub positive: String,
    /// MI with the class for every candidate node, declaration order.
    pub node_scores: Vec<NodeScore>,
    /// Conditional MI of every selected pair, descending.
    pub pair_scores: Vec<PairScore>,
    pub dependencies: Vec<Dependency>,
    /// Selected nodes, descending MI with the class.
    pub nodes: Vec<FieldNode>,
    pub training: PassStats,
}

impl NetworkModel {
    pub fn classes(&self) -> &[String] {
        &self.outcomes.classes
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.outcomes.class_index(label)
    }

    /// Width of an encoded case: one entry per (variable, slot).
    pub fn case_width(&self) -> usize {
        self.outcomes.vars.len() * self.schema.window
    }

    pub fn node_slot(&self, node: &FieldNode) -> usize {
        node_index(node.var, node.slot, self.schema.window)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelIoError> {
        fs::write(path, self.to_json()).map_err(|source| ModelIoError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, ModelIoError> {
        let text =
            fs::read_to_string(path).map_err(|source| ModelIoError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text).map_err(|source| ModelIoError::Format { path: path.display().to_string(), source })
    }
}

pub(crate) fn node_index(var: usize, slot: usize, window: usize) -> usize {
    var * window + slot
}

/// Turns records into encoded cases: one outcome index per (variable,
/// slot), predecessors taken from the same group.
pub(crate) struct CaseEncoder<'a> {
    outcomes: &'a OutcomeTable,
    window: usize,
    windower: Windower<Vec<u32>>,
    case: Vec<u32>,
}

impl<'a> CaseEncoder<'a> {
    pub(crate) fn new(outcomes: &'a OutcomeTable, window: usize) -> Self {
        Self { outcomes, window, windower: Windower::new(window), case: vec![0; outcomes.vars.len() * window] }
    }

    /// Encodes one record. Categorical values outside the alphabet become
    /// MISSING when `strict` is false.
    pub(crate) fn encode(&mut self, rec: &Record<'_>, strict: bool) -> Result<&[u32], OutcomeError> {
        let row = self
            .outcomes
            .vars
            .iter()
            .enumerate()
            .map(|(i, vo)| {
                let idx = if vo.edges.is_some() {
                    vo.encode_number(rec.number(i))
                } else {
                    match vo.encode(rec.field(i)) {
                        Ok(idx) => idx,
                        Err(e) if strict => return Err(e),
                        Err(_) => vo.missing_index(),
                    }
                };
                Ok(idx as u32)
            })
            .collect::<Result<Vec<u32>, _>>()?;
        if self.window == 1 {
            self.case.copy_from_slice(&row);
            return Ok(&self.case);
        }
        let slots = self.windower.push(rec.group(), row);
        for (v, vo) in self.outcomes.vars.iter().enumerate() {
            for (s, slot) in slots.iter().enumerate() {
                self.case[node_index(v, s, self.window)] = slot.as_ref().map_or(vo.missing_index() as u32, |r| r[v]);
            }
        }
        Ok(&self.case)
    }
}

/// Greedy dependency selection over unordered pairs of selected nodes.
///
/// `ranking` lists the selected nodes, best first. Pairs are visited in
/// descending score (ties by rank of the better endpoint, then the other);
/// each accepted edge points from the better-ranked endpoint to the other.
/// A pair whose child already has `max_parents` field parents is skipped
/// and does not count toward the cumulative sum. Stops once the accepted
/// scores reach fraction `t_field` of the sum of all candidate scores.
pub fn select_dependencies(
    cmi: &[MiScore],
    t_field: f64,
    ranking: &[usize],
    max_parents: usize,
) -> Vec<(usize, usize)> {
    let pos: HashMap<usize, usize> = ranking.iter().enumerate().map(|(p, &n)| (n, p)).collect();
    let total: f64 = cmi.iter().map(|s| s.value.max(0.0)).sum();
    if total <= 0.0 || max_parents == 0 {
        return Vec::new();
    }
    let mut pairs: Vec<(usize, usize, f64)> = cmi
        .iter()
        .map(|s| match s.subject {
            Subject::Pair(a, b) => {
                let (pa, pb) = (pos[&a], pos[&b]);
                (pa.min(pb), pa.max(pb), s.value)
            }
            Subject::Node(_) => panic!("dependency candidates must be pairs"),
        })
        .collect();
    pairs.sort_by(|x, y| y.2.total_cmp(&x.2).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));

    let mut parent_count = vec![0usize; ranking.len()];
    let mut edges = Vec::new();
    let mut cumulative = 0.0;
    for (hi, lo, value) in pairs {
        if value <= 0.0 {
            break;
        }
        if parent_count[lo] >= max_parents {
            continue;
        }
        parent_count[lo] += 1;
        edges.push((ranking[hi], ranking[lo]));
        cumulative += value;
        if reached(cumulative, total, t_field) {
            break;
        }
    }
    edges
}

/// Trains a network with exactly four passes over `source`.
pub fn train(schema: &Schema, source: &CsvSource) -> Result<NetworkModel, TrainError> {
    schema.validate()?;
    let w = schema.window;

    // Pass 1: outcome sets.
    let outcomes = collect_outcomes(schema, source)?;
    let k = outcomes.classes.len();
    let q = outcomes.vars.len();
    let width = q * w;
    let card = |node: usize| outcomes.vars[node / w].cardinality();
    let name_of = |node: usize| node_name(&outcomes.vars[node / w].name, node % w);
    let class_of = |rec: &Record<'_>| -> usize {
        outcomes.class_index(rec.class().expect("class required")).expect("class seen in pass 1")
    };

    // Pass 2: class x field counts.
    let mut pair_counts: Vec<JointCounts> = (0..width).map(|n| JointCounts::zeros(&[k, card(n)])).collect();
    let mut enc = CaseEncoder::new(&outcomes, w);
    source.iterate_pass::<TrainError, _>(schema, |rec| {
        let c = class_of(rec);
        let case = enc.encode(rec, false)?;
        for (n, &x) in case.iter().enumerate() {
            pair_counts[n].add2(c, x as usize);
        }
        Ok(())
    })?;
    let scores: Vec<MiScore> = pair_counts
        .iter()
        .enumerate()
        .map(|(n, jc)| MiScore { subject: Subject::Node(n), value: mutual_information(jc).unwrap_or(0.0) })
        .collect();
    let ranking: Vec<usize> = select_by_cumulative(&scores, schema.t_prime)
        .iter()
        .map(|s| match s.subject {
            Subject::Node(n) => n,
            Subject::Pair(..) => unreachable!(),
        })
        .collect();
    drop(pair_counts);

    // Pass 3: class x field x field counts over selected pairs.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut cells = 0u64;
    for (i, &a) in ranking.iter().enumerate() {
        for &b in &ranking[i + 1..] {
            let (lo, hi) = (a.min(b), a.max(b));
            cells += (k * card(lo) * card(hi)) as u64;
            if cells > schema.max_model_cells {
                return Err(TrainError::PairSize {
                    first: name_of(lo),
                    second: name_of(hi),
                    cells,
                    limit: schema.max_model_cells,
                });
            }
            pairs.push((lo, hi));
        }
    }
    let mut triple_counts: Vec<JointCounts> =
        pairs.iter().map(|&(a, b)| JointCounts::zeros(&[k, card(a), card(b)])).collect();
    let mut enc = CaseEncoder::new(&outcomes, w);
    source.iterate_pass::<TrainError, _>(schema, |rec| {
        let c = class_of(rec);
        let case = enc.encode(rec, false)?;
        for (jc, &(a, b)) in triple_counts.iter_mut().zip(&pairs) {
            jc.add3(c, case[a] as usize, case[b] as usize);
        }
        Ok(())
    })?;
    let cmi: Vec<MiScore> = triple_counts
        .iter()
        .zip(&pairs)
        .map(|(jc, &(a, b))| MiScore {
            subject: Subject::Pair(a, b),
            value: conditional_mutual_information(jc).unwrap_or(0.0),
        })
        .collect();
    drop(triple_counts);
    let edges = select_dependencies(&cmi, schema.t_field, &ranking, schema.max_parents);

    // Parent lists as rank positions.
    let rank_pos: HashMap<usize, usize> = ranking.iter().enumerate().map(|(p, &n)| (n, p)).collect();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); ranking.len()];
    for &(p, c) in &edges {
        parents[rank_pos[&c]].push(rank_pos[&p]);
    }
    for ps in &mut parents {
        ps.sort_unstable();
    }
    let table_cells: u64 = ranking
        .iter()
        .enumerate()
        .map(|(pos, &n)| {
            let configs: usize = parents[pos].iter().map(|&pp| card(ranking[pp])).product();
            (k * card(n) * (configs + 1)) as u64
        })
        .sum();
    if table_cells > schema.max_model_cells {
        return Err(TrainError::ModelSize { cells: table_cells, limit: schema.max_model_cells });
    }

    // Pass 4: CPTs, fallbacks, prior.
    let parent_cards: Vec<Vec<usize>> =
        parents.iter().map(|ps| ps.iter().map(|&pp| card(ranking[pp])).collect()).collect();
    let mut cpt_counts: Vec<Vec<u64>> = ranking
        .iter()
        .enumerate()
        .map(|(pos, &n)| vec![0u64; k * parent_cards[pos].iter().product::<usize>() * card(n)])
        .collect();
    let mut fallback_counts: Vec<Vec<u64>> = ranking.iter().map(|&n| vec![0u64; k * card(n)]).collect();
    let mut class_counts = vec![0u64; k];
    let mut enc = CaseEncoder::new(&outcomes, w);
    let final_stats = source.iterate_pass::<TrainError, _>(schema, |rec| {
        let c = class_of(rec);
        class_counts[c] += 1;
        let case = enc.encode(rec, false)?;
        for (pos, &n) in ranking.iter().enumerate() {
            let x = case[n] as usize;
            let cn = card(n);
            let config = parents[pos]
                .iter()
                .zip(&parent_cards[pos])
                .fold(0usize, |acc, (&pp, &pc)| acc * pc + case[ranking[pp]] as usize);
            let configs: usize = parent_cards[pos].iter().product();
            cpt_counts[pos][(c * configs + config) * cn + x] += 1;
            fallback_counts[pos][c * cn + x] += 1;
        }
        Ok(())
    })?;

    let mut nodes = Vec::with_capacity(ranking.len());
    for (pos, &n) in ranking.iter().enumerate() {
        let cn = card(n);
        nodes.push(FieldNode {
            name: name_of(n),
            var: n / w,
            slot: n % w,
            mi: scores[n].value,
            parents: parents[pos].clone(),
            cpt: Cpt::from_counts(k, parent_cards[pos].clone(), cn, &cpt_counts[pos], schema.smoothing),
            fallback: Cpt::from_counts(k, Vec::new(), cn, &fallback_counts[pos], schema.smoothing),
        });
    }

    let positive = match &schema.positive {
        Some(p) => {
            if outcomes.class_index(p).is_none() {
                return Err(TrainError::UnknownPositive(p.clone()));
            }
            p.clone()
        }
        None => {
            // Rarest class; the first in sorted order on ties.
            let (idx, _) = class_counts
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0)))
                .expect("at least two classes");
            outcomes.classes[idx].clone()
        }
    };

    let mut pair_scores: Vec<PairScore> = cmi
        .iter()
        .map(|s| match s.subject {
            Subject::Pair(a, b) => PairScore { first: name_of(a), second: name_of(b), cmi: s.value },
            Subject::Node(_) => unreachable!(),
        })
        .collect();
    pair_scores.sort_by(|x, y| y.cmi.total_cmp(&x.cmi));
    let cmi_of: HashMap<(usize, usize), f64> = cmi
        .iter()
        .filter_map(|s| match s.subject {
            Subject::Pair(a, b) => Some(((a, b), s.value)),
            Subject::Node(_) => None,
        })
        .collect();
    let dependencies = edges
        .iter()
        .map(|&(p, c)| Dependency { parent: name_of(p), child: name_of(c), cmi: cmi_of[&(p.min(c), p.max(c))] })
        .collect();

    Ok(NetworkModel {
        schema: schema.clone(),
        node_scores: scores.iter().enumerate().map(|(n, s)| NodeScore { node: name_of(n), mi: s.value }).collect(),
        pair_scores,
        dependencies,
        prior: estimate_prior(&class_counts),
        class_counts,
        positive,
        nodes,
        outcomes,
        training: PassStats { passes: source.passes(), ..final_stats },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Discretizer, VariableSpec};

    fn pair(a: usize, b: usize, value: f64) -> MiScore {
        MiScore { subject: Subject::Pair(a, b), value }
    }

    #[test]
    fn single_pair_points_down_the_ranking() {
        // Node 1 ranked above node 0.
        let edges = select_dependencies(&[pair(0, 1, 0.4)], 1.0, &[1, 0], 1);
        assert_eq!(edges, vec![(1, 0)]);
    }

    #[test]
    fn zero_budget_gives_no_edges() {
        assert!(select_dependencies(&[pair(0, 1, 0.4)], 1.0, &[0, 1], 0).is_empty());
    }

    #[test]
    fn greedy_trace_with_budget_one() {
        // A=0, B=1, C=2 ranked in that order.
        let cmi = [pair(0, 1, 0.6), pair(0, 2, 0.3), pair(1, 2, 0.1)];
        assert_eq!(select_dependencies(&cmi, 0.9, &[0, 1, 2], 1), vec![(0, 1), (0, 2)]);
        // At t = 1.0 the last pair is budget-blocked (C already has A).
        assert_eq!(select_dependencies(&cmi, 1.0, &[0, 1, 2], 1), vec![(0, 1), (0, 2)]);
        assert_eq!(select_dependencies(&cmi, 1.0, &[0, 1, 2], 2), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(select_dependencies(&cmi, 0.5, &[0, 1, 2], 1), vec![(0, 1)]);
    }

    #[test]
    fn cpt_estimation() {
        // alpha = 1, binary child, counts (3, 0).
        let cpt = Cpt::from_counts(1, vec![], 2, &[3, 0], 1.0);
        assert_eq!(cpt.row(0), &[0.8, 0.2]);
        let raw = Cpt::from_counts(2, vec![2], 2, &[3, 1, 0, 0, 2, 2, 5, 0], 0.0);
        assert_eq!(raw.unseen, vec![false, true, false, false]);
        assert_eq!(raw.row(0), &[0.75, 0.25]);
        assert_eq!(raw.row(3), &[1.0, 0.0]);
        assert_eq!(raw.row_index(1, &[1]), 3);
        assert_eq!(estimate_prior(&[90, 10]), vec![0.9, 0.1]);
    }

    fn fixture(n: usize) -> String {
        // `a` tracks the class, `b` copies `a` most of the time, `z` is noise.
        let mut text = String::from("y,a,b,z,v\n");
        for i in 0..n {
            let bad = i % 10 == 0;
            let a = if bad {
                if i % 30 == 0 {
                    "q"
                } else {
                    "p"
                }
            } else if i % 7 == 0 {
                "p"
            } else {
                "q"
            };
            let b = if i % 5 == 0 {
                if a == "p" {
                    "s"
                } else {
                    "r"
                }
            } else if a == "p" {
                "r"
            } else {
                "s"
            };
            let z = ["u", "v", "w"][i % 3];
            let v = if bad { 3.0 + (i % 11) as f64 / 10.0 } else { (i % 13) as f64 / 10.0 };
            text.push_str(&format!("{},{a},{b},{z},{v}\n", if bad { "bad" } else { "good" }));
        }
        text
    }

    fn schema() -> Schema {
        Schema::new(
            "y",
            vec![
                VariableSpec::categorical("a"),
                VariableSpec::categorical("b"),
                VariableSpec::categorical("z"),
                VariableSpec::continuous("v", Discretizer::Entropy),
            ],
        )
    }

    #[test]
    fn training_reads_data_four_times() {
        let src = CsvSource::from_bytes(fixture(3000));
        let model = train(&schema(), &src).unwrap();
        assert_eq!(src.passes(), 4);
        assert_eq!(model.training.passes, 4);
        assert_eq!(model.training.rows, 3000);
        assert_eq!(model.positive, "bad");
        assert_eq!(model.prior, vec![0.1, 0.9]);
        // Ranking non-increasing in MI, every selected node has its class MI recorded.
        assert!(model.nodes.windows(2).all(|w| w[0].mi >= w[1].mi));
        for node in &model.nodes {
            assert!(node.parents.len() <= 1);
            assert!(node.parents.iter().all(|&p| p < model.nodes.iter().position(|n| n.name == node.name).unwrap()));
            for r in 0..node.cpt.rows() {
                if !node.cpt.unseen[r] {
                    assert!((node.cpt.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn zero_t_prime_keeps_only_the_top_field() {
        let mut s = schema();
        s.t_prime = 0.0;
        let src = CsvSource::from_bytes(fixture(3000));
        let model = train(&s, &src).unwrap();
        assert_eq!(model.nodes.len(), 1);
        let best = model.node_scores.iter().max_by(|a, b| a.mi.total_cmp(&b.mi)).unwrap();
        assert_eq!(model.nodes[0].name, best.node);
        assert_eq!(src.passes(), 4);
    }

    #[test]
    fn retraining_is_bit_identical() {
        let text = fixture(2000);
        let a = train(&schema(), &CsvSource::from_bytes(text.clone())).unwrap();
        let b = train(&schema(), &CsvSource::from_bytes(text)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn model_json_round_trip_is_lossless() {
        let mut s = schema();
        s.smoothing = 0.3;
        s.window = 2;
        let model = train(&s, &CsvSource::from_bytes(fixture(1500))).unwrap();
        let back = NetworkModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn constant_class_is_an_error() {
        let src = CsvSource::from_bytes("y,a,b,z,v\ng,p,r,u,1\ng,q,s,v,2\n");
        assert!(matches!(train(&schema(), &src), Err(TrainError::Outcome(OutcomeError::ConstantClass(_)))));
    }

    #[test]
    fn size_guard_names_the_pair() {
        let mut s = schema();
        s.t_prime = 1.0;
        s.max_model_cells = 10;
        let err = train(&s, &CsvSource::from_bytes(fixture(1000))).unwrap_err();
        assert!(matches!(err, TrainError::PairSize { .. }), "{err}");
    }

    #[test]
    fn windowed_training_adds_lag_nodes() {
        let mut s = schema();
        s.window = 3;
        s.t_prime = 1.0;
        let model = train(&s, &CsvSource::from_bytes(fixture(1200))).unwrap();
        assert_eq!(model.node_scores.len(), 12);
        assert_eq!(model.node_scores[1].node, "a@1");
        assert_eq!(model.training.passes, 4);
    }

    #[test]
    fn unknown_positive_class() {
        let mut s = schema();
        s.positive = Some("ugly".into());
        assert!(matches!(train(&s, &CsvSource::from_bytes(fixture(300))), Err(TrainError::UnknownPositive(_))));
    }
}
