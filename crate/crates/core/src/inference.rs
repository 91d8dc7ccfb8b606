//! Class posteriors from a trained network.
//!
//! Evidence enters one node at a time in rank order, starting from the
//! class prior. A node is skipped when its value is missing, when its CPT
//! row for the observed parent configuration had no training data, or when
//! its likelihood would push some class to probability exactly 0 or 1. A
//! skipped node leaves the posterior as if it had not been observed, but its
//! value still selects the CPT row of its children.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ClassColumn, CsvSource, DataError, MISSING_TOKEN};
use crate::outcomes::OutcomeError;
use crate::schema::Schema;
use crate::structure::{node_index, CaseEncoder, NetworkModel};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Symbol(#[from] OutcomeError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("unknown positive class `{0}`")]
    UnknownPositive(String),
    #[error("threshold {0} is outside [0, 1]")]
    Threshold(f64),
    #[error("cannot write classifications: {0}")]
    Output(#[from] csv::Error),
}

/// Keeps the last `width - 1` rows of every group.
#[derive(Debug)]
pub struct Windower<T> {
    width: usize,
    history: HashMap<Option<String>, VecDeque<T>>,
}

impl<T: Clone> Windower<T> {
    pub fn new(width: usize) -> Self {
        Self { width: width.max(1), history: HashMap::new() }
    }

    /// Adds `row` to its group and returns the window: slot 0 is `row`,
    /// slot `s` the `s`-th predecessor in the group, `None` past the start.
    pub fn push(&mut self, group: Option<&str>, row: T) -> Vec<Option<T>> {
        let mut slots = Vec::with_capacity(self.width);
        slots.push(Some(row.clone()));
        if self.width == 1 {
            return slots;
        }
        let key = group.map(str::to_string);
        let hist = self.history.entry(key).or_default();
        slots.extend((1..self.width).map(|s| hist.get(s - 1).cloned()));
        hist.push_front(row);
        hist.truncate(self.width - 1);
        slots
    }
}

/// Observed values keyed by (variable, window slot). Absent keys and the
/// `?` token are MISSING.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CaseRecord {
    pub id: Option<u64>,
    pub group: Option<String>,
    pub class: Option<String>,
    pub values: BTreeMap<(String, usize), String>,
}

impl CaseRecord {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the slot-0 value of `var`.
    pub fn with(mut self, var: &str, value: &str) -> Self {
        self.set(var, 0, value);
        self
    }

    pub fn set(&mut self, var: &str, slot: usize, value: &str) {
        self.values.insert((var.to_string(), slot), value.to_string());
    }

    pub fn get(&self, var: &str, slot: usize) -> Option<&str> {
        self.values.get(&(var.to_string(), slot)).map(String::as_str).filter(|v| *v != MISSING_TOKEN)
    }
}

/// Builds windowed cases from records in temporal order. Each input record
/// contributes its slot-0 values; slot `s` of a case is the `s`-th earlier
/// record of the same group, MISSING across group boundaries. The class
/// label comes from the current record.
pub fn window_expand(records: &[CaseRecord], schema: &Schema) -> Vec<CaseRecord> {
    let mut windower: Windower<&CaseRecord> = Windower::new(schema.window);
    records
        .iter()
        .map(|rec| {
            let slots = windower.push(rec.group.as_deref(), rec);
            let mut case =
                CaseRecord { id: rec.id, group: rec.group.clone(), class: rec.class.clone(), values: BTreeMap::new() };
            for (s, slot) in slots.iter().enumerate() {
                if let Some(src) = slot {
                    for ((var, src_slot), value) in &src.values {
                        if *src_slot == 0 {
                            case.set(var, s, value);
                        }
                    }
                }
            }
            case
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    Missing,
    Pruned,
    UnseenConfig,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SkipReason::Missing => "missing",
            SkipReason::Pruned => "pruned",
            SkipReason::UnseenConfig => "unseen-config",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedNode {
    pub node: String,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPosterior {
    /// Indexed like `NetworkModel::classes`.
    pub probabilities: Vec<f64>,
    pub skipped: Vec<SkippedNode>,
    /// Nodes whose evidence was incorporated, in order.
    pub order: Vec<String>,
}

impl ClassPosterior {
    /// `name:reason` entries joined by `;`.
    pub fn skipped_summary(&self) -> String {
        self.skipped.iter().map(|s| format!("{}:{}", s.node, s.reason)).collect::<Vec<_>>().join(";")
    }
}

/// Encodes a case against the model alphabets.
pub fn encode_case(model: &NetworkModel, case: &CaseRecord) -> Result<Vec<u32>, InferenceError> {
    let w = model.schema.window;
    let mut out = vec![0u32; model.case_width()];
    for (v, vo) in model.outcomes.vars.iter().enumerate() {
        for s in 0..w {
            out[node_index(v, s, w)] = vo.encode(case.get(&vo.name, s))? as u32;
        }
    }
    Ok(out)
}

pub fn posterior(model: &NetworkModel, case: &CaseRecord) -> Result<ClassPosterior, InferenceError> {
    Ok(posterior_encoded(model, &encode_case(model, case)?))
}

/// Posterior for a case already mapped to outcome indices (see
/// [`encode_case`]).
pub fn posterior_encoded(model: &NetworkModel, case: &[u32]) -> ClassPosterior {
    let w = model.schema.window;
    let k = model.prior.len();
    let mut probs = model.prior.clone();
    let mut skipped = Vec::new();
    let mut order = Vec::new();
    let mut lik = vec![0.0; k];
    let mut next = vec![0.0; k];
    let mut config = Vec::new();

    for node in &model.nodes {
        let vo = &model.outcomes.vars[node.var];
        let x = case[node_index(node.var, node.slot, w)] as usize;
        if x == vo.missing_index() {
            skipped.push(SkippedNode { node: node.name.clone(), reason: SkipReason::Missing });
            continue;
        }
        config.clear();
        let mut parent_missing = false;
        for &p in &node.parents {
            let pn = &model.nodes[p];
            let pv = case[node_index(pn.var, pn.slot, w)] as usize;
            if pv == model.outcomes.vars[pn.var].missing_index() {
                parent_missing = true;
                break;
            }
            config.push(pv);
        }
        let table = if parent_missing { &node.fallback } else { &node.cpt };
        let cfg: &[usize] = if parent_missing { &[] } else { &config };
        let mut unseen = false;
        for (c, l) in lik.iter_mut().enumerate() {
            let r = table.row_index(c, cfg);
            if table.unseen[r] {
                unseen = true;
                break;
            }
            *l = table.row(r)[x];
        }
        if unseen {
            skipped.push(SkippedNode { node: node.name.clone(), reason: SkipReason::UnseenConfig });
            continue;
        }
        let mut total = 0.0;
        for c in 0..k {
            next[c] = probs[c] * lik[c];
            total += next[c];
        }
        let degenerate = !(total > 0.0 && total.is_finite()) || {
            next.iter_mut().for_each(|p| *p /= total);
            next.iter().any(|&p| p == 0.0 || p == 1.0)
        };
        if degenerate {
            skipped.push(SkippedNode { node: node.name.clone(), reason: SkipReason::Pruned });
            continue;
        }
        probs.copy_from_slice(&next);
        order.push(node.name.clone());
    }
    ClassPosterior { probabilities: probs, skipped, order }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: String,
    pub posterior: ClassPosterior,
}

/// Predicted class index: the positive class iff its probability is at
/// least `threshold`, otherwise the most probable other class.
pub fn decide(probabilities: &[f64], positive: usize, threshold: f64) -> usize {
    if probabilities[positive] >= threshold {
        return positive;
    }
    probabilities
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != positive)
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c)
        .unwrap_or(positive)
}

fn positive_index(model: &NetworkModel, positive: &str) -> Result<usize, InferenceError> {
    model.class_index(positive).ok_or_else(|| InferenceError::UnknownPositive(positive.to_string()))
}

fn check_threshold(threshold: f64) -> Result<(), InferenceError> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(InferenceError::Threshold(threshold))
    }
}

/// Classifies with the model's designated positive class.
pub fn classify(model: &NetworkModel, case: &CaseRecord, threshold: f64) -> Result<Classification, InferenceError> {
    classify_with(model, case, threshold, &model.positive)
}

pub fn classify_with(
    model: &NetworkModel,
    case: &CaseRecord,
    threshold: f64,
    positive: &str,
) -> Result<Classification, InferenceError> {
    check_threshold(threshold)?;
    let pos = positive_index(model, positive)?;
    let posterior = posterior(model, case)?;
    let label = model.classes()[decide(&posterior.probabilities, pos, threshold)].clone();
    Ok(Classification { label, posterior })
}

/// One scored record from a dataset pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRecord {
    pub id: u64,
    pub actual: Option<String>,
    pub posterior: ClassPosterior,
}

/// Scores every well-formed record of `source` in file order, applying the
/// model's window. Labels are optional. Categorical values unseen in
/// training are an error when `strict`, MISSING otherwise.
pub fn score_source<F>(
    model: &NetworkModel,
    source: &CsvSource,
    strict: bool,
    mut sink: F,
) -> Result<u64, InferenceError>
where
    F: FnMut(ScoredRecord) -> Result<(), InferenceError>,
{
    let mut enc = CaseEncoder::new(&model.outcomes, model.schema.window);
    let stats = source.iterate_pass_with::<InferenceError, _>(&model.schema, ClassColumn::Optional, |rec| {
        let case = enc.encode(rec, strict)?;
        sink(ScoredRecord {
            id: rec.id(),
            actual: rec.class().map(str::to_string),
            posterior: posterior_encoded(model, case),
        })
    })?;
    Ok(stats.rows)
}

/// Writer for the classification CSV shared by every classifier:
/// `record_id, P(<class>)..., label, skipped_nodes`.
pub struct ClassificationWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ClassificationWriter<W> {
    pub fn new(out: W, classes: &[String]) -> Result<Self, csv::Error> {
        let mut inner = csv::Writer::from_writer(out);
        let mut header = vec!["record_id".to_string()];
        header.extend(classes.iter().map(|c| format!("P({c})")));
        header.push("label".into());
        header.push("skipped_nodes".into());
        inner.write_record(&header)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, id: u64, probabilities: &[f64], label: &str, skipped: &str) -> Result<(), csv::Error> {
        let mut row = vec![id.to_string()];
        row.extend(probabilities.iter().map(|p| p.to_string()));
        row.push(label.to_string());
        row.push(skipped.to_string());
        self.inner.write_record(&row)
    }

    pub fn finish(mut self) -> Result<(), csv::Error> {
        self.inner.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::PassStats;
    use crate::outcomes::{OutcomeTable, VarOutcomes};
    use crate::schema::VariableSpec;
    use crate::structure::{Cpt, FieldNode};

    /// Two binary fields with hand-set tables; classes sorted as (bad, good).
    fn hand_model() -> NetworkModel {
        let schema = Schema::new("y", vec![VariableSpec::categorical("x"), VariableSpec::categorical("y2")]);
        let outcomes = OutcomeTable {
            classes: vec!["bad".into(), "good".into()],
            vars: vec![
                VarOutcomes::categorical("x", ["0".to_string(), "1".to_string()]),
                VarOutcomes::categorical("y2", ["0".to_string(), "1".to_string()]),
            ],
        };
        // Child cardinality 3 (0, 1, MISSING). Rows: bad, good.
        let x = Cpt {
            classes: 2,
            parent_cards: vec![],
            child_card: 3,
            probs: vec![0.2, 0.8, 0.0, 0.8, 0.2, 0.0],
            unseen: vec![false; 2],
        };
        let y = Cpt {
            classes: 2,
            parent_cards: vec![],
            child_card: 3,
            probs: vec![0.5, 0.5, 0.0, 1.0, 0.0, 0.0],
            unseen: vec![false; 2],
        };
        NetworkModel {
            schema,
            outcomes,
            class_counts: vec![10, 90],
            prior: vec![0.1, 0.9],
            positive: "bad".into(),
            node_scores: vec![],
            pair_scores: vec![],
            dependencies: vec![],
            nodes: vec![
                FieldNode { name: "x".into(), var: 0, slot: 0, mi: 0.2, parents: vec![], cpt: x.clone(), fallback: x },
                FieldNode { name: "y2".into(), var: 1, slot: 0, mi: 0.1, parents: vec![], cpt: y.clone(), fallback: y },
            ],
            training: PassStats::default(),
        }
    }

    #[test]
    fn all_missing_returns_the_prior() {
        let m = hand_model();
        let post = posterior(&m, &CaseRecord::new()).unwrap();
        assert_eq!(post.probabilities, m.prior);
        assert_eq!(post.skipped.len(), 2);
        assert!(post.skipped.iter().all(|s| s.reason == SkipReason::Missing));
    }

    #[test]
    fn single_field_bayes_update() {
        let m = hand_model();
        let post = posterior(&m, &CaseRecord::new().with("x", "1")).unwrap();
        // 0.1 * 0.8 / (0.1 * 0.8 + 0.9 * 0.2)
        assert!((post.probabilities[0] - 0.08 / 0.26).abs() < 1e-15);
        assert!((post.probabilities[0] - 0.307692).abs() < 1e-6);
        assert_eq!(post.order, vec!["x"]);
    }

    #[test]
    fn degenerate_node_is_pruned() {
        let m = hand_model();
        let pruned = posterior(&m, &CaseRecord::new().with("x", "1").with("y2", "1")).unwrap();
        assert!((pruned.probabilities[0] - 0.08 / 0.26).abs() < 1e-15);
        assert_eq!(pruned.skipped, vec![SkippedNode { node: "y2".into(), reason: SkipReason::Pruned }]);
        let as_missing = posterior(&m, &CaseRecord::new().with("x", "1").with("y2", "?")).unwrap();
        assert_eq!(pruned.probabilities, as_missing.probabilities);
    }

    #[test]
    fn unknown_symbol_names_the_variable() {
        let m = hand_model();
        let err = posterior(&m, &CaseRecord::new().with("x", "7")).unwrap_err();
        assert!(err.to_string().contains("`x`"), "{err}");
    }

    #[test]
    fn classify_threshold_is_inclusive() {
        assert_eq!(decide(&[0.51, 0.49], 0, 0.5), 0);
        assert_eq!(decide(&[0.51, 0.49], 0, 0.7), 1);
        assert_eq!(decide(&[0.70, 0.30], 0, 0.7), 0);
        let m = hand_model();
        let c = classify(&m, &CaseRecord::new().with("x", "1"), 0.3).unwrap();
        assert_eq!(c.label, "bad");
        let c = classify(&m, &CaseRecord::new().with("x", "1"), 0.5).unwrap();
        assert_eq!(c.label, "good");
        assert!(matches!(classify_with(&m, &CaseRecord::new(), 0.5, "ugly"), Err(InferenceError::UnknownPositive(_))));
        assert!(matches!(classify(&m, &CaseRecord::new(), 1.5), Err(InferenceError::Threshold(_))));
    }

    fn rec(group: &str, v: &str) -> CaseRecord {
        CaseRecord { group: Some(group.into()), class: Some(v.to_uppercase()), ..CaseRecord::new().with("x", v) }
    }

    #[test]
    fn window_one_is_identity() {
        let schema = Schema::new("y", vec![VariableSpec::categorical("x")]);
        let records = vec![rec("g", "a"), rec("g", "b")];
        assert_eq!(window_expand(&records, &schema), records);
    }

    #[test]
    fn window_two_pads_group_starts() {
        let mut schema = Schema::new("y", vec![VariableSpec::categorical("x")]);
        schema.window = 2;
        let cases = window_expand(&[rec("g", "r1"), rec("g", "r2"), rec("g", "r3")], &schema);
        let view: Vec<(Option<&str>, Option<&str>)> = cases.iter().map(|c| (c.get("x", 1), c.get("x", 0))).collect();
        assert_eq!(view, vec![(None, Some("r1")), (Some("r1"), Some("r2")), (Some("r2"), Some("r3"))]);
        assert_eq!(cases[2].class.as_deref(), Some("R3"));

        let cases = window_expand(&[rec("g1", "a"), rec("g2", "b")], &schema);
        assert!(cases.iter().all(|c| c.get("x", 1).is_none()));
    }

    #[test]
    fn interleaved_groups_keep_their_own_history() {
        let mut w: Windower<u32> = Windower::new(3);
        assert_eq!(w.push(Some("a"), 1), vec![Some(1), None, None]);
        assert_eq!(w.push(Some("b"), 2), vec![Some(2), None, None]);
        assert_eq!(w.push(Some("a"), 3), vec![Some(3), Some(1), None]);
        assert_eq!(w.push(Some("a"), 4), vec![Some(4), Some(3), Some(1)]);
        assert_eq!(w.push(Some("a"), 5), vec![Some(5), Some(4), Some(3)]);
    }

    #[test]
    fn unseen_parent_configuration_is_skipped() {
        let mut m = hand_model();
        // y2 gets x as a field parent; the (bad, x=0) row has no data.
        m.nodes[1].parents = vec![0];
        m.nodes[1].cpt = Cpt {
            classes: 2,
            parent_cards: vec![3],
            child_card: 3,
            probs: vec![
                0.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.5, 0.5, 0.0, //
                0.6, 0.4, 0.0, 0.5, 0.5, 0.0, 0.5, 0.5, 0.0,
            ],
            unseen: vec![true, false, false, false, false, false],
        };
        let post = posterior(&m, &CaseRecord::new().with("x", "0").with("y2", "0")).unwrap();
        assert_eq!(post.skipped[0].reason, SkipReason::UnseenConfig);
        // Missing parent: falls back to P(y2 | class).
        let post = posterior(&m, &CaseRecord::new().with("y2", "0")).unwrap();
        assert_eq!(post.skipped.iter().map(|s| s.reason).collect::<Vec<_>>(), vec![SkipReason::Missing]);
        assert!((post.probabilities[0] - 0.05 / 0.95).abs() < 1e-15);
        // Observed parent with a seen row uses the CPT.
        let post = posterior(&m, &CaseRecord::new().with("x", "1").with("y2", "0")).unwrap();
        assert_eq!(post.order, vec!["x", "y2"]);
    }
}
