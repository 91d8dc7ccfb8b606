//! Seeded synthetic datasets drawn from a known network, and the exact
//! posterior under that network.
//!
//! Records are sampled ancestrally: the class first, then every variable in
//! declaration order given the class and, for dependent variables, the
//! already-sampled parent. Missingness is applied independently per cell
//! after sampling, so a child is always drawn from its parent's true value.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::MISSING_TOKEN;
use crate::inference::CaseRecord;
use crate::schema::{Discretizer, Schema, VariableSpec};

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("distribution for {0} does not sum to 1 (sum = {1})")]
    Unnormalized(String, f64),
    #[error("variable `{var}` has no outcome `{symbol}`")]
    InvalidSymbol { var: String, symbol: String },
    #[error("cannot read config {path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot write records: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot serialize truth model: {0}")]
    Json(#[from] serde_json::Error),
}

fn default_classes() -> Vec<String> {
    vec!["good".into(), "bad".into()]
}

fn default_prior() -> f64 {
    0.1
}

fn default_class_var() -> String {
    "class".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalSpec {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenVariableKind {
    /// Outcome distribution per class.
    Categorical { outcomes: Vec<String>, given: BTreeMap<String, Vec<f64>> },
    /// Normal density per class.
    Continuous { given: BTreeMap<String, NormalSpec> },
    /// Outcome distribution per class and parent outcome. The parent must
    /// be an earlier `categorical` variable.
    Dependent { parent: String, outcomes: Vec<String>, given: BTreeMap<String, BTreeMap<String, Vec<f64>>> },
    /// Class-independent categorical noise.
    CategoricalNoise { outcomes: Vec<String>, probs: Vec<f64> },
    /// Class-independent normal noise.
    ContinuousNoise { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenVariable {
    pub name: String,
    #[serde(flatten)]
    pub kind: GenVariableKind,
    #[serde(default)]
    pub missing_rate: f64,
}

/// Consecutive records share a group id, emitted as an extra column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub column: String,
    pub size: usize,
}

/// Settings copied into the emitted schema file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemaSettings {
    pub t_prime: Option<f64>,
    pub t_field: Option<f64>,
    pub max_parents: Option<usize>,
    pub max_bins: Option<usize>,
    pub smoothing: Option<f64>,
    pub window: Option<usize>,
    pub discretizer: Option<Discretizer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: u64,
    pub seed: u64,
    #[serde(default = "default_class_var")]
    pub class_var: String,
    /// `[negative, positive]`.
    #[serde(default = "default_classes")]
    pub classes: Vec<String>,
    /// Probability of the positive class.
    #[serde(default = "default_prior")]
    pub prior: f64,
    pub variables: Vec<GenVariable>,
    #[serde(default)]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub schema: SchemaSettings,
}

impl GenConfig {
    pub fn from_json(text: &str) -> Result<Self, GenError> {
        serde_json::from_str(text).map_err(|e| GenError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, GenError> {
        let text = fs::read_to_string(path).map_err(|e| GenError::Read { path: path.into(), reason: e.to_string() })?;
        serde_json::from_str(&text).map_err(|e| GenError::Read { path: path.into(), reason: e.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruthDistribution {
    /// `probs[class][outcome]`.
    Categorical { outcomes: Vec<String>, probs: Vec<Vec<f64>> },
    /// `params[class]`.
    Normal { params: Vec<NormalSpec> },
    /// `probs[class][parent outcome][outcome]`; `parent` indexes variables.
    Dependent { parent: usize, outcomes: Vec<String>, probs: Vec<Vec<Vec<f64>>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthVariable {
    pub name: String,
    pub noise: bool,
    pub missing_rate: f64,
    pub distribution: TruthDistribution,
}

impl TruthVariable {
    pub fn outcomes(&self) -> Option<&[String]> {
        match &self.distribution {
            TruthDistribution::Categorical { outcomes, .. } | TruthDistribution::Dependent { outcomes, .. } => {
                Some(outcomes)
            }
            TruthDistribution::Normal { .. } => None,
        }
    }
}

/// The exact generative network behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthModel {
    pub class_var: String,
    pub classes: Vec<String>,
    pub prior: Vec<f64>,
    pub variables: Vec<TruthVariable>,
    pub group: Option<GroupSpec>,
}

fn check_distribution(what: String, probs: &[f64], len: usize) -> Result<(), GenError> {
    if probs.len() != len {
        return Err(GenError::Config(format!("{what} has {} probabilities for {len} outcomes", probs.len())));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(GenError::Config(format!("{what} has a negative or non-finite probability")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(GenError::Unnormalized(what, sum));
    }
    Ok(())
}

fn check_outcomes(var: &str, outcomes: &[String]) -> Result<(), GenError> {
    if outcomes.is_empty() {
        return Err(GenError::Config(format!("`{var}` has no outcomes")));
    }
    for (i, o) in outcomes.iter().enumerate() {
        if o.is_empty() || o == MISSING_TOKEN || o.contains([',', '"', '\n', '\r']) {
            return Err(GenError::Config(format!("`{var}` has an unusable outcome `{o}`")));
        }
        if outcomes[..i].contains(o) {
            return Err(GenError::Config(format!("`{var}` repeats outcome `{o}`")));
        }
    }
    Ok(())
}

fn check_normal(what: String, spec: NormalSpec) -> Result<NormalSpec, GenError> {
    if !spec.mean.is_finite() || !(spec.sd > 0.0 && spec.sd.is_finite()) {
        return Err(GenError::Config(format!("{what} needs a finite mean and a positive sd")));
    }
    Ok(spec)
}

fn per_class<T: Clone>(var: &str, classes: &[String], given: &BTreeMap<String, T>) -> Result<Vec<T>, GenError> {
    if given.len() != classes.len() {
        return Err(GenError::Config(format!("`{var}` must give exactly one entry per class")));
    }
    classes
        .iter()
        .map(|c| given.get(c).cloned().ok_or_else(|| GenError::Config(format!("`{var}` has no entry for class `{c}`"))))
        .collect()
}

impl TruthModel {
    /// Validates a config and resolves it into index-addressed tables.
    pub fn from_config(config: &GenConfig) -> Result<Self, GenError> {
        if config.classes.len() != 2 || config.classes[0] == config.classes[1] {
            return Err(GenError::Config("classes must be two distinct labels".into()));
        }
        check_outcomes(&config.class_var, &config.classes)?;
        if !(config.prior > 0.0 && config.prior < 1.0) {
            return Err(GenError::Config(format!("prior {} is outside (0,1)", config.prior)));
        }
        if config.variables.is_empty() {
            return Err(GenError::Config("no variables".into()));
        }
        let classes = &config.classes;
        let mut variables: Vec<TruthVariable> = Vec::with_capacity(config.variables.len());
        for v in &config.variables {
            let name = &v.name;
            if name.is_empty() || *name == config.class_var || variables.iter().any(|t| t.name == *name) {
                return Err(GenError::Config(format!("variable name `{name}` is empty or repeated")));
            }
            if let Some(g) = &config.group {
                if g.column == *name {
                    return Err(GenError::Config(format!("variable `{name}` collides with the group column")));
                }
            }
            if !(0.0..1.0).contains(&v.missing_rate) {
                return Err(GenError::Config(format!("`{name}` missing_rate {} is outside [0,1)", v.missing_rate)));
            }
            let (noise, distribution) = match &v.kind {
                GenVariableKind::Categorical { outcomes, given } => {
                    check_outcomes(name, outcomes)?;
                    let probs = per_class(name, classes, given)?;
                    for (c, p) in classes.iter().zip(&probs) {
                        check_distribution(format!("P({name} | {c})"), p, outcomes.len())?;
                    }
                    (false, TruthDistribution::Categorical { outcomes: outcomes.clone(), probs })
                }
                GenVariableKind::Continuous { given } => {
                    let params = per_class(name, classes, given)?
                        .into_iter()
                        .zip(classes)
                        .map(|(s, c)| check_normal(format!("`{name}` given `{c}`"), s))
                        .collect::<Result<_, _>>()?;
                    (false, TruthDistribution::Normal { params })
                }
                GenVariableKind::Dependent { parent, outcomes, given } => {
                    check_outcomes(name, outcomes)?;
                    let p = variables
                        .iter()
                        .position(|t| {
                            t.name == *parent
                                && !t.noise
                                && matches!(t.distribution, TruthDistribution::Categorical { .. })
                        })
                        .ok_or_else(|| {
                            GenError::Config(format!(
                                "parent `{parent}` of `{name}` is not an earlier categorical variable"
                            ))
                        })?;
                    let parent_outcomes = variables[p].outcomes().expect("categorical").to_vec();
                    let mut probs = Vec::with_capacity(classes.len());
                    for (c, table) in classes.iter().zip(per_class(name, classes, given)?) {
                        if table.len() != parent_outcomes.len() {
                            return Err(GenError::Config(format!(
                                "`{name}` given `{c}` must cover every outcome of `{parent}`"
                            )));
                        }
                        let mut rows = Vec::with_capacity(parent_outcomes.len());
                        for po in &parent_outcomes {
                            let row = table.get(po).ok_or_else(|| {
                                GenError::Config(format!("`{name}` given `{c}` has no row for {parent}={po}"))
                            })?;
                            check_distribution(format!("P({name} | {c}, {parent}={po})"), row, outcomes.len())?;
                            rows.push(row.clone());
                        }
                        probs.push(rows);
                    }
                    (false, TruthDistribution::Dependent { parent: p, outcomes: outcomes.clone(), probs })
                }
                GenVariableKind::CategoricalNoise { outcomes, probs } => {
                    check_outcomes(name, outcomes)?;
                    check_distribution(format!("P({name})"), probs, outcomes.len())?;
                    (
                        true,
                        TruthDistribution::Categorical {
                            outcomes: outcomes.clone(),
                            probs: vec![probs.clone(); classes.len()],
                        },
                    )
                }
                GenVariableKind::ContinuousNoise { mean, sd } => {
                    let s = check_normal(format!("`{name}`"), NormalSpec { mean: *mean, sd: *sd })?;
                    (true, TruthDistribution::Normal { params: vec![s; classes.len()] })
                }
            };
            variables.push(TruthVariable { name: name.clone(), noise, missing_rate: v.missing_rate, distribution });
        }
        if let Some(g) = &config.group {
            if g.size == 0 || g.column.is_empty() || g.column == config.class_var {
                return Err(GenError::Config("group needs a fresh column name and size >= 1".into()));
            }
        }
        Ok(TruthModel {
            class_var: config.class_var.clone(),
            classes: classes.clone(),
            prior: vec![1.0 - config.prior, config.prior],
            variables,
            group: config.group.clone(),
        })
    }

    /// The schema file matching the generated columns.
    pub fn schema(&self, settings: &SchemaSettings) -> Schema {
        let discretizer = settings.discretizer.unwrap_or(Discretizer::Entropy);
        let fields = self
            .variables
            .iter()
            .map(|v| match v.distribution {
                TruthDistribution::Normal { .. } => VariableSpec::continuous(&v.name, discretizer),
                _ => VariableSpec::categorical(&v.name),
            })
            .collect();
        let mut s = Schema::new(&self.class_var, fields);
        s.t_prime = settings.t_prime.unwrap_or(s.t_prime);
        s.t_field = settings.t_field.unwrap_or(s.t_field);
        s.max_parents = settings.max_parents.unwrap_or(s.max_parents);
        s.max_bins = settings.max_bins.unwrap_or(s.max_bins);
        s.smoothing = settings.smoothing.unwrap_or(s.smoothing);
        s.window = settings.window.unwrap_or(s.window);
        s.group_key = self.group.as_ref().map(|g| g.column.clone());
        s.positive = Some(self.classes[1].clone());
        s
    }

    pub fn to_json(&self) -> Result<String, GenError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn weighted(probs: &[f64]) -> WeightedIndex<f64> {
    WeightedIndex::new(probs).expect("validated distribution")
}

enum Sampler {
    Categorical(Vec<WeightedIndex<f64>>),
    Normal(Vec<Normal<f64>>),
    Dependent(usize, Vec<Vec<WeightedIndex<f64>>>),
}

/// Samples `config.n` records as CSV into `out` and returns the truth model.
/// Output is a pure function of the config, seed included.
pub fn generate_to<W: Write>(config: &GenConfig, out: W) -> Result<TruthModel, GenError> {
    let truth = TruthModel::from_config(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let class_dist = weighted(&truth.prior);
    let samplers: Vec<Sampler> = truth
        .variables
        .iter()
        .map(|v| match &v.distribution {
            TruthDistribution::Categorical { probs, .. } => {
                Sampler::Categorical(probs.iter().map(|p| weighted(p)).collect())
            }
            TruthDistribution::Normal { params } => {
                Sampler::Normal(params.iter().map(|s| Normal::new(s.mean, s.sd).expect("validated normal")).collect())
            }
            TruthDistribution::Dependent { parent, probs, .. } => Sampler::Dependent(
                *parent,
                probs.iter().map(|rows| rows.iter().map(|p| weighted(p)).collect()).collect(),
            ),
        })
        .collect();

    let mut w = csv::Writer::from_writer(BufWriter::new(out));
    let mut header = vec![truth.class_var.clone()];
    header.extend(truth.variables.iter().map(|v| v.name.clone()));
    if let Some(g) = &truth.group {
        header.push(g.column.clone());
    }
    w.write_record(&header)?;

    let mut outcome_idx = vec![0usize; samplers.len()];
    let mut row: Vec<String> = vec![String::new(); header.len()];
    for i in 0..config.n {
        let c = class_dist.sample(&mut rng);
        row[0].clone_from(&truth.classes[c]);
        for (j, (sampler, var)) in samplers.iter().zip(&truth.variables).enumerate() {
            let text = match sampler {
                Sampler::Categorical(d) => {
                    outcome_idx[j] = d[c].sample(&mut rng);
                    var.outcomes().expect("categorical")[outcome_idx[j]].clone()
                }
                Sampler::Dependent(parent, d) => {
                    outcome_idx[j] = d[c][outcome_idx[*parent]].sample(&mut rng);
                    var.outcomes().expect("dependent")[outcome_idx[j]].clone()
                }
                Sampler::Normal(d) => d[c].sample(&mut rng).to_string(),
            };
            // Always draw the mask so the stream does not depend on rates.
            let missing = rng.random::<f64>() < var.missing_rate;
            row[j + 1] = if missing { MISSING_TOKEN.to_string() } else { text };
        }
        if let Some(g) = &truth.group {
            row[header.len() - 1] = format!("g{}", i / g.size as u64);
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| GenError::Csv(e.into()))?;
    Ok(truth)
}

/// Paths written by [`generate`].
#[derive(Debug, Clone)]
pub struct Generated {
    pub data: PathBuf,
    pub truth: PathBuf,
    pub schema: PathBuf,
    pub model: TruthModel,
}

/// Writes `data.csv`, `truth.json` and `schema.txt` into `dir`.
pub fn generate(config: &GenConfig, dir: &Path) -> Result<Generated, GenError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| GenError::Write { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let data = dir.join("data.csv");
    let file = fs::File::create(&data).map_err(io(&data))?;
    let model = generate_to(config, file)?;
    let truth = dir.join("truth.json");
    fs::write(&truth, model.to_json()? + "\n").map_err(io(&truth))?;
    let schema = dir.join("schema.txt");
    fs::write(&schema, model.schema(&config.schema).to_text()).map_err(io(&schema))?;
    Ok(Generated { data, truth, schema, model })
}

fn normal_density(x: f64, s: NormalSpec) -> f64 {
    let z = (x - s.mean) / s.sd;
    (-0.5 * z * z).exp() / (s.sd * (2.0 * std::f64::consts::PI).sqrt())
}

fn lookup(var: &TruthVariable, symbol: &str) -> Result<usize, GenError> {
    var.outcomes()
        .and_then(|o| o.iter().position(|s| s == symbol))
        .ok_or_else(|| GenError::InvalidSymbol { var: var.name.clone(), symbol: symbol.to_string() })
}

/// Exact class posterior under the truth model. Values are read from slot 0
/// of `record`; absent or `?` values are marginalized out, including a
/// missing parent of an observed dependent variable.
pub fn analytic_posterior(truth: &TruthModel, record: &CaseRecord) -> Result<Vec<f64>, GenError> {
    let k = truth.classes.len();
    // Observed outcome index (discrete) or value (continuous) per variable.
    let mut discrete: Vec<Option<usize>> = vec![None; truth.variables.len()];
    let mut weights = truth.prior.clone();
    for (j, var) in truth.variables.iter().enumerate() {
        let Some(raw) = record.get(&var.name, 0) else { continue };
        match &var.distribution {
            TruthDistribution::Normal { params } => {
                let x: f64 = raw
                    .trim()
                    .parse()
                    .map_err(|_| GenError::InvalidSymbol { var: var.name.clone(), symbol: raw.to_string() })?;
                for c in 0..k {
                    weights[c] *= normal_density(x, params[c]);
                }
            }
            _ => discrete[j] = Some(lookup(var, raw)?),
        }
    }
    for (j, var) in truth.variables.iter().enumerate() {
        let TruthDistribution::Categorical { probs, .. } = &var.distribution else { continue };
        let children: Vec<(usize, &Vec<Vec<Vec<f64>>>)> = truth
            .variables
            .iter()
            .enumerate()
            .filter_map(|(d, v)| match &v.distribution {
                TruthDistribution::Dependent { parent, probs, .. } if *parent == j && discrete[d].is_some() => {
                    Some((discrete[d].expect("observed"), probs))
                }
                _ => None,
            })
            .collect();
        let outcomes: Vec<usize> = match discrete[j] {
            Some(x) => vec![x],
            None if children.is_empty() => continue,
            None => (0..probs[0].len()).collect(),
        };
        for c in 0..k {
            let factor: f64 = outcomes
                .iter()
                .map(|&x| probs[c][x] * children.iter().map(|(y, table)| table[c][x][*y]).product::<f64>())
                .sum();
            weights[c] *= factor;
        }
    }
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}
