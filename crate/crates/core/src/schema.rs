//! Schema files: which columns are modelled, how, and with which thresholds.
//!
//! The format is line oriented. `#` starts a comment, blank lines are
//! ignored and every other line is one directive:
//!
//! ```text
//! class <name>
//! var <name> categorical
//! var <name> continuous [entropy|quantile]
//! t_prime <float>          t_field <float>
//! window <int>             group <name>
//! max_parents <int>        max_bins <int>
//! smoothing <float>        max_model_cells <int>
//! seed <int>               reservoir <int>
//! max_outcomes <int>       positive <class label>
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_T_PRIME: f64 = 0.95;
pub const DEFAULT_T_FIELD: f64 = 0.35;
pub const DEFAULT_MAX_PARENTS: usize = 1;
pub const DEFAULT_MAX_BINS: usize = 16;
pub const DEFAULT_MAX_MODEL_CELLS: u64 = 20_000_000;
pub const DEFAULT_RESERVOIR: usize = 100_000;
pub const DEFAULT_MAX_OUTCOMES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// How a continuous variable is cut into bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discretizer {
    /// Supervised greedy information-gain splitting.
    Entropy,
    /// Equal-frequency bins.
    Quantile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "discretizer")]
pub enum VarKind {
    Categorical,
    Continuous(Discretizer),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: VarKind,
}

impl VariableSpec {
    pub fn categorical(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: VarKind::Categorical }
    }

    pub fn continuous(name: impl Into<String>, discretizer: Discretizer) -> Self {
        Self { name: name.into(), kind: VarKind::Continuous(discretizer) }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, VarKind::Continuous(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub class_var: String,
    pub field_vars: Vec<VariableSpec>,
    /// Cumulative MI threshold for class-to-field selection.
    pub t_prime: f64,
    /// Cumulative conditional MI threshold for field-to-field dependencies.
    pub t_field: f64,
    pub window: usize,
    pub group_key: Option<String>,
    pub max_parents: usize,
    pub max_bins: usize,
    pub smoothing: f64,
    pub max_model_cells: u64,
    pub seed: u64,
    pub reservoir_capacity: usize,
    pub max_outcomes: usize,
    /// Label of the positive (rare) class, when declared.
    pub positive: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemaError {
    #[error("line {line}: duplicate variable name `{name}`")]
    Duplicate { line: usize, name: String },
    #[error("line {line}: unknown kind `{token}` (expected categorical, continuous, entropy or quantile)")]
    UnknownKind { line: usize, token: String },
    #[error("line {line}: {directive} = {value} is outside [0, 1]")]
    ThresholdRange { line: usize, directive: String, value: f64 },
    #[error("line {line}: window must be >= 1, got {value}")]
    WindowRange { line: usize, value: i64 },
    #[error("line {line}: invalid value `{value}` for {directive}")]
    InvalidValue { line: usize, directive: String, value: String },
    #[error("line {line}: unknown directive `{directive}`")]
    UnknownDirective { line: usize, directive: String },
    #[error("line {line}: wrong number of arguments for {directive}")]
    Arity { line: usize, directive: String },
    #[error("line {line}: class variable `{name}` cannot also be a field")]
    ClassInFields { line: usize, name: String },
    #[error("schema declares no class variable")]
    MissingClass,
    #[error("schema declares no field variables")]
    NoFields,
    #[error("invalid schema: {0}")]
    Invalid(String),
}

impl Schema {
    /// A schema with every knob at its default.
    pub fn new(class_var: impl Into<String>, field_vars: Vec<VariableSpec>) -> Self {
        Self {
            class_var: class_var.into(),
            field_vars,
            t_prime: DEFAULT_T_PRIME,
            t_field: DEFAULT_T_FIELD,
            window: 1,
            group_key: None,
            max_parents: DEFAULT_MAX_PARENTS,
            max_bins: DEFAULT_MAX_BINS,
            smoothing: 0.0,
            max_model_cells: DEFAULT_MAX_MODEL_CELLS,
            seed: DEFAULT_SEED,
            reservoir_capacity: DEFAULT_RESERVOIR,
            max_outcomes: DEFAULT_MAX_OUTCOMES,
            positive: None,
        }
    }

    /// Checks the invariants that `parse_schema` enforces line by line, for
    /// schemas assembled in code.
    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.class_var.is_empty() {
            return Err(SchemaError::MissingClass);
        }
        if self.field_vars.is_empty() {
            return Err(SchemaError::NoFields);
        }
        let mut seen = HashSet::new();
        for v in &self.field_vars {
            if v.name == self.class_var {
                return Err(SchemaError::Invalid(format!("class variable `{}` cannot also be a field", v.name)));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(SchemaError::Invalid(format!("duplicate variable `{}`", v.name)));
            }
        }
        for (name, t) in [("t_prime", self.t_prime), ("t_field", self.t_field)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(SchemaError::Invalid(format!("{name} = {t} is outside [0, 1]")));
            }
        }
        if self.window < 1 {
            return Err(SchemaError::Invalid("window must be >= 1".into()));
        }
        if self.max_bins < 1 {
            return Err(SchemaError::Invalid("max_bins must be >= 1".into()));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(SchemaError::Invalid("smoothing must be a finite value >= 0".into()));
        }
        if self.group_key.as_deref() == Some(self.class_var.as_str()) {
            return Err(SchemaError::Invalid("group column cannot be the class".into()));
        }
        Ok(())
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.field_vars.iter().position(|v| v.name == name)
    }

    /// Renders the schema back into the file format. `parse_schema` of the
    /// output yields an equal schema.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "class {}", self.class_var);
        for v in &self.field_vars {
            match v.kind {
                VarKind::Categorical => {
                    let _ = writeln!(out, "var {} categorical", v.name);
                }
                VarKind::Continuous(d) => {
                    let d = match d {
                        Discretizer::Entropy => "entropy",
                        Discretizer::Quantile => "quantile",
                    };
                    let _ = writeln!(out, "var {} continuous {}", v.name, d);
                }
            }
        }
        let _ = writeln!(out, "t_prime {}", self.t_prime);
        let _ = writeln!(out, "t_field {}", self.t_field);
        let _ = writeln!(out, "window {}", self.window);
        if let Some(g) = &self.group_key {
            let _ = writeln!(out, "group {g}");
        }
        let _ = writeln!(out, "max_parents {}", self.max_parents);
        let _ = writeln!(out, "max_bins {}", self.max_bins);
        let _ = writeln!(out, "smoothing {}", self.smoothing);
        let _ = writeln!(out, "max_model_cells {}", self.max_model_cells);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "reservoir {}", self.reservoir_capacity);
        let _ = writeln!(out, "max_outcomes {}", self.max_outcomes);
        if let Some(p) = &self.positive {
            let _ = writeln!(out, "positive {p}");
        }
        out
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, directive: &str, raw: &str) -> Result<T, SchemaError> {
    raw.parse().map_err(|_| SchemaError::InvalidValue {
        line,
        directive: directive.to_string(),
        value: raw.to_string(),
    })
}

fn parse_fraction(line: usize, directive: &str, raw: &str) -> Result<f64, SchemaError> {
    let value: f64 = parse_num(line, directive, raw)?;
    if !(0.0..=1.0).contains(&value) {
        return Err(SchemaError::ThresholdRange { line, directive: directive.to_string(), value });
    }
    Ok(value)
}

pub fn parse_schema(text: &str) -> Result<Schema, SchemaError> {
    let mut schema = Schema::new(String::new(), Vec::new());
    let mut class_line = None;
    let mut names: HashSet<String> = HashSet::new();
    let mut field_lines = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let directive = tokens[0];
        let args = &tokens[1..];
        let single = || -> Result<&str, SchemaError> {
            match args {
                [one] => Ok(*one),
                _ => Err(SchemaError::Arity { line, directive: directive.to_string() }),
            }
        };

        match directive {
            "class" => {
                let name = single()?;
                if !names.insert(name.to_string()) {
                    return Err(SchemaError::Duplicate { line, name: name.to_string() });
                }
                if class_line.is_some() {
                    return Err(SchemaError::Duplicate { line, name: "class".to_string() });
                }
                schema.class_var = name.to_string();
                class_line = Some(line);
            }
            "var" => {
                let (name, kind) = match args {
                    [name, kind] => (*name, parse_kind(line, kind, None)?),
                    [name, kind, disc] => (*name, parse_kind(line, kind, Some(disc))?),
                    _ => return Err(SchemaError::Arity { line, directive: directive.to_string() }),
                };
                if !names.insert(name.to_string()) {
                    if name == schema.class_var {
                        return Err(SchemaError::ClassInFields { line, name: name.to_string() });
                    }
                    return Err(SchemaError::Duplicate { line, name: name.to_string() });
                }
                schema.field_vars.push(VariableSpec { name: name.to_string(), kind });
                field_lines.push(line);
            }
            "t_prime" => schema.t_prime = parse_fraction(line, directive, single()?)?,
            "t_field" => schema.t_field = parse_fraction(line, directive, single()?)?,
            "window" => {
                let raw = single()?;
                let value: i64 = parse_num(line, directive, raw)?;
                if value < 1 {
                    return Err(SchemaError::WindowRange { line, value });
                }
                schema.window = value as usize;
            }
            "group" => schema.group_key = Some(single()?.to_string()),
            "max_parents" => schema.max_parents = parse_num(line, directive, single()?)?,
            "max_bins" => {
                let raw = single()?;
                let value: usize = parse_num(line, directive, raw)?;
                if value == 0 {
                    return Err(SchemaError::InvalidValue {
                        line,
                        directive: directive.to_string(),
                        value: raw.to_string(),
                    });
                }
                schema.max_bins = value;
            }
            "smoothing" => {
                let raw = single()?;
                let value: f64 = parse_num(line, directive, raw)?;
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(SchemaError::InvalidValue {
                        line,
                        directive: directive.to_string(),
                        value: raw.to_string(),
                    });
                }
                schema.smoothing = value;
            }
            "max_model_cells" => schema.max_model_cells = parse_num(line, directive, single()?)?,
            "seed" => schema.seed = parse_num(line, directive, single()?)?,
            "reservoir" => schema.reservoir_capacity = parse_num(line, directive, single()?)?,
            "max_outcomes" => schema.max_outcomes = parse_num(line, directive, single()?)?,
            "positive" => schema.positive = Some(single()?.to_string()),
            other => return Err(SchemaError::UnknownDirective { line, directive: other.to_string() }),
        }
    }

    if class_line.is_none() {
        return Err(SchemaError::MissingClass);
    }
    if schema.field_vars.is_empty() {
        return Err(SchemaError::NoFields);
    }
    if let Some(g) = &schema.group_key {
        if *g == schema.class_var {
            return Err(SchemaError::Invalid("group column cannot be the class".into()));
        }
    }
    Ok(schema)
}

fn parse_kind(line: usize, kind: &str, disc: Option<&&str>) -> Result<VarKind, SchemaError> {
    match (kind, disc.copied()) {
        ("categorical", None) => Ok(VarKind::Categorical),
        ("continuous", None) | ("continuous", Some("entropy")) => Ok(VarKind::Continuous(Discretizer::Entropy)),
        ("continuous", Some("quantile")) => Ok(VarKind::Continuous(Discretizer::Quantile)),
        ("continuous", Some(other)) | ("categorical", Some(other)) => {
            Err(SchemaError::UnknownKind { line, token: other.to_string() })
        }
        (other, _) => Err(SchemaError::UnknownKind { line, token: other.to_string() }),
    }
}
