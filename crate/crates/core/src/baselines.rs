//! Linear and quadratic discriminant analysis on the continuous features.
//!
//! Population 1 is the negative class and population 2 the positive one.
//! With sample sizes `n1`, `n2` the cutoff is `c = ln(n2 / n1)`:
//!
//! * linear: `L(Y) = (Y - (m1 + m2) / 2)' S^-1 (m1 - m2)`, population 2 iff
//!   `L(Y) < c`;
//! * quadratic: `Q(Y) = (Y - m2)' S2^-1 (Y - m2) - (Y - m1)' S1^-1 (Y - m1)
//!   + ln(|S1| / |S2|)`, population 1 iff `Q(Y) > 2c`.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::dataset::{ClassColumn, CsvSource, DataError, Record};
use crate::inference::ClassificationWriter;
use crate::outcomes::{collect_outcomes, OutcomeError};
use crate::schema::{Schema, VarKind};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("population {population} has {n} complete samples, need at least 2")]
    TooFewSamples { population: u8, n: usize },
    #[error("covariance matrix {0} is singular")]
    Singular(&'static str),
    #[error("expected {expected} features, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("{0} score requested from a {1:?} model")]
    WrongKind(&'static str, DiscriminantKind),
    #[error("schema has no usable features for discriminant analysis")]
    NoFeatures,
    #[error("discriminant analysis needs exactly two classes, found {0}")]
    NotBinary(usize),
    #[error("positive class `{0}` not found in the data")]
    UnknownPositive(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Outcome(#[from] OutcomeError),
    #[error("cannot write classifications: {0}")]
    Output(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscriminantKind {
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Population {
    First,
    Second,
}

#[derive(Debug, Clone)]
struct Precision {
    inverse: DMatrix<f64>,
    ln_det: f64,
}

impl Precision {
    fn new(cov: &DMatrix<f64>, which: &'static str) -> Result<Self, BaselineError> {
        let chol = Cholesky::<f64, Dyn>::new(cov.clone()).ok_or(BaselineError::Singular(which))?;
        let l = chol.l_dirty();
        let ln_det = 2.0 * (0..cov.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>();
        if !ln_det.is_finite() {
            return Err(BaselineError::Singular(which));
        }
        Ok(Self { inverse: chol.inverse(), ln_det })
    }

    fn quad(&self, d: &DVector<f64>) -> f64 {
        d.dot(&(&self.inverse * d))
    }
}

#[derive(Debug, Clone)]
pub struct DiscriminantModel {
    pub kind: DiscriminantKind,
    pub mean1: DVector<f64>,
    pub mean2: DVector<f64>,
    /// Pooled covariance (linear) or S1 (quadratic).
    pub cov1: DMatrix<f64>,
    /// S2; equal to `cov1` for linear models.
    pub cov2: DMatrix<f64>,
    pub n1: usize,
    pub n2: usize,
    /// `ln(n2 / n1)`.
    pub cutoff: f64,
    prec1: Precision,
    prec2: Precision,
}

fn covariance(rows: &[&[f64]], mean: &DVector<f64>) -> DMatrix<f64> {
    let d = mean.len();
    let mut cov = DMatrix::zeros(d, d);
    for row in rows {
        let diff = DVector::from_column_slice(row) - mean;
        cov += &diff * diff.transpose();
    }
    cov / (rows.len() as f64 - 1.0)
}

fn mean_of(rows: &[&[f64]], d: usize) -> DVector<f64> {
    let mut m = DVector::zeros(d);
    for row in rows {
        m += DVector::from_column_slice(row);
    }
    m / rows.len() as f64
}

impl DiscriminantModel {
    /// Builds a model from given parameters. For a linear model `cov1` is
    /// the pooled covariance and `cov2` is ignored.
    pub fn from_parameters(
        kind: DiscriminantKind,
        mean1: DVector<f64>,
        mean2: DVector<f64>,
        cov1: DMatrix<f64>,
        cov2: DMatrix<f64>,
        n1: usize,
        n2: usize,
    ) -> Result<Self, BaselineError> {
        let d = mean1.len();
        for (got, what) in [(mean2.len(), d), (cov1.nrows(), d), (cov1.ncols(), d)] {
            if got != what {
                return Err(BaselineError::Dimension { expected: what, got });
            }
        }
        let cov2 = match kind {
            DiscriminantKind::Linear => cov1.clone(),
            DiscriminantKind::Quadratic => {
                if cov2.nrows() != d || cov2.ncols() != d {
                    return Err(BaselineError::Dimension { expected: d, got: cov2.nrows() });
                }
                cov2
            }
        };
        let (s1, s2) = match kind {
            DiscriminantKind::Linear => ("S", "S"),
            DiscriminantKind::Quadratic => ("S1", "S2"),
        };
        let prec1 = Precision::new(&cov1, s1)?;
        let prec2 = Precision::new(&cov2, s2)?;
        Ok(Self { kind, mean1, mean2, cov1, cov2, n1, n2, cutoff: (n2 as f64 / n1 as f64).ln(), prec1, prec2 })
    }

    pub fn dim(&self) -> usize {
        self.mean1.len()
    }

    fn vector(&self, y: &[f64]) -> Result<DVector<f64>, BaselineError> {
        if y.len() != self.dim() {
            return Err(BaselineError::Dimension { expected: self.dim(), got: y.len() });
        }
        Ok(DVector::from_column_slice(y))
    }

    pub fn lda_score(&self, y: &[f64]) -> Result<f64, BaselineError> {
        if self.kind != DiscriminantKind::Linear {
            return Err(BaselineError::WrongKind("linear", self.kind));
        }
        let y = self.vector(y)?;
        let centered = y - (&self.mean1 + &self.mean2) * 0.5;
        Ok(centered.dot(&(&self.prec1.inverse * (&self.mean1 - &self.mean2))))
    }

    pub fn qda_score(&self, y: &[f64]) -> Result<f64, BaselineError> {
        if self.kind != DiscriminantKind::Quadratic {
            return Err(BaselineError::WrongKind("quadratic", self.kind));
        }
        let y = self.vector(y)?;
        let d2 = self.prec2.quad(&(&y - &self.mean2));
        let d1 = self.prec1.quad(&(&y - &self.mean1));
        Ok(d2 - d1 + (self.prec1.ln_det - self.prec2.ln_det))
    }

    /// Score under the model's own rule.
    pub fn score(&self, y: &[f64]) -> Result<f64, BaselineError> {
        match self.kind {
            DiscriminantKind::Linear => self.lda_score(y),
            DiscriminantKind::Quadratic => self.qda_score(y),
        }
    }

    /// Linear: population 2 iff `L < c`. Quadratic: population 1 iff `Q > 2c`.
    pub fn classify(&self, y: &[f64]) -> Result<Population, BaselineError> {
        let s = self.score(y)?;
        Ok(match self.kind {
            DiscriminantKind::Linear if s < self.cutoff => Population::Second,
            DiscriminantKind::Linear => Population::First,
            DiscriminantKind::Quadratic if s > 2.0 * self.cutoff => Population::First,
            DiscriminantKind::Quadratic => Population::Second,
        })
    }

    /// Probability of population 2 as the logistic of the score margin:
    /// `L - c` for the linear rule, `(Q - 2c) / 2` for the quadratic one.
    pub fn probability_second(&self, y: &[f64]) -> Result<f64, BaselineError> {
        let s = self.score(y)?;
        let margin = match self.kind {
            DiscriminantKind::Linear => s - self.cutoff,
            DiscriminantKind::Quadratic => (s - 2.0 * self.cutoff) / 2.0,
        };
        Ok(1.0 / (1.0 + margin.exp()))
    }
}

/// Fits means and covariances (denominator `n - 1`, pooled with weights
/// `n_k - 1` for the linear model). `ridge` is added to covariance
/// diagonals when given.
pub fn fit_discriminant(
    features: &[Vec<f64>],
    labels: &[Population],
    kind: DiscriminantKind,
    ridge: Option<f64>,
) -> Result<DiscriminantModel, BaselineError> {
    if features.len() != labels.len() {
        return Err(BaselineError::Dimension { expected: features.len(), got: labels.len() });
    }
    let d = features.first().map_or(0, Vec::len);
    if d == 0 {
        return Err(BaselineError::NoFeatures);
    }
    if let Some(bad) = features.iter().find(|f| f.len() != d) {
        return Err(BaselineError::Dimension { expected: d, got: bad.len() });
    }
    let first: Vec<&[f64]> =
        features.iter().zip(labels).filter(|(_, &l)| l == Population::First).map(|(f, _)| f.as_slice()).collect();
    let second: Vec<&[f64]> =
        features.iter().zip(labels).filter(|(_, &l)| l == Population::Second).map(|(f, _)| f.as_slice()).collect();
    for (population, rows) in [(1u8, &first), (2u8, &second)] {
        if rows.len() < 2 {
            return Err(BaselineError::TooFewSamples { population, n: rows.len() });
        }
    }
    let (n1, n2) = (first.len(), second.len());
    let m1 = mean_of(&first, d);
    let m2 = mean_of(&second, d);
    let mut s1 = covariance(&first, &m1);
    let mut s2 = covariance(&second, &m2);
    let ridge_matrix = DMatrix::identity(d, d) * ridge.unwrap_or(0.0);
    match kind {
        DiscriminantKind::Linear => {
            let mut pooled = (&s1 * (n1 as f64 - 1.0) + &s2 * (n2 as f64 - 1.0)) / ((n1 + n2) as f64 - 2.0);
            pooled += &ridge_matrix;
            DiscriminantModel::from_parameters(kind, m1, m2, pooled.clone(), pooled, n1, n2)
        }
        DiscriminantKind::Quadratic => {
            s1 += &ridge_matrix;
            s2 += &ridge_matrix;
            DiscriminantModel::from_parameters(kind, m1, m2, s1, s2, n1, n2)
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BaselineOptions {
    pub ridge: Option<f64>,
    /// Expand categorical fields into indicator columns (last level dropped).
    pub one_hot: bool,
}

/// Maps records to feature vectors; `None` when any feature is missing.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    pub names: Vec<String>,
    continuous: Vec<usize>,
    categorical: Vec<(usize, HashMap<String, usize>, usize)>,
}

impl FeatureMap {
    pub fn features(&self, rec: &Record<'_>) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.names.len());
        for &i in &self.continuous {
            out.push(rec.number(i)?);
        }
        for (i, levels, width) in &self.categorical {
            let v = rec.field(*i)?;
            let mut dummies = vec![0.0; *width];
            if let Some(&l) = levels.get(v) {
                if l < *width {
                    dummies[l] = 1.0;
                }
            }
            out.extend(dummies);
        }
        Some(out)
    }
}

/// Result of fitting a baseline on a dataset.
#[derive(Debug, Clone)]
pub struct FittedBaseline {
    pub model: DiscriminantModel,
    pub features: FeatureMap,
    /// `[negative, positive]` class labels.
    pub classes: [String; 2],
    pub used: u64,
    /// Rows dropped for a missing feature.
    pub dropped: u64,
}

/// Fits a discriminant model on `source`. The positive class becomes
/// population 2; when `positive` is `None` the rarer class is used.
pub fn fit_from_source(
    schema: &Schema,
    source: &CsvSource,
    kind: DiscriminantKind,
    positive: Option<&str>,
    options: BaselineOptions,
) -> Result<FittedBaseline, BaselineError> {
    let continuous: Vec<usize> =
        schema.field_vars.iter().enumerate().filter(|(_, v)| v.is_continuous()).map(|(i, _)| i).collect();
    let mut names: Vec<String> = continuous.iter().map(|&i| schema.field_vars[i].name.clone()).collect();
    let mut categorical = Vec::new();
    if options.one_hot {
        let table = collect_outcomes(schema, source)?;
        for (i, v) in schema.field_vars.iter().enumerate() {
            if v.kind == VarKind::Categorical {
                let symbols = &table.vars[i].symbols;
                let width = symbols.len().saturating_sub(1);
                names.extend(symbols[..width].iter().map(|s| format!("{}={}", v.name, s)));
                let levels = symbols.iter().enumerate().map(|(l, s)| (s.clone(), l)).collect();
                categorical.push((i, levels, width));
            }
        }
    }
    if names.is_empty() {
        return Err(BaselineError::NoFeatures);
    }
    let fmap = FeatureMap { names, continuous, categorical };

    let mut rows = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut dropped = 0u64;
    source.iterate_pass::<BaselineError, _>(schema, |rec| {
        match fmap.features(rec) {
            Some(f) => {
                rows.push(f);
                labels.push(rec.class().expect("class required").to_string());
            }
            None => dropped += 1,
        }
        Ok(())
    })?;

    let mut counts: Vec<(String, usize)> = Vec::new();
    for l in &labels {
        match counts.iter_mut().find(|(c, _)| c == l) {
            Some(e) => e.1 += 1,
            None => counts.push((l.clone(), 1)),
        }
    }
    counts.sort();
    if counts.len() != 2 {
        return Err(BaselineError::NotBinary(counts.len()));
    }
    let positive = match positive {
        Some(p) => counts
            .iter()
            .find(|(c, _)| c == p)
            .map(|(c, _)| c.clone())
            .ok_or_else(|| BaselineError::UnknownPositive(p.to_string()))?,
        None => counts.iter().min_by_key(|(_, n)| *n).expect("two classes").0.clone(),
    };
    let negative = counts.iter().find(|(c, _)| *c != positive).expect("two classes").0.clone();
    let pops: Vec<Population> =
        labels.iter().map(|l| if *l == positive { Population::Second } else { Population::First }).collect();
    let model = fit_discriminant(&rows, &pops, kind, options.ridge)?;
    Ok(FittedBaseline { model, features: fmap, classes: [negative, positive], used: rows.len() as u64, dropped })
}

/// Scores every record of `source` into the shared classification CSV.
/// Rows with a missing feature get the training class proportions and the
/// skip note `features:missing`.
pub fn write_scores<W: Write>(
    fitted: &FittedBaseline,
    schema: &Schema,
    source: &CsvSource,
    out: W,
) -> Result<u64, BaselineError> {
    // Columns follow sorted class order, like the network classifier.
    let mut classes = fitted.classes.to_vec();
    classes.sort();
    let pos_col = classes.iter().position(|c| *c == fitted.classes[1]).expect("positive present");
    let mut writer = ClassificationWriter::new(out, &classes)?;
    let m = &fitted.model;
    let base_rate = m.n2 as f64 / (m.n1 + m.n2) as f64;
    let stats = source.iterate_pass_with::<BaselineError, _>(schema, ClassColumn::Optional, |rec| {
        let (p2, label, note) = match fitted.features.features(rec) {
            Some(y) => {
                let p2 = m.probability_second(&y)?;
                let label = match m.classify(&y)? {
                    Population::First => &fitted.classes[0],
                    Population::Second => &fitted.classes[1],
                };
                (p2, label, "")
            }
            None => {
                let label = if base_rate >= 0.5 { &fitted.classes[1] } else { &fitted.classes[0] };
                (base_rate, label, "features:missing")
            }
        };
        let mut probs = [0.0; 2];
        probs[pos_col] = p2;
        probs[1 - pos_col] = 1.0 - p2;
        writer.write(rec.id(), &probs, label, note)?;
        Ok(())
    })?;
    writer.finish()?;
    Ok(stats.rows)
}
