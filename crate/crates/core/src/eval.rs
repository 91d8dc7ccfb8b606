//! F/C/V evaluation for imbalanced binary classification.
//!
//! `F` is the share of actual negatives flagged positive, `C` the share of
//! actual positives flagged positive and `V` the volume ratio `FP:TP`.
//! Percentages and ratios are rounded half-up with integer arithmetic.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DataError, MISSING_TOKEN};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction and actual lists differ in length ({predictions} vs {actuals})")]
    LengthMismatch { predictions: usize, actuals: usize },
    #[error("label `{0}` is neither the positive class nor the single negative class")]
    UnknownLabel(String),
    #[error("rates are undefined: {positives} actual positives, {negatives} actual negatives")]
    UndefinedRate { positives: u64, negatives: u64 },
    #[error("nothing to evaluate")]
    Empty,
    #[error("invalid threshold grid: {0}")]
    Grid(String),
    #[error("cannot read predictions {path}: {reason}")]
    Predictions { path: String, reason: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write report: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot write report: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn total(&self) -> u64 {
        self.positives() + self.negatives()
    }

    pub fn add(&mut self, predicted_positive: bool, actual_positive: bool) {
        match (predicted_positive, actual_positive) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

/// Counts cells for binary labels. All labels other than `positive` must be
/// one and the same negative label.
pub fn confusion<S: AsRef<str>>(
    predictions: &[S],
    actuals: &[S],
    positive: &str,
) -> Result<ConfusionCounts, EvalError> {
    if predictions.len() != actuals.len() {
        return Err(EvalError::LengthMismatch { predictions: predictions.len(), actuals: actuals.len() });
    }
    let mut negative: Option<String> = None;
    let mut is_positive = |label: &str| -> Result<bool, EvalError> {
        if label == positive {
            return Ok(true);
        }
        match &negative {
            None => negative = Some(label.to_string()),
            Some(n) if n != label => return Err(EvalError::UnknownLabel(label.to_string())),
            Some(_) => {}
        }
        Ok(false)
    };
    let mut counts = ConfusionCounts::default();
    for (p, a) in predictions.iter().zip(actuals) {
        let a = is_positive(a.as_ref())?;
        let p = is_positive(p.as_ref())?;
        counts.add(p, a);
    }
    Ok(counts)
}

/// A non-negative decimal stored as an integer count of `10^-places` units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fixed {
    units: u64,
    places: u32,
}

impl Fixed {
    /// `numerator / denominator` rounded half-up to `places` decimals.
    pub fn ratio(numerator: u64, denominator: u64, places: u32) -> Self {
        let scale = 10u128.pow(places);
        let (n, d) = (numerator as u128, denominator as u128);
        let units = (2 * n * scale + d) / (2 * d);
        Fixed { units: units as u64, places }
    }

    pub fn units(&self) -> u64 {
        self.units
    }

    pub fn to_f64(self) -> f64 {
        self.units as f64 / 10f64.powi(self.places as i32)
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scale = 10u64.pow(self.places);
        if self.places == 0 {
            return write!(f, "{}", self.units);
        }
        write!(f, "{}.{:0width$}", self.units / scale, self.units % scale, width = self.places as usize)
    }
}

/// Volume ratio `FP:TP` normalised to `x.x:1`.
pub fn volume_ratio(fp: u64, tp: u64) -> String {
    if fp == 0 {
        "0:1".to_string()
    } else if tp == 0 {
        "∞:1".to_string()
    } else {
        format!("{}:1", Fixed::ratio(fp, tp, 1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FCVRow {
    pub threshold: Option<f64>,
    /// `100 * FP / N`, two decimals.
    pub f_pct: f64,
    /// `100 * TP / P`, two decimals.
    pub c_pct: f64,
    pub v: String,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    pub accuracy: f64,
}

impl FCVRow {
    pub fn f_text(&self) -> String {
        format!("{:.2}", self.f_pct)
    }

    pub fn c_text(&self) -> String {
        format!("{:.2}", self.c_pct)
    }
}

pub fn fcv(counts: ConfusionCounts, threshold: Option<f64>) -> Result<FCVRow, EvalError> {
    let (p, n) = (counts.positives(), counts.negatives());
    if p == 0 || n == 0 {
        return Err(EvalError::UndefinedRate { positives: p, negatives: n });
    }
    Ok(FCVRow {
        threshold,
        f_pct: Fixed::ratio(100 * counts.fp, n, 2).to_f64(),
        c_pct: Fixed::ratio(100 * counts.tp, p, 2).to_f64(),
        v: volume_ratio(counts.fp, counts.tp),
        counts,
        accuracy: (counts.tp + counts.tn) as f64 / (p + n) as f64,
    })
}

fn check_grid(grid: &[f64]) -> Result<(), EvalError> {
    if grid.is_empty() {
        return Err(EvalError::Grid("empty grid".into()));
    }
    if let Some(t) = grid.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(EvalError::Grid(format!("threshold {t} is outside (0,1)")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::Grid("thresholds must be strictly increasing".into()));
    }
    Ok(())
}

/// One row per grid threshold, predicting positive iff score ≥ threshold.
pub fn sweep(scores: &[f64], actual_positive: &[bool], grid: &[f64]) -> Result<Vec<FCVRow>, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    if scores.len() != actual_positive.len() {
        return Err(EvalError::LengthMismatch { predictions: scores.len(), actuals: actual_positive.len() });
    }
    check_grid(grid)?;
    grid.iter()
        .map(|&t| {
            let mut counts = ConfusionCounts::default();
            for (&s, &a) in scores.iter().zip(actual_positive) {
                counts.add(s >= t, a);
            }
            fcv(counts, Some(t))
        })
        .collect()
}

/// 0.10, 0.15, ..., 0.90.
pub fn default_grid() -> Vec<f64> {
    (0..17).map(|k| (10 + 5 * k) as f64 / 100.0).collect()
}

/// Parses `a:b:step` into the inclusive grid `a, a+step, ..., ≤ b`. Grid
/// points are rounded to 10 decimals so that `0.7` from a grid equals `0.7`
/// typed on the command line.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, EvalError> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || EvalError::Grid(format!("expected a:b:step, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let (a, b, step) = (nums[0], nums[1], nums[2]);
    if step.is_nan() || step <= 0.0 || !a.is_finite() || !b.is_finite() || b < a {
        return Err(bad());
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> =
        (0..count).map(|k| format!("{:.10}", a + k as f64 * step).parse::<f64>().expect("formatted float")).collect();
    check_grid(&grid)?;
    Ok(grid)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub model: Option<String>,
    pub predictions: Option<String>,
    pub dataset: Option<String>,
    pub positive: String,
    pub grid: Vec<f64>,
    pub records: u64,
    /// Predictions whose record has no class label in the dataset.
    pub unmatched: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<FCVRow>,
}

impl EvalReport {
    pub fn write_json(&self, path: &Path) -> Result<(), EvalError> {
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(())
    }
}

/// Writes `threshold,F_pct,C_pct,V,TP,FP,TN,FN,accuracy` rows.
pub fn write_rows_csv<W: Write>(rows: &[FCVRow], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["threshold", "F_pct", "C_pct", "V", "TP", "FP", "TN", "FN", "accuracy"])?;
    for r in rows {
        w.write_record([
            r.threshold.map(|t| t.to_string()).unwrap_or_default(),
            r.f_text(),
            r.c_text(),
            r.v.clone(),
            r.counts.tp.to_string(),
            r.counts.fp.to_string(),
            r.counts.tn.to_string(),
            r.counts.fn_.to_string(),
            r.accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Class labels of a dataset keyed by 1-based data-row number, the id used
/// in classification files. Rows without a label are left out.
pub fn actual_labels(path: &Path, class_column: &str) -> Result<HashMap<u64, String>, EvalError> {
    let label = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| DataError::Csv { path: label.clone(), source: e })?;
    let header = rdr.headers().map_err(|e| DataError::Csv { path: label.clone(), source: e })?;
    let col = header
        .iter()
        .position(|h| h == class_column)
        .ok_or_else(|| DataError::MissingColumn { path: label.clone(), column: class_column.to_string() })?;
    let mut out = HashMap::new();
    for (i, row) in rdr.records().enumerate() {
        let Ok(row) = row else { continue };
        if let Some(v) = row.get(col).filter(|v| !v.is_empty() && *v != MISSING_TOKEN) {
            out.insert(i as u64 + 1, v.to_string());
        }
    }
    Ok(out)
}

/// `(record_id, label)` pairs from a classification CSV.
pub fn read_predicted_labels(path: &Path) -> Result<Vec<(u64, String)>, EvalError> {
    let err = |reason: String| EvalError::Predictions { path: path.display().to_string(), reason };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let header = rdr.headers().map_err(|e| err(e.to_string()))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name).ok_or_else(|| err(format!("no `{name}` column")));
    let (id_col, label_col) = (col("record_id")?, col("label")?);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| err(e.to_string()))?;
        let id = row[id_col].parse::<u64>().map_err(|_| err(format!("bad record_id `{}`", &row[id_col])))?;
        out.push((id, row[label_col].to_string()));
    }
    Ok(out)
}

/// Joins predicted labels with actual labels by record id and computes one
/// F/C/V row.
pub fn evaluate_predictions(
    predicted: &[(u64, String)],
    actual: &HashMap<u64, String>,
    positive: &str,
    threshold: Option<f64>,
) -> Result<(FCVRow, u64), EvalError> {
    let mut preds = Vec::with_capacity(predicted.len());
    let mut acts = Vec::with_capacity(predicted.len());
    let mut unmatched = 0;
    for (id, label) in predicted {
        match actual.get(id) {
            Some(a) => {
                preds.push(label.as_str());
                acts.push(a.as_str());
            }
            None => unmatched += 1,
        }
    }
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let counts = confusion(&preds, &acts, positive)?;
    Ok((fcv(counts, threshold)?, unmatched))
}
