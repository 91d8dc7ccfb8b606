//! Command-line front end.
//!
//! Every command reads and writes files only; the one-line summary and any
//! error go to standard error. Exit codes: 0 success, 1 runtime failure,
//! 2 usage error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::baselines::{self, BaselineError, BaselineOptions, DiscriminantKind};
use crate::dataset::CsvSource;
use crate::eval::{self, EvalError, EvalReport, ReportMetadata};
use crate::inference::{self, decide, ClassificationWriter, InferenceError};
use crate::schema::{parse_schema, Schema, SchemaError};
use crate::structure::{train, ModelIoError, NetworkModel, TrainError};
use crate::synthgen::{self, GenConfig, GenError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Schema { path: PathBuf, source: SchemaError },
    #[error("positive class `{0}` is not a class of the model")]
    UnknownPositive(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Model(#[from] ModelIoError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("cannot write classifications: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Parser)]
#[command(name = "rarebn", version, about = "Bayesian network classifier for rare binary outcomes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Linear,
    Quadratic,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset, its truth model and schema.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a network model in four passes over the data.
    Train {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write class posteriors and labels for every record.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = parse_fraction)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
        /// Class scored against the threshold (default: the model's).
        #[arg(long)]
        positive: Option<String>,
        /// Fail on categorical values unseen in training.
        #[arg(long)]
        strict: bool,
    },
    /// Compute an F/C/V row from a classification file and labelled data.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        positive: String,
        #[arg(long)]
        out: PathBuf,
        /// Schema naming the class column.
        #[arg(long, conflicts_with = "class")]
        schema: Option<PathBuf>,
        /// Class column name.
        #[arg(long, default_value = "class")]
        class: String,
        /// Threshold recorded in the report.
        #[arg(long, value_parser = parse_fraction)]
        threshold: Option<f64>,
        /// Also write the row as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evaluate a model at every threshold of a grid.
    Sweep {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "0.10:0.90:0.05")]
        grid: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        positive: Option<String>,
        /// Also write the rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Fit a discriminant-analysis baseline and classify.
    Baseline {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Records to classify (default: the training data).
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        positive: Option<String>,
        /// Added to covariance diagonals.
        #[arg(long)]
        ridge: Option<f64>,
        /// Expand categorical fields into indicator columns.
        #[arg(long)]
        one_hot: bool,
    },
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn load_schema(path: &Path) -> Result<Schema, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
    parse_schema(&text).map_err(|source| CliError::Schema { path: path.into(), source })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Write { path: path.into(), source })
}

fn require_file(path: &Path) -> Result<(), CliError> {
    fs::metadata(path).map(|_| ()).map_err(|source| CliError::Read { path: path.into(), source })
}

fn positive_index(model: &NetworkModel, positive: Option<&str>) -> Result<usize, CliError> {
    let name = positive.unwrap_or(&model.positive);
    model.class_index(name).ok_or_else(|| CliError::UnknownPositive(name.to_string()))
}

fn display(p: &Path) -> Option<String> {
    Some(p.display().to_string())
}

fn execute(command: Command) -> Result<String, CliError> {
    match command {
        Command::Gen { config, out } => {
            let cfg = GenConfig::load(&config)?;
            let g = synthgen::generate(&cfg, &out)?;
            Ok(format!(
                "gen: rows={} variables={} seed={} data={}",
                cfg.n,
                g.model.variables.len(),
                cfg.seed,
                g.data.display()
            ))
        }
        Command::Train { schema, data, out } => {
            let schema = load_schema(&schema)?;
            require_file(&data)?;
            let source = CsvSource::from_path(&data);
            let model = train(&schema, &source)?;
            model.save(&out)?;
            Ok(format!(
                "train: passes={} rows={} rejected={} nodes={} dependencies={} positive={} model={}",
                source.passes(),
                model.training.rows,
                model.training.rejected,
                model.nodes.len(),
                model.dependencies.len(),
                model.positive,
                out.display()
            ))
        }
        Command::Classify { model, data, threshold, out, positive, strict } => {
            let model = NetworkModel::load(&model)?;
            let pos = positive_index(&model, positive.as_deref())?;
            require_file(&data)?;
            let source = CsvSource::from_path(&data);
            let mut writer = ClassificationWriter::new(create(&out)?, model.classes())?;
            let mut flagged = 0u64;
            let rows = inference::score_source(&model, &source, strict, |scored| {
                let c = decide(&scored.posterior.probabilities, pos, threshold);
                flagged += u64::from(c == pos);
                writer.write(
                    scored.id,
                    &scored.posterior.probabilities,
                    &model.classes()[c],
                    &scored.posterior.skipped_summary(),
                )?;
                Ok(())
            })?;
            writer.finish()?;
            Ok(format!(
                "classify: records={rows} flagged={flagged} positive={} threshold={threshold} out={}",
                model.classes()[pos],
                out.display()
            ))
        }
        Command::Evaluate { pred, data, positive, out, schema, class, threshold, csv } => {
            let class = match schema {
                Some(s) => load_schema(&s)?.class_var,
                None => class,
            };
            let predicted = eval::read_predicted_labels(&pred)?;
            let actual = eval::actual_labels(&data, &class)?;
            let (row, unmatched) = eval::evaluate_predictions(&predicted, &actual, &positive, threshold)?;
            let report = EvalReport {
                metadata: ReportMetadata {
                    predictions: display(&pred),
                    dataset: display(&data),
                    positive: positive.clone(),
                    grid: threshold.into_iter().collect(),
                    records: row.counts.total(),
                    unmatched,
                    ..Default::default()
                },
                rows: vec![row.clone()],
            };
            report.write_json(&out)?;
            if let Some(path) = csv {
                eval::write_rows_csv(&report.rows, create(&path)?)?;
            }
            Ok(format!(
                "evaluate: records={} F={}% C={}% V={} unmatched={unmatched}",
                row.counts.total(),
                row.f_text(),
                row.c_text(),
                row.v
            ))
        }
        Command::Sweep { model: model_path, data, grid, out, positive, csv } => {
            let grid = eval::parse_grid(&grid)?;
            let model = NetworkModel::load(&model_path)?;
            let pos = positive_index(&model, positive.as_deref())?;
            require_file(&data)?;
            let source = CsvSource::from_path(&data);
            let mut scores = Vec::new();
            let mut actual = Vec::new();
            let positive = model.classes()[pos].clone();
            inference::score_source(&model, &source, false, |scored| {
                if let Some(a) = scored.actual {
                    scores.push(scored.posterior.probabilities[pos]);
                    actual.push(a == positive);
                }
                Ok(())
            })?;
            let rows = eval::sweep(&scores, &actual, &grid)?;
            let report = EvalReport {
                metadata: ReportMetadata {
                    model: display(&model_path),
                    dataset: display(&data),
                    positive,
                    grid,
                    records: scores.len() as u64,
                    ..Default::default()
                },
                rows,
            };
            report.write_json(&out)?;
            if let Some(path) = csv {
                eval::write_rows_csv(&report.rows, create(&path)?)?;
            }
            Ok(format!("sweep: records={} thresholds={} out={}", scores.len(), report.rows.len(), out.display()))
        }
        Command::Baseline { kind, schema, data, out, test, positive, ridge, one_hot } => {
            let schema = load_schema(&schema)?;
            require_file(&data)?;
            let kind = match kind {
                Kind::Linear => DiscriminantKind::Linear,
                Kind::Quadratic => DiscriminantKind::Quadratic,
            };
            let source = CsvSource::from_path(&data);
            let fitted = baselines::fit_from_source(
                &schema,
                &source,
                kind,
                positive.as_deref(),
                BaselineOptions { ridge, one_hot },
            )?;
            let target = match &test {
                Some(t) => {
                    require_file(t)?;
                    CsvSource::from_path(t)
                }
                None => CsvSource::from_path(&data),
            };
            let rows = baselines::write_scores(&fitted, &schema, &target, create(&out)?)?;
            Ok(format!(
                "baseline: kind={} features={} fitted={} dropped={} classified={rows} positive={} out={}",
                match kind {
                    DiscriminantKind::Linear => "linear",
                    DiscriminantKind::Quadratic => "quadratic",
                },
                fitted.features.names.len(),
                fitted.used,
                fitted.dropped,
                fitted.classes[1],
                out.display()
            ))
        }
    }
}

/// Runs one command line (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(summary) => {
            eprintln!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
