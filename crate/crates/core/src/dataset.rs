//! Repeatable passes over a CSV dataset.
//!
//! Training reads its input a fixed number of times, so the source keeps a
//! running count of completed passes that callers can inspect afterwards.

use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use csv::StringRecord;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::Schema;

/// Cell value standing for a missing observation.
pub const MISSING_TOKEN: &str = "?";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Unreadable { path: String, source: io::Error },
    #[error("{path}: header is missing required column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("{path}: malformed CSV: {source}")]
    Csv { path: String, source: csv::Error },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassStats {
    /// Complete iterations over the source so far.
    pub passes: u64,
    /// Records visited in the last pass.
    pub rows: u64,
    /// Malformed records skipped in the last pass.
    pub rejected: u64,
}

/// Whether a pass needs the class column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassColumn {
    /// Header must contain it and rows with a missing label are rejected.
    Required,
    /// Used when present; unlabeled rows are kept.
    Optional,
}

#[derive(Debug, Clone)]
enum Origin {
    File(PathBuf),
    Memory(Arc<[u8]>),
}

/// A CSV dataset that can be read from the start any number of times.
#[derive(Debug)]
pub struct CsvSource {
    origin: Origin,
    passes: AtomicU64,
}

/// Column positions of the schema variables in one file's header.
#[derive(Debug, Clone)]
pub struct Projection {
    class: Option<usize>,
    fields: Vec<usize>,
    continuous: Vec<bool>,
    group: Option<usize>,
    width: usize,
}

/// One well-formed row, viewed through the schema.
#[derive(Debug, Clone, Copy)]
pub struct Record<'a> {
    id: u64,
    row: &'a StringRecord,
    proj: &'a Projection,
}

fn present(cell: &str) -> Option<&str> {
    if cell == MISSING_TOKEN {
        None
    } else {
        Some(cell)
    }
}

impl<'a> Record<'a> {
    /// 1-based position among the data rows of the file, rejected rows included.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn class(&self) -> Option<&'a str> {
        self.proj.class.and_then(|c| present(&self.row[c]))
    }

    /// Raw cell of the `i`-th schema field, `None` when missing.
    pub fn field(&self, i: usize) -> Option<&'a str> {
        present(&self.row[self.proj.fields[i]])
    }

    /// Parsed value of a continuous field. Validated when the row was read.
    pub fn number(&self, i: usize) -> Option<f64> {
        self.field(i).map(|s| s.trim().parse().expect("validated on read"))
    }

    pub fn group(&self) -> Option<&'a str> {
        self.proj.group.map(|g| &self.row[g])
    }

    pub fn field_count(&self) -> usize {
        self.proj.fields.len()
    }
}

impl Projection {
    fn resolve(header: &StringRecord, schema: &Schema, class: ClassColumn, path: &str) -> Result<Self, DataError> {
        let find = |name: &str| header.iter().position(|h| h == name);
        let missing = |name: &str| DataError::MissingColumn { path: path.to_string(), column: name.to_string() };
        let class_idx = match (find(&schema.class_var), class) {
            (Some(i), _) => Some(i),
            (None, ClassColumn::Optional) => None,
            (None, ClassColumn::Required) => return Err(missing(&schema.class_var)),
        };
        let fields = schema
            .field_vars
            .iter()
            .map(|v| find(&v.name).ok_or_else(|| missing(&v.name)))
            .collect::<Result<Vec<_>, _>>()?;
        let group = match &schema.group_key {
            Some(g) => Some(find(g).ok_or_else(|| missing(g))?),
            None => None,
        };
        Ok(Self {
            class: class_idx,
            fields,
            continuous: schema.field_vars.iter().map(|v| v.is_continuous()).collect(),
            group,
            width: header.len(),
        })
    }

    fn well_formed(&self, row: &StringRecord, class: ClassColumn) -> bool {
        if row.len() != self.width {
            return false;
        }
        if class == ClassColumn::Required {
            match self.class {
                Some(c) if row[c] != *MISSING_TOKEN => {}
                _ => return false,
            }
        }
        self.fields
            .iter()
            .zip(&self.continuous)
            .all(|(&col, &cont)| !cont || row[col] == *MISSING_TOKEN || row[col].trim().parse::<f64>().is_ok())
    }
}

impl CsvSource {
    pub fn from_path(path: impl Into<PathBuf>) -> Self {
        Self { origin: Origin::File(path.into()), passes: AtomicU64::new(0) }
    }

    pub fn from_bytes(bytes: impl Into<Vec<u8>>) -> Self {
        let bytes: Vec<u8> = bytes.into();
        Self { origin: Origin::Memory(bytes.into()), passes: AtomicU64::new(0) }
    }

    pub fn path(&self) -> Option<&Path> {
        match &self.origin {
            Origin::File(p) => Some(p),
            Origin::Memory(_) => None,
        }
    }

    fn label(&self) -> String {
        match &self.origin {
            Origin::File(p) => p.display().to_string(),
            Origin::Memory(_) => "<memory>".to_string(),
        }
    }

    /// Completed passes over this source.
    pub fn passes(&self) -> u64 {
        self.passes.load(Ordering::SeqCst)
    }

    fn reader(&self) -> Result<csv::Reader<Box<dyn Read + '_>>, DataError> {
        let inner: Box<dyn Read + '_> = match &self.origin {
            Origin::File(p) => Box::new(
                File::open(p).map_err(|source| DataError::Unreadable { path: p.display().to_string(), source })?,
            ),
            Origin::Memory(bytes) => Box::new(&bytes[..]),
        };
        Ok(csv::ReaderBuilder::new().has_headers(true).flexible(true).buffer_capacity(1 << 16).from_reader(inner))
    }

    /// Header row of the file.
    pub fn header(&self) -> Result<Vec<String>, DataError> {
        let mut rdr = self.reader()?;
        let header = rdr.headers().map_err(|source| DataError::Csv { path: self.label(), source })?;
        Ok(header.iter().map(str::to_string).collect())
    }

    /// Visits every well-formed record once, in file order, with the class
    /// column required.
    pub fn iterate_pass<E, F>(&self, schema: &Schema, visitor: F) -> Result<PassStats, E>
    where
        E: From<DataError>,
        F: FnMut(&Record<'_>) -> Result<(), E>,
    {
        self.iterate_pass_with(schema, ClassColumn::Required, visitor)
    }

    pub fn iterate_pass_with<E, F>(&self, schema: &Schema, class: ClassColumn, mut visitor: F) -> Result<PassStats, E>
    where
        E: From<DataError>,
        F: FnMut(&Record<'_>) -> Result<(), E>,
    {
        let path = self.label();
        let mut rdr = self.reader()?;
        let header = rdr.headers().map_err(|source| DataError::Csv { path: path.clone(), source })?.clone();
        let proj = Projection::resolve(&header, schema, class, &path)?;

        let mut row = StringRecord::new();
        let mut id = 0u64;
        let mut rows = 0u64;
        let mut rejected = 0u64;
        loop {
            match rdr.read_record(&mut row) {
                Ok(true) => {}
                Ok(false) => break,
                Err(e) => {
                    if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                        return Err(DataError::Csv { path, source: e }.into());
                    }
                    // Bad UTF-8 and similar: the row is unusable but the
                    // reader can carry on.
                    id += 1;
                    rejected += 1;
                    continue;
                }
            }
            id += 1;
            if !proj.well_formed(&row, class) {
                rejected += 1;
                continue;
            }
            rows += 1;
            visitor(&Record { id, row: &row, proj: &proj })?;
        }
        let passes = self.passes.fetch_add(1, Ordering::SeqCst) + 1;
        Ok(PassStats { passes, rows, rejected })
    }
}
