//! CSV ingestion and serialization of frequency and severity datasets.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ConcordError, Result};
use crate::pairs::{FrequencyRecord, SeverityRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Frequency,
    Severity,
}

impl FromStr for DatasetKind {
    type Err = ConcordError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency" | "freq" => Ok(DatasetKind::Frequency),
            "severity" | "sev" => Ok(DatasetKind::Severity),
            other => Err(ConcordError::InvalidConfig(format!(
                "unknown dataset kind `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Records {
    Frequency(Vec<FrequencyRecord>),
    Severity(Vec<SeverityRecord>),
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::Frequency(r) => r.len(),
            Records::Severity(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> DatasetKind {
        match self {
            Records::Frequency(_) => DatasetKind::Frequency,
            Records::Severity(_) => DatasetKind::Severity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based line number in the source file (the header is line 1).
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub path: Option<PathBuf>,
    /// Data rows read, accepted or not.
    pub rows: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub records: Records,
    pub source: DataSource,
    pub rejected_rows: Vec<RejectedRow>,
}

impl Dataset {
    pub fn from_records(records: Records) -> Self {
        Self {
            source: DataSource {
                path: None,
                rows: records.len(),
                rejected: 0,
            },
            records,
            rejected_rows: Vec::new(),
        }
    }

    pub fn kind(&self) -> DatasetKind {
        self.records.kind()
    }

    pub fn frequency(&self) -> Option<&[FrequencyRecord]> {
        match &self.records {
            Records::Frequency(r) => Some(r),
            Records::Severity(_) => None,
        }
    }

    pub fn severity(&self) -> Option<&[SeverityRecord]> {
        match &self.records {
            Records::Severity(r) => Some(r),
            Records::Frequency(_) => None,
        }
    }

    /// SHA-256 of the canonical CSV serialization of the accepted records.
    pub fn digest(&self) -> String {
        let mut buffer = Vec::new();
        write_csv(self, &mut buffer).expect("writing to a Vec cannot fail");
        hex::encode(Sha256::digest(&buffer))
    }
}

/// Header names to read each field from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub claim_count: String,
    pub exposure: String,
    pub prediction: String,
    pub claim_size: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            claim_count: "claim_count".into(),
            exposure: "exposure".into(),
            prediction: "prediction".into(),
            claim_size: "claim_size".into(),
        }
    }
}

pub fn ingest_csv(path: &Path, kind: DatasetKind, columns: &ColumnMap) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ConcordError::FileNotFound(path.to_path_buf()),
        _ => ConcordError::Io(e),
    })?;
    let mut dataset = read_csv(file, kind, columns)?;
    dataset.source.path = Some(path.to_path_buf());
    Ok(dataset)
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| ConcordError::MissingColumn(name.to_string()))
}

fn parse_field<T: FromStr>(row: &csv::StringRecord, index: usize, name: &str) -> Result<T, String> {
    let raw = row
        .get(index)
        .ok_or_else(|| format!("missing field `{name}`"))?;
    raw.trim()
        .parse()
        .map_err(|_| format!("cannot parse `{name}` value `{raw}`"))
}

/// Reads a headered CSV. Rows that fail to parse or violate record
/// invariants are skipped and reported; the call fails only if every row
/// is rejected.
pub fn read_csv<R: Read>(reader: R, kind: DatasetKind, columns: &ColumnMap) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let mut rows = 0usize;
    let mut rejected_rows = Vec::new();

    let mut reject = |line: u64, reason: String| {
        warn!("rejecting line {line}: {reason}");
        rejected_rows.push(RejectedRow { line, reason });
    };

    let records = match kind {
        DatasetKind::Frequency => {
            let count_at = column_index(&headers, &columns.claim_count)?;
            let exposure_at = column_index(&headers, &columns.exposure)?;
            let prediction_at = column_index(&headers, &columns.prediction)?;
            let mut out = Vec::new();
            for row in csv.records() {
                let row = row?;
                rows += 1;
                let line = row.position().map_or(rows as u64 + 1, |p| p.line());
                let parsed = (|| {
                    let count: u32 = parse_field(&row, count_at, &columns.claim_count)?;
                    let exposure: f64 = parse_field(&row, exposure_at, &columns.exposure)?;
                    let prediction: f64 = parse_field(&row, prediction_at, &columns.prediction)?;
                    FrequencyRecord::new(count, exposure, prediction).map_err(|e| e.to_string())
                })();
                match parsed {
                    Ok(record) => out.push(record),
                    Err(reason) => reject(line, reason),
                }
            }
            Records::Frequency(out)
        }
        DatasetKind::Severity => {
            let size_at = column_index(&headers, &columns.claim_size)?;
            let prediction_at = column_index(&headers, &columns.prediction)?;
            let mut out = Vec::new();
            for row in csv.records() {
                let row = row?;
                rows += 1;
                let line = row.position().map_or(rows as u64 + 1, |p| p.line());
                let parsed = (|| {
                    let size: f64 = parse_field(&row, size_at, &columns.claim_size)?;
                    let prediction: f64 = parse_field(&row, prediction_at, &columns.prediction)?;
                    SeverityRecord::new(size, prediction).map_err(|e| e.to_string())
                })();
                match parsed {
                    Ok(record) => out.push(record),
                    Err(reason) => reject(line, reason),
                }
            }
            Records::Severity(out)
        }
    };

    if records.is_empty() && rows > 0 {
        return Err(ConcordError::AllRowsRejected { rows });
    }
    if records.is_empty() {
        return Err(ConcordError::EmptyInput);
    }
    Ok(Dataset {
        source: DataSource {
            path: None,
            rows,
            rejected: rejected_rows.len(),
        },
        records,
        rejected_rows,
    })
}

/// Writes the accepted records with the default column names. Floats use
/// the shortest representation that parses back to the same value.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    match &dataset.records {
        Records::Frequency(records) => {
            csv.write_record(["claim_count", "exposure", "prediction"])?;
            for r in records {
                csv.write_record([
                    r.claim_count.to_string(),
                    r.exposure.to_string(),
                    r.prediction.to_string(),
                ])?;
            }
        }
        Records::Severity(records) => {
            csv.write_record(["claim_size", "prediction"])?;
            for r in records {
                csv.write_record([r.claim_size.to_string(), r.prediction.to_string()])?;
            }
        }
    }
    csv.flush()?;
    Ok(())
}
