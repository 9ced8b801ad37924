//! Append-only experiment ledger: one JSON object per line.
//!
//! Appends take an exclusive advisory lock on the file and write each record
//! with a single `write_all` on an `O_APPEND` handle, so concurrent writers
//! (threads or processes) never interleave bytes within a line.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::diff::{Difference, KeyDifference};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

/// Cyclic learning-rate schedule `l_i = α + ((n - i) mod (n + 1)) / n · (β - α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub alpha: f64,
    pub beta: f64,
    pub n: u32,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            alpha: 0.0001,
            beta: 0.003,
            n: 29,
        }
    }
}

impl LrSchedule {
    pub fn rate(&self, epoch: u32) -> f64 {
        let n = self.n as i64;
        let phase = (n - epoch as i64).rem_euclid(n + 1) as f64;
        self.alpha + phase / self.n as f64 * (self.beta - self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub timestamp: String,
    pub cipher_id: u8,
    pub rounds: usize,
    pub format_id: u8,
    pub delta_p: Difference,
    pub delta_k: Option<KeyDifference>,
    pub related_key: bool,
    pub master_seed: u64,
    pub train_size: u64,
    pub test_size: u64,
    pub epochs: u32,
    pub batch_size: u32,
    pub lr: LrSchedule,
    pub repetitions: u32,
    pub accuracy: Option<f64>,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub model_path: Option<String>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cd_rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cd_min_weight: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cd_count_at_min: Option<u64>,
}

impl RunRecord {
    pub fn validate(&self) -> Result<()> {
        if self.status == Status::Ok {
            for (name, v) in [
                ("accuracy", self.accuracy),
                ("tpr", self.tpr),
                ("tnr", self.tnr),
            ] {
                match v {
                    Some(x) if (0.0..=1.0).contains(&x) => {}
                    _ => {
                        return Err(Error::Parse(format!(
                            "record with status ok has {name} = {v:?}"
                        )))
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn now_timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Appends `value` as one JSON line to `path`, creating the file if needed.
pub fn append_json_line<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut line = serde_json::to_vec(value)?;
    line.push(b'\n');
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::file(path, e))?;
    file.lock().map_err(|e| Error::file(path, e))?;
    let res = file.write_all(&line).and_then(|_| file.flush());
    let _ = file.unlock();
    res.map_err(|e| Error::file(path, e))
}

pub fn append_record(path: &Path, record: &RunRecord) -> Result<()> {
    record.validate()?;
    append_json_line(path, record)
}

/// A line that could not be parsed as a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct QueryResult {
    pub records: Vec<RunRecord>,
    pub errors: Vec<LineError>,
}

/// `field=value` equality filter. Strings compare verbatim, other JSON
/// values by their compact JSON text (`rounds=9`, `related_key=true`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldFilter {
    pub field: String,
    pub value: String,
}

impl std::str::FromStr for FieldFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (field, value) = s
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("filter '{s}' is not field=value")))?;
        Ok(FieldFilter {
            field: field.trim().to_string(),
            value: value.trim().to_string(),
        })
    }
}

impl FieldFilter {
    fn matches(&self, obj: &Value) -> bool {
        match obj.get(&self.field) {
            Some(Value::String(s)) => *s == self.value,
            Some(v) => serde_json::to_string(v).is_ok_and(|t| t == self.value),
            None => false,
        }
    }
}

/// Records matching every filter, in file order. Malformed lines are
/// reported and skipped.
pub fn query_records(path: &Path, filters: &[FieldFilter]) -> Result<QueryResult> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut out = QueryResult::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Value>(&line).and_then(|v| {
            let rec = serde_json::from_value::<RunRecord>(v.clone())?;
            Ok((v, rec))
        });
        match parsed {
            Ok((v, rec)) => {
                if filters.iter().all(|f| f.matches(&v)) {
                    out.records.push(rec);
                }
            }
            Err(e) => out.errors.push(LineError {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}
