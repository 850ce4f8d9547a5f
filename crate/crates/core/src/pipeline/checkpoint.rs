//! Append-only JSON-lines log of finished cells, so an interrupted sweep
//! resumes where it stopped.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::RunRecord;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Header {
    fingerprint: String,
}

pub(super) struct Checkpoint {
    path: PathBuf,
    file: Mutex<File>,
}

impl Checkpoint {
    /// Opens or creates the log. Returns records already present; a trailing
    /// partial line from an interrupted write is cut off.
    pub(super) fn open(path: &Path, fingerprint: &str) -> Result<(Self, Vec<RunRecord>)> {
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(|e| Error::io(path, e))?;

        let mut records = Vec::new();
        let mut valid_len = 0usize;
        let mut seen_header = false;
        for (no, line) in text.split_inclusive('\n').enumerate() {
            if !line.ends_with('\n') {
                break;
            }
            if !seen_header {
                let header: Header = serde_json::from_str(line)
                    .map_err(|e| Error::Syntax { line: no + 1, message: format!("checkpoint header: {e}") })?;
                if header.fingerprint != fingerprint {
                    return Err(Error::invalid(format!(
                        "checkpoint {} was written for a different configuration; remove it or choose another path",
                        path.display()
                    )));
                }
                seen_header = true;
            } else {
                let r: RunRecord = serde_json::from_str(line)
                    .map_err(|e| Error::Syntax { line: no + 1, message: format!("checkpoint record: {e}") })?;
                records.push(r);
            }
            valid_len += line.len();
        }
        if valid_len < text.len() {
            file.set_len(valid_len as u64).map_err(|e| Error::io(path, e))?;
        }
        let cp = Checkpoint { path: path.to_path_buf(), file: Mutex::new(file) };
        if !seen_header {
            cp.write_line(&serde_json::to_string(&Header { fingerprint: fingerprint.to_string() }).expect("header"))?;
        }
        Ok((cp, records))
    }

    pub(super) fn append(&self, record: &RunRecord) -> Result<()> {
        let line = serde_json::to_string(record).map_err(|e| Error::invalid(format!("checkpoint record: {e}")))?;
        self.write_line(&line)
    }

    fn write_line(&self, line: &str) -> Result<()> {
        let mut f = self.file.lock().expect("checkpoint writer poisoned");
        f.write_all(format!("{line}\n").as_bytes()).map_err(|e| Error::io(&self.path, e))?;
        f.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Serializes non-finite accuracies of failed cells as JSON `null`.
pub(super) mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}
