//! Append-only log of accept/reject decisions on insertion candidates.
//!
//! One JSON object per line. Later decisions for the same candidate
//! supersede earlier ones; nothing is ever removed from the file.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::de_inserter::CandidateStatus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn status(&self) -> CandidateStatus {
        match self {
            Decision::Accept => CandidateStatus::Accepted,
            Decision::Reject => CandidateStatus::Rejected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationDecision {
    pub candidate_key: String,
    pub decision: Decision,
    pub annotator: String,
    /// RFC 3339 / ISO-8601, assigned by whoever records the decision.
    pub timestamp: String,
}

/// Parses a decision log. Any line that is not a decision object is an
/// error naming that line.
pub fn parse_log(text: &str) -> Result<Vec<AnnotationDecision>> {
    let mut out = Vec::new();
    for (idx, line) in text.split('\n').enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let decision = serde_json::from_str(line)
            .map_err(|e| Error::malformed(idx + 1, format!("corrupt decision record: {e}")))?;
        out.push(decision);
    }
    Ok(out)
}

/// Reads a decision log; a missing file is an empty log.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<AnnotationDecision>> {
    let path = path.as_ref();
    match std::fs::read_to_string(path) {
        Ok(text) => parse_log(&text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// The live (latest) decision per candidate key.
pub fn live_decisions(log: &[AnnotationDecision]) -> HashMap<&str, Decision> {
    log.iter().map(|d| (d.candidate_key.as_str(), d.decision)).collect()
}

/// Single writer appending to a decision log, syncing after every record.
#[derive(Debug)]
pub struct DecisionLog {
    file: File,
}

impl DecisionLog {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(DecisionLog { file })
    }

    pub fn append(&mut self, decision: &AnnotationDecision) -> Result<()> {
        let line = serde_json::to_string(decision)?;
        writeln!(self.file, "{line}")
            .and_then(|_| self.file.sync_data())
            .map_err(|e| Error::io("<decision log>", e))
    }
}
