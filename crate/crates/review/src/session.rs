//! Review session state: candidates, translations and the decision log.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dezh_core::corpus_io::{read_tsv, Corpus, Provenance};
use dezh_core::de_inserter::{insert_particles, CandidateStatus, InsertionCandidate, DEFAULT_PARTICLE};
use dezh_core::decisions::{read_log, AnnotationDecision, Decision, DecisionLog};

use crate::error::{Error, Result};

pub const SOURCE_FILE: &str = "source.tsv";
pub const CANDIDATES_FILE: &str = "candidates.jsonl";
pub const DECISIONS_FILE: &str = "decisions.jsonl";
pub const BASELINE_FILE: &str = "baseline_translations.tsv";
pub const MODIFIED_FILE: &str = "modified_translations.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusFilter {
    Proposed,
    Accepted,
    Rejected,
    All,
}

impl StatusFilter {
    fn matches(&self, status: CandidateStatus) -> bool {
        match self {
            StatusFilter::All => true,
            StatusFilter::Proposed => status == CandidateStatus::Proposed,
            StatusFilter::Accepted => status == CandidateStatus::Accepted,
            StatusFilter::Rejected => status == CandidateStatus::Rejected,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub decision: Decision,
    pub annotator: String,
    pub timestamp: String,
}

/// What the review UI shows for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    pub candidate_key: String,
    pub sentence_id: String,
    pub sentence: String,
    /// The sentence with only this candidate's particle inserted.
    pub modified_sentence: String,
    pub char_offset: usize,
    pub left: String,
    pub right: String,
    pub confidence: f64,
    pub status: CandidateStatus,
    pub baseline_translation: Option<String>,
    pub modified_translation: Option<String>,
    pub history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub total: usize,
    pub proposed: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub decisions: usize,
}

/// A loaded session directory. Every candidate starts out `proposed`; its
/// status afterwards is the latest logged decision.
#[derive(Debug)]
pub struct Session {
    dir: PathBuf,
    source: Corpus,
    particle: String,
    candidates: Vec<InsertionCandidate>,
    index: HashMap<String, usize>,
    baseline: HashMap<String, String>,
    modified: HashMap<String, String>,
    history: Vec<AnnotationDecision>,
    log: DecisionLog,
}

fn read_translations(path: &Path) -> Result<HashMap<String, String>> {
    if !path.exists() {
        return Ok(HashMap::new());
    }
    Ok(read_tsv(path)?.pairs.into_iter().map(|p| (p.id, p.target)).collect())
}

fn read_candidates(path: &Path) -> Result<Vec<InsertionCandidate>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.split('\n')
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::CorruptLine {
                file: CANDIDATES_FILE,
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

impl Session {
    /// Loads a session and replays its decision log. A corrupt log line or
    /// a decision for an unknown candidate refuses the session.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let source = read_tsv(dir.join(SOURCE_FILE))?;
        let particle = source
            .header
            .get("particle")
            .cloned()
            .unwrap_or_else(|| DEFAULT_PARTICLE.to_string());
        let mut candidates = read_candidates(&dir.join(CANDIDATES_FILE))?;
        let mut index = HashMap::new();
        for (i, c) in candidates.iter_mut().enumerate() {
            if source.get(&c.sentence_id).is_none() {
                return Err(Error::UnknownSentence(c.sentence_id.clone()));
            }
            c.status = CandidateStatus::Proposed;
            index.insert(c.key(), i);
        }

        let decisions_path = dir.join(DECISIONS_FILE);
        let history = read_log(&decisions_path).map_err(|e| match e {
            dezh_core::Error::MalformedLine { line, reason } => Error::CorruptLine {
                file: DECISIONS_FILE,
                line,
                reason,
            },
            other => other.into(),
        })?;
        for (line, d) in history.iter().enumerate() {
            let Some(&i) = index.get(&d.candidate_key) else {
                return Err(Error::UnknownCandidate {
                    key: d.candidate_key.clone(),
                    line: Some(line + 1),
                });
            };
            candidates[i].status = d.decision.status();
        }

        Ok(Session {
            baseline: read_translations(&dir.join(BASELINE_FILE))?,
            modified: read_translations(&dir.join(MODIFIED_FILE))?,
            log: DecisionLog::open(&decisions_path)?,
            dir,
            source,
            particle,
            candidates,
            index,
            history,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn particle(&self) -> &str {
        &self.particle
    }

    pub fn history(&self) -> &[AnnotationDecision] {
        &self.history
    }

    pub fn status_of(&self, key: &str) -> Option<CandidateStatus> {
        self.index.get(key).map(|&i| self.candidates[i].status)
    }

    pub fn candidates(&self, filter: StatusFilter) -> Vec<CandidateView> {
        let mut history: HashMap<&str, Vec<HistoryEntry>> = HashMap::new();
        for d in &self.history {
            history.entry(d.candidate_key.as_str()).or_default().push(HistoryEntry {
                decision: d.decision,
                annotator: d.annotator.clone(),
                timestamp: d.timestamp.clone(),
            });
        }
        self.candidates
            .iter()
            .filter(|c| filter.matches(c.status))
            .map(|c| {
                let key = c.key();
                let sentence = self
                    .source
                    .get(&c.sentence_id)
                    .map(|p| p.source.clone())
                    .unwrap_or_default();
                let modified_sentence =
                    insert_particles(&sentence, &[c.char_offset], &self.particle).unwrap_or_else(|_| sentence.clone());
                CandidateView {
                    history: history.remove(key.as_str()).unwrap_or_default(),
                    candidate_key: key,
                    sentence_id: c.sentence_id.clone(),
                    sentence,
                    modified_sentence,
                    char_offset: c.char_offset,
                    left: c.left.surface.clone(),
                    right: c.right.surface.clone(),
                    confidence: c.confidence,
                    status: c.status,
                    baseline_translation: self.baseline.get(&c.sentence_id).cloned(),
                    modified_translation: self.modified.get(&c.sentence_id).cloned(),
                }
            })
            .collect()
    }

    /// Appends a decision (synced to disk before returning) and updates the
    /// candidate's status.
    pub fn record(
        &mut self,
        candidate_key: &str,
        decision: Decision,
        annotator: &str,
        timestamp: String,
    ) -> Result<AnnotationDecision> {
        let &i = self.index.get(candidate_key).ok_or_else(|| Error::UnknownCandidate {
            key: candidate_key.to_string(),
            line: None,
        })?;
        let record = AnnotationDecision {
            candidate_key: candidate_key.to_string(),
            decision,
            annotator: annotator.to_string(),
            timestamp,
        };
        self.log.append(&record)?;
        self.candidates[i].status = decision.status();
        self.history.push(record.clone());
        Ok(record)
    }

    pub fn stats(&self) -> StatusCounts {
        let mut counts = StatusCounts {
            total: self.candidates.len(),
            decisions: self.history.len(),
            ..StatusCounts::default()
        };
        for c in &self.candidates {
            match c.status {
                CandidateStatus::Accepted => counts.accepted += 1,
                CandidateStatus::Rejected => counts.rejected += 1,
                _ => counts.proposed += 1,
            }
        }
        counts
    }

    /// The source corpus with only accepted candidates applied. Rows that
    /// change get provenance `de_modified`; everything else is untouched.
    pub fn export(&self) -> Result<Corpus> {
        let mut accepted: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for c in &self.candidates {
            if c.status == CandidateStatus::Accepted {
                accepted.entry(c.sentence_id.as_str()).or_default().push(c.char_offset);
            }
        }
        let mut corpus = self.source.clone();
        for pair in &mut corpus.pairs {
            if let Some(offsets) = accepted.get_mut(pair.id.as_str()) {
                offsets.sort_unstable();
                pair.source = insert_particles(&pair.source, offsets, &self.particle)?;
                pair.provenance = Provenance::DeModified;
            }
        }
        Ok(corpus)
    }
}

/// Opens `session_dir`, applies accepted candidates and writes the result
/// to `out_path`.
pub fn export_accepted(session_dir: impl AsRef<Path>, out_path: impl AsRef<Path>) -> Result<Corpus> {
    let session = Session::open(session_dir)?;
    let corpus = session.export()?;
    let out_path = out_path.as_ref();
    std::fs::write(out_path, corpus.to_tsv()?).map_err(|e| Error::io(out_path, e))?;
    Ok(corpus)
}
