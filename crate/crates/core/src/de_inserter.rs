//! Attributive noun detection and insertion of the linking particle 的.
//!
//! A candidate is an adjacent pair of noun-tagged tokens where the first is
//! read as modifying the second (学生问题 → 学生的问题). Candidates carry a
//! confidence derived from how ambiguous the two words are in the lexicon:
//!
//! | condition                                         | confidence |
//! |---------------------------------------------------|-----------:|
//! | either token out of vocabulary                    | 0.0        |
//! | either entry has several tags (first one a noun)  | 0.6        |
//! | both entries carry exactly one (noun) tag         | 1.0        |
//!
//! Offsets are always character offsets into the original, unmodified text.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{read_to_string, Error, Result};
use crate::lexicon::{Lexicon, PosTagset};
use crate::segmenter::{analyze, SegmentedSentence, Token};

pub const DEFAULT_PARTICLE: &str = "的";

pub const CONFIDENCE_UNAMBIGUOUS: f64 = 1.0;
pub const CONFIDENCE_AMBIGUOUS: f64 = 0.6;
pub const CONFIDENCE_OOV: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionPolicy {
    pub noun_tags: BTreeSet<String>,
    /// Lexicalized compounds that are never split, matched on the
    /// concatenated surfaces of the pair.
    pub compound_whitelist: BTreeSet<String>,
    pub left_blacklist: BTreeSet<String>,
    pub min_confidence: f64,
    pub particle: String,
}

impl InsertionPolicy {
    /// Empty lists, nouns from the tagset, `min_confidence = 1.0`.
    pub fn from_tagset(tagset: &PosTagset) -> Self {
        InsertionPolicy {
            noun_tags: tagset.noun_tags().clone(),
            compound_whitelist: BTreeSet::new(),
            left_blacklist: BTreeSet::new(),
            min_confidence: 1.0,
            particle: DEFAULT_PARTICLE.to_string(),
        }
    }

    /// The bundled policy with its starter whitelist.
    pub fn bundled(tagset: &PosTagset) -> Self {
        Self::parse(crate::data::DEFAULT_POLICY, tagset).expect("bundled policy is well-formed")
    }

    pub fn load(path: impl AsRef<Path>, tagset: &PosTagset) -> Result<Self> {
        Self::parse(&read_to_string(path.as_ref())?, tagset)
    }

    /// Parses the policy file grammar:
    ///
    /// ```text
    /// # comment
    /// particle=的
    /// min_confidence=1.0
    /// noun_tags=n,nr,ns
    /// [whitelist]
    /// 北京大学
    /// [left_blacklist]
    /// 有关
    /// ```
    ///
    /// Keys may only appear before the first section. Every key is optional.
    pub fn parse(text: &str, tagset: &PosTagset) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            Keys,
            Whitelist,
            Blacklist,
        }

        let mut policy = Self::from_tagset(tagset);
        let mut section = Section::Keys;
        for (idx, raw) in text.split('\n').enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = match &line[1..line.len() - 1] {
                    "whitelist" => Section::Whitelist,
                    "left_blacklist" => Section::Blacklist,
                    other => {
                        return Err(Error::InvalidPolicy(format!(
                            "unknown section [{other}] at line {line_no}"
                        )))
                    }
                };
                continue;
            }
            match section {
                Section::Whitelist => {
                    policy.compound_whitelist.insert(line.to_string());
                }
                Section::Blacklist => {
                    policy.left_blacklist.insert(line.to_string());
                }
                Section::Keys => {
                    let (key, value) = line
                        .split_once('=')
                        .ok_or_else(|| Error::InvalidPolicy(format!("expected key=value at line {line_no}")))?;
                    let value = value.trim();
                    match key.trim() {
                        "particle" => policy.particle = value.to_string(),
                        "min_confidence" => {
                            policy.min_confidence = value.parse().map_err(|_| {
                                Error::InvalidPolicy(format!("bad min_confidence {value:?} at line {line_no}"))
                            })?
                        }
                        "noun_tags" => {
                            let tags: BTreeSet<String> = value
                                .split(',')
                                .map(|t| t.trim().to_string())
                                .filter(|t| !t.is_empty())
                                .collect();
                            if let Some(t) = tags.iter().find(|t| !tagset.contains(t)) {
                                return Err(Error::InvalidPolicy(format!("unknown tag {t} at line {line_no}")));
                            }
                            policy.noun_tags = tags;
                        }
                        other => return Err(Error::InvalidPolicy(format!("unknown key {other} at line {line_no}"))),
                    }
                }
            }
        }
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.particle.is_empty() {
            return Err(Error::InvalidPolicy("particle must be non-empty".into()));
        }
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(Error::InvalidPolicy(format!(
                "min_confidence {} outside [0, 1]",
                self.min_confidence
            )));
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an equal policy.
    pub fn to_config_string(&self) -> String {
        let mut out = format!(
            "particle={}\nmin_confidence={}\nnoun_tags={}\n",
            self.particle,
            self.min_confidence,
            self.noun_tags.iter().cloned().collect::<Vec<_>>().join(",")
        );
        out.push_str("[whitelist]\n");
        for w in &self.compound_whitelist {
            out.push_str(w);
            out.push('\n');
        }
        out.push_str("[left_blacklist]\n");
        for w in &self.left_blacklist {
            out.push_str(w);
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_config_string().as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    Proposed,
    Accepted,
    Rejected,
    AutoApplied,
}

impl CandidateStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CandidateStatus::Proposed => "proposed",
            CandidateStatus::Accepted => "accepted",
            CandidateStatus::Rejected => "rejected",
            CandidateStatus::AutoApplied => "auto_applied",
        }
    }

    pub fn is_applicable(&self) -> bool {
        matches!(self, CandidateStatus::Accepted | CandidateStatus::AutoApplied)
    }
}

impl fmt::Display for CandidateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionCandidate {
    pub sentence_id: String,
    pub char_offset: usize,
    pub left: Token,
    pub right: Token,
    pub confidence: f64,
    pub status: CandidateStatus,
}

impl InsertionCandidate {
    pub fn key(&self) -> String {
        candidate_key(&self.sentence_id, self.char_offset)
    }
}

/// `sentence_id@char_offset`.
pub fn candidate_key(sentence_id: &str, char_offset: usize) -> String {
    format!("{sentence_id}@{char_offset}")
}

pub fn confidence(left: &Token, right: &Token, lexicon: &Lexicon) -> f64 {
    let (Some(l), Some(r)) = (lexicon.lookup(&left.surface), lexicon.lookup(&right.surface)) else {
        return CONFIDENCE_OOV;
    };
    if l.is_ambiguous() || r.is_ambiguous() {
        CONFIDENCE_AMBIGUOUS
    } else {
        CONFIDENCE_UNAMBIGUOUS
    }
}

/// Proposes one candidate per adjacent noun-noun pair that passes the
/// policy filters, ordered by offset.
pub fn find_candidates(
    sentence_id: &str,
    sentence: &SegmentedSentence,
    policy: &InsertionPolicy,
    lexicon: &Lexicon,
) -> Result<Vec<InsertionCandidate>> {
    if let Some(index) = sentence.tokens.iter().position(|t| t.pos.is_none()) {
        return Err(Error::Untagged { index });
    }
    let is_noun = |t: &Token| t.pos.as_ref().is_some_and(|p| policy.noun_tags.contains(p));

    let candidates = sentence
        .tokens
        .windows(2)
        .filter_map(|pair| {
            let (left, right) = (&pair[0], &pair[1]);
            if !is_noun(left) || !is_noun(right) {
                return None;
            }
            // Also covers a particle absorbed into a neighbouring word
            // (头目的一事 segments as 头 目的 一事).
            if left.surface.ends_with(policy.particle.as_str())
                || right.surface.starts_with(policy.particle.as_str())
                || policy.left_blacklist.contains(&left.surface)
            {
                return None;
            }
            let compound = format!("{}{}", left.surface, right.surface);
            if policy.compound_whitelist.contains(&compound) {
                return None;
            }
            Some(InsertionCandidate {
                sentence_id: sentence_id.to_string(),
                char_offset: left.span.end,
                left: left.clone(),
                right: right.clone(),
                confidence: confidence(left, right, lexicon),
                status: CandidateStatus::Proposed,
            })
        })
        .collect();
    Ok(candidates)
}

/// Inserts `particle` at each character offset. Offsets refer to `text` and
/// must be strictly increasing.
pub fn insert_particles(text: &str, offsets: &[usize], particle: &str) -> Result<String> {
    let len = text.chars().count();
    check_offsets(offsets, len)?;
    let mut bounds: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
    bounds.push(text.len());

    let mut out = text.to_string();
    for &offset in offsets.iter().rev() {
        out.insert_str(bounds[offset], particle);
    }
    Ok(out)
}

/// Inverse of [`insert_particles`]: removes the particle occurrences that
/// were inserted at `offsets` (given in original-text coordinates).
pub fn remove_particles(modified: &str, offsets: &[usize], particle: &str) -> Result<String> {
    let plen = particle.chars().count();
    let chars: Vec<char> = modified.chars().collect();
    let original_len = chars
        .len()
        .checked_sub(offsets.len() * plen)
        .ok_or(Error::OffsetOutOfRange {
            offset: offsets.last().copied().unwrap_or(0),
            len: chars.len(),
        })?;
    check_offsets(offsets, original_len)?;

    let particle_chars: Vec<char> = particle.chars().collect();
    let mut out = String::with_capacity(modified.len());
    let mut cursor = 0;
    for (k, &offset) in offsets.iter().enumerate() {
        let at = offset + k * plen;
        if chars[at..at + plen] != particle_chars[..] {
            return Err(Error::InvalidCorpus(format!("no particle at modified offset {at}")));
        }
        out.extend(&chars[cursor..at]);
        cursor = at + plen;
    }
    out.extend(&chars[cursor..]);
    Ok(out)
}

fn check_offsets(offsets: &[usize], len: usize) -> Result<()> {
    for (i, &offset) in offsets.iter().enumerate() {
        if offset > len {
            return Err(Error::OffsetOutOfRange { offset, len });
        }
        if i > 0 && offset <= offsets[i - 1] {
            return Err(Error::OverlappingOffsets {
                previous: offsets[i - 1],
                offset,
            });
        }
    }
    Ok(())
}

/// Applies accepted or auto-applied candidates to `text`.
pub fn apply_insertions(text: &str, candidates: &[InsertionCandidate], particle: &str) -> Result<String> {
    if let Some(c) = candidates.iter().find(|c| !c.status.is_applicable()) {
        return Err(Error::NotApplicable {
            key: c.key(),
            status: c.status.to_string(),
        });
    }
    let offsets: Vec<usize> = candidates.iter().map(|c| c.char_offset).collect();
    insert_particles(text, &offsets, particle)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertionOutcome {
    pub text: String,
    /// Every candidate found; applied ones are marked `auto_applied`.
    pub candidates: Vec<InsertionCandidate>,
}

impl InsertionOutcome {
    pub fn applied(&self) -> impl Iterator<Item = &InsertionCandidate> {
        self.candidates.iter().filter(|c| c.status.is_applicable())
    }
}

/// Segment, tag, detect and apply in one step, bundling the resources.
#[derive(Debug, Clone, Copy)]
pub struct DeInserter<'a> {
    pub lexicon: &'a Lexicon,
    pub tagset: &'a PosTagset,
    pub policy: &'a InsertionPolicy,
}

impl<'a> DeInserter<'a> {
    pub fn new(lexicon: &'a Lexicon, tagset: &'a PosTagset, policy: &'a InsertionPolicy) -> Self {
        DeInserter {
            lexicon,
            tagset,
            policy,
        }
    }

    pub fn candidates(&self, sentence_id: &str, text: &str) -> Result<Vec<InsertionCandidate>> {
        let sentence = analyze(text, self.lexicon, self.tagset);
        find_candidates(sentence_id, &sentence, self.policy, self.lexicon)
    }

    /// Applies every candidate at or above the policy's confidence floor.
    pub fn auto_insert(&self, sentence_id: &str, text: &str) -> Result<InsertionOutcome> {
        let mut candidates = self.candidates(sentence_id, text)?;
        for c in &mut candidates {
            if c.confidence >= self.policy.min_confidence {
                c.status = CandidateStatus::AutoApplied;
            }
        }
        let applied: Vec<InsertionCandidate> = candidates
            .iter()
            .filter(|c| c.status.is_applicable())
            .cloned()
            .collect();
        let text = apply_insertions(text, &applied, &self.policy.particle)?;
        Ok(InsertionOutcome { text, candidates })
    }
}

pub fn auto_insert(
    text: &str,
    lexicon: &Lexicon,
    tagset: &PosTagset,
    policy: &InsertionPolicy,
) -> Result<InsertionOutcome> {
    DeInserter::new(lexicon, tagset, policy).auto_insert("0", text)
}
