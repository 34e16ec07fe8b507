//! Word/POS/frequency dictionary.
//!
//! The on-disk format is one entry per line:
//!
//! ```text
//! surface<TAB>frequency<TAB>tag[,tag...]
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. Repeated surfaces are
//! merged: frequencies are summed and tag lists unioned, keeping the order in
//! which tags were first seen.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};

/// ICTCLAS-style tag inventory used by the lexicon, segmenter and inserter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosTagset {
    noun_tags: BTreeSet<String>,
    particle_tags: BTreeSet<String>,
    all_tags: BTreeSet<String>,
    unknown_tag: String,
}

const DEFAULT_NOUNS: &[&str] = &["n", "nr", "ns", "nt", "nz", "ng"];
const DEFAULT_PARTICLES: &[&str] = &["u", "ud", "ug", "uj", "ul", "uv", "uz"];
const DEFAULT_OTHERS: &[&str] = &["v", "a", "d", "p", "c", "m", "q", "r", "x"];

fn to_set(tags: &[&str]) -> BTreeSet<String> {
    tags.iter().map(|t| t.to_string()).collect()
}

impl Default for PosTagset {
    fn default() -> Self {
        let noun_tags = to_set(DEFAULT_NOUNS);
        let particle_tags = to_set(DEFAULT_PARTICLES);
        let mut all_tags = to_set(DEFAULT_OTHERS);
        all_tags.extend(noun_tags.iter().cloned());
        all_tags.extend(particle_tags.iter().cloned());
        PosTagset {
            noun_tags,
            particle_tags,
            all_tags,
            unknown_tag: "x".to_string(),
        }
    }
}

impl PosTagset {
    pub fn new(
        noun_tags: BTreeSet<String>,
        particle_tags: BTreeSet<String>,
        all_tags: BTreeSet<String>,
        unknown_tag: impl Into<String>,
    ) -> Result<Self> {
        let unknown_tag = unknown_tag.into();
        if let Some(t) = noun_tags.difference(&all_tags).next() {
            return Err(Error::InvalidTagset(format!("noun tag {t} not in tagset")));
        }
        if let Some(t) = particle_tags.difference(&all_tags).next() {
            return Err(Error::InvalidTagset(format!("particle tag {t} not in tagset")));
        }
        if !all_tags.contains(&unknown_tag) {
            return Err(Error::InvalidTagset(format!("unknown tag {unknown_tag} not in tagset")));
        }
        Ok(PosTagset {
            noun_tags,
            particle_tags,
            all_tags,
            unknown_tag,
        })
    }

    pub fn noun_tags(&self) -> &BTreeSet<String> {
        &self.noun_tags
    }

    pub fn particle_tags(&self) -> &BTreeSet<String> {
        &self.particle_tags
    }

    pub fn all_tags(&self) -> &BTreeSet<String> {
        &self.all_tags
    }

    pub fn unknown_tag(&self) -> &str {
        &self.unknown_tag
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.all_tags.contains(tag)
    }

    pub fn is_noun(&self, tag: &str) -> bool {
        self.noun_tags.contains(tag)
    }

    pub fn is_particle(&self, tag: &str) -> bool {
        self.particle_tags.contains(tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub surface: String,
    pub frequency: u64,
    /// Most frequent tag first.
    pub pos_tags: Vec<String>,
}

impl LexiconEntry {
    pub fn primary_tag(&self) -> &str {
        &self.pos_tags[0]
    }

    /// True when the entry carries more than one tag.
    pub fn is_ambiguous(&self) -> bool {
        self.pos_tags.len() > 1
    }

    fn merge(&mut self, other: LexiconEntry) {
        self.frequency += other.frequency;
        for tag in other.pos_tags {
            if !self.pos_tags.contains(&tag) {
                self.pos_tags.push(tag);
            }
        }
    }
}

/// Immutable dictionary keyed by exact surface form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashMap<String, LexiconEntry>,
    total_frequency: u64,
    max_word_len: usize,
}

impl Lexicon {
    /// Builds a lexicon from entries, merging duplicate surfaces.
    pub fn from_entries(entries: impl IntoIterator<Item = LexiconEntry>, tagset: &PosTagset) -> Result<Self> {
        let mut map: HashMap<String, LexiconEntry> = HashMap::new();
        for (idx, entry) in entries.into_iter().enumerate() {
            validate_entry(&entry, tagset, idx + 1)?;
            match map.get_mut(&entry.surface) {
                Some(existing) => existing.merge(entry),
                None => {
                    map.insert(entry.surface.clone(), entry);
                }
            }
        }
        Self::from_map(map)
    }

    fn from_map(entries: HashMap<String, LexiconEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyLexicon);
        }
        let total_frequency = entries.values().map(|e| e.frequency).sum();
        let max_word_len = entries.keys().map(|s| s.chars().count()).max().unwrap_or(1);
        Ok(Lexicon {
            entries,
            total_frequency,
            max_word_len,
        })
    }

    /// Parses lexicon text. Line numbers in errors are 1-based physical lines.
    pub fn parse(text: &str, tagset: &PosTagset) -> Result<Self> {
        let mut map: HashMap<String, LexiconEntry> = HashMap::new();
        for (idx, raw) in text.split('\n').enumerate() {
            let line_no = idx + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let entry = parse_line(line, line_no)?;
            validate_entry(&entry, tagset, line_no)?;
            match map.get_mut(&entry.surface) {
                Some(existing) => existing.merge(entry),
                None => {
                    map.insert(entry.surface.clone(), entry);
                }
            }
        }
        Self::from_map(map)
    }

    /// The dictionary shipped with the crate (about 12k entries).
    pub fn bundled() -> Self {
        Self::parse(crate::data::LEXICON, &PosTagset::default()).expect("bundled lexicon is well-formed")
    }

    pub fn lookup(&self, surface: &str) -> Option<&LexiconEntry> {
        self.entries.get(surface)
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.entries.contains_key(surface)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_frequency(&self) -> u64 {
        self.total_frequency
    }

    /// Longest surface, in characters.
    pub fn max_word_len(&self) -> usize {
        self.max_word_len
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }
}

pub fn load_lexicon(path: impl AsRef<Path>, tagset: &PosTagset) -> Result<Lexicon> {
    let text = read_to_string(path.as_ref())?;
    Lexicon::parse(&text, tagset)
}

fn parse_line(line: &str, line_no: usize) -> Result<LexiconEntry> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 3 {
        return Err(Error::malformed(
            line_no,
            format!("expected 3 tab-separated fields, found {}", fields.len()),
        ));
    }
    let frequency = fields[1]
        .parse::<u64>()
        .map_err(|_| Error::malformed(line_no, format!("bad frequency {:?}", fields[1])))?;
    let pos_tags = fields[2].split(',').map(str::to_string).collect();
    Ok(LexiconEntry {
        surface: fields[0].to_string(),
        frequency,
        pos_tags,
    })
}

fn validate_entry(entry: &LexiconEntry, tagset: &PosTagset, line: usize) -> Result<()> {
    if entry.surface.is_empty() {
        return Err(Error::malformed(line, "empty surface"));
    }
    if entry.surface.chars().any(char::is_whitespace) {
        return Err(Error::malformed(line, "surface contains whitespace"));
    }
    if entry.pos_tags.is_empty() {
        return Err(Error::malformed(line, "no tags"));
    }
    for tag in &entry.pos_tags {
        if tag.is_empty() {
            return Err(Error::malformed(line, "empty tag"));
        }
        if !tagset.contains(tag) {
            return Err(Error::UnknownTag { tag: tag.clone(), line });
        }
    }
    Ok(())
}
