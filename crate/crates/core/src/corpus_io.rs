//! Parallel corpus files.
//!
//! Canonical format, UTF-8 with LF line endings:
//!
//! ```text
//! #key=value                            (header lines, before any record)
//! id<TAB>source<TAB>target<TAB>provenance
//! ```
//!
//! Inside fields, `\` is written as `\\`, TAB as `\t`, LF as `\n` and CR as
//! `\r`. A leading `#` in an id is written `\#` so it cannot be mistaken for
//! a header line. Writing then reading any valid corpus is lossless.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Original,
    DeModified,
    Translated,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Original => "original",
            Provenance::DeModified => "de_modified",
            Provenance::Translated => "translated",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(Provenance::Original),
            "de_modified" => Ok(Provenance::DeModified),
            "translated" => Ok(Provenance::Translated),
            other => Err(format!("unknown provenance {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub id: String,
    pub source: String,
    pub target: String,
    pub provenance: Provenance,
    /// In-memory annotations; not part of the TSV format.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl ParallelPair {
    pub fn new(
        id: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
        provenance: Provenance,
    ) -> Self {
        ParallelPair {
            id: id.into(),
            source: source.into(),
            target: target.into(),
            provenance,
            meta: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub header: BTreeMap<String, String>,
    pub pairs: Vec<ParallelPair>,
}

impl Corpus {
    pub fn new(pairs: Vec<ParallelPair>) -> Result<Self> {
        let corpus = Corpus {
            header: BTreeMap::new(),
            pairs,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn with_header(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.header.insert(key.into(), value.into());
        self
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ParallelPair> {
        self.pairs.iter().find(|p| p.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (idx, pair) in self.pairs.iter().enumerate() {
            if pair.id.is_empty() {
                return Err(Error::InvalidCorpus(format!("pair {idx} has an empty id")));
            }
            if pair.source.is_empty() {
                return Err(Error::InvalidCorpus(format!("pair {} has an empty source", pair.id)));
            }
            if !seen.insert(pair.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: pair.id.clone(),
                    line: idx + 1,
                });
            }
        }
        for key in self.header.keys() {
            if key.is_empty() || key.contains('=') {
                return Err(Error::InvalidCorpus(format!("bad header key {key:?}")));
            }
        }
        Ok(())
    }

    /// Serializes to the canonical TSV text.
    pub fn to_tsv(&self) -> Result<String> {
        self.validate()?;
        let mut out = String::new();
        for (key, value) in &self.header {
            out.push('#');
            out.push_str(&escape(key));
            out.push('=');
            out.push_str(&escape(value));
            out.push('\n');
        }
        for pair in &self.pairs {
            let id = escape(&pair.id);
            match id.strip_prefix('#') {
                Some(rest) => {
                    out.push_str("\\#");
                    out.push_str(rest);
                }
                None => out.push_str(&id),
            }
            out.push('\t');
            out.push_str(&escape(&pair.source));
            out.push('\t');
            out.push_str(&escape(&pair.target));
            out.push('\t');
            out.push_str(pair.provenance.as_str());
            out.push('\n');
        }
        Ok(out)
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut header = BTreeMap::new();
        let mut pairs: Vec<ParallelPair> = Vec::new();
        let mut ids = HashSet::new();
        for (idx, line) in text.split('\n').enumerate() {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            if pairs.is_empty() && line.starts_with('#') {
                let (key, value) = line[1..]
                    .split_once('=')
                    .ok_or_else(|| Error::malformed(line_no, "header line without '='"))?;
                header.insert(unescape(key, line_no)?, unescape(value, line_no)?);
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::ColumnCount {
                    line: line_no,
                    expected: 4,
                    found: fields.len(),
                });
            }
            let id = unescape(fields[0], line_no)?;
            if !ids.insert(id.clone()) {
                return Err(Error::DuplicateId { id, line: line_no });
            }
            let source = unescape(fields[1], line_no)?;
            if id.is_empty() || source.is_empty() {
                return Err(Error::malformed(line_no, "empty id or source"));
            }
            let provenance = fields[3].parse().map_err(|e: String| Error::malformed(line_no, e))?;
            pairs.push(ParallelPair {
                id,
                source,
                target: unescape(fields[2], line_no)?,
                provenance,
                meta: BTreeMap::new(),
            });
        }
        Ok(Corpus { header, pairs })
    }
}

pub fn read_tsv(path: impl AsRef<Path>) -> Result<Corpus> {
    Corpus::parse_tsv(&read_to_string(path.as_ref())?)
}

pub fn write_tsv(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, corpus.to_tsv()?).map_err(|e| Error::io(path, e))
}

/// Imports a plain `source<TAB>target` file (e.g. a UM-Corpus export).
/// Ids are 1-based record numbers; fields are taken verbatim.
pub fn parse_plain_pairs(text: &str, provenance: Provenance) -> Result<Corpus> {
    let mut pairs = Vec::new();
    for (idx, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::ColumnCount {
                line: idx + 1,
                expected: 2,
                found: fields.len(),
            });
        }
        pairs.push(ParallelPair::new(
            (pairs.len() + 1).to_string(),
            fields[0],
            fields[1],
            provenance,
        ));
    }
    Corpus::new(pairs)
}

pub fn read_plain_pairs(path: impl AsRef<Path>, provenance: Provenance) -> Result<Corpus> {
    parse_plain_pairs(&read_to_string(path.as_ref())?, provenance)
}

fn escape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    for c in field.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(field: &str, line: usize) -> Result<String> {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('#') => out.push('#'),
            other => {
                return Err(Error::malformed(
                    line,
                    format!("bad escape sequence \\{}", other.map(String::from).unwrap_or_default()),
                ))
            }
        }
    }
    Ok(out)
}

/// Partitions `corpus` into disjoint subsets of exactly `sizes`, drawn by a
/// seeded shuffle, followed by the residual. Every output carries
/// `split_seed` and `split_part` headers.
pub fn split(corpus: &Corpus, sizes: &[usize], seed: u64) -> Result<Vec<Corpus>> {
    let requested: usize = sizes.iter().sum();
    if requested > corpus.len() {
        return Err(Error::SplitTooLarge {
            requested,
            available: corpus.len(),
        });
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut parts = Vec::with_capacity(sizes.len() + 1);
    let mut cursor = 0;
    let bounds = sizes.iter().copied().chain(std::iter::once(corpus.len() - requested));
    for (part, size) in bounds.enumerate() {
        let pairs = order[cursor..cursor + size]
            .iter()
            .map(|&i| corpus.pairs[i].clone())
            .collect();
        cursor += size;
        let mut header = corpus.header.clone();
        header.insert("split_seed".into(), seed.to_string());
        header.insert("split_part".into(), part.to_string());
        parts.push(Corpus { header, pairs });
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Corpus {
        Corpus::new(vec![
            ParallelPair::new("1", "学生问题", "student question", Provenance::Original),
            ParallelPair::new("2", "学生的问题", "the student's question", Provenance::DeModified),
            ParallelPair::new("3", "天气很好", "", Provenance::Translated),
        ])
        .unwrap()
        .with_header("created_by", "dezh")
    }

    #[test]
    fn round_trip() {
        let c = sample();
        let text = c.to_tsv().unwrap();
        assert!(text.starts_with("#created_by=dezh\n1\t学生问题\t"));
        let back = Corpus::parse_tsv(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_tsv().unwrap(), text);
    }

    #[test]
    fn escapes_control_characters() {
        let c = Corpus::new(vec![ParallelPair::new(
            "#tab\\id",
            "a\tb\nc\\n",
            "x\r\ny",
            Provenance::Original,
        )])
        .unwrap();
        let text = c.to_tsv().unwrap();
        assert_eq!(text, "\\#tab\\\\id\ta\\tb\\nc\\\\n\tx\\r\\ny\toriginal\n");
        assert_eq!(Corpus::parse_tsv(&text).unwrap(), c);
    }

    #[test]
    fn read_errors() {
        assert!(matches!(
            Corpus::parse_tsv("1\ta\tb\n"),
            Err(Error::ColumnCount { line: 1, found: 3, .. })
        ));
        assert!(matches!(
            Corpus::parse_tsv("1\ta\tb\toriginal\n1\tc\td\toriginal\n"),
            Err(Error::DuplicateId { line: 2, .. })
        ));
        assert!(Corpus::parse_tsv("1\ta\tb\tborrowed\n").is_err());
        assert!(Corpus::parse_tsv("1\ta\\q\tb\toriginal\n").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsv");
        write_tsv(&sample(), &path).unwrap();
        assert_eq!(read_tsv(&path).unwrap(), sample());
    }

    #[test]
    fn plain_import() {
        let c = parse_plain_pairs("学生问题\tstudent question\n\n天气\tweather\n", Provenance::Original).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.pairs[1].id, "2");
        assert!(parse_plain_pairs("only one column\n", Provenance::Original).is_err());
    }

    fn numbered(n: usize) -> Corpus {
        Corpus::new(
            (0..n)
                .map(|i| ParallelPair::new(i.to_string(), format!("句子{i}"), "", Provenance::Original))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let c = numbered(1000);
        let parts = split(&c, &[60], 1).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].len(), 60);
        assert_eq!(parts[1].len(), 940);
        assert_eq!(parts[0].header["split_seed"], "1");
        assert_eq!(split(&c, &[60], 1).unwrap(), parts);
        assert_ne!(split(&c, &[60], 2).unwrap()[0], parts[0]);
    }

    #[test]
    fn split_whole_corpus() {
        let c = numbered(10);
        let parts = split(&c, &[10], 7).unwrap();
        assert_eq!(parts[0].len(), 10);
        assert!(parts[1].is_empty());
        let mut ids: Vec<_> = parts[0].pairs.iter().map(|p| p.id.clone()).collect();
        ids.sort();
        let mut expected: Vec<_> = c.pairs.iter().map(|p| p.id.clone()).collect();
        expected.sort();
        assert_eq!(ids, expected);
    }

    #[test]
    fn split_too_large() {
        assert!(matches!(
            split(&numbered(5), &[3, 3], 1),
            Err(Error::SplitTooLarge {
                requested: 6,
                available: 5
            })
        ));
    }
}
