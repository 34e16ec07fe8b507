//! Function-word ablation.
//!
//! For each word in a wordlist, every occurrence of its surface is deleted
//! from every sentence of a corpus (raw substring deletion, before any
//! segmentation), giving one variant corpus per word. Each variant is
//! translated and scored against either the baseline translations or gold
//! references, and the per-word deltas are reported.
//!
//! Deletion is not token-aware: a surface that also occurs inside a longer
//! word is deleted there too.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};
use crate::metrics::{evaluate, MetricReport, MetricsConfig};
use crate::mt_client::Backend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordCategory {
    Preposition,
    Conjunction,
    Particle,
    Modal,
}

impl WordCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            WordCategory::Preposition => "preposition",
            WordCategory::Conjunction => "conjunction",
            WordCategory::Particle => "particle",
            WordCategory::Modal => "modal",
        }
    }
}

impl fmt::Display for WordCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WordCategory {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "preposition" => Ok(WordCategory::Preposition),
            "conjunction" => Ok(WordCategory::Conjunction),
            "particle" => Ok(WordCategory::Particle),
            "modal" => Ok(WordCategory::Modal),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionWordSpec {
    pub surface: String,
    pub category: WordCategory,
}

/// Parses `surface<TAB>category` lines, preserving order. `#` comments and
/// blank lines are skipped.
pub fn parse_wordlist(text: &str) -> Result<Vec<FunctionWordSpec>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (surface, category) = line
            .split_once('\t')
            .ok_or_else(|| Error::malformed(line_no, "expected surface<TAB>category"))?;
        if surface.is_empty() {
            return Err(Error::malformed(line_no, "empty surface"));
        }
        let category = category.parse().map_err(|_| Error::UnknownCategory {
            category: category.to_string(),
            line: line_no,
        })?;
        if !seen.insert(surface.to_string()) {
            return Err(Error::DuplicateWord {
                surface: surface.to_string(),
                line: line_no,
            });
        }
        out.push(FunctionWordSpec {
            surface: surface.to_string(),
            category,
        });
    }
    Ok(out)
}

pub fn load_wordlist(path: impl AsRef<Path>) -> Result<Vec<FunctionWordSpec>> {
    parse_wordlist(&read_to_string(path.as_ref())?)
}

/// The bundled 82-word list.
pub fn bundled_wordlist() -> Vec<FunctionWordSpec> {
    parse_wordlist(crate::data::FUNCTION_WORDS).expect("bundled wordlist is well-formed")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationVariant {
    pub word: FunctionWordSpec,
    pub sentences: Vec<String>,
    pub removal_counts: Vec<usize>,
}

impl AblationVariant {
    pub fn sentences_changed(&self) -> usize {
        self.removal_counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Deletes every occurrence of `word.surface` from each sentence.
pub fn ablate<S: AsRef<str>>(corpus: &[S], word: &FunctionWordSpec) -> AblationVariant {
    let (sentences, removal_counts) = corpus
        .iter()
        .map(|s| {
            let s = s.as_ref();
            let count = s.matches(word.surface.as_str()).count();
            if count == 0 {
                (s.to_string(), 0)
            } else {
                (s.replace(word.surface.as_str(), ""), count)
            }
        })
        .unzip();
    AblationVariant {
        word: word.clone(),
        sentences,
        removal_counts,
    }
}

/// One variant per word, in wordlist order.
pub fn ablate_all<S: AsRef<str> + Sync>(corpus: &[S], wordlist: &[FunctionWordSpec]) -> Vec<AblationVariant> {
    wordlist.par_iter().map(|w| ablate(corpus, w)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceMode {
    /// Variant translations are scored against the baseline translations.
    BaselineAsReference,
    /// Both baseline and variants are scored against gold references.
    Gold(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub surface: String,
    pub category: WordCategory,
    pub sentences_changed: usize,
    pub bleu: f64,
    pub chrf: f64,
    pub bleu_delta: f64,
    pub chrf_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    /// Sorted by `|bleu_delta|`, largest first; ties keep wordlist order.
    pub rows: Vec<AblationRow>,
    pub baseline: MetricReport,
}

impl AblationReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("surface\tcategory\tsentences_changed\tbleu_delta\tchrf_delta\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.4}\t{:.4}\n",
                r.surface, r.category, r.sentences_changed, r.bleu_delta, r.chrf_delta
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Translates the corpus once, every variant once, and reports per-word
/// metric deltas. A failed variant aborts the whole run.
pub fn run_ablation<S: AsRef<str> + Sync>(
    corpus: &[S],
    wordlist: &[FunctionWordSpec],
    backend: &dyn Backend,
    config: &MetricsConfig,
    mode: &ReferenceMode,
) -> Result<AblationReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let source: Vec<String> = corpus.iter().map(|s| s.as_ref().to_string()).collect();
    let baseline_out = backend.translate(&source)?;
    let references: &[String] = match mode {
        ReferenceMode::BaselineAsReference => &baseline_out,
        ReferenceMode::Gold(refs) => refs,
    };
    let baseline = evaluate(&baseline_out, references, config)?;

    let variants = ablate_all(&source, wordlist);
    let mut rows = Vec::with_capacity(variants.len());
    for variant in &variants {
        let translated = backend
            .translate(&variant.sentences)
            .map_err(|e| Error::VariantFailed {
                word: variant.word.surface.clone(),
                source: Box::new(e),
            })?;
        let report = evaluate(&translated, references, config)?;
        rows.push(AblationRow {
            surface: variant.word.surface.clone(),
            category: variant.word.category,
            sentences_changed: variant.sentences_changed(),
            bleu: report.bleu,
            chrf: report.chrf,
            bleu_delta: report.bleu - baseline.bleu,
            chrf_delta: report.chrf - baseline.chrf,
        });
    }
    rows.sort_by(|a, b| b.bleu_delta.abs().total_cmp(&a.bleu_delta.abs()));
    Ok(AblationReport { rows, baseline })
}
