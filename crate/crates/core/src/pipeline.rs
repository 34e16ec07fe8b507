//! End-to-end title experiment.
//!
//! titles → baseline translation → DE candidates → modified titles →
//! modified translation → per-title comparison → tuning corpus + stats.
//!
//! Every artifact is written under `out_dir` with a `.partial` suffix and
//! renamed only once the whole run has succeeded, so a failed run leaves
//! its partial files recognisable.
//!
//! Output tree:
//!
//! | file                         | content                                             |
//! |------------------------------|-----------------------------------------------------|
//! | `policy.cfg`                 | canonical form of the policy used                   |
//! | `source.tsv`                 | original titles (target = gold reference, if any)   |
//! | `baseline_translations.tsv`  | original title → baseline translation               |
//! | `candidates.jsonl`           | every candidate with its final status               |
//! | `modified.tsv`               | titles after insertion                              |
//! | `modified_translations.tsv`  | modified title → translation                        |
//! | `comparison.tsv`             | per-title sentence metrics and verdict              |
//! | `tuning.tsv`                 | original title → modified-side translation          |
//! | `tuning.{train,dev}.tsv`     | seeded split of the tuning corpus (if requested)    |
//! | `stats.json`                 | [`ExperimentStats`]                                 |

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus_io::{split, Corpus, ParallelPair, Provenance};
use crate::de_inserter::{apply_insertions, CandidateStatus, DeInserter, InsertionCandidate, InsertionPolicy};
use crate::decisions::{live_decisions, read_log};
use crate::error::{read_to_string, Error, Result};
use crate::lexicon::{load_lexicon, Lexicon, PosTagset};
use crate::metrics::{sentence_bleu, sentence_chrf, MetricsConfig};
use crate::mt_client::Backend;

pub const CREATED_BY: &str = concat!("dezh ", env!("CARGO_PKG_VERSION"));

/// chrF delta beyond which a title counts as improved (or regressed).
pub const DEFAULT_CHRF_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TitleRecord {
    pub id: String,
    pub title: String,
    pub reference: Option<String>,
}

/// Parses a title list. Each non-blank, non-`#` line is either a bare title
/// (id = its 1-based record number) or `id<TAB>title[<TAB>reference]`.
pub fn parse_titles(text: &str) -> Result<Vec<TitleRecord>> {
    let mut out: Vec<TitleRecord> = Vec::new();
    let mut ids = HashSet::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let record = match fields.as_slice() {
            [title] => TitleRecord {
                id: (out.len() + 1).to_string(),
                title: title.trim().to_string(),
                reference: None,
            },
            [id, title] => TitleRecord {
                id: id.to_string(),
                title: title.to_string(),
                reference: None,
            },
            [id, title, reference] => TitleRecord {
                id: id.to_string(),
                title: title.to_string(),
                reference: Some(reference.to_string()).filter(|r| !r.is_empty()),
            },
            _ => {
                return Err(Error::malformed(
                    line_no,
                    "expected title or id<TAB>title[<TAB>reference]",
                ))
            }
        };
        if record.id.is_empty() || record.title.is_empty() {
            return Err(Error::malformed(line_no, "empty id or title"));
        }
        if !ids.insert(record.id.clone()) {
            return Err(Error::DuplicateId {
                id: record.id,
                line: line_no,
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_titles(path: impl AsRef<Path>) -> Result<Vec<TitleRecord>> {
    parse_titles(&read_to_string(path.as_ref())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Improved,
    Regressed,
    Unchanged,
}

impl Verdict {
    pub fn classify(chrf_delta: f64, threshold: f64) -> Self {
        if chrf_delta > threshold {
            Verdict::Improved
        } else if chrf_delta < -threshold {
            Verdict::Regressed
        } else {
            Verdict::Unchanged
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Improved => "improved",
            Verdict::Regressed => "regressed",
            Verdict::Unchanged => "unchanged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TitleComparison {
    pub id: String,
    pub insertions: usize,
    pub baseline_translation: String,
    pub modified_translation: String,
    /// `(baseline, modified)` sentence scores; absent without a reference.
    pub bleu: Option<(f64, f64)>,
    pub chrf: Option<(f64, f64)>,
    pub bleu_delta: f64,
    pub chrf_delta: f64,
    pub verdict: Verdict,
}

/// Field names and order are the stats JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub total_titles: usize,
    pub titles_with_candidates: usize,
    pub titles_improved: usize,
    pub titles_regressed: usize,
    pub titles_unchanged: usize,
    pub mean_bleu_delta: f64,
    pub mean_chrf_delta: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub titles_path: PathBuf,
    /// Bundled policy when absent.
    pub policy_path: Option<PathBuf>,
    /// Bundled lexicon when absent.
    pub lexicon_path: Option<PathBuf>,
    /// Decision log; when present only accepted candidates are applied.
    pub annotations_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Size of the dev part of the tuning split; 0 disables the split.
    pub dev_size: usize,
    pub metrics: MetricsConfig,
    pub chrf_threshold: f64,
}

impl ExperimentConfig {
    pub fn new(titles_path: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            titles_path: titles_path.into(),
            policy_path: None,
            lexicon_path: None,
            annotations_path: None,
            out_dir: out_dir.into(),
            seed: 1,
            dev_size: 0,
            metrics: MetricsConfig::default(),
            chrf_threshold: DEFAULT_CHRF_THRESHOLD,
        }
    }
}

/// Collects outputs as `.partial` files and renames them on commit.
struct OutputTree {
    dir: PathBuf,
    pending: Vec<PathBuf>,
}

impl OutputTree {
    fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(OutputTree {
            dir: dir.to_path_buf(),
            pending: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(format!("{name}.partial"));
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.pending.push(self.dir.join(name));
        Ok(())
    }

    fn commit(self) -> Result<()> {
        for target in self.pending {
            let partial = target.with_file_name(format!(
                "{}.partial",
                target.file_name().expect("named").to_string_lossy()
            ));
            std::fs::rename(&partial, &target).map_err(|e| Error::io(&target, e))?;
        }
        Ok(())
    }
}

fn stage<T>(name: &'static str, result: Result<T>) -> Result<T> {
    result.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

fn corpus_tsv(pairs: Vec<ParallelPair>, header: &[(&str, String)]) -> Result<String> {
    let mut corpus = Corpus::new(pairs)?;
    for (k, v) in header {
        corpus.header.insert(k.to_string(), v.clone());
    }
    corpus.to_tsv()
}

fn candidates_jsonl(candidates: &[InsertionCandidate]) -> Result<String> {
    let mut out = String::new();
    for c in candidates {
        out.push_str(&serde_json::to_string(c)?);
        out.push('\n');
    }
    Ok(out)
}

fn tsv_field(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('\t', "\\t")
        .replace('\n', "\\n")
        .replace('\r', "\\r")
}

fn comparison_tsv(rows: &[TitleComparison]) -> String {
    let mut out = String::from(
        "id\tinsertions\tbaseline_translation\tmodified_translation\tbleu_baseline\tbleu_modified\tbleu_delta\tchrf_baseline\tchrf_modified\tchrf_delta\tverdict\n",
    );
    let fmt_pair = |p: Option<(f64, f64)>| match p {
        Some((a, b)) => (format!("{a:.4}"), format!("{b:.4}")),
        None => (String::new(), String::new()),
    };
    for r in rows {
        let (bb, bm) = fmt_pair(r.bleu);
        let (cb, cm) = fmt_pair(r.chrf);
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{}\t{}\t{:.4}\t{}\n",
            tsv_field(&r.id),
            r.insertions,
            tsv_field(&r.baseline_translation),
            tsv_field(&r.modified_translation),
            bb,
            bm,
            r.bleu_delta,
            cb,
            cm,
            r.chrf_delta,
            r.verdict.as_str()
        ));
    }
    out
}

/// Runs the experiment and writes the output tree. See the module docs.
pub fn run_experiment(config: &ExperimentConfig, backend: &dyn Backend) -> Result<ExperimentStats> {
    let tagset = PosTagset::default();
    let titles = stage("load-titles", load_titles(&config.titles_path))?;
    if titles.is_empty() {
        return stage("load-titles", Err(Error::EmptyCorpus));
    }
    let lexicon = stage(
        "load-lexicon",
        match &config.lexicon_path {
            Some(p) => load_lexicon(p, &tagset),
            None => Ok(Lexicon::bundled()),
        },
    )?;
    let policy = stage(
        "load-policy",
        match &config.policy_path {
            Some(p) => InsertionPolicy::load(p, &tagset),
            None => Ok(InsertionPolicy::bundled(&tagset)),
        },
    )?;
    let policy_hash = policy.fingerprint();

    let mut out = OutputTree::create(&config.out_dir)?;
    out.write("policy.cfg", policy.to_config_string())?;

    let base_header = vec![
        ("created_by", CREATED_BY.to_string()),
        ("particle", policy.particle.clone()),
        ("policy_hash", policy_hash.clone()),
    ];
    let source_pairs = titles
        .iter()
        .map(|t| {
            ParallelPair::new(
                t.id.clone(),
                t.title.clone(),
                t.reference.clone().unwrap_or_default(),
                Provenance::Original,
            )
        })
        .collect();
    out.write(
        "source.tsv",
        stage("load-titles", corpus_tsv(source_pairs, &base_header))?,
    )?;

    // Baseline translation.
    let originals: Vec<String> = titles.iter().map(|t| t.title.clone()).collect();
    let baseline = stage("translate-baseline", backend.translate(&originals))?;
    let backend_id = backend.backend_id();
    let mut header = base_header.clone();
    header.push(("backend_id", backend_id.clone()));
    let pairs = titles
        .iter()
        .zip(&baseline)
        .map(|(t, tr)| ParallelPair::new(t.id.clone(), t.title.clone(), tr.clone(), Provenance::Translated))
        .collect();
    out.write("baseline_translations.tsv", corpus_tsv(pairs, &header)?)?;

    // Candidate detection and insertion.
    let inserter = DeInserter::new(&lexicon, &tagset, &policy);
    let decisions = match &config.annotations_path {
        Some(p) => Some(stage("annotations", read_log(p))?),
        None => None,
    };
    let mut all_candidates = Vec::new();
    let mut modified = Vec::with_capacity(titles.len());
    let mut applied_counts = Vec::with_capacity(titles.len());
    let mut with_candidates = 0;
    for t in &titles {
        let mut candidates = match &decisions {
            None => stage("detect", inserter.auto_insert(&t.id, &t.title))?.candidates,
            Some(_) => stage("detect", inserter.candidates(&t.id, &t.title))?,
        };
        if !candidates.is_empty() {
            with_candidates += 1;
        }
        all_candidates.append(&mut candidates);
    }
    if let Some(log) = &decisions {
        let known: HashSet<String> = all_candidates.iter().map(|c| c.key()).collect();
        if let Some((line, d)) = log.iter().enumerate().find(|(_, d)| !known.contains(&d.candidate_key)) {
            return stage(
                "annotations",
                Err(Error::UnknownCandidate {
                    key: d.candidate_key.clone(),
                    line: line + 1,
                }),
            );
        }
        let live = live_decisions(log);
        for c in &mut all_candidates {
            c.status = live
                .get(c.key().as_str())
                .map(|d| d.status())
                .unwrap_or(CandidateStatus::Proposed);
        }
    }
    let mut by_title: HashMap<&str, Vec<InsertionCandidate>> = HashMap::new();
    for c in all_candidates.iter().filter(|c| c.status.is_applicable()) {
        by_title.entry(c.sentence_id.as_str()).or_default().push(c.clone());
    }
    for t in &titles {
        let applied = by_title.remove(t.id.as_str()).unwrap_or_default();
        applied_counts.push(applied.len());
        modified.push(stage("insert", apply_insertions(&t.title, &applied, &policy.particle))?);
    }
    out.write("candidates.jsonl", candidates_jsonl(&all_candidates)?)?;
    let pairs = titles
        .iter()
        .zip(&modified)
        .zip(&applied_counts)
        .map(|((t, m), &n)| {
            let provenance = if n > 0 {
                Provenance::DeModified
            } else {
                Provenance::Original
            };
            ParallelPair::new(
                t.id.clone(),
                m.clone(),
                t.reference.clone().unwrap_or_default(),
                provenance,
            )
        })
        .collect();
    out.write("modified.tsv", corpus_tsv(pairs, &base_header)?)?;

    // Modified translation.
    let modified_out = stage("translate-modified", backend.translate(&modified))?;
    let pairs = titles
        .iter()
        .zip(&modified)
        .zip(&modified_out)
        .map(|((t, m), tr)| ParallelPair::new(t.id.clone(), m.clone(), tr.clone(), Provenance::Translated))
        .collect();
    out.write("modified_translations.tsv", corpus_tsv(pairs, &header)?)?;

    // Scoring.
    let comparisons: Vec<TitleComparison> = titles
        .iter()
        .enumerate()
        .map(|(i, t)| compare(t, &baseline[i], &modified_out[i], applied_counts[i], config))
        .collect();
    out.write("comparison.tsv", comparison_tsv(&comparisons))?;

    // Tuning corpus: titles that received at least one insertion.
    let tuning_pairs: Vec<ParallelPair> = titles
        .iter()
        .enumerate()
        .filter(|(i, _)| applied_counts[*i] > 0)
        .map(|(i, t)| {
            ParallelPair::new(
                t.id.clone(),
                t.title.clone(),
                modified_out[i].clone(),
                Provenance::DeModified,
            )
        })
        .collect();
    let mut tuning_header = header.clone();
    tuning_header.push(("seed", config.seed.to_string()));
    let tuning = stage("export", corpus_tsv(tuning_pairs, &tuning_header))?;
    if config.dev_size > 0 {
        let corpus = Corpus::parse_tsv(&tuning)?;
        let parts = stage("export", split(&corpus, &[config.dev_size], config.seed))?;
        out.write("tuning.dev.tsv", parts[0].to_tsv()?)?;
        out.write("tuning.train.tsv", parts[1].to_tsv()?)?;
    }
    out.write("tuning.tsv", tuning)?;

    let stats = summarize(&comparisons, with_candidates);
    out.write("stats.json", serde_json::to_string_pretty(&stats)? + "\n")?;
    out.commit()?;
    Ok(stats)
}

fn compare(
    title: &TitleRecord,
    baseline: &str,
    modified: &str,
    insertions: usize,
    config: &ExperimentConfig,
) -> TitleComparison {
    let (bleu, chrf) = match &title.reference {
        Some(r) => (
            Some((
                sentence_bleu(baseline, r, &config.metrics.bleu),
                sentence_bleu(modified, r, &config.metrics.bleu),
            )),
            Some((
                sentence_chrf(baseline, r, &config.metrics.chrf),
                sentence_chrf(modified, r, &config.metrics.chrf),
            )),
        ),
        None => (None, None),
    };
    let delta = |p: Option<(f64, f64)>| p.map(|(a, b)| b - a).unwrap_or(0.0);
    let chrf_delta = delta(chrf);
    TitleComparison {
        id: title.id.clone(),
        insertions,
        baseline_translation: baseline.to_string(),
        modified_translation: modified.to_string(),
        bleu,
        chrf,
        bleu_delta: delta(bleu),
        chrf_delta,
        verdict: Verdict::classify(chrf_delta, config.chrf_threshold),
    }
}

fn summarize(rows: &[TitleComparison], titles_with_candidates: usize) -> ExperimentStats {
    let count = |v: Verdict| rows.iter().filter(|r| r.verdict == v).count();
    let n = rows.len() as f64;
    ExperimentStats {
        total_titles: rows.len(),
        titles_with_candidates,
        titles_improved: count(Verdict::Improved),
        titles_regressed: count(Verdict::Regressed),
        titles_unchanged: count(Verdict::Unchanged),
        mean_bleu_delta: rows.iter().map(|r| r.bleu_delta).sum::<f64>() / n,
        mean_chrf_delta: rows.iter().map(|r| r.chrf_delta).sum::<f64>() / n,
    }
}
