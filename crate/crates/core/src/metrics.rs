//! Corpus BLEU and chrF, single reference per hypothesis, 0-100 scale.
//!
//! Both metrics are computed from additive sufficient statistics so that a
//! corpus score is the pooled statistic of its sentences. Per-sentence work
//! runs in parallel; the reduction is sequential in input order.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    None,
    /// A precision with a zero numerator becomes `(0 + 1) / (den + 1)`.
    AddOneOnZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_order: usize,
    pub weights: Vec<f64>,
    pub smoothing: Smoothing,
    pub case_fold: bool,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig::uniform(4)
    }
}

impl BleuConfig {
    pub fn uniform(max_order: usize) -> Self {
        BleuConfig {
            max_order,
            weights: vec![1.0 / max_order as f64; max_order],
            smoothing: Smoothing::AddOneOnZero,
            case_fold: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_order == 0 {
            return Err(Error::InvalidMetricConfig("BLEU max_order must be >= 1".into()));
        }
        if self.weights.len() != self.max_order {
            return Err(Error::InvalidMetricConfig(format!(
                "expected {} BLEU weights, got {}",
                self.max_order,
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidMetricConfig("BLEU weights must be non-negative".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMetricConfig(format!(
                "BLEU weights sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChrfConfig {
    pub max_order: usize,
    pub beta: f64,
    pub strip_whitespace: bool,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        ChrfConfig {
            max_order: 6,
            beta: 2.0,
            strip_whitespace: true,
        }
    }
}

impl ChrfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_order == 0 {
            return Err(Error::InvalidMetricConfig("chrF max_order must be >= 1".into()));
        }
        if self.beta.is_nan() || self.beta <= 0.0 || !self.beta.is_finite() {
            return Err(Error::InvalidMetricConfig("chrF beta must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub bleu: BleuConfig,
    pub chrf: ChrfConfig,
}

/// Lowercases (optionally), splits on whitespace, and splits every
/// character that is neither alphanumeric nor whitespace into its own token.
pub fn tokenize_target(text: &str, case_fold: bool) -> Vec<String> {
    let text = if case_fold {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if c.is_alphanumeric() {
            current.push(c);
        } else {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(c.to_string());
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn ngram_counts<T: Eq + Hash>(items: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut counts = HashMap::new();
    if n == 0 || items.len() < n {
        return counts;
    }
    for window in items.windows(n) {
        *counts.entry(window).or_insert(0) += 1;
    }
    counts
}

/// Clipped matches and hypothesis/reference n-gram totals for one order.
fn overlap<T: Eq + Hash>(hyp: &[T], reference: &[T], n: usize) -> (u64, u64, u64) {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let matches = h.iter().map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0))).sum();
    (
        matches,
        hyp.len().saturating_sub(n - 1) as u64,
        reference.len().saturating_sub(n - 1) as u64,
    )
}

/// Additive BLEU statistics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuStats {
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub fn zero(max_order: usize) -> Self {
        BleuStats {
            matches: vec![0; max_order],
            totals: vec![0; max_order],
            hyp_len: 0,
            ref_len: 0,
        }
    }

    pub fn from_pair(hyp: &str, reference: &str, config: &BleuConfig) -> Self {
        let h = tokenize_target(hyp, config.case_fold);
        let r = tokenize_target(reference, config.case_fold);
        let mut stats = Self::zero(config.max_order);
        for n in 1..=config.max_order {
            let (m, t, _) = overlap(&h, &r, n);
            stats.matches[n - 1] = m;
            stats.totals[n - 1] = t;
        }
        stats.hyp_len = h.len() as u64;
        stats.ref_len = r.len() as u64;
        stats
    }

    pub fn add(&mut self, other: &BleuStats) {
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    pub fn score(&self, config: &BleuConfig) -> BleuScore {
        let precisions: Vec<f64> = self
            .matches
            .iter()
            .zip(&self.totals)
            .map(|(&m, &t)| match (m, config.smoothing) {
                (0, Smoothing::AddOneOnZero) => 1.0 / (t + 1) as f64,
                (_, _) if t == 0 => 0.0,
                (m, _) => m as f64 / t as f64,
            })
            .collect();
        let bp = brevity_penalty(self.hyp_len, self.ref_len);

        let mut log_sum = 0.0;
        let mut zero = false;
        for (p, w) in precisions.iter().zip(&config.weights) {
            if *w == 0.0 {
                continue;
            }
            if *p == 0.0 {
                zero = true;
                break;
            }
            log_sum += w * p.ln();
        }
        let score = if zero || bp == 0.0 {
            0.0
        } else {
            (100.0 * bp * log_sum.exp()).clamp(0.0, 100.0)
        };
        BleuScore {
            score,
            precisions,
            bp,
            hyp_len: self.hyp_len,
            ref_len: self.ref_len,
        }
    }
}

/// `1` if the hypothesis is longer than the reference, otherwise
/// `exp(1 - ref_len / hyp_len)`. An empty hypothesis against a non-empty
/// reference gets the limit value 0.
pub fn brevity_penalty(hyp_len: u64, ref_len: u64) -> f64 {
    if hyp_len > ref_len || ref_len == 0 {
        1.0
    } else if hyp_len == 0 {
        0.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    /// Per-order precision after smoothing.
    pub precisions: Vec<f64>,
    pub bp: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

/// Additive chrF statistics, one slot per n-gram order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChrfStats {
    pub matches: Vec<u64>,
    pub hyp_totals: Vec<u64>,
    pub ref_totals: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChrfScore {
    pub score: f64,
    pub precision: f64,
    pub recall: f64,
}

impl ChrfStats {
    pub fn zero(max_order: usize) -> Self {
        ChrfStats {
            matches: vec![0; max_order],
            hyp_totals: vec![0; max_order],
            ref_totals: vec![0; max_order],
        }
    }

    pub fn from_pair(hyp: &str, reference: &str, config: &ChrfConfig) -> Self {
        let chars = |s: &str| -> Vec<char> {
            s.chars()
                .filter(|c| !(config.strip_whitespace && c.is_whitespace()))
                .collect()
        };
        let h = chars(hyp);
        let r = chars(reference);
        let mut stats = Self::zero(config.max_order);
        for n in 1..=config.max_order {
            let (m, ht, rt) = overlap(&h, &r, n);
            stats.matches[n - 1] = m;
            stats.hyp_totals[n - 1] = ht;
            stats.ref_totals[n - 1] = rt;
        }
        stats
    }

    pub fn add(&mut self, other: &ChrfStats) {
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
        for (a, b) in self.hyp_totals.iter_mut().zip(&other.hyp_totals) {
            *a += b;
        }
        for (a, b) in self.ref_totals.iter_mut().zip(&other.ref_totals) {
            *a += b;
        }
    }

    /// Orders empty on both sides are skipped; orders empty on one side
    /// count as zero precision and recall.
    pub fn score(&self, config: &ChrfConfig) -> ChrfScore {
        let mut p_sum = 0.0;
        let mut r_sum = 0.0;
        let mut orders = 0usize;
        for n in 0..self.matches.len() {
            let (m, ht, rt) = (self.matches[n], self.hyp_totals[n], self.ref_totals[n]);
            if ht == 0 && rt == 0 {
                continue;
            }
            orders += 1;
            if ht > 0 {
                p_sum += m as f64 / ht as f64;
            }
            if rt > 0 {
                r_sum += m as f64 / rt as f64;
            }
        }
        if orders == 0 {
            return ChrfScore {
                score: 0.0,
                precision: 0.0,
                recall: 0.0,
            };
        }
        let precision = p_sum / orders as f64;
        let recall = r_sum / orders as f64;
        let beta2 = config.beta * config.beta;
        let denom = beta2 * precision + recall;
        let score = if denom == 0.0 {
            0.0
        } else {
            (100.0 * (1.0 + beta2) * precision * recall / denom).clamp(0.0, 100.0)
        };
        ChrfScore {
            score,
            precision,
            recall,
        }
    }
}

fn check_lengths<A, B>(hyps: &[A], refs: &[B]) -> Result<()> {
    if hyps.len() != refs.len() {
        return Err(Error::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(())
}

pub fn corpus_bleu<H, R>(hyps: &[H], refs: &[R], config: &BleuConfig) -> Result<BleuScore>
where
    H: AsRef<str> + Sync,
    R: AsRef<str> + Sync,
{
    config.validate()?;
    check_lengths(hyps, refs)?;
    let per: Vec<BleuStats> = hyps
        .par_iter()
        .zip(refs.par_iter())
        .map(|(h, r)| BleuStats::from_pair(h.as_ref(), r.as_ref(), config))
        .collect();
    let mut total = BleuStats::zero(config.max_order);
    for s in &per {
        total.add(s);
    }
    Ok(total.score(config))
}

pub fn sentence_bleu(hyp: &str, reference: &str, config: &BleuConfig) -> f64 {
    BleuStats::from_pair(hyp, reference, config).score(config).score
}

pub fn corpus_chrf<H, R>(hyps: &[H], refs: &[R], config: &ChrfConfig) -> Result<ChrfScore>
where
    H: AsRef<str> + Sync,
    R: AsRef<str> + Sync,
{
    config.validate()?;
    check_lengths(hyps, refs)?;
    let per: Vec<ChrfStats> = hyps
        .par_iter()
        .zip(refs.par_iter())
        .map(|(h, r)| ChrfStats::from_pair(h.as_ref(), r.as_ref(), config))
        .collect();
    let mut total = ChrfStats::zero(config.max_order);
    for s in &per {
        total.add(s);
    }
    Ok(total.score(config))
}

pub fn sentence_chrf(hyp: &str, reference: &str, config: &ChrfConfig) -> f64 {
    ChrfStats::from_pair(hyp, reference, config).score(config).score
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub bleu: f64,
    pub chrf: f64,
}

/// Corpus and per-sentence BLEU/chrF. Field names are the JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu: f64,
    pub chrf: f64,
    pub bp: f64,
    pub precisions: Vec<f64>,
    pub hyp_len: u64,
    pub ref_len: u64,
    pub sentences: Vec<SentenceScore>,
}

/// Scores a corpus with both metrics.
pub fn evaluate<H, R>(hyps: &[H], refs: &[R], config: &MetricsConfig) -> Result<MetricReport>
where
    H: AsRef<str> + Sync,
    R: AsRef<str> + Sync,
{
    config.bleu.validate()?;
    config.chrf.validate()?;
    check_lengths(hyps, refs)?;

    let per: Vec<(BleuStats, ChrfStats)> = hyps
        .par_iter()
        .zip(refs.par_iter())
        .map(|(h, r)| {
            (
                BleuStats::from_pair(h.as_ref(), r.as_ref(), &config.bleu),
                ChrfStats::from_pair(h.as_ref(), r.as_ref(), &config.chrf),
            )
        })
        .collect();

    let mut bleu_total = BleuStats::zero(config.bleu.max_order);
    let mut chrf_total = ChrfStats::zero(config.chrf.max_order);
    let mut sentences = Vec::with_capacity(per.len());
    for (b, c) in &per {
        bleu_total.add(b);
        chrf_total.add(c);
        sentences.push(SentenceScore {
            bleu: b.score(&config.bleu).score,
            chrf: c.score(&config.chrf).score,
        });
    }
    let bleu = bleu_total.score(&config.bleu);
    let chrf = chrf_total.score(&config.chrf);
    Ok(MetricReport {
        bleu: bleu.score,
        chrf: chrf.score,
        bp: bleu.bp,
        precisions: bleu.precisions,
        hyp_len: bleu.hyp_len,
        ref_len: bleu.ref_len,
        sentences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unsmoothed() -> BleuConfig {
        BleuConfig {
            smoothing: Smoothing::None,
            ..BleuConfig::default()
        }
    }

    #[test]
    fn tokenizer() {
        assert_eq!(
            tokenize_target("Students' questions.", true),
            vec!["students", "'", "questions", "."]
        );
        assert!(tokenize_target("", true).is_empty());
        assert_eq!(tokenize_target("A  B", true), vec!["a", "b"]);
        assert_eq!(tokenize_target("A  B", false), vec!["A", "B"]);
    }

    #[test]
    fn bleu_identity_and_disjoint() {
        let s = ["the student's question", "economic growth slows"];
        let b = corpus_bleu(&s, &s, &BleuConfig::default()).unwrap();
        assert_eq!(b.score, 100.0);
        let d = corpus_bleu(&["alpha beta"], &["gamma delta"], &unsmoothed()).unwrap();
        assert_eq!(d.score, 0.0);
    }

    #[test]
    fn bleu_hand_counted() {
        let b = corpus_bleu(
            &["the cat sat on the mat"],
            &["the cat is on the mat"],
            &BleuConfig::default(),
        )
        .unwrap();
        let expected = 100.0 * (5.0 / 6.0 * 3.0 / 5.0 * 1.0 / 4.0 * 1.0 / 4.0f64).powf(0.25);
        assert_eq!(b.bp, 1.0);
        assert_eq!(b.precisions, vec![5.0 / 6.0, 3.0 / 5.0, 1.0 / 4.0, 1.0 / 4.0]);
        assert!((b.score - expected).abs() < 1e-12, "{} vs {expected}", b.score);
    }

    #[test]
    fn brevity() {
        assert_eq!(brevity_penalty(5, 4), 1.0);
        assert_eq!(brevity_penalty(4, 4), 1.0);
        assert!((brevity_penalty(2, 4) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(brevity_penalty(0, 3), 0.0);
    }

    #[test]
    fn bleu_errors() {
        assert!(matches!(
            corpus_bleu(&["a"], &["a", "b"], &BleuConfig::default()),
            Err(Error::LengthMismatch { hyps: 1, refs: 2 })
        ));
        let empty: [&str; 0] = [];
        assert!(matches!(
            corpus_bleu(&empty, &empty, &BleuConfig::default()),
            Err(Error::EmptyCorpus)
        ));
        let bad = BleuConfig {
            weights: vec![0.5, 0.5, 0.5, 0.5],
            ..BleuConfig::default()
        };
        assert!(corpus_bleu(&["a"], &["a"], &bad).is_err());
    }

    #[test]
    fn chrf_identity_and_disjoint() {
        let cfg = ChrfConfig::default();
        assert_eq!(corpus_chrf(&["a cat"], &["a cat"], &cfg).unwrap().score, 100.0);
        assert_eq!(corpus_chrf(&["abc"], &["xyz"], &cfg).unwrap().score, 0.0);
        assert!(corpus_chrf(&["a"], &["a", "b"], &cfg).is_err());
    }

    #[test]
    fn chrf_hand_counted() {
        // Unigrams: 3 of 4 match both ways; bigrams: ab, bc match of 3.
        let cfg = ChrfConfig {
            max_order: 2,
            beta: 2.0,
            strip_whitespace: true,
        };
        let s = corpus_chrf(&["abcd"], &["abce"], &cfg).unwrap();
        let p = (3.0 / 4.0 + 2.0 / 3.0) / 2.0;
        assert!((s.precision - p).abs() < 1e-12);
        assert!((s.recall - p).abs() < 1e-12);
        assert!((s.score - 100.0 * p).abs() < 1e-9);
    }

    #[test]
    fn chrf_skips_orders_empty_on_both_sides() {
        // Neither side has a 3-gram; only orders 1 and 2 count.
        let cfg = ChrfConfig {
            max_order: 3,
            ..ChrfConfig::default()
        };
        assert_eq!(corpus_chrf(&["ab"], &["ab"], &cfg).unwrap().score, 100.0);
        // The reference has 3-grams the hypothesis lacks: order 3 contributes 0.
        let s = corpus_chrf(&["ab"], &["abc"], &cfg).unwrap();
        assert!(s.score < 100.0 && s.score > 0.0);
    }

    #[test]
    fn evaluate_reports_everything() {
        let hyps = ["the cat sat on the mat", "hello world"];
        let refs = ["the cat is on the mat", "hello world"];
        let r = evaluate(&hyps, &refs, &MetricsConfig::default()).unwrap();
        assert_eq!(r.sentences.len(), 2);
        assert_eq!(r.sentences[1].bleu, 100.0);
        assert_eq!(r.hyp_len, 8);
        assert_eq!(r.ref_len, 8);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["bleu", "chrf", "bp", "precisions", "hyp_len", "ref_len", "sentences"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }
}
