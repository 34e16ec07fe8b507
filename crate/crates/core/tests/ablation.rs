mod common;

use std::collections::HashMap;
use std::time::Instant;

use common::{oracle_bleu, oracle_chrf};
use dezh_core::ablation::{ablate_all, bundled_wordlist, run_ablation, ReferenceMode};
use dezh_core::data::demo;
use dezh_core::metrics::MetricsConfig;
use dezh_core::mt_client::MockBackend;

/// Pinned from the oracle below on the bundled demo corpus and dictionary.
const DE_BLEU_DELTA: f64 = -43.6365;
const DE_CHRF_DELTA: f64 = -25.1353;

fn dictionary() -> HashMap<&'static str, &'static str> {
    demo::CORPUS_DICT
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split_once('\t').unwrap())
        .collect()
}

fn oracle_deltas(word: &str) -> (f64, f64) {
    let dict = dictionary();
    let lookup = |s: &str| {
        dict.get(s)
            .map(|t| t.to_string())
            .unwrap_or_else(|| format!("<untranslated:{s}>"))
    };
    let corpus = demo::corpus_sentences();
    let base: Vec<String> = corpus.iter().map(|s| lookup(s)).collect();
    let variant: Vec<String> = corpus.iter().map(|s| lookup(&s.replace(word, ""))).collect();
    let b: Vec<&str> = base.iter().map(String::as_str).collect();
    let v: Vec<&str> = variant.iter().map(String::as_str).collect();
    (
        oracle_bleu(&v, &b, 4, true) - oracle_bleu(&b, &b, 4, true),
        oracle_chrf(&v, &b, 6, 2.0) - oracle_chrf(&b, &b, 6, 2.0),
    )
}

#[test]
fn demo_corpus_ablation() {
    let corpus = demo::corpus_sentences();
    assert_eq!(corpus.len(), 100);
    let words = bundled_wordlist();
    let mock = MockBackend::parse(demo::CORPUS_DICT, "mock:corpus_dict.tsv").unwrap();
    let started = Instant::now();
    let report = run_ablation(
        &corpus,
        &words,
        &mock,
        &MetricsConfig::default(),
        &ReferenceMode::BaselineAsReference,
    )
    .unwrap();
    assert!(started.elapsed().as_secs_f64() < 30.0);

    assert_eq!(report.rows.len(), 82);
    assert_eq!(report.baseline.bleu, 100.0);
    for row in &report.rows {
        if row.sentences_changed == 0 {
            assert_eq!(row.bleu_delta, 0.0, "{}", row.surface);
            assert_eq!(row.chrf_delta, 0.0, "{}", row.surface);
        } else {
            assert!(row.bleu_delta < 0.0, "{}", row.surface);
        }
    }
    for pair in report.rows.windows(2) {
        assert!(pair[0].bleu_delta.abs() >= pair[1].bleu_delta.abs());
    }

    let top = &report.rows[0];
    assert_eq!(top.surface, "的");
    assert_eq!(top.sentences_changed, 70);
    let (bleu, chrf) = oracle_deltas("的");
    assert!((top.bleu_delta - bleu).abs() < 1e-6, "{} vs {bleu}", top.bleu_delta);
    assert!((top.chrf_delta - chrf).abs() < 1e-6, "{} vs {chrf}", top.chrf_delta);
    assert!((bleu - DE_BLEU_DELTA).abs() < 5e-5, "{bleu}");
    assert!((chrf - DE_CHRF_DELTA).abs() < 5e-5, "{chrf}");

    // 的 beats the other two words named in the design: 和 and 在.
    for w in ["和", "在"] {
        let row = report.rows.iter().find(|r| r.surface == w).unwrap();
        let (b, _) = oracle_deltas(w);
        assert!((row.bleu_delta - b).abs() < 1e-6);
        assert!(b.abs() < bleu.abs());
    }
}

#[test]
fn variants_match_substring_deletion() {
    let corpus = demo::corpus_sentences();
    let words = bundled_wordlist();
    let variants = ablate_all(&corpus, &words);
    assert_eq!(variants.len(), 82);
    for v in &variants {
        for (i, s) in corpus.iter().enumerate() {
            assert_eq!(v.sentences[i], s.replace(&v.word.surface, ""));
            assert_eq!(v.removal_counts[i], s.matches(&v.word.surface).count());
        }
    }
}

#[test]
fn gold_reference_mode_scores_baseline_too() {
    let corpus = ["学生的问题", "天气很好"];
    let mock = MockBackend::from_pairs([
        ("学生的问题", "the student's question"),
        ("学生问题", "student question"),
        ("天气很好", "the weather is nice"),
    ]);
    let refs = vec!["the student's question".to_string(), "the weather is good".to_string()];
    let words = bundled_wordlist();
    let report = run_ablation(
        &corpus,
        &words,
        &mock,
        &MetricsConfig::default(),
        &ReferenceMode::Gold(refs),
    )
    .unwrap();
    assert!(report.baseline.bleu < 100.0);
    assert_eq!(report.rows[0].surface, "的");
    assert!(report.rows[0].bleu_delta < 0.0);
}
