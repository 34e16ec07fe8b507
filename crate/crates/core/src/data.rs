//! Resources bundled into the binary.
//!
//! The lexicon is a frequency-ranked subset of the jieba dictionary (MIT),
//! with tags folded into the ICTCLAS-style subset used by
//! [`PosTagset::default`](crate::lexicon::PosTagset::default).

pub const LEXICON: &str = include_str!("../data/lexicon.tsv");

/// 82 closed-class words in four categories.
pub const FUNCTION_WORDS: &str = include_str!("../data/function_words.tsv");

pub const DEFAULT_POLICY: &str = include_str!("../data/default_policy.cfg");

/// Demo material: a small ablation corpus with its mock dictionary, and a
/// 20-title experiment set (with gold references) with its mock dictionary.
pub mod demo {
    pub const CORPUS: &str = include_str!("../data/demo/corpus.txt");
    pub const CORPUS_DICT: &str = include_str!("../data/demo/corpus_dict.tsv");
    pub const TITLES: &str = include_str!("../data/demo/titles.tsv");
    pub const TITLES_DICT: &str = include_str!("../data/demo/titles_dict.tsv");

    /// Non-blank lines of [`CORPUS`].
    pub fn corpus_sentences() -> Vec<String> {
        CORPUS
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect()
    }
}
