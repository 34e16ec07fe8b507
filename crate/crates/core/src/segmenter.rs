//! Dictionary-driven segmentation and POS tagging.
//!
//! Han text is segmented by building a DAG of every lexicon word spanning a
//! substring and picking the maximum-score path, where each word scores
//! `ln(freq + 1) - ln(total_frequency + entry_count)`. A single character
//! is always an edge; if it is not a lexicon word it scores as frequency 0.
//!
//! Runs of Latin letters, digits or whitespace bypass the DAG and become one
//! token per run.
//!
//! Ties (scores within [`SCORE_EPSILON`]) prefer fewer tokens, then the
//! longer token at the first point where two paths diverge.

use serde::{Deserialize, Serialize};

use crate::lexicon::{Lexicon, PosTagset};

/// Two path scores closer than this are treated as equal.
pub const SCORE_EPSILON: f64 = 1e-9;

/// Half-open character interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// `None` until the sentence has been through [`tag`].
    pub pos: Option<String>,
    #[serde(flatten)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedSentence {
    pub text: String,
    pub tokens: Vec<Token>,
}

impl SegmentedSentence {
    pub fn is_tagged(&self) -> bool {
        self.tokens.iter().all(|t| t.pos.is_some())
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    /// `surface/pos` pairs joined by spaces; untagged tokens print bare.
    pub fn to_tagged_string(&self) -> String {
        self.tokens
            .iter()
            .map(|t| match &t.pos {
                Some(pos) => format!("{}/{}", t.surface, pos),
                None => t.surface.clone(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Latin,
    Digit,
    Space,
    Other,
}

fn classify(c: char) -> CharClass {
    if c.is_whitespace() {
        CharClass::Space
    } else if c.is_ascii_alphabetic() || ('Ａ'..='Ｚ').contains(&c) || ('ａ'..='ｚ').contains(&c) {
        CharClass::Latin
    } else if c.is_ascii_digit() || ('０'..='９').contains(&c) {
        CharClass::Digit
    } else {
        CharClass::Other
    }
}

/// True when every character belongs to a script-run class (Latin, digit,
/// whitespace); such tokens are always tagged unknown.
fn is_script_run(surface: &str) -> bool {
    !surface.is_empty() && surface.chars().all(|c| classify(c) != CharClass::Other)
}

/// `ln(total_frequency + entry_count)` for a lexicon.
pub fn log_normalizer(lexicon: &Lexicon) -> f64 {
    ((lexicon.total_frequency() + lexicon.len() as u64) as f64).ln()
}

/// Segmenter bound to a lexicon and a scoring normalizer.
#[derive(Debug, Clone, Copy)]
pub struct Segmenter<'a> {
    lexicon: &'a Lexicon,
    log_norm: f64,
}

#[derive(Debug, Clone, Copy)]
struct Best {
    score: f64,
    tokens: usize,
    next: usize,
}

impl<'a> Segmenter<'a> {
    pub fn new(lexicon: &'a Lexicon) -> Self {
        Segmenter {
            lexicon,
            log_norm: log_normalizer(lexicon),
        }
    }

    /// Uses a caller-supplied normalizer instead of the lexicon's own; lets
    /// two lexicons be compared on the same scale.
    pub fn with_log_norm(lexicon: &'a Lexicon, log_norm: f64) -> Self {
        Segmenter { lexicon, log_norm }
    }

    /// Score of one DAG edge. `None` marks a non-lexicon single character.
    pub fn word_score(&self, frequency: Option<u64>) -> f64 {
        let f = frequency.unwrap_or(0);
        ((f + 1) as f64).ln() - self.log_norm
    }

    /// Sum of edge scores over the non-script-run tokens of a sentence.
    pub fn path_score(&self, sentence: &SegmentedSentence) -> f64 {
        sentence
            .tokens
            .iter()
            .filter(|t| !is_script_run(&t.surface))
            .map(|t| self.word_score(self.lexicon.lookup(&t.surface).map(|e| e.frequency)))
            .sum()
    }

    pub fn segment(&self, text: &str) -> SegmentedSentence {
        // Byte offset of every char boundary, including the end.
        let mut bounds: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bounds.push(text.len());
        let classes: Vec<CharClass> = text.chars().map(classify).collect();
        let n = classes.len();

        let mut tokens = Vec::new();
        let mut i = 0;
        while i < n {
            let class = classes[i];
            let mut j = i + 1;
            while j < n && classes[j] == class {
                j += 1;
            }
            if class == CharClass::Other {
                self.segment_chunk(text, &bounds, i, j, &mut tokens);
            } else {
                tokens.push(make_token(text, &bounds, i, j));
            }
            i = j;
        }

        SegmentedSentence {
            text: text.to_string(),
            tokens,
        }
    }

    fn segment_chunk(&self, text: &str, bounds: &[usize], start: usize, end: usize, out: &mut Vec<Token>) {
        let max_len = self.lexicon.max_word_len().max(1);
        let mut best: Vec<Option<Best>> = vec![None; end - start + 1];
        best[end - start] = Some(Best {
            score: 0.0,
            tokens: 0,
            next: end,
        });

        for i in (start..end).rev() {
            let mut chosen: Option<Best> = None;
            for j in (i + 1)..=(end.min(i + max_len)) {
                let word = &text[bounds[i]..bounds[j]];
                let freq = match self.lexicon.lookup(word) {
                    Some(entry) => Some(entry.frequency),
                    None if j == i + 1 => None,
                    None => continue,
                };
                let rest = best[j - start].expect("suffix solved");
                let cand = Best {
                    score: self.word_score(freq) + rest.score,
                    tokens: rest.tokens + 1,
                    next: j,
                };
                // Lengths are visited in increasing order, so `>=` on the
                // tie path lets the longer first token win.
                chosen = match chosen {
                    None => Some(cand),
                    Some(cur) if prefer(&cand, &cur) => Some(cand),
                    keep => keep,
                };
            }
            best[i - start] = chosen;
        }

        let mut i = start;
        while i < end {
            let next = best[i - start].expect("path exists").next;
            out.push(make_token(text, bounds, i, next));
            i = next;
        }
    }
}

/// `cand` is visited after `cur` and is therefore the longer first token.
fn prefer(cand: &Best, cur: &Best) -> bool {
    if cand.score > cur.score + SCORE_EPSILON {
        return true;
    }
    if cand.score < cur.score - SCORE_EPSILON {
        return false;
    }
    cand.tokens <= cur.tokens
}

fn make_token(text: &str, bounds: &[usize], start: usize, end: usize) -> Token {
    Token {
        surface: text[bounds[start]..bounds[end]].to_string(),
        pos: None,
        span: Span { start, end },
    }
}

pub fn segment(text: &str, lexicon: &Lexicon) -> SegmentedSentence {
    Segmenter::new(lexicon).segment(text)
}

/// Assigns each token the first tag of its lexicon entry. Out-of-vocabulary
/// tokens and Latin/digit/whitespace runs get the tagset's unknown tag.
pub fn tag(sentence: &SegmentedSentence, lexicon: &Lexicon, tagset: &PosTagset) -> SegmentedSentence {
    let tokens = sentence
        .tokens
        .iter()
        .map(|t| {
            let pos = if is_script_run(&t.surface) {
                tagset.unknown_tag().to_string()
            } else {
                lexicon
                    .lookup(&t.surface)
                    .map(|e| e.primary_tag().to_string())
                    .unwrap_or_else(|| tagset.unknown_tag().to_string())
            };
            Token {
                pos: Some(pos),
                ..t.clone()
            }
        })
        .collect();
    SegmentedSentence {
        text: sentence.text.clone(),
        tokens,
    }
}

/// Segment then tag.
pub fn analyze(text: &str, lexicon: &Lexicon, tagset: &PosTagset) -> SegmentedSentence {
    tag(&segment(text, lexicon), lexicon, tagset)
}
