//! Brute-force reference implementations used as test oracles. None of
//! this calls into the library's scoring or segmentation code.

#![allow(dead_code)]

/// Lowercase, split on whitespace, every non-alphanumeric char on its own.
pub fn oracle_tokens(text: &str) -> Vec<String> {
    let mut spaced = String::new();
    for c in text.to_lowercase().chars() {
        if c.is_alphanumeric() || c.is_whitespace() {
            spaced.push(c);
        } else {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

/// All n-grams of `items` as owned lists, in order.
fn ngrams<T: Clone>(items: &[T], n: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + n <= items.len() {
        out.push(items[i..i + n].to_vec());
        i += 1;
    }
    out
}

fn count<T: PartialEq>(list: &[Vec<T>], gram: &[T]) -> u64 {
    list.iter().filter(|g| g.as_slice() == gram).count() as u64
}

/// Clipped matches by listing every distinct hypothesis n-gram and counting
/// it on both sides by linear scan.
fn clipped<T: Clone + PartialEq>(hyp: &[T], reference: &[T], n: usize) -> (u64, u64, u64) {
    let h = ngrams(hyp, n);
    let r = ngrams(reference, n);
    let mut distinct: Vec<Vec<T>> = Vec::new();
    for g in &h {
        if !distinct.contains(g) {
            distinct.push(g.clone());
        }
    }
    let matches = distinct.iter().map(|g| count(&h, g).min(count(&r, g))).sum();
    (matches, h.len() as u64, r.len() as u64)
}

/// Corpus BLEU, uniform weights, 0..100.
pub fn oracle_bleu(hyps: &[&str], refs: &[&str], max_order: usize, smooth: bool) -> f64 {
    let mut m = vec![0u64; max_order];
    let mut t = vec![0u64; max_order];
    let (mut hl, mut rl) = (0u64, 0u64);
    for (h, r) in hyps.iter().zip(refs) {
        let h = oracle_tokens(h);
        let r = oracle_tokens(r);
        hl += h.len() as u64;
        rl += r.len() as u64;
        for n in 1..=max_order {
            let (a, b, _) = clipped(&h, &r, n);
            m[n - 1] += a;
            t[n - 1] += b;
        }
    }
    let mut product = 1.0f64;
    for n in 0..max_order {
        let p = if m[n] == 0 {
            if smooth {
                1.0 / (t[n] as f64 + 1.0)
            } else {
                0.0
            }
        } else {
            m[n] as f64 / t[n] as f64
        };
        product *= p;
    }
    if product == 0.0 || hl == 0 {
        return 0.0;
    }
    let bp = if hl > rl {
        1.0
    } else {
        (1.0 - rl as f64 / hl as f64).exp()
    };
    100.0 * bp * product.powf(1.0 / max_order as f64)
}

/// Corpus chrF with pooled per-order counts, whitespace removed.
pub fn oracle_chrf(hyps: &[&str], refs: &[&str], max_order: usize, beta: f64) -> f64 {
    let mut m = vec![0u64; max_order];
    let mut ht = vec![0u64; max_order];
    let mut rt = vec![0u64; max_order];
    for (h, r) in hyps.iter().zip(refs) {
        let h: Vec<char> = h.chars().filter(|c| !c.is_whitespace()).collect();
        let r: Vec<char> = r.chars().filter(|c| !c.is_whitespace()).collect();
        for n in 1..=max_order {
            let (a, b, c) = clipped(&h, &r, n);
            m[n - 1] += a;
            ht[n - 1] += b;
            rt[n - 1] += c;
        }
    }
    let (mut p, mut r, mut k) = (0.0, 0.0, 0.0);
    for n in 0..max_order {
        if ht[n] == 0 && rt[n] == 0 {
            continue;
        }
        k += 1.0;
        if ht[n] > 0 {
            p += m[n] as f64 / ht[n] as f64;
        }
        if rt[n] > 0 {
            r += m[n] as f64 / rt[n] as f64;
        }
    }
    if k == 0.0 {
        return 0.0;
    }
    let (p, r) = (p / k, r / k);
    let b2 = beta * beta;
    if b2 * p + r == 0.0 {
        return 0.0;
    }
    100.0 * (1.0 + b2) * p * r / (b2 * p + r)
}

/// Word table for [`oracle_segment`].
pub struct OracleLexicon {
    words: Vec<(Vec<char>, f64)>,
    unknown: f64,
}

impl OracleLexicon {
    /// Scores each word as `ln(f + 1) - ln(total + V)`.
    pub fn new(words: &[(String, u64)]) -> Self {
        let total: u64 = words.iter().map(|(_, f)| f).sum();
        let norm = ((total + words.len() as u64) as f64).ln();
        OracleLexicon {
            words: words
                .iter()
                .map(|(w, f)| (w.chars().collect(), ((f + 1) as f64).ln() - norm))
                .collect(),
            unknown: -norm,
        }
    }

    fn score(&self, piece: &[char]) -> Option<f64> {
        match self.words.iter().find(|(w, _)| w.as_slice() == piece) {
            Some((_, s)) => Some(*s),
            None if piece.len() == 1 => Some(self.unknown),
            None => None,
        }
    }
}

/// Exhaustive segmentation: every way of cutting `chars` into pieces where
/// each piece of two or more chars is a lexicon word. Returns the winning
/// piece lengths.
///
/// Winner: highest score (1e-9 tolerance), then fewest pieces, then the
/// sequence of pieces that is lexicographically earliest by
/// (start, -length).
pub fn oracle_segment(chars: &[char], lexicon: &OracleLexicon) -> Vec<usize> {
    let n = chars.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut lens = Vec::with_capacity(n);
    'masks: for mask in 0u32..(1u32 << (n - 1)) {
        lens.clear();
        let mut start = 0;
        let mut score = 0.0;
        for i in 1..=n {
            if i == n || mask & (1 << (i - 1)) != 0 {
                match lexicon.score(&chars[start..i]) {
                    Some(s) => score += s,
                    None => continue 'masks,
                }
                lens.push(i - start);
                start = i;
            }
        }
        let better = match &best {
            None => true,
            Some((s, l)) => {
                if score > s + 1e-9 {
                    true
                } else if score < s - 1e-9 {
                    false
                } else if lens.len() != l.len() {
                    lens.len() < l.len()
                } else {
                    // Starts agree up to the first differing piece, where the
                    // longer piece has the smaller -length.
                    lens.iter().map(|&x| -(x as i64)).lt(l.iter().map(|&x| -(x as i64)))
                }
            }
        };
        if better {
            best = Some((score, lens.clone()));
        }
    }
    best.expect("single-char path always exists").1
}

/// Ten-character alphabet for exhaustive segmentation checks.
pub const SEG_ALPHABET: [char; 10] = ['甲', '乙', '丙', '丁', '戊', '己', '庚', '辛', '壬', '癸'];

/// Fifteen entries over [`SEG_ALPHABET`]: single chars, overlapping
/// multi-char words, and equal frequencies that force exact score ties.
/// `甲`, `丙`, `辛`, `壬` and `癸` are not words on their own.
pub const SEG_LEXICON: &str = "\
乙\t40\tn
丁\t40\tn
戊\t5\tv
己\t300\tu
庚\t12\ta
甲乙\t60\tn
乙丙\t60\tn
丙丁\t9\tn
甲乙丙\t25\tns
丁戊己\t7\tv
戊己\t200\tn
庚辛\t31\td
辛壬癸\t3\tm
壬癸\t2\tq
甲乙丙丁\t1\tn
";

/// `(surface, frequency)` pairs of [`SEG_LEXICON`].
pub fn seg_words() -> Vec<(String, u64)> {
    SEG_LEXICON
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].to_string(), f[1].parse().unwrap())
        })
        .collect()
}

/// Every string of length 0..=max_len over `alphabet`, in length order.
pub fn all_strings(alphabet: &[char], max_len: usize) -> impl Iterator<Item = Vec<char>> + '_ {
    (0..=max_len).flat_map(move |len| {
        let total = alphabet.len().pow(len as u32);
        (0..total).map(move |mut k| {
            let mut s = Vec::with_capacity(len);
            for _ in 0..len {
                s.push(alphabet[k % alphabet.len()]);
                k /= alphabet.len();
            }
            s
        })
    })
}

/// Ten hypothesis/reference pairs: clipping, punctuation, case, a short
/// hypothesis, a long one, and pairs with no higher-order overlap.
pub const GOLDEN: [(&str, &str); 10] = [
    ("the cat sat on the mat", "the cat is on the mat"),
    ("the the the the", "the cat is here"),
    ("Students' questions.", "the students' questions ."),
    ("A quick brown fox", "The quick brown fox jumps over the lazy dog"),
    ("economic growth of china in 2024", "china's economic growth in 2024"),
    ("Hello, world!", "hello world"),
    (
        "we go to the park with the teacher",
        "we go to the museum with the teacher",
    ),
    (
        "report of the government on the economy",
        "the government's report on the economy",
    ),
    ("no overlap whatsoever", "completely different words"),
    ("the air of the city , the air of the town", "urban air"),
];
