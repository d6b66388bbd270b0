//! Character n-gram language models with additive smoothing, per-word
//! perplexity, and the perplexity-gap feature between an offensive-word
//! model and a clean-word model.
//!
//! A word of length m is padded with n-1 start sentinels and one end
//! sentinel; its perplexity averages over the m+1 transitions including
//! the end transition. The smoothing alphabet is the set of characters
//! seen in training plus the end sentinel; characters outside it are
//! mapped to a reserved unknown symbol at scoring time.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::math;

const START: char = '\u{0002}';
const END: char = '\u{0003}';
const UNK: char = '\u{FFFD}';

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CharLmError {
    EmptyWordList,
    InvalidOrder(usize),
    InvalidAlpha(String),
    SentinelInWord(String),
    Parse { line: usize, message: String },
}

impl core::fmt::Display for CharLmError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CharLmError::EmptyWordList => write!(f, "empty word list"),
            CharLmError::InvalidOrder(n) => write!(f, "order must be >= 2, got {n}"),
            CharLmError::InvalidAlpha(a) => write!(f, "alpha must be positive, got {a}"),
            CharLmError::SentinelInWord(w) => write!(f, "word `{w}` contains a sentinel character"),
            CharLmError::Parse { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CharLmError {}

#[derive(Debug, Clone, Default, PartialEq)]
struct ContextCounts {
    next: BTreeMap<char, u64>,
    total: u64,
}

/// Order-n character language model with additive smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct CharGramLM {
    order: usize,
    alpha: f64,
    alphabet: BTreeSet<char>,
    counts: BTreeMap<Vec<char>, ContextCounts>,
}

/// Train on a word list. Duplicate words are ignored: the model describes
/// a dictionary, so probabilities are invariant under repetition of the
/// list.
pub fn train_char_lm(words: &[&str], order: usize, alpha: f64) -> Result<CharGramLM, CharLmError> {
    if order < 2 {
        return Err(CharLmError::InvalidOrder(order));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(CharLmError::InvalidAlpha(format!("{alpha}")));
    }
    let unique: BTreeSet<&str> = words.iter().copied().filter(|w| !w.is_empty()).collect();
    if unique.is_empty() {
        return Err(CharLmError::EmptyWordList);
    }
    let mut alphabet = BTreeSet::new();
    alphabet.insert(END);
    let mut counts: BTreeMap<Vec<char>, ContextCounts> = BTreeMap::new();
    for word in unique {
        if word.contains(START) || word.contains(END) {
            return Err(CharLmError::SentinelInWord(word.to_owned()));
        }
        let mut seq: Vec<char> = core::iter::repeat(START).take(order - 1).collect();
        seq.extend(word.chars());
        seq.push(END);
        for c in word.chars() {
            alphabet.insert(c);
        }
        for i in (order - 1)..seq.len() {
            let ctx = seq[i - (order - 1)..i].to_vec();
            let entry = counts.entry(ctx).or_default();
            *entry.next.entry(seq[i]).or_insert(0) += 1;
            entry.total += 1;
        }
    }
    Ok(CharGramLM { order, alpha, alphabet, counts })
}

impl CharGramLM {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Size of the smoothing alphabet (training characters + end sentinel).
    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }

    /// Smoothed transition probability. The distribution over the alphabet
    /// sums to one for every context; symbols outside the alphabet (the
    /// unknown symbol) receive the numerator-alpha leak.
    pub fn prob(&self, context: &[char], next: char) -> f64 {
        let v = self.alphabet.len() as f64;
        let (count, total) = match self.counts.get(context) {
            Some(c) => (c.next.get(&next).copied().unwrap_or(0), c.total),
            None => (0, 0),
        };
        (count as f64 + self.alpha) / (total as f64 + self.alpha * v)
    }

    fn map_char(&self, c: char) -> char {
        if c != END && c != START && self.alphabet.contains(&c) {
            c
        } else {
            UNK
        }
    }

    /// Perplexity over the word's m+1 transitions (end sentinel included):
    /// `exp(-(1/m) sum ln P(c_i | ctx_i))`. Finite for any input because
    /// alpha > 0.
    pub fn perplexity(&self, word: &str) -> f64 {
        let mapped: Vec<char> = word.chars().map(|c| self.map_char(c)).collect();
        let mut seq: Vec<char> = core::iter::repeat(START).take(self.order - 1).collect();
        let m = mapped.len() + 1;
        seq.extend(mapped);
        seq.push(END);
        let mut log_sum = 0.0;
        for i in (self.order - 1)..seq.len() {
            log_sum += math::ln(self.prob(&seq[i - (self.order - 1)..i], seq[i]));
        }
        math::exp(-log_sum / m as f64)
    }

    /// Versioned text dump; counts are integers and alpha round-trips
    /// through its shortest decimal form, so probabilities are bit-exact
    /// after reload.
    pub fn serialize(&self) -> String {
        let mut out = String::from("charlm v1\n");
        out.push_str(&format!("order\t{}\n", self.order));
        out.push_str(&format!("alpha\t{}\n", self.alpha));
        let cps: Vec<String> = self.alphabet.iter().map(|c| (*c as u32).to_string()).collect();
        out.push_str(&format!("alphabet\t{}\n", cps.join(" ")));
        for (ctx, entry) in &self.counts {
            let ctx_cps: Vec<String> = ctx.iter().map(|c| (*c as u32).to_string()).collect();
            for (next, count) in &entry.next {
                out.push_str(&format!("count\t{}\t{}\t{}\n", ctx_cps.join(" "), *next as u32, count));
            }
        }
        out
    }

    pub fn parse(src: &str) -> Result<CharGramLM, CharLmError> {
        let mut lines = src.lines().enumerate();
        let parse_err = |line: usize, message: &str| CharLmError::Parse { line, message: message.to_owned() };
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
        if header != "charlm v1" {
            return Err(parse_err(1, "expected `charlm v1` header"));
        }
        let mut order = None;
        let mut alpha = None;
        let mut alphabet = BTreeSet::new();
        let mut counts: BTreeMap<Vec<char>, ContextCounts> = BTreeMap::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["order", v] => {
                    order = Some(v.parse::<usize>().map_err(|_| parse_err(line_no, "bad order"))?)
                }
                ["alpha", v] => {
                    alpha = Some(v.parse::<f64>().map_err(|_| parse_err(line_no, "bad alpha"))?)
                }
                ["alphabet", v] => {
                    for cp in v.split(' ') {
                        let n = cp.parse::<u32>().map_err(|_| parse_err(line_no, "bad codepoint"))?;
                        alphabet.insert(char::from_u32(n).ok_or_else(|| parse_err(line_no, "bad codepoint"))?);
                    }
                }
                ["count", ctx, next, n] => {
                    let ctx_chars: Result<Vec<char>, _> = ctx
                        .split(' ')
                        .map(|cp| {
                            cp.parse::<u32>()
                                .ok()
                                .and_then(char::from_u32)
                                .ok_or_else(|| parse_err(line_no, "bad context codepoint"))
                        })
                        .collect();
                    let next_cp = next
                        .parse::<u32>()
                        .ok()
                        .and_then(char::from_u32)
                        .ok_or_else(|| parse_err(line_no, "bad next codepoint"))?;
                    let count = n.parse::<u64>().map_err(|_| parse_err(line_no, "bad count"))?;
                    let entry = counts.entry(ctx_chars?).or_default();
                    entry.next.insert(next_cp, count);
                    entry.total += count;
                }
                _ => return Err(parse_err(line_no, "unknown record")),
            }
        }
        let order = order.ok_or_else(|| parse_err(0, "missing order"))?;
        let alpha = alpha.ok_or_else(|| parse_err(0, "missing alpha"))?;
        if order < 2 {
            return Err(CharLmError::InvalidOrder(order));
        }
        if !(alpha > 0.0) {
            return Err(CharLmError::InvalidAlpha(format!("{alpha}")));
        }
        Ok(CharGramLM { order, alpha, alphabet, counts })
    }
}

/// Per-token perplexity gaps plus their (mean, max) aggregate.
///
/// Gap = clean-model PPL minus offensive-model PPL: positive values mean
/// the token looks more plausible to the offensive-word model.
#[derive(Debug, Clone, PartialEq)]
pub struct PerplexityGap {
    pub per_token: Vec<f64>,
    pub mean: f64,
    pub max: f64,
}

pub fn perplexity_gap<S: AsRef<str>>(
    lm_offensive: &CharGramLM,
    lm_clean: &CharGramLM,
    tokens: &[S],
) -> PerplexityGap {
    let per_token: Vec<f64> = tokens
        .iter()
        .map(|t| lm_clean.perplexity(t.as_ref()) - lm_offensive.perplexity(t.as_ref()))
        .collect();
    if per_token.is_empty() {
        return PerplexityGap { per_token, mean: 0.0, max: 0.0 };
    }
    let mean = per_token.iter().sum::<f64>() / per_token.len() as f64;
    let max = per_token.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    PerplexityGap { per_token, mean, max }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    // Independent log-space oracle used by the value tests below.
    fn oracle_ppl(counts: &[(&str, char, u64)], alphabet: usize, alpha: f64, order: usize, word: &str) -> f64 {
        let totals: BTreeMap<&str, u64> =
            counts.iter().fold(BTreeMap::new(), |mut acc, (ctx, _, n)| {
                *acc.entry(*ctx).or_insert(0) += n;
                acc
            });
        let mut seq: Vec<char> = core::iter::repeat(START).take(order - 1).collect();
        seq.extend(word.chars());
        seq.push(END);
        let mut sum = 0.0;
        for i in (order - 1)..seq.len() {
            let ctx: String = seq[i - (order - 1)..i].iter().collect();
            let next = seq[i];
            let c = counts
                .iter()
                .find(|(k, ch, _)| *k == ctx && *ch == next)
                .map(|(_, _, n)| *n)
                .unwrap_or(0);
            let t = totals.get(ctx.as_str()).copied().unwrap_or(0);
            sum += libm::log((c as f64 + alpha) / (t as f64 + alpha * alphabet as f64));
        }
        libm::exp(-sum / (word.chars().count() + 1) as f64)
    }

    #[test]
    fn smoothed_bigram_probability() {
        // Two words, alphabet {a,b,c} plus end sentinel: size 4.
        let lm = train_char_lm(&["ab", "ac"], 2, 1.0).unwrap();
        assert_eq!(lm.alphabet_size(), 4);
        let p = lm.prob(&['a'], 'b');
        assert!((p - 1.0 / 3.0).abs() < 1e-15, "P(b|a) = {p}");
    }

    #[test]
    fn duplicate_words_do_not_change_probabilities() {
        let once = train_char_lm(&["ab"], 2, 0.5).unwrap();
        let twice = train_char_lm(&["ab", "ab"], 2, 0.5).unwrap();
        assert_eq!(once, twice);
        let dup_list = train_char_lm(&["ab", "ac", "ab", "ac"], 2, 0.5).unwrap();
        let base = train_char_lm(&["ab", "ac"], 2, 0.5).unwrap();
        assert_eq!(dup_list.perplexity("ab"), base.perplexity("ab"));
    }

    #[test]
    fn deterministic_corpus_perplexity_approaches_one() {
        // Every context determines its successor, end transition included.
        let lm = train_char_lm(&["abcd"], 3, 1e-12).unwrap();
        assert!((lm.perplexity("abcd") - 1.0).abs() < 1e-9);
        // Same effect on a repeated-letter word once the order covers the
        // whole word plus its end.
        let lm = train_char_lm(&["aaaa"], 6, 1e-12).unwrap();
        assert!((lm.perplexity("aaaa") - 1.0).abs() < 1e-9);
    }

    #[test]
    fn perplexity_always_at_least_one_on_trained_support() {
        let lm = train_char_lm(&["ab", "ac", "bc"], 2, 0.3).unwrap();
        for word in ["ab", "ba", "cc", "abcabc", "zzz", ""] {
            assert!(lm.perplexity(word) >= 1.0 - 1e-12, "word {word}");
        }
    }

    #[test]
    fn perplexity_matches_independent_oracle() {
        let lm = train_char_lm(&["ab", "ac"], 2, 1.0).unwrap();
        // Transition table written out by hand: contexts are strings of
        // length 1 (START shown as \u{0002}).
        let counts: Vec<(&str, char, u64)> = vec![
            ("\u{0002}", 'a', 2),
            ("a", 'b', 1),
            ("a", 'c', 1),
            ("b", END, 1),
            ("c", END, 1),
        ];
        for word in ["ab", "ac", "ba", "abc"] {
            let got = lm.perplexity(word);
            let want = oracle_ppl(&counts, 4, 1.0, 2, word);
            assert!((got - want).abs() < 1e-12, "word {word}: {got} vs {want}");
        }
    }

    #[test]
    fn distributions_sum_to_one_per_context() {
        let lm = train_char_lm(&["fuck", "fork", "folk"], 3, 0.1).unwrap();
        let alphabet: Vec<char> = lm.alphabet.iter().copied().collect();
        for ctx in [['\u{0002}', '\u{0002}'], ['f', 'o'], ['o', 'r'], ['z', 'z']] {
            let sum: f64 = alphabet.iter().map(|&c| lm.prob(&ctx, c)).sum();
            assert!((sum - 1.0).abs() < 1e-12, "context {ctx:?} sums to {sum}");
        }
    }

    #[test]
    fn unseen_characters_score_worse_than_training_words() {
        for alpha in [1.0, 0.1, 0.01] {
            let lm = train_char_lm(&["abcd"], 3, alpha).unwrap();
            assert!(lm.perplexity("abcd") <= lm.perplexity("wxyz"), "alpha {alpha}");
        }
    }

    #[test]
    fn gap_sign_and_antisymmetry() {
        let off = train_char_lm(&["fuck"], 3, 0.1).unwrap();
        let clean = train_char_lm(&["kind"], 3, 0.1).unwrap();
        let gap = perplexity_gap(&off, &clean, &["fuck"]);
        assert!(gap.per_token[0] > 0.0, "own-model word must score lower PPL");
        let swapped = perplexity_gap(&clean, &off, &["fuck", "kind", "zzz"]);
        let original = perplexity_gap(&off, &clean, &["fuck", "kind", "zzz"]);
        for (a, b) in original.per_token.iter().zip(&swapped.per_token) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn identical_models_have_zero_gap() {
        let a = train_char_lm(&["ab", "cd"], 2, 0.2).unwrap();
        let b = train_char_lm(&["ab", "cd"], 2, 0.2).unwrap();
        let gap = perplexity_gap(&a, &b, &["ab", "zz"]);
        assert!(gap.per_token.iter().all(|&g| g == 0.0));
        assert_eq!(gap.mean, 0.0);
        assert_eq!(gap.max, 0.0);
    }

    #[test]
    fn empty_token_list_gap() {
        let lm = train_char_lm(&["ab"], 2, 0.1).unwrap();
        let gap = perplexity_gap(&lm, &lm, &Vec::<&str>::new());
        assert!(gap.per_token.is_empty());
        assert_eq!((gap.mean, gap.max), (0.0, 0.0));
    }

    #[test]
    fn aggregate_recomputable_from_per_token() {
        let off = train_char_lm(&["fuck", "shit"], 3, 0.1).unwrap();
        let clean = train_char_lm(&["kind", "nice"], 3, 0.1).unwrap();
        let gap = perplexity_gap(&off, &clean, &["fuck", "nice", "what"]);
        let mean = gap.per_token.iter().sum::<f64>() / 3.0;
        let max = gap.per_token.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(gap.mean, mean);
        assert_eq!(gap.max, max);
    }

    #[test]
    fn training_errors() {
        assert_eq!(train_char_lm(&[], 2, 0.1).unwrap_err(), CharLmError::EmptyWordList);
        assert_eq!(train_char_lm(&["", ""], 2, 0.1).unwrap_err(), CharLmError::EmptyWordList);
        assert!(matches!(train_char_lm(&["ab"], 1, 0.1).unwrap_err(), CharLmError::InvalidOrder(1)));
        assert!(matches!(train_char_lm(&["ab"], 2, 0.0).unwrap_err(), CharLmError::InvalidAlpha(_)));
        assert!(matches!(
            train_char_lm(&["a\u{0003}b"], 2, 0.1).unwrap_err(),
            CharLmError::SentinelInWord(_)
        ));
    }

    #[test]
    fn serialization_round_trips_probabilities_exactly() {
        let lm = train_char_lm(&["fuck", "fork", "ass"], 3, 0.1).unwrap();
        let restored = CharGramLM::parse(&lm.serialize()).unwrap();
        assert_eq!(lm, restored);
        for word in ["fuck", "zebra", "a"] {
            assert_eq!(lm.perplexity(word).to_bits(), restored.perplexity(word).to_bits());
        }
    }
}
