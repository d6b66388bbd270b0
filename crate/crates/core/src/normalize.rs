//! Canonicalization of adversarially obfuscated text.
//!
//! The pipeline runs in a fixed order: @mentions become `<USER>`, links are
//! dropped, Unicode is NFKD-decomposed with diacritics stripped and
//! homoglyphs folded, leetspeak digits/symbols are mapped back to letters
//! (only inside tokens that contain at least one letter, so numerals like
//! "2019" survive), character elongations are squeezed to two repeats,
//! spelling variants are rewritten to their canonical form, and everything
//! is lowercased with whitespace collapsed.
//!
//! Folding runs before the variant dictionary so a single canonical entry
//! covers its leet/diacritic respellings.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Placeholder token substituted for @-mentions. Survives lowercasing.
pub const USER_TOKEN: &str = "<USER>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormalizeError {
    Parse { line: usize, message: String },
}

impl core::fmt::Display for NormalizeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            NormalizeError::Parse { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NormalizeError {}

fn parse_two_column(src: &str) -> Result<Vec<(usize, &str, &str)>, NormalizeError> {
    let mut rows = Vec::new();
    for (idx, line) in src.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (left, right) = trimmed.split_once('\t').ok_or_else(|| NormalizeError::Parse {
            line: line_no,
            message: "expected two tab-separated columns".to_owned(),
        })?;
        if left.is_empty() || right.is_empty() {
            return Err(NormalizeError::Parse { line: line_no, message: "empty column".to_owned() });
        }
        rows.push((line_no, left, right));
    }
    Ok(rows)
}

/// Single-character substitution table (leetspeak or homoglyphs),
/// file format `char<TAB>char` with `#` comments.
#[derive(Debug, Clone, Default)]
pub struct CharMap {
    map: BTreeMap<char, char>,
}

impl CharMap {
    pub fn parse(src: &str) -> Result<CharMap, NormalizeError> {
        let mut map = BTreeMap::new();
        for (line, from, to) in parse_two_column(src)? {
            let mut from_chars = from.chars();
            let mut to_chars = to.chars();
            match (from_chars.next(), from_chars.next(), to_chars.next(), to_chars.next()) {
                (Some(f), None, Some(t), None) => {
                    map.insert(f, t);
                }
                _ => {
                    return Err(NormalizeError::Parse {
                        line,
                        message: format!("expected single characters, got `{from}` -> `{to}`"),
                    })
                }
            }
        }
        Ok(CharMap { map })
    }

    fn get(&self, c: char) -> Option<char> {
        self.map.get(&c).copied()
    }

    /// The leetspeak table the shipped config file is seeded with.
    pub fn default_leet() -> CharMap {
        let map = [
            ('1', 'i'),
            ('3', 'e'),
            ('4', 'a'),
            ('5', 's'),
            ('0', 'o'),
            ('@', 'a'),
            ('$', 's'),
            ('!', 'i'),
        ];
        CharMap { map: map.into_iter().collect() }
    }

    /// Greek/Cyrillic homoglyphs commonly used to disguise Latin words.
    pub fn default_confusables() -> CharMap {
        let map = [
            // Greek lowercase lookalikes.
            ('α', 'a'),
            ('ε', 'e'),
            ('η', 'n'),
            ('ι', 'i'),
            ('κ', 'k'),
            ('ν', 'v'),
            ('ο', 'o'),
            ('ρ', 'p'),
            ('σ', 'o'),
            ('τ', 't'),
            ('υ', 'u'),
            ('ω', 'w'),
            // Cyrillic lookalikes, both cases folded to lowercase Latin.
            ('а', 'a'),
            ('е', 'e'),
            ('і', 'i'),
            ('о', 'o'),
            ('р', 'p'),
            ('с', 'c'),
            ('ѕ', 's'),
            ('у', 'y'),
            ('х', 'x'),
            ('А', 'a'),
            ('Е', 'e'),
            ('О', 'o'),
            ('Р', 'p'),
            ('С', 'c'),
            ('У', 'y'),
            ('Х', 'x'),
        ];
        CharMap { map: map.into_iter().collect() }
    }
}

/// Spelling-variant dictionary mapping obfuscated forms (single- or
/// multi-token) to their canonical word.
///
/// Keys are stored folded and lowercased, so a lookup after folding is a
/// single pass. Entries whose folded form already equals the canonical are
/// dropped (folding alone recovers those), and no canonical form may occur
/// as a variant of something else.
#[derive(Debug, Clone, Default)]
pub struct VariantDictionary {
    entries: BTreeMap<Vec<String>, String>,
    max_key_len: usize,
}

impl VariantDictionary {
    pub fn parse(src: &str, leet: &CharMap, confusables: &CharMap) -> Result<VariantDictionary, NormalizeError> {
        let mut entries: BTreeMap<Vec<String>, String> = BTreeMap::new();
        for (line, variant, canonical) in parse_two_column(src)? {
            let canonical = canonical.to_lowercase();
            let key: Vec<String> = variant
                .split_whitespace()
                .map(|tok| fold_token(tok, leet, confusables).to_lowercase())
                .collect();
            if key.is_empty() {
                return Err(NormalizeError::Parse { line, message: "empty variant".to_owned() });
            }
            if key.join(" ") == canonical {
                continue;
            }
            if let Some(existing) = entries.get(&key) {
                if *existing != canonical {
                    return Err(NormalizeError::Parse {
                        line,
                        message: format!(
                            "variant `{variant}` maps to both `{existing}` and `{canonical}`"
                        ),
                    });
                }
            }
            entries.insert(key, canonical);
        }
        // No chains: a canonical form must not itself be a variant key.
        for canonical in entries.values() {
            let as_key: Vec<String> = canonical.split_whitespace().map(|t| t.to_owned()).collect();
            if entries.contains_key(&as_key) {
                return Err(NormalizeError::Parse {
                    line: 0,
                    message: format!("canonical form `{canonical}` is also listed as a variant"),
                });
            }
        }
        let max_key_len = entries.keys().map(|k| k.len()).max().unwrap_or(0);
        Ok(VariantDictionary { entries, max_key_len })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One recorded edit: which rule fired, over which token span of the
/// stream it saw, and the before/after text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEdit {
    pub rule: &'static str,
    pub span: (usize, usize),
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedDocument {
    pub original: String,
    pub normalized: String,
    pub tokens: Vec<String>,
    pub trace: Vec<TraceEdit>,
}

#[derive(Debug, Clone, Default)]
pub struct Normalizer {
    pub leet: CharMap,
    pub confusables: CharMap,
    pub variants: VariantDictionary,
}

impl Normalizer {
    pub fn new(leet: CharMap, confusables: CharMap, variants: VariantDictionary) -> Normalizer {
        Normalizer { leet, confusables, variants }
    }

    /// Built-in tables, empty variant dictionary. Mostly for tests; real
    /// runs load the shipped config files.
    pub fn builtin() -> Normalizer {
        Normalizer::new(CharMap::default_leet(), CharMap::default_confusables(), VariantDictionary::default())
    }

    /// Folding steps only (NFKD + homoglyphs, leet, elongation squeeze).
    /// Idempotent; identity on clean lowercase ASCII without elongations.
    pub fn fold_obfuscation(&self, token: &str) -> String {
        fold_token(token, &self.leet, &self.confusables)
    }

    /// Full normalization pipeline. Total: never fails on valid UTF-8
    /// input (invalid UTF-8 cannot reach here as `&str` guarantees it).
    pub fn normalize_text(&self, raw: &str) -> NormalizedDocument {
        let mut trace = Vec::new();
        let mut tokens: Vec<String> = Vec::new();

        for (idx, tok) in raw.split_whitespace().enumerate() {
            // 1. @mentions.
            if tok.len() > 1 && tok.starts_with('@') {
                trace.push(TraceEdit {
                    rule: "mention",
                    span: (idx, idx + 1),
                    before: tok.to_owned(),
                    after: USER_TOKEN.to_owned(),
                });
                tokens.push(USER_TOKEN.to_owned());
                continue;
            }
            // 2. links.
            let lower = tok.to_lowercase();
            if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.") {
                trace.push(TraceEdit {
                    rule: "url-removal",
                    span: (idx, idx + 1),
                    before: tok.to_owned(),
                    after: String::new(),
                });
                continue;
            }
            // 3-5. folding.
            let folded = self.fold_obfuscation(tok);
            if folded != tok {
                trace.push(TraceEdit {
                    rule: "fold",
                    span: (idx, idx + 1),
                    before: tok.to_owned(),
                    after: folded.clone(),
                });
            }
            if !folded.is_empty() {
                tokens.push(folded);
            }
        }

        // 6. variant dictionary, leftmost-longest over the token stream.
        let tokens = self.apply_variants(tokens, &mut trace);

        // 7. lowercase (the <USER> sentinel is kept as-is).
        let mut final_tokens = Vec::with_capacity(tokens.len());
        for (idx, tok) in tokens.into_iter().enumerate() {
            if tok == USER_TOKEN {
                final_tokens.push(tok);
                continue;
            }
            let lower = tok.to_lowercase();
            if lower != tok {
                trace.push(TraceEdit {
                    rule: "lowercase",
                    span: (idx, idx + 1),
                    before: tok,
                    after: lower.clone(),
                });
            }
            final_tokens.push(lower);
        }

        // 8. single-space join is the whitespace collapse.
        let normalized = final_tokens.join(" ");
        NormalizedDocument { original: raw.to_owned(), normalized, tokens: final_tokens, trace }
    }

    fn apply_variants(&self, tokens: Vec<String>, trace: &mut Vec<TraceEdit>) -> Vec<String> {
        if self.variants.is_empty() {
            return tokens;
        }
        let lowered: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
        let mut out = Vec::with_capacity(tokens.len());
        let mut pos = 0;
        while pos < tokens.len() {
            let max_len = self.variants.max_key_len.min(tokens.len() - pos);
            let mut replaced = false;
            for len in (1..=max_len).rev() {
                let key = &lowered[pos..pos + len];
                if let Some(canonical) = self.variants.entries.get(key) {
                    trace.push(TraceEdit {
                        rule: "variant",
                        span: (pos, pos + len),
                        before: tokens[pos..pos + len].join(" "),
                        after: canonical.clone(),
                    });
                    out.extend(canonical.split_whitespace().map(|t| t.to_owned()));
                    pos += len;
                    replaced = true;
                    break;
                }
            }
            if !replaced {
                out.push(tokens[pos].clone());
                pos += 1;
            }
        }
        out
    }
}

/// Split a normalized string into tokens. The output of
/// [`Normalizer::normalize_text`] contains no consecutive spaces, so this
/// is a plain single-space split; empty input gives no tokens.
pub fn tokenize(normalized: &str) -> Vec<String> {
    if normalized.is_empty() {
        return Vec::new();
    }
    normalized.split(' ').filter(|t| !t.is_empty()).map(|t| t.to_owned()).collect()
}

fn fold_token(token: &str, leet: &CharMap, confusables: &CharMap) -> String {
    // NFKD, strip combining marks, fold homoglyphs.
    let mut decomposed = String::with_capacity(token.len());
    for c in token.nfkd() {
        if is_combining_mark(c) {
            continue;
        }
        decomposed.push(confusables.get(c).unwrap_or(c));
    }
    // Leetspeak, only when the token still looks like a word.
    let mapped = if decomposed.chars().any(|c| c.is_alphabetic()) {
        decomposed.chars().map(|c| leet.get(c).unwrap_or(c)).collect()
    } else {
        decomposed
    };
    // Elongation squeeze: runs longer than two collapse to two.
    let mut out = String::with_capacity(mapped.len());
    let mut run_char = '\0';
    let mut run_len = 0;
    for c in mapped.chars() {
        if c == run_char {
            run_len += 1;
        } else {
            run_char = c;
            run_len = 1;
        }
        if run_len <= 2 {
            out.push(c);
        }
    }
    out
}
