//! Two-tier blacklist with multi-word phrase matching over normalized
//! tokens.
//!
//! Matching is leftmost-longest and non-overlapping; a multi-word phrase
//! counts as one match. Phrases are normalized at load time so spelling
//! variants are handled upstream by the normalizer and the lexicon keeps
//! one canonical entry per expression.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::normalize::Normalizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tier {
    Offensive,
    Contextual,
}

impl Tier {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tier::Offensive => "OFFENSIVE",
            Tier::Contextual => "CONTEXTUAL",
        }
    }

    pub fn parse(s: &str) -> Option<Tier> {
        match s {
            "OFFENSIVE" => Some(Tier::Offensive),
            "CONTEXTUAL" => Some(Tier::Contextual),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexiconError {
    Parse { line: usize, message: String },
}

impl core::fmt::Display for LexiconError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LexiconError::Parse { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LexiconError {}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    // Phrase (as normalized tokens) -> tier. A phrase lives in exactly one
    // tier; the map keeps entries deduplicated and deterministic.
    entries: BTreeMap<Vec<String>, Tier>,
    max_phrase_len: usize,
}

/// One phrase hit: token span `[start, end)` plus the phrase's tier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseMatch {
    pub span: (usize, usize),
    pub tier: Tier,
}

/// Blacklist counts for one token sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TierCounts {
    pub offensive: usize,
    pub contextual: usize,
    pub matches: Vec<PhraseMatch>,
}

impl TierCounts {
    pub fn total(&self) -> usize {
        self.offensive + self.contextual
    }
}

impl Lexicon {
    /// Parse `tier<TAB>phrase` lines (`#` comments allowed). Phrases are
    /// normalized before indexing; a phrase may appear in only one tier.
    pub fn parse(src: &str, normalizer: &Normalizer) -> Result<Lexicon, LexiconError> {
        let mut entries: BTreeMap<Vec<String>, Tier> = BTreeMap::new();
        for (idx, raw_line) in src.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (tier_str, phrase) = line.split_once('\t').ok_or_else(|| LexiconError::Parse {
                line: line_no,
                message: "expected `tier<TAB>phrase`".to_owned(),
            })?;
            let tier = Tier::parse(tier_str).ok_or_else(|| LexiconError::Parse {
                line: line_no,
                message: format!("unknown tier `{tier_str}`"),
            })?;
            let tokens = normalizer.normalize_text(phrase).tokens;
            if tokens.is_empty() {
                return Err(LexiconError::Parse {
                    line: line_no,
                    message: format!("phrase `{phrase}` is empty after normalization"),
                });
            }
            if let Some(existing) = entries.get(&tokens) {
                if *existing != tier {
                    return Err(LexiconError::Parse {
                        line: line_no,
                        message: format!("phrase `{}` listed in both tiers", tokens.join(" ")),
                    });
                }
            }
            entries.insert(tokens, tier);
        }
        let max_phrase_len = entries.keys().map(|p| p.len()).max().unwrap_or(0);
        Ok(Lexicon { entries, max_phrase_len })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[String], Tier)> {
        self.entries.iter().map(|(p, t)| (p.as_slice(), *t))
    }

    /// Serialize back to the `tier<TAB>phrase` file format.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (phrase, tier) in &self.entries {
            out.push_str(tier.as_str());
            out.push('\t');
            out.push_str(&phrase.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Count blacklist hits in a normalized token sequence.
///
/// Scanning is leftmost-longest: at each position the longest matching
/// phrase wins and the scan resumes after it, so matches never overlap.
pub fn match_counts<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> TierCounts {
    let lowered: Vec<&str> = tokens.iter().map(|t| t.as_ref()).collect();
    let mut counts = TierCounts::default();
    let mut pos = 0;
    while pos < lowered.len() {
        let longest = lexicon.max_phrase_len.min(lowered.len() - pos);
        let mut matched_len = 0;
        let mut matched_tier = Tier::Offensive;
        for len in (1..=longest).rev() {
            // BTreeMap key is Vec<String>; compare via a borrowed key.
            if let Some(tier) = lookup(lexicon, &lowered[pos..pos + len]) {
                matched_len = len;
                matched_tier = tier;
                break;
            }
        }
        if matched_len > 0 {
            match matched_tier {
                Tier::Offensive => counts.offensive += 1,
                Tier::Contextual => counts.contextual += 1,
            }
            counts.matches.push(PhraseMatch { span: (pos, pos + matched_len), tier: matched_tier });
            pos += matched_len;
        } else {
            pos += 1;
        }
    }
    counts
}

fn lookup(lexicon: &Lexicon, window: &[&str]) -> Option<Tier> {
    let key: Vec<String> = window.iter().map(|s| s.to_string()).collect();
    lexicon.entries.get(&key).copied()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn lexicon(src: &str) -> Lexicon {
        Lexicon::parse(src, &Normalizer::builtin()).unwrap()
    }

    #[test]
    fn empty_file_empty_counts() {
        let lex = lexicon("");
        assert!(lex.is_empty());
        let counts = match_counts(&["anything", "goes"], &lex);
        assert_eq!(counts.offensive, 0);
        assert_eq!(counts.contextual, 0);
    }

    #[test]
    fn two_token_contextual_phrase() {
        let lex = lexicon("CONTEXTUAL\tpearl necklace\n");
        assert_eq!(lex.len(), 1);
        let counts = match_counts(&["pearl", "necklace", "pearl"], &lex);
        assert_eq!(counts.contextual, 1);
        assert_eq!(counts.offensive, 0);
        assert_eq!(counts.matches, vec![PhraseMatch { span: (0, 2), tier: Tier::Contextual }]);
    }

    #[test]
    fn mixed_tiers_counted_separately() {
        let lex = lexicon("CONTEXTUAL\tbloody\nOFFENSIVE\tidiot\n");
        let counts = match_counts(&["you", "bloody", "idiot"], &lex);
        assert_eq!(counts.offensive, 1);
        assert_eq!(counts.contextual, 1);
        assert_eq!(counts.total(), 2);
    }

    #[test]
    fn duplicate_phrase_across_tiers_rejected() {
        let err = Lexicon::parse("OFFENSIVE\tbloody\nCONTEXTUAL\tbloody\n", &Normalizer::builtin());
        assert!(err.is_err());
    }

    #[test]
    fn same_tier_duplicate_is_deduped() {
        let lex = lexicon("OFFENSIVE\tidiot\nOFFENSIVE\tidiot\n");
        assert_eq!(lex.len(), 1);
    }

    #[test]
    fn unknown_tier_rejected_with_line() {
        let err = Lexicon::parse("BAD\tword\n", &Normalizer::builtin()).unwrap_err();
        assert!(matches!(err, LexiconError::Parse { line: 1, .. }));
    }

    #[test]
    fn leftmost_longest_prefers_phrase_over_prefix() {
        let lex = lexicon("OFFENSIVE\tdumb\nCONTEXTUAL\tdumb ass\n");
        let counts = match_counts(&["dumb", "ass"], &lex);
        assert_eq!(counts.contextual, 1);
        assert_eq!(counts.offensive, 0);
    }

    #[test]
    fn phrases_normalized_at_load() {
        // Lexicon entry arrives obfuscated; it is stored canonically.
        let lex = lexicon("OFFENSIVE\tA55\n");
        let counts = match_counts(&["ass"], &lex);
        assert_eq!(counts.offensive, 1);
    }

    #[test]
    fn padding_does_not_change_counts() {
        let lex = lexicon("OFFENSIVE\tidiot\nCONTEXTUAL\tpearl necklace\n");
        let base = match_counts(&["pearl", "necklace", "idiot"], &lex);
        let padded = match_counts(&["zzz", "pearl", "necklace", "idiot", "qqq"], &lex);
        assert_eq!(base.offensive, padded.offensive);
        assert_eq!(base.contextual, padded.contextual);
    }
}
