//! Model-input assembly: graphemic statistics, tf-idf, pooled sentence
//! embeddings, blacklist counts, perplexity-gap aggregates, and the fixed
//! concatenation order `[base | graphemic | blacklist | gap]`.
//!
//! Feature vector length and column names depend only on the
//! configuration, never on the document, and every block is individually
//! toggleable for ablations.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::charlm::{perplexity_gap, CharGramLM};
use crate::embed::EmbeddingMatrix;
use crate::lexicon::{match_counts, Lexicon, TierCounts};
use crate::math;
use crate::normalize::{NormalizedDocument, USER_TOKEN};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeaturizeError {
    EmptyCorpus,
    DimensionDrift { expected: usize, got: usize },
    NonFinite { name: String },
    DuplicateName(String),
    Parse { line: usize, message: String },
}

impl core::fmt::Display for FeaturizeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FeaturizeError::EmptyCorpus => write!(f, "empty corpus"),
            FeaturizeError::DimensionDrift { expected, got } => {
                write!(f, "feature dimension drift: expected {expected}, got {got}")
            }
            FeaturizeError::NonFinite { name } => write!(f, "non-finite value for feature `{name}`"),
            FeaturizeError::DuplicateName(n) => write!(f, "duplicate feature name `{n}`"),
            FeaturizeError::Parse { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FeaturizeError {}

/// Named, ordered numeric features. Names are shared across all documents
/// featurized under one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub names: Arc<[String]>,
    pub values: Vec<f64>,
}

pub const GRAPHEMIC_NAMES: [&str; 11] = [
    "graphemic:char_count",
    "graphemic:token_count",
    "graphemic:uppercase_count",
    "graphemic:uppercase_ratio",
    "graphemic:special_count",
    "graphemic:punctuation_count",
    "graphemic:exclamation_count",
    "graphemic:question_count",
    "graphemic:digit_count",
    "graphemic:mean_token_length",
    "graphemic:elongation_flag",
];

/// Surface statistics of the written text.
///
/// Character counts run over the raw string (that is where the casing and
/// punctuation live); token counts come from the normalized document. The
/// `<USER>` placeholder counts toward the token count only, not toward
/// mean token length or any character statistic.
pub fn graphemic_features(raw: &str, doc: &NormalizedDocument) -> [f64; 11] {
    let mut char_count = 0u64;
    let mut uppercase = 0u64;
    let mut alphabetic = 0u64;
    let mut special = 0u64;
    let mut punct = 0u64;
    let mut exclaim = 0u64;
    let mut question = 0u64;
    let mut digits = 0u64;
    let mut elongated = false;
    let mut run_char = '\0';
    let mut run_len = 0u32;
    for c in raw.chars() {
        char_count += 1;
        if c.is_uppercase() {
            uppercase += 1;
        }
        if c.is_alphabetic() {
            alphabetic += 1;
        }
        if !c.is_alphanumeric() && !c.is_whitespace() {
            special += 1;
        }
        if c.is_ascii_punctuation() {
            punct += 1;
        }
        match c {
            '!' => exclaim += 1,
            '?' => question += 1,
            _ => {}
        }
        if c.is_ascii_digit() {
            digits += 1;
        }
        if c == run_char {
            run_len += 1;
            if run_len > 2 {
                elongated = true;
            }
        } else {
            run_char = c;
            run_len = 1;
        }
    }
    let word_tokens: Vec<&String> = doc.tokens.iter().filter(|t| *t != USER_TOKEN).collect();
    let mean_token_len = if word_tokens.is_empty() {
        0.0
    } else {
        word_tokens.iter().map(|t| t.chars().count() as f64).sum::<f64>() / word_tokens.len() as f64
    };
    [
        char_count as f64,
        doc.tokens.len() as f64,
        uppercase as f64,
        if alphabetic == 0 { 0.0 } else { uppercase as f64 / alphabetic as f64 },
        special as f64,
        punct as f64,
        exclaim as f64,
        question as f64,
        digits as f64,
        mean_token_len,
        if elongated { 1.0 } else { 0.0 },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TfidfConfig {
    pub sublinear_tf: bool,
    pub smooth_idf: bool,
    pub l2_normalize: bool,
    pub min_df: usize,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig { sublinear_tf: false, smooth_idf: true, l2_normalize: true, min_df: 1 }
    }
}

/// Fitted tf-idf vocabulary; columns are terms in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocab: BTreeMap<String, usize>,
    idf: Vec<f64>,
    pub config: TfidfConfig,
}

/// Fit on tokenized documents. Smoothed idf is
/// `ln((1+N)/(1+df)) + 1`; unsmoothed drops the two +1 terms inside the
/// logarithm.
pub fn fit_tfidf<S: AsRef<str>>(corpus: &[Vec<S>], config: TfidfConfig) -> Result<TfidfModel, FeaturizeError> {
    if corpus.is_empty() {
        return Err(FeaturizeError::EmptyCorpus);
    }
    let n = corpus.len() as f64;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus {
        let unique: BTreeSet<&str> = doc.iter().map(|t| t.as_ref()).collect();
        for term in unique {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let min_df = config.min_df.max(1);
    let mut vocab = BTreeMap::new();
    let mut idf = Vec::new();
    for (term, count) in df {
        if count < min_df {
            continue;
        }
        let value = if config.smooth_idf {
            math::ln((1.0 + n) / (1.0 + count as f64)) + 1.0
        } else {
            math::ln(n / count as f64) + 1.0
        };
        vocab.insert(term.to_owned(), idf.len());
        idf.push(value);
    }
    Ok(TfidfModel { vocab, idf, config })
}

impl TfidfModel {
    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocab.get(term).map(|&i| self.idf[i])
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.vocab.keys().map(|s| s.as_str())
    }

    /// Sparse tf-idf of one token list; out-of-vocabulary tokens are
    /// ignored, so the empty and all-OOV cases give the zero vector.
    pub fn transform<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<(usize, f64)> {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for token in tokens {
            if let Some(&idx) = self.vocab.get(token.as_ref()) {
                *counts.entry(idx).or_insert(0.0) += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(idx, tf)| {
                let tf = if self.config.sublinear_tf { 1.0 + math::ln(tf) } else { tf };
                (idx, tf * self.idf[idx])
            })
            .collect();
        if self.config.l2_normalize {
            let norm = math::sqrt(entries.iter().map(|(_, v)| v * v).sum());
            if norm > 0.0 {
                for (_, v) in entries.iter_mut() {
                    *v /= norm;
                }
            }
        }
        entries
    }

    pub fn transform_dense<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (idx, v) in self.transform(tokens) {
            out[idx] = v;
        }
        out
    }

    pub fn serialize(&self) -> String {
        let cfg = self.config;
        let mut out = String::from("tfidf v1\n");
        out.push_str(&format!(
            "config\t{}\t{}\t{}\t{}\n",
            cfg.sublinear_tf, cfg.smooth_idf, cfg.l2_normalize, cfg.min_df
        ));
        for (term, &idx) in &self.vocab {
            out.push_str(&format!("term\t{term}\t{}\n", self.idf[idx]));
        }
        out
    }

    pub fn parse(src: &str) -> Result<TfidfModel, FeaturizeError> {
        let mut lines = src.lines().enumerate();
        let perr = |line: usize, m: &str| FeaturizeError::Parse { line, message: m.to_owned() };
        let (_, header) = lines.next().ok_or_else(|| perr(1, "empty input"))?;
        if header != "tfidf v1" {
            return Err(perr(1, "expected `tfidf v1` header"));
        }
        let mut config = None;
        let mut vocab = BTreeMap::new();
        let mut idf = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["config", sub, smooth, l2, min_df] => {
                    config = Some(TfidfConfig {
                        sublinear_tf: sub.parse().map_err(|_| perr(line_no, "bad flag"))?,
                        smooth_idf: smooth.parse().map_err(|_| perr(line_no, "bad flag"))?,
                        l2_normalize: l2.parse().map_err(|_| perr(line_no, "bad flag"))?,
                        min_df: min_df.parse().map_err(|_| perr(line_no, "bad min_df"))?,
                    });
                }
                ["term", term, value] => {
                    let v: f64 = value.parse().map_err(|_| perr(line_no, "bad idf"))?;
                    vocab.insert(term.to_string(), idf.len());
                    idf.push(v);
                }
                _ => return Err(perr(line_no, "unknown record")),
            }
        }
        let config = config.ok_or_else(|| perr(0, "missing config"))?;
        Ok(TfidfModel { vocab, idf, config })
    }
}

/// Mean of the token vectors; OOV tokens fall back to subword composition
/// when the embedding carries buckets, otherwise they are skipped. Empty
/// or fully unresolvable input gives the zero vector.
pub fn pool_embedding<S: AsRef<str>>(tokens: &[S], embedding: &EmbeddingMatrix) -> Vec<f64> {
    let mut sum = vec![0.0; embedding.dim()];
    let mut resolved = 0usize;
    for token in tokens {
        if let Some(v) = embedding.resolve(token.as_ref()) {
            for (s, x) in sum.iter_mut().zip(&v) {
                *s += x;
            }
            resolved += 1;
        }
    }
    if resolved > 0 {
        for s in sum.iter_mut() {
            *s /= resolved as f64;
        }
    }
    sum
}

/// Which blocks the assembled vector carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    pub graphemic: bool,
    pub blacklist: bool,
    pub gap: bool,
}

impl FeatureConfig {
    pub const ALL: FeatureConfig = FeatureConfig { graphemic: true, blacklist: true, gap: true };
    pub const NONE: FeatureConfig = FeatureConfig { graphemic: false, blacklist: false, gap: false };
}

pub const BLACKLIST_NAMES: [&str; 3] =
    ["blacklist:offensive", "blacklist:contextual", "blacklist:total"];
pub const GAP_NAMES: [&str; 2] = ["gap:mean", "gap:max"];

/// Fixed column layout for one configuration: `[base | graphemic |
/// blacklist | gap]`, with disabled blocks removed wholesale.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    pub config: FeatureConfig,
    base_len: usize,
    names: Arc<[String]>,
}

impl FeatureSchema {
    pub fn new(base_names: &[String], config: FeatureConfig) -> Result<FeatureSchema, FeaturizeError> {
        let mut names: Vec<String> = base_names.to_vec();
        if config.graphemic {
            names.extend(GRAPHEMIC_NAMES.iter().map(|s| s.to_string()));
        }
        if config.blacklist {
            names.extend(BLACKLIST_NAMES.iter().map(|s| s.to_string()));
        }
        if config.gap {
            names.extend(GAP_NAMES.iter().map(|s| s.to_string()));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name) {
                return Err(FeaturizeError::DuplicateName(name.clone()));
            }
        }
        Ok(FeatureSchema { config, base_len: base_names.len(), names: names.into() })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn base_len(&self) -> usize {
        self.base_len
    }
}

/// Concatenate the configured blocks for one document.
///
/// `base` is the vectorization output (tf-idf or pooled embedding; may be
/// empty when no base is configured). The lexicon and the two language
/// models are consulted only for enabled blocks.
pub fn assemble_features(
    schema: &FeatureSchema,
    base: &[f64],
    raw: &str,
    doc: &NormalizedDocument,
    lexicon: &Lexicon,
    lm_offensive: &CharGramLM,
    lm_clean: &CharGramLM,
) -> Result<FeatureVector, FeaturizeError> {
    if base.len() != schema.base_len {
        return Err(FeaturizeError::DimensionDrift { expected: schema.base_len, got: base.len() });
    }
    let mut values = Vec::with_capacity(schema.len());
    values.extend_from_slice(base);
    if schema.config.graphemic {
        values.extend(graphemic_features(raw, doc));
    }
    if schema.config.blacklist {
        let counts: TierCounts = match_counts(&doc.tokens, lexicon);
        values.push(counts.offensive as f64);
        values.push(counts.contextual as f64);
        values.push(counts.total() as f64);
    }
    if schema.config.gap {
        let gap = perplexity_gap(lm_offensive, lm_clean, &doc.tokens);
        values.push(gap.mean);
        values.push(gap.max);
    }
    for (name, v) in schema.names.iter().zip(&values) {
        if !v.is_finite() {
            return Err(FeaturizeError::NonFinite { name: name.clone() });
        }
    }
    Ok(FeatureVector { names: schema.names.clone(), values })
}
