//! Subword skip-gram embeddings trained with negative sampling, plus
//! combination of two embedding spaces by column concatenation and
//! truncated SVD.
//!
//! A word's vector is the sum of its id vector and its hashed character
//! n-gram bucket vectors; out-of-vocabulary words compose the mean of
//! their n-gram buckets, which is what lifts coverage when spaces are
//! combined over the union vocabulary.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::linalg::{self, Matrix};
use crate::math;
use crate::rng::{self, tag};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbedError {
    EmptyCorpus,
    EmptyVocabulary,
    EmptyWord,
    SubwordsDisabled,
    InvalidConfig(String),
    InvalidCombination(String),
    Parse { line: usize, message: String },
}

impl core::fmt::Display for EmbedError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EmbedError::EmptyCorpus => write!(f, "empty corpus"),
            EmbedError::EmptyVocabulary => write!(f, "no word passes the min-count filter"),
            EmbedError::EmptyWord => write!(f, "empty word"),
            EmbedError::SubwordsDisabled => write!(f, "subword buckets are disabled for this embedding"),
            EmbedError::InvalidConfig(m) => write!(f, "invalid config: {m}"),
            EmbedError::InvalidCombination(m) => write!(f, "invalid combination: {m}"),
            EmbedError::Parse { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EmbedError {}

#[derive(Debug, Clone, PartialEq)]
pub struct SkipgramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub learning_rate_end: f64,
    pub min_count: u64,
    pub subword_min_n: usize,
    pub subword_max_n: usize,
    /// Hash-bucket count for subword n-grams; 0 disables subwords.
    pub buckets: usize,
}

impl Default for SkipgramConfig {
    fn default() -> Self {
        SkipgramConfig {
            dim: 64,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.05,
            learning_rate_end: 1e-4,
            min_count: 1,
            subword_min_n: 3,
            subword_max_n: 5,
            buckets: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubwordTable {
    pub min_n: usize,
    pub max_n: usize,
    pub buckets: Matrix,
}

/// Word vectors plus (optionally) the subword bucket table that backs
/// out-of-vocabulary composition.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    vocab: BTreeMap<String, usize>,
    vectors: Matrix,
    dim: usize,
    subword: Option<SubwordTable>,
}

/// FNV-1a, the bucket hash for subword n-grams.
fn fnv1a(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for &b in bytes {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Character n-grams of the boundary-wrapped word `<w>`.
fn subword_ngrams(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let wrapped: Vec<char> = core::iter::once('<').chain(word.chars()).chain(core::iter::once('>')).collect();
    let mut grams = Vec::new();
    for n in min_n..=max_n.min(wrapped.len()) {
        for window in wrapped.windows(n) {
            grams.push(window.iter().collect());
        }
    }
    grams
}

fn bucket_ids(word: &str, min_n: usize, max_n: usize, buckets: usize) -> Vec<usize> {
    subword_ngrams(word, min_n, max_n)
        .iter()
        .map(|g| (fnv1a(g.as_bytes()) as usize) % buckets)
        .collect()
}

impl EmbeddingMatrix {
    /// Wrap pre-built rows (file loading, tests). Words must be unique.
    pub fn from_rows(words: Vec<String>, vectors: Matrix) -> Result<EmbeddingMatrix, EmbedError> {
        if words.len() != vectors.rows() {
            return Err(EmbedError::InvalidConfig("word/row count mismatch".to_owned()));
        }
        let dim = vectors.cols();
        let mut vocab = BTreeMap::new();
        for (i, w) in words.into_iter().enumerate() {
            if vocab.insert(w, i).is_some() {
                return Err(EmbedError::InvalidConfig("duplicate word".to_owned()));
            }
        }
        Ok(EmbeddingMatrix { vocab, vectors, dim, subword: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vocab.contains_key(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.vocab.keys().map(|s| s.as_str())
    }

    pub fn has_subwords(&self) -> bool {
        self.subword.is_some()
    }

    pub fn row(&self, word: &str) -> Option<&[f64]> {
        self.vocab.get(word).map(|&i| self.vectors.row(i))
    }

    /// Vector for any non-empty word: the stored row for vocabulary words,
    /// otherwise the mean of the word's subword bucket vectors.
    pub fn compose_oov(&self, word: &str) -> Result<Vec<f64>, EmbedError> {
        if word.is_empty() {
            return Err(EmbedError::EmptyWord);
        }
        if let Some(row) = self.row(word) {
            return Ok(row.to_vec());
        }
        let table = self.subword.as_ref().ok_or(EmbedError::SubwordsDisabled)?;
        let ids = bucket_ids(word, table.min_n, table.max_n, table.buckets.rows());
        let mut out = vec![0.0; self.dim];
        if ids.is_empty() {
            return Ok(out);
        }
        for &id in &ids {
            for (o, v) in out.iter_mut().zip(table.buckets.row(id)) {
                *o += v;
            }
        }
        for o in out.iter_mut() {
            *o /= ids.len() as f64;
        }
        Ok(out)
    }

    /// Row lookup falling back to subword composition; `None` when the
    /// word is out of vocabulary and composition is unavailable.
    pub fn resolve(&self, word: &str) -> Option<Vec<f64>> {
        if let Some(row) = self.row(word) {
            return Some(row.to_vec());
        }
        if self.subword.is_some() && !word.is_empty() {
            return self.compose_oov(word).ok();
        }
        None
    }

    /// Interchange text format: `|V| d` header line, then one
    /// `word v1 ... vd` line per word.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.vocab.len(), self.dim);
        for (word, &idx) in &self.vocab {
            out.push_str(word);
            for v in self.vectors.row(idx) {
                out.push(' ');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(src: &str) -> Result<EmbeddingMatrix, EmbedError> {
        let mut lines = src.lines().enumerate();
        let (_, header) = lines.next().ok_or(EmbedError::Parse { line: 1, message: "empty input".to_owned() })?;
        let mut parts = header.split_whitespace();
        let (n, d) = match (parts.next(), parts.next(), parts.next()) {
            (Some(n), Some(d), None) => (
                n.parse::<usize>().map_err(|_| EmbedError::Parse { line: 1, message: "bad vocab size".to_owned() })?,
                d.parse::<usize>().map_err(|_| EmbedError::Parse { line: 1, message: "bad dimension".to_owned() })?,
            ),
            _ => return Err(EmbedError::Parse { line: 1, message: "expected `|V| d` header".to_owned() }),
        };
        let mut words = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * d);
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(' ');
            let word = fields.next().filter(|w| !w.is_empty()).ok_or(EmbedError::Parse {
                line: line_no,
                message: "missing word".to_owned(),
            })?;
            let values: Result<Vec<f64>, _> = fields.map(|f| f.parse::<f64>()).collect();
            let values = values.map_err(|_| EmbedError::Parse { line: line_no, message: "bad float".to_owned() })?;
            if values.len() != d {
                return Err(EmbedError::Parse {
                    line: line_no,
                    message: format!("expected {d} values, got {}", values.len()),
                });
            }
            words.push(word.to_owned());
            data.extend(values);
        }
        if words.len() != n {
            return Err(EmbedError::Parse {
                line: 0,
                message: format!("header promised {n} words, found {}", words.len()),
            });
        }
        EmbeddingMatrix::from_rows(words, Matrix::from_vec(n, d, data))
    }
}

/// One skip-gram training example at fixed parameters: the composed input
/// rows (word id + subword buckets), the context target, and the sampled
/// negatives. Used both by the trainer and by gradient checks.
#[derive(Debug, Clone)]
pub struct SgnsExample {
    pub input_rows: Vec<usize>,
    pub target: usize,
    pub negatives: Vec<usize>,
}

fn composed_input(input: &Matrix, rows: &[usize]) -> Vec<f64> {
    let mut h = vec![0.0; input.cols()];
    for &r in rows {
        for (hv, v) in h.iter_mut().zip(input.row(r)) {
            *hv += v;
        }
    }
    h
}

/// Negative-sampling loss of the examples at fixed parameters:
/// `-ln s(u_t . h) - sum_n ln s(-u_n . h)`.
pub fn sgns_loss(input: &Matrix, output: &Matrix, examples: &[SgnsExample]) -> f64 {
    let mut loss = 0.0;
    for ex in examples {
        let h = composed_input(input, &ex.input_rows);
        let s_t = linalg::dot(output.row(ex.target), &h);
        loss += math::ln_1p_exp(-s_t);
        for &n in &ex.negatives {
            let s_n = linalg::dot(output.row(n), &h);
            loss += math::ln_1p_exp(s_n);
        }
    }
    loss
}

/// Analytic gradient of [`sgns_loss`] with respect to every input and
/// output row, summed over the examples.
pub fn sgns_gradients(input: &Matrix, output: &Matrix, examples: &[SgnsExample]) -> (Matrix, Matrix) {
    let mut g_in = Matrix::zeros(input.rows(), input.cols());
    let mut g_out = Matrix::zeros(output.rows(), output.cols());
    for ex in examples {
        let h = composed_input(input, &ex.input_rows);
        let mut grad_h = vec![0.0; h.len()];
        let coeff_t = math::sigmoid(linalg::dot(output.row(ex.target), &h)) - 1.0;
        for (g, hv) in g_out.row_mut(ex.target).iter_mut().zip(&h) {
            *g += coeff_t * hv;
        }
        for (gh, u) in grad_h.iter_mut().zip(output.row(ex.target)) {
            *gh += coeff_t * u;
        }
        for &n in &ex.negatives {
            let coeff_n = math::sigmoid(linalg::dot(output.row(n), &h));
            for (g, hv) in g_out.row_mut(n).iter_mut().zip(&h) {
                *g += coeff_n * hv;
            }
            for (gh, u) in grad_h.iter_mut().zip(output.row(n)) {
                *gh += coeff_n * u;
            }
        }
        for &r in &ex.input_rows {
            for (g, gh) in g_in.row_mut(r).iter_mut().zip(&grad_h) {
                *g += gh;
            }
        }
    }
    (g_in, g_out)
}

#[derive(Debug, Clone)]
pub struct SkipgramOutcome {
    pub embedding: EmbeddingMatrix,
    /// Mean pair loss per epoch, in epoch order.
    pub epoch_losses: Vec<f64>,
}

/// Train subword skip-gram with negative sampling.
///
/// Deterministic under `seed`: sentence order is fixed, window widths and
/// negatives come from one seeded stream, and updates run serially.
pub fn train_skipgram(
    corpus: &[Vec<String>],
    config: &SkipgramConfig,
    seed: u64,
) -> Result<SkipgramOutcome, EmbedError> {
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(EmbedError::EmptyCorpus);
    }
    if config.dim == 0 {
        return Err(EmbedError::InvalidConfig("dim must be > 0".to_owned()));
    }
    if config.negatives == 0 {
        return Err(EmbedError::InvalidConfig("need at least one negative sample".to_owned()));
    }
    if config.epochs == 0 {
        return Err(EmbedError::InvalidConfig("need at least one epoch".to_owned()));
    }
    if config.buckets > 0 && config.subword_min_n > config.subword_max_n {
        return Err(EmbedError::InvalidConfig("subword_min_n > subword_max_n".to_owned()));
    }

    let mut word_counts: BTreeMap<&str, u64> = BTreeMap::new();
    for sentence in corpus {
        for token in sentence {
            *word_counts.entry(token.as_str()).or_insert(0) += 1;
        }
    }
    let vocab_words: Vec<&str> =
        word_counts.iter().filter(|(_, &c)| c >= config.min_count).map(|(&w, _)| w).collect();
    if vocab_words.is_empty() {
        return Err(EmbedError::EmptyVocabulary);
    }
    let vocab: BTreeMap<String, usize> =
        vocab_words.iter().enumerate().map(|(i, &w)| (w.to_owned(), i)).collect();
    let v = vocab.len();
    let d = config.dim;
    let b = config.buckets;

    // Unigram^0.75 table for negative sampling.
    let weights: Vec<f64> = vocab_words.iter().map(|&w| libm::pow(word_counts[w] as f64, 0.75)).collect();
    let mut cumulative = Vec::with_capacity(v);
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }

    // Input rows: word ids first, then buckets. Output rows: word ids.
    let mut rng = rng::stream(seed, &[tag::SKIPGRAM]);
    let mut input = Matrix::zeros(v + b, d);
    for r in 0..v + b {
        for c in 0..d {
            input.set(r, c, (rng.gen::<f64>() - 0.5) / d as f64);
        }
    }
    let mut output = Matrix::zeros(v, d);

    // Sentences as vocab indices; per-word input compositions.
    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.iter().filter_map(|t| vocab.get(t.as_str()).copied()).collect())
        .collect();
    let compositions: Vec<Vec<usize>> = vocab_words
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let mut rows = vec![i];
            if b > 0 {
                rows.extend(bucket_ids(w, config.subword_min_n, config.subword_max_n, b).iter().map(|&g| v + g));
            }
            rows
        })
        .collect();

    let total_tokens: usize = sentences.iter().map(|s| s.len()).sum();
    let total_steps = (total_tokens * config.epochs).max(1);
    let mut processed = 0usize;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut grad_h = vec![0.0; d];

    for _ in 0..config.epochs {
        let mut epoch_loss = 0.0;
        let mut pairs = 0u64;
        for sentence in &sentences {
            for (center_pos, &center) in sentence.iter().enumerate() {
                let frac = processed as f64 / total_steps as f64;
                let lr = config.learning_rate + (config.learning_rate_end - config.learning_rate) * frac;
                processed += 1;
                let span = rng.gen_range(1..=config.window.max(1));
                let lo = center_pos.saturating_sub(span);
                let hi = (center_pos + span).min(sentence.len() - 1);
                for ctx_pos in lo..=hi {
                    if ctx_pos == center_pos {
                        continue;
                    }
                    let target = sentence[ctx_pos];
                    let rows = &compositions[center];
                    let h = composed_input(&input, rows);

                    let s_t = linalg::dot(output.row(target), &h);
                    epoch_loss += math::ln_1p_exp(-s_t);
                    let coeff_t = math::sigmoid(s_t) - 1.0;
                    for (gh, u) in grad_h.iter_mut().zip(output.row(target)) {
                        *gh = coeff_t * u;
                    }
                    for (u, hv) in output.row_mut(target).iter_mut().zip(&h) {
                        *u -= lr * coeff_t * hv;
                    }

                    for _ in 0..config.negatives {
                        let mut neg = sample_unigram(&cumulative, &mut rng);
                        let mut attempts = 0;
                        while neg == target && attempts < 64 {
                            neg = sample_unigram(&cumulative, &mut rng);
                            attempts += 1;
                        }
                        if neg == target {
                            continue;
                        }
                        let s_n = linalg::dot(output.row(neg), &h);
                        epoch_loss += math::ln_1p_exp(s_n);
                        let coeff_n = math::sigmoid(s_n);
                        for (gh, u) in grad_h.iter_mut().zip(output.row(neg)) {
                            *gh += coeff_n * u;
                        }
                        for (u, hv) in output.row_mut(neg).iter_mut().zip(&h) {
                            *u -= lr * coeff_n * hv;
                        }
                    }

                    for &r in rows {
                        for (iv, gh) in input.row_mut(r).iter_mut().zip(&grad_h) {
                            *iv -= lr * gh;
                        }
                    }
                    pairs += 1;
                }
            }
        }
        epoch_losses.push(if pairs > 0 { epoch_loss / pairs as f64 } else { 0.0 });
    }

    // Final word vectors: id row plus subword bucket rows.
    let mut vectors = Matrix::zeros(v, d);
    for (i, rows) in compositions.iter().enumerate() {
        let h = composed_input(&input, rows);
        vectors.row_mut(i).copy_from_slice(&h);
    }
    let subword = if b > 0 {
        let mut buckets = Matrix::zeros(b, d);
        for r in 0..b {
            buckets.row_mut(r).copy_from_slice(input.row(v + r));
        }
        Some(SubwordTable { min_n: config.subword_min_n, max_n: config.subword_max_n, buckets })
    } else {
        None
    };
    Ok(SkipgramOutcome {
        embedding: EmbeddingMatrix { vocab, vectors, dim: d, subword },
        epoch_losses,
    })
}

fn sample_unigram(cumulative: &[f64], rng: &mut rng::Xoshiro256PlusPlus) -> usize {
    let total = *cumulative.last().expect("non-empty vocab");
    let r = rng.gen::<f64>() * total;
    cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1)
}

/// Combine two embedding spaces over their union vocabulary.
///
/// Rows are aligned on the union (missing words use the space's subword
/// composition when available, else zeros); each block is column-mean
/// centered and scaled to unit RMS column norm so neither space dominates;
/// the concatenation is then projected to its top-k singular directions
/// (`U_k Sigma_k`).
pub fn combine_embeddings(
    a: &EmbeddingMatrix,
    b: &EmbeddingMatrix,
    k: usize,
) -> Result<EmbeddingMatrix, EmbedError> {
    let da = a.dim();
    let db = b.dim();
    if k == 0 || k > da + db {
        return Err(EmbedError::InvalidCombination(format!("k must be in 1..={}, got {k}", da + db)));
    }
    let union: BTreeSet<&str> = a.words().chain(b.words()).collect();
    if union.is_empty() {
        return Err(EmbedError::InvalidCombination("empty vocabulary union".to_owned()));
    }
    let words: Vec<&str> = union.into_iter().collect();
    let n = words.len();
    let mut m = Matrix::zeros(n, da + db);
    for (r, word) in words.iter().enumerate() {
        if let Some(vec_a) = a.resolve(word) {
            m.row_mut(r)[..da].copy_from_slice(&vec_a);
        }
        if let Some(vec_b) = b.resolve(word) {
            m.row_mut(r)[da..].copy_from_slice(&vec_b);
        }
    }
    center_and_scale_block(&mut m, 0, da);
    center_and_scale_block(&mut m, da, da + db);

    let svd = linalg::svd(&m);
    let r_avail = svd.sigma.len();
    let mut vectors = Matrix::zeros(n, k);
    for row in 0..n {
        for col in 0..k.min(r_avail) {
            vectors.set(row, col, svd.u.get(row, col) * svd.sigma[col]);
        }
    }
    let vocab: BTreeMap<String, usize> =
        words.iter().enumerate().map(|(i, &w)| (w.to_owned(), i)).collect();
    Ok(EmbeddingMatrix { vocab, vectors, dim: k, subword: None })
}

/// Column-mean center the block `cols[lo..hi)` and divide it by its RMS
/// column norm. RMS (not arithmetic-mean) scaling keeps the factor
/// invariant under any orthogonal rotation of the block.
fn center_and_scale_block(m: &mut Matrix, lo: usize, hi: usize) {
    let n = m.rows();
    if n == 0 || hi <= lo {
        return;
    }
    for c in lo..hi {
        let mean: f64 = (0..n).map(|r| m.get(r, c)).sum::<f64>() / n as f64;
        for r in 0..n {
            m.set(r, c, m.get(r, c) - mean);
        }
    }
    let mut sq = 0.0;
    for c in lo..hi {
        for r in 0..n {
            sq += m.get(r, c) * m.get(r, c);
        }
    }
    let rms = math::sqrt(sq / (hi - lo) as f64);
    if rms > 0.0 {
        for c in lo..hi {
            for r in 0..n {
                m.set(r, c, m.get(r, c) / rms);
            }
        }
    }
}

/// Out-of-vocabulary rate of the corpus against the embedding, by word
/// type (not token).
pub fn coverage(embedding: &EmbeddingMatrix, corpus: &[Vec<String>]) -> Result<f64, EmbedError> {
    let types: BTreeSet<&str> = corpus.iter().flatten().map(|s| s.as_str()).collect();
    if types.is_empty() {
        return Err(EmbedError::EmptyCorpus);
    }
    let oov = types.iter().filter(|t| !embedding.contains(t)).count();
    Ok(oov as f64 / types.len() as f64)
}
