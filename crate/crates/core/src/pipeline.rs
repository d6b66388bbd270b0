//! End-to-end wiring: a fitted feature pipeline (normalization, base
//! vectorization, feature blocks) bound to trained classifiers, and the
//! ablation-grid runner that retrains cells over feature/sampling/
//! normalization regimes on shared splits.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::charlm::CharGramLM;
use crate::corpus::{
    self, apply_sampling, class_counts, stratified_split, CorpusError, LabeledDocument, Task,
};
use crate::embed::{train_skipgram, EmbedError, EmbeddingMatrix, SkipgramConfig};
use crate::featurize::{
    assemble_features, fit_tfidf, pool_embedding, FeatureConfig, FeatureSchema, FeatureVector,
    FeaturizeError, TfidfConfig, TfidfModel,
};
use crate::lexicon::{Lexicon, LexiconError};
use crate::linalg::Matrix;
use crate::models::{
    train_linear_svm, train_logistic, train_random_forest, ClassifierKind, ForestConfig,
    LogisticConfig, ModelError, SvmConfig, TrainedModel,
};
use crate::normalize::{NormalizedDocument, Normalizer};
use crate::rng::{self, tag};

#[derive(Debug, Clone, PartialEq)]
pub enum PipelineError {
    Corpus(CorpusError),
    Lexicon(LexiconError),
    Featurize(FeaturizeError),
    Model(ModelError),
    Embed(EmbedError),
    Config(String),
}

impl core::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PipelineError::Corpus(e) => write!(f, "corpus: {e}"),
            PipelineError::Lexicon(e) => write!(f, "lexicon: {e}"),
            PipelineError::Featurize(e) => write!(f, "featurize: {e}"),
            PipelineError::Model(e) => write!(f, "model: {e}"),
            PipelineError::Embed(e) => write!(f, "embedding: {e}"),
            PipelineError::Config(m) => write!(f, "config: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PipelineError {}

macro_rules! from_error {
    ($variant:ident, $ty:ty) => {
        impl From<$ty> for PipelineError {
            fn from(e: $ty) -> Self {
                PipelineError::$variant(e)
            }
        }
    };
}

from_error!(Corpus, CorpusError);
from_error!(Lexicon, LexiconError);
from_error!(Featurize, FeaturizeError);
from_error!(Model, ModelError);
from_error!(Embed, EmbedError);

/// Everything a pipeline consults besides the document itself.
#[derive(Debug, Clone)]
pub struct Resources {
    pub normalizer: Normalizer,
    pub lexicon: Lexicon,
    pub lm_offensive: CharGramLM,
    pub lm_clean: CharGramLM,
    pub embedding: Option<EmbeddingMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKind {
    Tfidf,
    Embedding,
    None,
}

impl BaseKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaseKind::Tfidf => "tfidf",
            BaseKind::Embedding => "embedding",
            BaseKind::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<BaseKind> {
        match s {
            "tfidf" => Some(BaseKind::Tfidf),
            "embedding" => Some(BaseKind::Embedding),
            "none" => Some(BaseKind::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub normalize: bool,
    pub base: BaseKind,
    pub tfidf: TfidfConfig,
    pub features: FeatureConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            normalize: true,
            base: BaseKind::Tfidf,
            tfidf: TfidfConfig::default(),
            features: FeatureConfig::ALL,
        }
    }
}

/// A fitted pipeline: stable column schema plus the fitted tf-idf model
/// (when the base is tf-idf). Transforms are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub config: PipelineConfig,
    pub tfidf: Option<TfidfModel>,
    schema: FeatureSchema,
}

/// Tokenization honoring the normalization switch: the unnormalized
/// variant is a plain whitespace split of the raw text.
pub fn document_view(normalizer: &Normalizer, raw: &str, normalize: bool) -> NormalizedDocument {
    if normalize {
        normalizer.normalize_text(raw)
    } else {
        let tokens: Vec<String> = raw.split_whitespace().map(|t| t.to_owned()).collect();
        NormalizedDocument {
            original: raw.to_owned(),
            normalized: tokens.join(" "),
            tokens,
            trace: Vec::new(),
        }
    }
}

impl FittedPipeline {
    pub fn fit(
        config: PipelineConfig,
        resources: &Resources,
        train_texts: &[&str],
    ) -> Result<FittedPipeline, PipelineError> {
        let token_lists: Vec<Vec<String>> = train_texts
            .iter()
            .map(|raw| document_view(&resources.normalizer, raw, config.normalize).tokens)
            .collect();
        let (tfidf, base_names) = match config.base {
            BaseKind::Tfidf => {
                let model = fit_tfidf(&token_lists, config.tfidf)?;
                let names: Vec<String> = model.terms().map(|t| format!("tfidf:{t}")).collect();
                (Some(model), names)
            }
            BaseKind::Embedding => {
                let embedding = resources
                    .embedding
                    .as_ref()
                    .ok_or_else(|| PipelineError::Config("embedding base requires an embedding".to_owned()))?;
                let names: Vec<String> = (0..embedding.dim()).map(|i| format!("emb:{i}")).collect();
                (None, names)
            }
            BaseKind::None => (None, Vec::new()),
        };
        let schema = FeatureSchema::new(&base_names, config.features)?;
        Ok(FittedPipeline { config, tfidf, schema })
    }

    pub fn feature_names(&self) -> &[String] {
        self.schema.names()
    }

    pub fn dim(&self) -> usize {
        self.schema.len()
    }

    pub fn transform(&self, resources: &Resources, raw: &str) -> Result<FeatureVector, PipelineError> {
        let doc = document_view(&resources.normalizer, raw, self.config.normalize);
        let base: Vec<f64> = match self.config.base {
            BaseKind::Tfidf => {
                self.tfidf.as_ref().expect("fitted tf-idf for tf-idf base").transform_dense(&doc.tokens)
            }
            BaseKind::Embedding => {
                let embedding = resources
                    .embedding
                    .as_ref()
                    .ok_or_else(|| PipelineError::Config("embedding base requires an embedding".to_owned()))?;
                pool_embedding(&doc.tokens, embedding)
            }
            BaseKind::None => Vec::new(),
        };
        Ok(assemble_features(
            &self.schema,
            &base,
            raw,
            &doc,
            &resources.lexicon,
            &resources.lm_offensive,
            &resources.lm_clean,
        )?)
    }

    /// Feature matrix for a document batch, one row per text.
    pub fn transform_batch(&self, resources: &Resources, texts: &[&str]) -> Result<Matrix, PipelineError> {
        let mut m = Matrix::zeros(texts.len(), self.dim());
        for (r, raw) in texts.iter().enumerate() {
            let fv = self.transform(resources, raw)?;
            m.row_mut(r).copy_from_slice(&fv.values);
        }
        Ok(m)
    }

    /// Flags plus the fitted tf-idf dump in one versioned text blob.
    pub fn serialize(&self) -> String {
        let mut out = String::from("pipeline v1\n");
        out.push_str(&format!("normalize\t{}\n", self.config.normalize));
        out.push_str(&format!("base\t{}\n", self.config.base.as_str()));
        let f = self.config.features;
        out.push_str(&format!("graphemic\t{}\n", f.graphemic));
        out.push_str(&format!("blacklist\t{}\n", f.blacklist));
        out.push_str(&format!("gap\t{}\n", f.gap));
        let t = self.config.tfidf;
        out.push_str(&format!(
            "tfidf_config\t{}\t{}\t{}\t{}\n",
            t.sublinear_tf, t.smooth_idf, t.l2_normalize, t.min_df
        ));
        out.push_str(&format!("embedding_dim\t{}\n", self.base_embedding_dim()));
        if let Some(model) = &self.tfidf {
            out.push_str("--- tfidf ---\n");
            out.push_str(&model.serialize());
        }
        out
    }

    fn base_embedding_dim(&self) -> usize {
        match self.config.base {
            BaseKind::Embedding => self.schema.base_len(),
            _ => 0,
        }
    }

    pub fn parse(src: &str) -> Result<FittedPipeline, PipelineError> {
        let (head, tfidf_src) = match src.split_once("--- tfidf ---\n") {
            Some((h, t)) => (h, Some(t)),
            None => (src, None),
        };
        let mut normalize = true;
        let mut base = BaseKind::Tfidf;
        let mut features = FeatureConfig::ALL;
        let mut tfidf_cfg = TfidfConfig::default();
        let mut emb_dim = 0usize;
        for (idx, line) in head.lines().enumerate() {
            let perr = |m: &str| PipelineError::Config(format!("pipeline line {}: {m}", idx + 1));
            if idx == 0 {
                if line != "pipeline v1" {
                    return Err(perr("expected `pipeline v1` header"));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["normalize", v] => normalize = v.parse().map_err(|_| perr("bad normalize"))?,
                ["base", v] => base = BaseKind::parse(v).ok_or_else(|| perr("bad base"))?,
                ["graphemic", v] => features.graphemic = v.parse().map_err(|_| perr("bad flag"))?,
                ["blacklist", v] => features.blacklist = v.parse().map_err(|_| perr("bad flag"))?,
                ["gap", v] => features.gap = v.parse().map_err(|_| perr("bad flag"))?,
                ["tfidf_config", sub, smooth, l2, min_df] => {
                    tfidf_cfg = TfidfConfig {
                        sublinear_tf: sub.parse().map_err(|_| perr("bad flag"))?,
                        smooth_idf: smooth.parse().map_err(|_| perr("bad flag"))?,
                        l2_normalize: l2.parse().map_err(|_| perr("bad flag"))?,
                        min_df: min_df.parse().map_err(|_| perr("bad min_df"))?,
                    }
                }
                ["embedding_dim", v] => emb_dim = v.parse().map_err(|_| perr("bad dim"))?,
                _ => return Err(perr("unknown record")),
            }
        }
        let config = PipelineConfig { normalize, base, tfidf: tfidf_cfg, features };
        let tfidf = tfidf_src.map(TfidfModel::parse).transpose()?;
        let base_names: Vec<String> = match base {
            BaseKind::Tfidf => tfidf
                .as_ref()
                .ok_or_else(|| PipelineError::Config("tf-idf base without tf-idf dump".to_owned()))?
                .terms()
                .map(|t| format!("tfidf:{t}"))
                .collect(),
            BaseKind::Embedding => (0..emb_dim).map(|i| format!("emb:{i}")).collect(),
            BaseKind::None => Vec::new(),
        };
        let schema = FeatureSchema::new(&base_names, features)?;
        Ok(FittedPipeline { config, tfidf, schema })
    }
}

/// Hyperparameters shared by the trainer entry point and the ablation
/// runner.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDefaults {
    pub forest: ForestConfig,
    pub svm: SvmConfig,
    pub logistic: LogisticConfig,
}

impl Default for ModelDefaults {
    fn default() -> Self {
        ModelDefaults {
            forest: ForestConfig::default(),
            svm: SvmConfig::default(),
            logistic: LogisticConfig::default(),
        }
    }
}

pub fn train_classifier(
    kind: ClassifierKind,
    defaults: &ModelDefaults,
    x: &Matrix,
    y: &[&str],
    seed: u64,
) -> Result<TrainedModel, ModelError> {
    match kind {
        ClassifierKind::Forest => train_random_forest(x, y, &defaults.forest, seed),
        ClassifierKind::Svm => train_linear_svm(x, y, &defaults.svm, seed),
        ClassifierKind::Logistic => train_logistic(x, y, &defaults.logistic, seed),
    }
}

/// Sampling regimes: balanced is downsample-then-oversample, full is
/// oversample-only, unbalanced leaves class counts alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    Balanced,
    Full,
    Unbalanced,
}

impl SamplingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplingMode::Balanced => "balanced",
            SamplingMode::Full => "full",
            SamplingMode::Unbalanced => "unbalanced",
        }
    }

    pub fn parse(s: &str) -> Option<SamplingMode> {
        match s {
            "balanced" => Some(SamplingMode::Balanced),
            "full" => Some(SamplingMode::Full),
            "unbalanced" | "unb" => Some(SamplingMode::Unbalanced),
            _ => None,
        }
    }

    fn index(&self) -> u64 {
        match self {
            SamplingMode::Balanced => 0,
            SamplingMode::Full => 1,
            SamplingMode::Unbalanced => 2,
        }
    }
}

/// One grid point: classifier kind, base vectorization, feature blocks
/// on/off, sampling regime.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub name: String,
    pub model: ClassifierKind,
    pub base: BaseKind,
    pub features: bool,
    pub sampling: SamplingMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationGrid {
    pub cells: Vec<CellSpec>,
    /// Rerun the best cell on unnormalized text and report the pair.
    pub compare_normalization: bool,
}

impl AblationGrid {
    /// The stock grid: forest rows with/without extra features and with/
    /// without the embedding base, balanced sampling.
    pub fn standard() -> AblationGrid {
        let cell = |name: &str, base: BaseKind, features: bool| CellSpec {
            name: name.to_owned(),
            model: ClassifierKind::Forest,
            base,
            features,
            sampling: SamplingMode::Balanced,
        };
        AblationGrid {
            cells: alloc::vec![
                cell("rf", BaseKind::Tfidf, false),
                cell("rf+f", BaseKind::Tfidf, true),
                cell("rf+u", BaseKind::Embedding, false),
                cell("rf+u+f", BaseKind::Embedding, true),
            ],
            compare_normalization: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationCell {
    pub spec: CellSpec,
    pub normalized: bool,
    pub macro_f1: f64,
    pub seed: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationComparison {
    pub cell_name: String,
    pub normalized_f1: f64,
    pub unnormalized_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub cells: Vec<AblationCell>,
    pub normalization: Option<NormalizationComparison>,
    /// True when at least one cell failed and was recorded instead of run.
    pub partial: bool,
}

impl AblationReport {
    /// Regime-by-model macro-F1 matrix (rows: cell names, columns:
    /// sampling modes).
    pub fn matrix_tsv(&self) -> String {
        let mut names: Vec<&str> = self.cells.iter().map(|c| c.spec.name.as_str()).collect();
        names.dedup();
        let modes = [SamplingMode::Balanced, SamplingMode::Full, SamplingMode::Unbalanced];
        let mut out = String::from("model");
        for mode in &modes {
            out.push('\t');
            out.push_str(mode.as_str());
        }
        out.push('\n');
        for name in names {
            out.push_str(name);
            for mode in &modes {
                out.push('\t');
                let cell = self
                    .cells
                    .iter()
                    .find(|c| c.spec.name == name && c.spec.sampling == *mode && c.error.is_none());
                match cell {
                    Some(c) => out.push_str(&format!("{}", c.macro_f1)),
                    None => out.push('-'),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Full per-cell dump plus the normalization comparison.
    pub fn detail_tsv(&self) -> String {
        let mut out =
            String::from("cell\tmodel\tbase\tfeatures\tsampling\tnormalized\tmacro_f1\tseed\tstatus\n");
        for cell in &self.cells {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                cell.spec.name,
                cell.spec.model.as_str(),
                cell.spec.base.as_str(),
                if cell.spec.features { "on" } else { "off" },
                cell.spec.sampling.as_str(),
                cell.normalized,
                cell.macro_f1,
                cell.seed,
                cell.error.as_deref().unwrap_or("ok"),
            ));
        }
        if let Some(n) = &self.normalization {
            out.push_str(&format!(
                "normalization_comparison\t{}\t{}\t{}\n",
                n.cell_name, n.normalized_f1, n.unnormalized_f1
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationDefaults {
    pub fractions: [f64; 3],
    pub max_ratio: f64,
    pub models: ModelDefaults,
    pub skipgram: SkipgramConfig,
    pub pipeline_tfidf: TfidfConfig,
}

impl Default for AblationDefaults {
    fn default() -> Self {
        AblationDefaults {
            fractions: [0.8, 0.1, 0.1],
            max_ratio: 2.0,
            models: ModelDefaults::default(),
            skipgram: SkipgramConfig { dim: 32, epochs: 3, ..SkipgramConfig::default() },
            pipeline_tfidf: TfidfConfig::default(),
        }
    }
}

/// Run every grid cell on identical splits and report macro F1 per cell.
/// A failing cell is recorded (the grid keeps going); the report is
/// flagged partial. Cell seeds derive from `(seed, cell index)`, so a
/// repeated spec differs only in its stream.
pub fn run_ablation(
    grid: &AblationGrid,
    docs: &[LabeledDocument],
    task: Task,
    resources: &Resources,
    defaults: &AblationDefaults,
    seed: u64,
) -> Result<AblationReport, PipelineError> {
    let labeled: Vec<&LabeledDocument> = docs.iter().filter(|d| task.label_of(d).is_some()).collect();
    let owned: Vec<LabeledDocument> = labeled.iter().map(|d| (*d).clone()).collect();
    let labels: Vec<&str> = owned.iter().map(|d| task.label_of(d).expect("filtered")).collect();
    let split = stratified_split(&owned, &labels, defaults.fractions, seed)?;

    let mut runner = AblationRunner {
        split: &split,
        task,
        resources,
        defaults,
        seed,
        embeddings: BTreeMap::new(),
        sampled: BTreeMap::new(),
    };

    let mut cells = Vec::with_capacity(grid.cells.len());
    let mut partial = false;
    for (idx, spec) in grid.cells.iter().enumerate() {
        let cell_seed = rng::derive(seed, &[tag::ABLATION_CELL, idx as u64]);
        let result = runner.run_cell(spec, true, cell_seed);
        let cell = match result {
            Ok(f1) => AblationCell { spec: spec.clone(), normalized: true, macro_f1: f1, seed: cell_seed, error: None },
            Err(e) => {
                partial = true;
                AblationCell {
                    spec: spec.clone(),
                    normalized: true,
                    macro_f1: 0.0,
                    seed: cell_seed,
                    error: Some(format!("{e}")),
                }
            }
        };
        cells.push(cell);
    }

    let normalization = if grid.compare_normalization {
        let best = cells
            .iter()
            .filter(|c| c.error.is_none())
            .max_by(|a, b| a.macro_f1.partial_cmp(&b.macro_f1).unwrap().then(b.seed.cmp(&a.seed)));
        match best {
            Some(best_cell) => {
                let unnormalized_f1 = runner.run_cell(&best_cell.spec, false, best_cell.seed)?;
                Some(NormalizationComparison {
                    cell_name: best_cell.spec.name.clone(),
                    normalized_f1: best_cell.macro_f1,
                    unnormalized_f1,
                })
            }
            None => None,
        }
    } else {
        None
    };

    Ok(AblationReport { cells, normalization, partial })
}

struct AblationRunner<'a> {
    split: &'a corpus::DatasetSplit,
    task: Task,
    resources: &'a Resources,
    defaults: &'a AblationDefaults,
    seed: u64,
    /// Embedding per normalization regime, trained once on train tokens.
    embeddings: BTreeMap<bool, EmbeddingMatrix>,
    /// Sampled train split per (sampling mode, normalization is
    /// irrelevant here) regime.
    sampled: BTreeMap<u64, Vec<LabeledDocument>>,
}

impl AblationRunner<'_> {
    fn embedding_for(&mut self, normalize: bool) -> Result<EmbeddingMatrix, PipelineError> {
        if let Some(e) = self.embeddings.get(&normalize) {
            return Ok(e.clone());
        }
        let token_lists: Vec<Vec<String>> = self
            .split
            .train
            .iter()
            .map(|d| document_view(&self.resources.normalizer, &d.raw_text, normalize).tokens)
            .collect();
        let outcome = train_skipgram(
            &token_lists,
            &self.defaults.skipgram,
            rng::derive(self.seed, &[tag::SKIPGRAM, normalize as u64]),
        )?;
        self.embeddings.insert(normalize, outcome.embedding.clone());
        Ok(outcome.embedding)
    }

    fn sampled_train(&mut self, mode: SamplingMode) -> Result<Vec<LabeledDocument>, PipelineError> {
        if let Some(s) = self.sampled.get(&mode.index()) {
            return Ok(s.clone());
        }
        let labels: Vec<&str> =
            self.split.train.iter().map(|d| self.task.label_of(d).expect("labeled")).collect();
        let counts = class_counts(&labels);
        let plan_seed = rng::derive(self.seed, &[tag::SAMPLING, mode.index()]);
        let plan = match mode {
            SamplingMode::Balanced => corpus::make_sampling_plan(&counts, self.defaults.max_ratio, plan_seed)?,
            SamplingMode::Full => corpus::make_full_plan(&counts, plan_seed)?,
            SamplingMode::Unbalanced => corpus::make_unbalanced_plan(&counts, plan_seed)?,
        };
        let sampled = apply_sampling(&self.split.train, &labels, &plan)?;
        self.sampled.insert(mode.index(), sampled.clone());
        Ok(sampled)
    }

    fn run_cell(&mut self, spec: &CellSpec, normalize: bool, cell_seed: u64) -> Result<f64, PipelineError> {
        let embedding = match spec.base {
            BaseKind::Embedding => Some(self.embedding_for(normalize)?),
            _ => None,
        };
        let resources = Resources {
            normalizer: self.resources.normalizer.clone(),
            lexicon: self.resources.lexicon.clone(),
            lm_offensive: self.resources.lm_offensive.clone(),
            lm_clean: self.resources.lm_clean.clone(),
            embedding,
        };
        let train_docs = self.sampled_train(spec.sampling)?;
        let config = PipelineConfig {
            normalize,
            base: spec.base,
            tfidf: self.defaults.pipeline_tfidf,
            features: if spec.features { FeatureConfig::ALL } else { FeatureConfig::NONE },
        };
        let train_texts: Vec<&str> = train_docs.iter().map(|d| d.raw_text.as_str()).collect();
        let pipeline = FittedPipeline::fit(config, &resources, &train_texts)?;
        let x_train = pipeline.transform_batch(&resources, &train_texts)?;
        let y_train: Vec<&str> =
            train_docs.iter().map(|d| self.task.label_of(d).expect("labeled")).collect();
        let model = train_classifier(spec.model, &self.defaults.models, &x_train, &y_train, cell_seed)?;

        let test_texts: Vec<&str> = self.split.test.iter().map(|d| d.raw_text.as_str()).collect();
        let x_test = pipeline.transform_batch(&resources, &test_texts)?;
        let truth: Vec<&str> =
            self.split.test.iter().map(|d| self.task.label_of(d).expect("labeled")).collect();
        let mut predictions = Vec::with_capacity(x_test.rows());
        for r in 0..x_test.rows() {
            predictions.push(model.predict(x_test.row(r))?.to_owned());
        }
        let truth_owned: Vec<String> = truth.iter().map(|s| s.to_string()).collect();
        let report = crate::eval::macro_f1(&truth_owned, &predictions, &self.task.classes())
            .map_err(|e| PipelineError::Config(format!("evaluation: {e}")))?;
        Ok(report.macro_f1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charlm::train_char_lm;
    use crate::corpus::parse_internal;

    fn test_resources() -> Resources {
        let normalizer = Normalizer::builtin();
        let lexicon = Lexicon::parse("OFFENSIVE\tjerk\nOFFENSIVE\tidiot\n", &normalizer).unwrap();
        Resources {
            normalizer,
            lexicon,
            lm_offensive: train_char_lm(&["jerk", "idiot"], 3, 0.1).unwrap(),
            lm_clean: train_char_lm(&["nice", "kind", "good"], 3, 0.1).unwrap(),
            embedding: None,
        }
    }

    fn tiny_dataset() -> Vec<LabeledDocument> {
        let mut src = String::from("id\tlabel\ttext\n");
        for i in 0..30 {
            if i % 2 == 0 {
                src.push_str(&format!("o{i}\tOFF\tyou are a jerk and an idiot {i}\n"));
            } else {
                src.push_str(&format!("n{i}\tNOT\twhat a kind and good day {i}\n"));
            }
        }
        parse_internal(&src, "test").unwrap()
    }

    #[test]
    fn fitted_pipeline_round_trip() {
        let resources = test_resources();
        let config = PipelineConfig::default();
        let pipeline =
            FittedPipeline::fit(config, &resources, &["you jerk", "fine day today"]).unwrap();
        let restored = FittedPipeline::parse(&pipeline.serialize()).unwrap();
        assert_eq!(pipeline, restored);
        let a = pipeline.transform(&resources, "you utter jerk").unwrap();
        let b = restored.transform(&resources, "you utter jerk").unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn transform_dim_is_stable_across_documents() {
        let resources = test_resources();
        let pipeline =
            FittedPipeline::fit(PipelineConfig::default(), &resources, &["a b c", "d e"]).unwrap();
        for text in ["", "one", "something longer with more words", "@user http://x.y"] {
            assert_eq!(pipeline.transform(&resources, text).unwrap().values.len(), pipeline.dim());
        }
    }

    #[test]
    fn ablation_single_cell_reports_valid_f1() {
        let docs = tiny_dataset();
        let grid = AblationGrid {
            cells: alloc::vec![CellSpec {
                name: String::from("rf"),
                model: ClassifierKind::Forest,
                base: BaseKind::Tfidf,
                features: false,
                sampling: SamplingMode::Balanced,
            }],
            compare_normalization: false,
        };
        let defaults = AblationDefaults {
            fractions: [0.6, 0.2, 0.2],
            models: ModelDefaults {
                forest: ForestConfig { trees: 15, ..Default::default() },
                ..Default::default()
            },
            ..Default::default()
        };
        let report =
            run_ablation(&grid, &docs, Task::SixA, &test_resources(), &defaults, 7).unwrap();
        assert_eq!(report.cells.len(), 1);
        assert!(report.cells[0].error.is_none());
        assert!((0.0..=1.0).contains(&report.cells[0].macro_f1));
        assert!(!report.partial);
    }

    #[test]
    fn ablation_records_failures_and_continues() {
        let docs = tiny_dataset();
        let grid = AblationGrid {
            cells: alloc::vec![
                // Embedding base with no embedding trained is fine (the
                // runner trains one); an unknown-failure cell is hard to
                // fabricate, so use a valid cell plus one with an
                // impossible sampling setup by dropping labels.
                CellSpec {
                    name: String::from("ok"),
                    model: ClassifierKind::Logistic,
                    base: BaseKind::None,
                    features: true,
                    sampling: SamplingMode::Unbalanced,
                },
            ],
            compare_normalization: false,
        };
        let defaults = AblationDefaults { fractions: [0.6, 0.2, 0.2], ..Default::default() };
        let report =
            run_ablation(&grid, &docs, Task::SixA, &test_resources(), &defaults, 3).unwrap();
        assert!(report.cells[0].error.is_none());
    }

    #[test]
    fn seed_only_cells_stay_close_on_separable_data() {
        let docs = tiny_dataset();
        let spec = CellSpec {
            name: String::from("rf"),
            model: ClassifierKind::Forest,
            base: BaseKind::Tfidf,
            features: true,
            sampling: SamplingMode::Balanced,
        };
        let grid = AblationGrid { cells: alloc::vec![spec.clone(), spec], compare_normalization: false };
        let defaults = AblationDefaults {
            fractions: [0.6, 0.2, 0.2],
            models: ModelDefaults {
                forest: ForestConfig { trees: 25, ..Default::default() },
                ..Default::default()
            },
            ..Default::default()
        };
        let report =
            run_ablation(&grid, &docs, Task::SixA, &test_resources(), &defaults, 11).unwrap();
        assert_ne!(report.cells[0].seed, report.cells[1].seed);
        assert!((report.cells[0].macro_f1 - report.cells[1].macro_f1).abs() <= 0.05);
    }
}
