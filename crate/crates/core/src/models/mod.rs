//! Classical classifiers behind one probabilistic contract: random
//! forest, linear SVM with Platt-calibrated probabilities, and a
//! multinomial logistic regression baseline.
//!
//! Every trained model predicts a probability row over its class list
//! (non-negative, summing to one), serializes to a versioned text
//! container that round-trips bit-exactly, and is reproducible from
//! `(data, config, seed)` regardless of training parallelism.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::linalg::Matrix;

pub mod forest;
pub mod logistic;
pub mod svm;

pub use forest::{train_random_forest, ForestConfig};
pub use logistic::{train_logistic, LogisticConfig};
pub use svm::{train_linear_svm, SvmConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    TooFewSamples(usize),
    NoClasses,
    SingleClass(String),
    NonFiniteFeature { row: usize, col: usize },
    ShapeMismatch(String),
    DimensionMismatch { expected: usize, got: usize },
    UnknownLabel(String),
    Parse { line: usize, message: String },
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::TooFewSamples(n) => write!(f, "need at least 2 samples, got {n}"),
            ModelError::NoClasses => write!(f, "no classes in training labels"),
            ModelError::SingleClass(c) => write!(f, "only one class `{c}` in training labels"),
            ModelError::NonFiniteFeature { row, col } => {
                write!(f, "non-finite feature at row {row}, column {col}")
            }
            ModelError::ShapeMismatch(m) => write!(f, "shape mismatch: {m}"),
            ModelError::DimensionMismatch { expected, got } => {
                write!(f, "feature dimension mismatch: model expects {expected}, got {got}")
            }
            ModelError::UnknownLabel(l) => write!(f, "label `{l}` not in training classes"),
            ModelError::Parse { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Forest,
    Svm,
    Logistic,
}

impl ClassifierKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::Forest => "forest",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Logistic => "logistic",
        }
    }

    pub fn parse(s: &str) -> Option<ClassifierKind> {
        match s {
            "forest" => Some(ClassifierKind::Forest),
            "svm" => Some(ClassifierKind::Svm),
            "logistic" => Some(ClassifierKind::Logistic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Params {
    Forest(forest::Forest),
    Svm(svm::SvmParams),
    Logistic(logistic::LogisticParams),
}

/// A trained classifier exposing class-probability prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ClassifierKind,
    pub classes: Vec<String>,
    pub feature_dim: usize,
    pub seed: u64,
    pub(crate) params: Params,
}

impl TrainedModel {
    /// Probability row for one feature vector. Rows are non-negative and
    /// sum to one.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        if x.len() != self.feature_dim {
            return Err(ModelError::DimensionMismatch { expected: self.feature_dim, got: x.len() });
        }
        Ok(match &self.params {
            Params::Forest(f) => f.predict_proba(x),
            Params::Svm(s) => s.predict_proba(x),
            Params::Logistic(l) => l.predict_proba(x),
        })
    }

    /// Probability matrix, one row per input row.
    pub fn predict_proba_batch(&self, x: &Matrix) -> Result<Matrix, ModelError> {
        let mut out = Matrix::zeros(x.rows(), self.classes.len());
        for r in 0..x.rows() {
            let row = self.predict_proba(x.row(r))?;
            out.row_mut(r).copy_from_slice(&row);
        }
        Ok(out)
    }

    /// Predicted label: argmax of the probability row, ties broken by
    /// class order.
    pub fn predict(&self, x: &[f64]) -> Result<&str, ModelError> {
        let proba = self.predict_proba(x)?;
        Ok(&self.classes[argmax(&proba)])
    }

    /// Versioned text container. `parse(serialize(m))` reproduces the
    /// model bit-exactly.
    pub fn serialize(&self) -> String {
        let mut out = String::from("offlang-model v1\n");
        out.push_str(&format!("kind\t{}\n", self.kind.as_str()));
        out.push_str(&format!("classes\t{}\n", self.classes.join("\t")));
        out.push_str(&format!("feature_dim\t{}\n", self.feature_dim));
        out.push_str(&format!("seed\t{}\n", self.seed));
        match &self.params {
            Params::Forest(f) => f.write(&mut out),
            Params::Svm(s) => s.write(&mut out),
            Params::Logistic(l) => l.write(&mut out),
        }
        out
    }

    pub fn parse(src: &str) -> Result<TrainedModel, ModelError> {
        let lines: Vec<&str> = src.lines().collect();
        let perr = |line: usize, m: &str| ModelError::Parse { line, message: m.to_owned() };
        if lines.first() != Some(&"offlang-model v1") {
            return Err(perr(1, "expected `offlang-model v1` header"));
        }
        let mut kind = None;
        let mut classes = None;
        let mut feature_dim = None;
        let mut seed = None;
        let mut body_start = lines.len();
        for (idx, line) in lines.iter().enumerate().skip(1) {
            let line_no = idx + 1;
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["kind", k] => {
                    kind = Some(ClassifierKind::parse(k).ok_or_else(|| perr(line_no, "unknown kind"))?)
                }
                ["classes", rest @ ..] => {
                    classes = Some(rest.iter().map(|s| s.to_string()).collect::<Vec<_>>())
                }
                ["feature_dim", v] => {
                    feature_dim = Some(v.parse().map_err(|_| perr(line_no, "bad feature_dim"))?)
                }
                ["seed", v] => seed = Some(v.parse().map_err(|_| perr(line_no, "bad seed"))?),
                _ => {
                    body_start = idx;
                    break;
                }
            }
        }
        let kind = kind.ok_or_else(|| perr(0, "missing kind"))?;
        let classes = classes.ok_or_else(|| perr(0, "missing classes"))?;
        let feature_dim = feature_dim.ok_or_else(|| perr(0, "missing feature_dim"))?;
        let seed = seed.ok_or_else(|| perr(0, "missing seed"))?;
        let body = &lines[body_start..];
        let params = match kind {
            ClassifierKind::Forest => Params::Forest(forest::Forest::read(body, classes.len(), body_start)?),
            ClassifierKind::Svm => Params::Svm(svm::SvmParams::read(body, body_start)?),
            ClassifierKind::Logistic => Params::Logistic(logistic::LogisticParams::read(body, body_start)?),
        };
        Ok(TrainedModel { kind, classes, feature_dim, seed, params })
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Sorted unique labels; errors when there are none.
pub(crate) fn class_list(y: &[&str]) -> Result<Vec<String>, ModelError> {
    let mut classes: Vec<String> = y.iter().map(|s| s.to_string()).collect();
    classes.sort();
    classes.dedup();
    if classes.is_empty() {
        return Err(ModelError::NoClasses);
    }
    Ok(classes)
}

pub(crate) fn validate_training_input(x: &Matrix, y: &[&str]) -> Result<(), ModelError> {
    if x.rows() != y.len() {
        return Err(ModelError::ShapeMismatch(format!("{} rows vs {} labels", x.rows(), y.len())));
    }
    if x.rows() < 2 {
        return Err(ModelError::TooFewSamples(x.rows()));
    }
    for r in 0..x.rows() {
        for (c, v) in x.row(r).iter().enumerate() {
            if !v.is_finite() {
                return Err(ModelError::NonFiniteFeature { row: r, col: c });
            }
        }
    }
    Ok(())
}

pub(crate) fn labels_to_indices(y: &[&str], classes: &[String]) -> Result<Vec<usize>, ModelError> {
    y.iter()
        .map(|l| {
            classes
                .iter()
                .position(|c| c == l)
                .ok_or_else(|| ModelError::UnknownLabel((*l).to_owned()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_breaks_ties_by_lowest_index() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.5, 0.5]), 1);
        assert_eq!(argmax(&[0.1, 0.2, 0.7]), 2);
    }

    #[test]
    fn class_list_is_sorted_unique() {
        let classes = class_list(&["OFF", "NOT", "OFF", "NOT"]).unwrap();
        assert_eq!(classes, ["NOT", "OFF"]);
    }
}
