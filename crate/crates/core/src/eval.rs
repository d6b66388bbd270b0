//! Evaluation: per-class precision/recall/F1 with macro averaging,
//! confusion matrices, and chance-corrected agreement (Fleiss' kappa for
//! any rater count, Cohen's kappa for two raters).
//!
//! Macro F1 averages over the *declared* class set: classes absent from
//! both truth and prediction contribute an F1 of zero. The 0/0 cases of
//! precision, recall, and F1 are all scored as zero.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

pub use crate::pipeline::{
    run_ablation, AblationCell, AblationDefaults, AblationGrid, AblationReport, BaseKind, CellSpec,
    NormalizationComparison, SamplingMode,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    LengthMismatch { truth: usize, pred: usize },
    UnknownLabel(String),
    UnequalRaterCounts { item: usize },
    TooFewRaters(u64),
    EmptyInput,
}

impl core::fmt::Display for EvalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EvalError::LengthMismatch { truth, pred } => {
                write!(f, "{truth} truth labels vs {pred} predictions")
            }
            EvalError::UnknownLabel(l) => write!(f, "label `{l}` not in declared class set"),
            EvalError::UnequalRaterCounts { item } => {
                write!(f, "item {item} has a different rater count")
            }
            EvalError::TooFewRaters(n) => write!(f, "need at least 2 raters, got {n}"),
            EvalError::EmptyInput => write!(f, "empty input"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvalError {}

/// Classification report over a declared class set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub classes: Vec<String>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<usize>,
    pub macro_f1: f64,
    /// Rows are truth, columns are predictions, indexed like `classes`.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    /// TSV rendering: one row per class plus macro F1 and the confusion
    /// matrix.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("class\tprecision\trecall\tf1\tsupport\n");
        for (i, class) in self.classes.iter().enumerate() {
            out.push_str(&format!(
                "{class}\t{}\t{}\t{}\t{}\n",
                self.precision[i], self.recall[i], self.f1[i], self.support[i]
            ));
        }
        out.push_str(&format!("macro_f1\t{}\n", self.macro_f1));
        out.push_str(&format!("confusion\ttruth\\pred\t{}\n", self.classes.join("\t")));
        for (i, class) in self.classes.iter().enumerate() {
            let row: Vec<String> = self.confusion[i].iter().map(|c| c.to_string()).collect();
            out.push_str(&format!("confusion\t{class}\t{}\n", row.join("\t")));
        }
        out
    }
}

/// Per-class F1 with the 0/0 -> 0 convention; macro F1 is the unweighted
/// mean over `classes`, absent classes included.
pub fn macro_f1<S: AsRef<str>>(truth: &[S], pred: &[S], classes: &[String]) -> Result<EvalReport, EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch { truth: truth.len(), pred: pred.len() });
    }
    let index_of = |label: &str| -> Result<usize, EvalError> {
        classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| EvalError::UnknownLabel(label.to_owned()))
    };
    let k = classes.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (t, p) in truth.iter().zip(pred) {
        confusion[index_of(t.as_ref())?][index_of(p.as_ref())?] += 1;
    }
    let mut precision = vec![0.0; k];
    let mut recall = vec![0.0; k];
    let mut f1 = vec![0.0; k];
    let mut support = vec![0usize; k];
    for c in 0..k {
        let tp = confusion[c][c];
        let fp: usize = (0..k).filter(|&r| r != c).map(|r| confusion[r][c]).sum();
        let fn_: usize = (0..k).filter(|&p| p != c).map(|p| confusion[c][p]).sum();
        support[c] = tp + fn_;
        precision[c] = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
        recall[c] = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
        f1[c] = if precision[c] + recall[c] > 0.0 {
            2.0 * precision[c] * recall[c] / (precision[c] + recall[c])
        } else {
            0.0
        };
    }
    let macro_f1 = f1.iter().sum::<f64>() / k as f64;
    Ok(EvalReport { classes: classes.to_vec(), precision, recall, f1, support, macro_f1, confusion })
}

/// Chance-corrected agreement statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub kappa: f64,
    pub observed: f64,
    pub expected: f64,
    pub raters: u64,
    pub items: usize,
}

/// Fleiss' kappa over an items-by-categories matrix of rating counts.
/// Every row must sum to the same rater count n >= 2.
pub fn fleiss_kappa(ratings: &[Vec<u64>]) -> Result<AgreementReport, EvalError> {
    if ratings.is_empty() || ratings[0].is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n: u64 = ratings[0].iter().sum();
    if n < 2 {
        return Err(EvalError::TooFewRaters(n));
    }
    for (item, row) in ratings.iter().enumerate() {
        if row.iter().sum::<u64>() != n || row.len() != ratings[0].len() {
            return Err(EvalError::UnequalRaterCounts { item });
        }
    }
    let items = ratings.len();
    let categories = ratings[0].len();
    let nf = n as f64;

    let mut observed = 0.0;
    for row in ratings {
        let sum_sq: f64 = row.iter().map(|&c| (c * c) as f64).sum();
        observed += (sum_sq - nf) / (nf * (nf - 1.0));
    }
    observed /= items as f64;

    let mut expected = 0.0;
    for cat in 0..categories {
        let total: u64 = ratings.iter().map(|row| row[cat]).sum();
        let p = total as f64 / (items as f64 * nf);
        expected += p * p;
    }

    // All raters in one category forces observed agreement 1 as well;
    // perfect agreement is kappa 1 rather than 0/0.
    let kappa = if expected == 1.0 { 1.0 } else { (observed - expected) / (1.0 - expected) };
    Ok(AgreementReport { kappa, observed, expected, raters: n, items })
}

/// Cohen's kappa for two raters over the same items.
pub fn cohen_kappa<S: AsRef<str>>(r1: &[S], r2: &[S]) -> Result<AgreementReport, EvalError> {
    if r1.len() != r2.len() {
        return Err(EvalError::LengthMismatch { truth: r1.len(), pred: r2.len() });
    }
    if r1.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = r1.len() as f64;
    let mut categories: Vec<&str> = r1.iter().chain(r2.iter()).map(|s| s.as_ref()).collect();
    categories.sort_unstable();
    categories.dedup();

    let observed =
        r1.iter().zip(r2).filter(|(a, b)| a.as_ref() == b.as_ref()).count() as f64 / n;
    let mut expected = 0.0;
    for cat in &categories {
        let p1 = r1.iter().filter(|l| l.as_ref() == *cat).count() as f64 / n;
        let p2 = r2.iter().filter(|l| l.as_ref() == *cat).count() as f64 / n;
        expected += p1 * p2;
    }
    let kappa = if expected == 1.0 { 1.0 } else { (observed - expected) / (1.0 - expected) };
    Ok(AgreementReport { kappa, observed, expected, raters: 2, items: r1.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let labels = ["A", "B", "A", "B"];
        let report = macro_f1(&labels, &labels, &classes(&["A", "B"])).unwrap();
        assert_eq!(report.macro_f1, 1.0);
        assert_eq!(report.support, vec![2, 2]);
    }

    #[test]
    fn hand_computed_mixed_case() {
        // truth [A,A,B], pred [A,B,A]: F1(A)=0.5, F1(B)=0, macro 0.25.
        let report = macro_f1(&["A", "A", "B"], &["A", "B", "A"], &classes(&["A", "B"])).unwrap();
        assert!((report.f1[0] - 0.5).abs() < 1e-15);
        assert_eq!(report.f1[1], 0.0);
        assert!((report.macro_f1 - 0.25).abs() < 1e-15);
        assert_eq!(report.confusion, vec![vec![1, 1], vec![1, 0]]);
    }

    #[test]
    fn disjoint_labels_score_zero() {
        let report = macro_f1(&["A", "A"], &["B", "B"], &classes(&["A", "B"])).unwrap();
        assert_eq!(report.macro_f1, 0.0);
    }

    #[test]
    fn absent_class_contributes_zero() {
        let report = macro_f1(&["A", "A"], &["A", "A"], &classes(&["A", "B", "C"])).unwrap();
        assert!((report.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(macro_f1(&["A"], &["A", "B"], &classes(&["A", "B"])).is_err());
        assert!(macro_f1(&["A"], &["Z"], &classes(&["A", "B"])).is_err());
    }

    #[test]
    fn confusion_sums_to_sample_count() {
        let truth = ["A", "B", "C", "A", "B", "C", "A"];
        let pred = ["B", "B", "C", "A", "C", "C", "A"];
        let report = macro_f1(&truth, &pred, &classes(&["A", "B", "C"])).unwrap();
        let total: usize = report.confusion.iter().flatten().sum();
        assert_eq!(total, truth.len());
    }

    #[test]
    fn fleiss_perfect_agreement() {
        // Two categories both actually used, all raters agree per item.
        let ratings = vec![vec![3, 0], vec![0, 3], vec![3, 0]];
        let report = fleiss_kappa(&ratings).unwrap();
        assert_eq!(report.kappa, 1.0);
        assert_eq!(report.observed, 1.0);
    }

    #[test]
    fn fleiss_two_item_fixture() {
        // item1 both raters A, item2 split: observed 0.5, expected 0.625,
        // kappa -1/3.
        let ratings = vec![vec![2, 0], vec![1, 1]];
        let report = fleiss_kappa(&ratings).unwrap();
        assert_eq!(report.observed, 0.5);
        assert_eq!(report.expected, 0.625);
        assert_eq!(report.kappa, -1.0 / 3.0);
    }

    #[test]
    fn fleiss_invariant_under_item_duplication() {
        let ratings = vec![vec![2, 1, 0], vec![0, 3, 0], vec![1, 1, 1], vec![2, 0, 1]];
        let doubled: Vec<Vec<u64>> = ratings.iter().chain(ratings.iter()).cloned().collect();
        let a = fleiss_kappa(&ratings).unwrap();
        let b = fleiss_kappa(&doubled).unwrap();
        assert!((a.kappa - b.kappa).abs() < 1e-12);
    }

    #[test]
    fn fleiss_invariant_under_category_permutation() {
        let ratings = vec![vec![2, 1, 0], vec![0, 3, 0], vec![1, 1, 1]];
        let permuted: Vec<Vec<u64>> =
            ratings.iter().map(|r| vec![r[2], r[0], r[1]]).collect();
        let a = fleiss_kappa(&ratings).unwrap();
        let b = fleiss_kappa(&permuted).unwrap();
        assert!((a.kappa - b.kappa).abs() < 1e-12);
    }

    #[test]
    fn fleiss_degenerate_single_category() {
        let ratings = vec![vec![3, 0], vec![3, 0]];
        let report = fleiss_kappa(&ratings).unwrap();
        assert_eq!(report.kappa, 1.0);
    }

    #[test]
    fn fleiss_rejects_bad_shapes() {
        assert!(fleiss_kappa(&[]).is_err());
        assert!(fleiss_kappa(&[vec![1, 0]]).is_err(), "single rater");
        assert!(fleiss_kappa(&[vec![2, 0], vec![1, 2]]).is_err(), "unequal row sums");
    }

    #[test]
    fn cohen_identity_and_independence() {
        let r = ["A", "B", "A", "B"];
        assert_eq!(cohen_kappa(&r, &r).unwrap().kappa, 1.0);
        // po = 0.5, pe = 0.5 -> kappa 0.
        let report = cohen_kappa(&["A", "A", "B", "B"], &["A", "B", "A", "B"]).unwrap();
        assert_eq!(report.observed, 0.5);
        assert_eq!(report.expected, 0.5);
        assert_eq!(report.kappa, 0.0);
    }

    #[test]
    fn cohen_constant_rater_scores_zero() {
        let report = cohen_kappa(&["A", "B", "A", "B"], &["A", "A", "A", "A"]).unwrap();
        assert_eq!(report.kappa, 0.0);
    }
}
