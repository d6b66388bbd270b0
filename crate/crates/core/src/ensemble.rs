//! Soft voting: the ensemble's probability row is the weighted arithmetic
//! mean of its members' rows, the label is the argmax with ties broken by
//! class order.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::models::argmax;

#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleError {
    NoMembers,
    WeightCountMismatch { members: usize, weights: usize },
    NonPositiveWeights,
    RowLengthMismatch { expected: usize, got: usize },
    ClassMismatch(String),
}

impl core::fmt::Display for EnsembleError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EnsembleError::NoMembers => write!(f, "ensemble has no members"),
            EnsembleError::WeightCountMismatch { members, weights } => {
                write!(f, "{weights} weights for {members} members")
            }
            EnsembleError::NonPositiveWeights => write!(f, "weights must be positive with a positive sum"),
            EnsembleError::RowLengthMismatch { expected, got } => {
                write!(f, "probability row length {got}, expected {expected}")
            }
            EnsembleError::ClassMismatch(m) => write!(f, "member class lists differ: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EnsembleError {}

/// Voting configuration: the shared class order plus normalized member
/// weights (uniform when none are given).
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub classes: Vec<String>,
    pub weights: Vec<f64>,
}

impl EnsembleSpec {
    /// Uniform weights over `members` voters.
    pub fn uniform(classes: Vec<String>, members: usize) -> Result<EnsembleSpec, EnsembleError> {
        if members == 0 {
            return Err(EnsembleError::NoMembers);
        }
        Ok(EnsembleSpec { classes, weights: vec![1.0 / members as f64; members] })
    }

    /// Explicit weights, normalized to sum to one.
    pub fn weighted(classes: Vec<String>, weights: &[f64]) -> Result<EnsembleSpec, EnsembleError> {
        if weights.is_empty() {
            return Err(EnsembleError::NoMembers);
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(EnsembleError::NonPositiveWeights);
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(EnsembleError::NonPositiveWeights);
        }
        Ok(EnsembleSpec { classes, weights: weights.iter().map(|w| w / sum).collect() })
    }
}

/// Combine member probability rows into the ensemble row and label index.
pub fn soft_vote(spec: &EnsembleSpec, member_rows: &[Vec<f64>]) -> Result<(Vec<f64>, usize), EnsembleError> {
    if member_rows.is_empty() {
        return Err(EnsembleError::NoMembers);
    }
    if member_rows.len() != spec.weights.len() {
        return Err(EnsembleError::WeightCountMismatch {
            members: member_rows.len(),
            weights: spec.weights.len(),
        });
    }
    let width = spec.classes.len();
    let mut combined = vec![0.0; width];
    for (row, &weight) in member_rows.iter().zip(&spec.weights) {
        if row.len() != width {
            return Err(EnsembleError::RowLengthMismatch { expected: width, got: row.len() });
        }
        for (acc, p) in combined.iter_mut().zip(row) {
            *acc += weight * p;
        }
    }
    let label = argmax(&combined);
    Ok((combined, label))
}

/// Voting over labeled rows: returns the row and the winning class name.
pub fn soft_vote_label<'a>(
    spec: &'a EnsembleSpec,
    member_rows: &[Vec<f64>],
) -> Result<(Vec<f64>, &'a str), EnsembleError> {
    let (row, idx) = soft_vote(spec, member_rows)?;
    Ok((row, spec.classes[idx].as_str()))
}

/// Check that every member publishes exactly the spec's class list.
pub fn check_member_classes(spec: &EnsembleSpec, member_classes: &[Vec<String>]) -> Result<(), EnsembleError> {
    for (idx, classes) in member_classes.iter().enumerate() {
        if *classes != spec.classes {
            return Err(EnsembleError::ClassMismatch(format_mismatch(idx, classes, &spec.classes)));
        }
    }
    Ok(())
}

fn format_mismatch(idx: usize, got: &[String], want: &[String]) -> String {
    let mut s = String::from("member ");
    s.push_str(&idx.to_string());
    s.push_str(" has [");
    s.push_str(&got.join(", "));
    s.push_str("], expected [");
    s.push_str(&want.join(", "));
    s.push(']');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes() -> Vec<String> {
        alloc::vec![String::from("NOT"), String::from("OFF")]
    }

    #[test]
    fn single_member_is_identity() {
        let spec = EnsembleSpec::uniform(classes(), 1).unwrap();
        let (row, label) = soft_vote(&spec, &[vec![0.3, 0.7]]).unwrap();
        assert_eq!(row, vec![0.3, 0.7]);
        assert_eq!(label, 1);
    }

    #[test]
    fn uniform_mean_of_two_members() {
        let spec = EnsembleSpec::uniform(classes(), 2).unwrap();
        let (row, label) = soft_vote(&spec, &[vec![0.6, 0.4], vec![0.2, 0.8]]).unwrap();
        assert!((row[0] - 0.4).abs() < 1e-15);
        assert!((row[1] - 0.6).abs() < 1e-15);
        assert_eq!(label, 1);
    }

    #[test]
    fn exact_tie_goes_to_first_class() {
        let spec = EnsembleSpec::uniform(classes(), 2).unwrap();
        let (row, label) = soft_vote(&spec, &[vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
        assert_eq!(row, vec![0.5, 0.5]);
        assert_eq!(label, 0);
    }

    #[test]
    fn degenerate_weights_select_single_member() {
        let spec = EnsembleSpec::weighted(classes(), &[1.0, 0.0, 0.0]).unwrap();
        let rows = [vec![0.25, 0.75], vec![0.9, 0.1], vec![0.5, 0.5]];
        let (row, _) = soft_vote(&spec, &rows).unwrap();
        assert_eq!(row, rows[0]);
    }

    #[test]
    fn permutation_invariance() {
        let spec = EnsembleSpec::uniform(classes(), 3).unwrap();
        let rows = [vec![0.6, 0.4], vec![0.1, 0.9], vec![0.5, 0.5]];
        let permuted = [rows[2].clone(), rows[0].clone(), rows[1].clone()];
        let (a, _) = soft_vote(&spec, &rows).unwrap();
        let (b, _) = soft_vote(&spec, &permuted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn error_paths() {
        let spec = EnsembleSpec::uniform(classes(), 2).unwrap();
        assert_eq!(soft_vote(&spec, &[]).unwrap_err(), EnsembleError::NoMembers);
        assert!(matches!(
            soft_vote(&spec, &[vec![1.0, 0.0]]).unwrap_err(),
            EnsembleError::WeightCountMismatch { .. }
        ));
        assert!(matches!(
            soft_vote(&spec, &[vec![1.0], vec![0.5, 0.5]]).unwrap_err(),
            EnsembleError::RowLengthMismatch { .. }
        ));
        assert!(EnsembleSpec::weighted(classes(), &[0.0, 0.0]).is_err());
        assert!(EnsembleSpec::weighted(classes(), &[-1.0, 2.0]).is_err());
    }

    #[test]
    fn member_class_check() {
        let spec = EnsembleSpec::uniform(classes(), 2).unwrap();
        assert!(check_member_classes(&spec, &[classes(), classes()]).is_ok());
        let other = alloc::vec![String::from("OFF"), String::from("NOT")];
        assert!(check_member_classes(&spec, &[classes(), other]).is_err());
    }
}
