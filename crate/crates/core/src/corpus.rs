//! Dataset handling: OLID-style TSV and the internal line format, the
//! hierarchical label schema, stratified splitting, and class
//! over/downsampling.
//!
//! Sampling and splitting are pure functions of `(input, seed)`; repeated
//! runs produce identical output, element order included.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index::sample as sample_without_replacement;
use rand::Rng;

use crate::math;
use crate::rng::{self, tag};

pub const OLID_HEADER: &str = "id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c";
pub const INTERNAL_HEADER: &str = "id\tlabel\ttext";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusError {
    Parse { line: usize, message: String },
    Validation(String),
    Plan(String),
}

impl core::fmt::Display for CorpusError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CorpusError::Parse { line, message } => write!(f, "line {line}: {message}"),
            CorpusError::Validation(m) => write!(f, "validation: {m}"),
            CorpusError::Plan(m) => write!(f, "sampling plan: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CorpusError {}

macro_rules! label_enum {
    ($name:ident, $($variant:ident => $text:literal),+) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn parse(s: &str) -> Option<Self> {
                match s {
                    $($text => Some($name::$variant),)+
                    _ => None,
                }
            }
        }
    };
}

label_enum!(LabelA, Off => "OFF", Not => "NOT");
label_enum!(LabelB, Tin => "TIN", Unt => "UNT");
label_enum!(LabelC, Ind => "IND", Grp => "GRP", Oth => "OTH");
label_enum!(LabelHate, Hate => "HATE", Nohate => "NOHATE");

/// One document with its provenance and any subset of the task labels.
///
/// Labels follow the OLID hierarchy: subtask B is only defined for OFF
/// documents, subtask C only for TIN documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDocument {
    pub id: String,
    pub raw_text: String,
    pub label_a: Option<LabelA>,
    pub label_b: Option<LabelB>,
    pub label_c: Option<LabelC>,
    pub label_hate: Option<LabelHate>,
    pub source: String,
}

impl LabeledDocument {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.raw_text.trim().is_empty() {
            return Err(CorpusError::Validation(format!("document {}: empty text", self.id)));
        }
        if self.label_b.is_some() && self.label_a != Some(LabelA::Off) {
            return Err(CorpusError::Validation(format!(
                "document {}: subtask B label requires subtask A = OFF",
                self.id
            )));
        }
        if self.label_c.is_some() && self.label_b != Some(LabelB::Tin) {
            return Err(CorpusError::Validation(format!(
                "document {}: subtask C label requires subtask B = TIN",
                self.id
            )));
        }
        Ok(())
    }
}

/// Task schema; selects which label column is the prediction target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    SixA,
    SixB,
    SixC,
    FiveA,
}

impl Task {
    pub fn parse(s: &str) -> Option<Task> {
        match s {
            "6-A" | "6-a" => Some(Task::SixA),
            "6-B" | "6-b" => Some(Task::SixB),
            "6-C" | "6-c" => Some(Task::SixC),
            "5-A" | "5-a" => Some(Task::FiveA),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Task::SixA => "6-A",
            Task::SixB => "6-B",
            Task::SixC => "6-C",
            Task::FiveA => "5-A",
        }
    }

    /// Target label of `doc` under this schema, if annotated.
    pub fn label_of(&self, doc: &LabeledDocument) -> Option<&'static str> {
        match self {
            Task::SixA => doc.label_a.map(|l| l.as_str()),
            Task::SixB => doc.label_b.map(|l| l.as_str()),
            Task::SixC => doc.label_c.map(|l| l.as_str()),
            Task::FiveA => doc.label_hate.map(|l| l.as_str()),
        }
    }

    /// The full class list of the schema, in canonical order.
    pub fn classes(&self) -> Vec<String> {
        let names: &[&str] = match self {
            Task::SixA => &["NOT", "OFF"],
            Task::SixB => &["TIN", "UNT"],
            Task::SixC => &["GRP", "IND", "OTH"],
            Task::FiveA => &["HATE", "NOHATE"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }
}

fn parse_label<T>(raw: &str, line: usize, parse: fn(&str) -> Option<T>, what: &str) -> Result<Option<T>, CorpusError> {
    if raw == "NULL" {
        return Ok(None);
    }
    parse(raw)
        .map(Some)
        .ok_or_else(|| CorpusError::Parse { line, message: format!("unknown {what} label `{raw}`") })
}

/// Parse an OLID-format TSV export.
///
/// The header row is required verbatim; the literal field `NULL` marks an
/// absent label. The label hierarchy is enforced per row.
pub fn parse_olid(src: &str) -> Result<Vec<LabeledDocument>, CorpusError> {
    let mut lines = src.lines();
    let header = lines
        .next()
        .ok_or(CorpusError::Parse { line: 1, message: "missing header row".to_owned() })?;
    if header != OLID_HEADER {
        return Err(CorpusError::Parse {
            line: 1,
            message: format!("expected header `{OLID_HEADER}`, got `{header}`"),
        });
    }
    let mut docs = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(CorpusError::Parse {
                line: line_no,
                message: format!("expected 5 tab-separated fields, got {}", fields.len()),
            });
        }
        let doc = LabeledDocument {
            id: fields[0].to_owned(),
            raw_text: fields[1].to_owned(),
            label_a: parse_label(fields[2], line_no, LabelA::parse, "subtask_a")?,
            label_b: parse_label(fields[3], line_no, LabelB::parse, "subtask_b")?,
            label_c: parse_label(fields[4], line_no, LabelC::parse, "subtask_c")?,
            label_hate: None,
            source: "olid".to_owned(),
        };
        doc.validate()?;
        docs.push(doc);
    }
    Ok(docs)
}

/// Serialize documents back to OLID TSV. Inverse of [`parse_olid`] for
/// well-formed documents; text must not contain tabs or newlines (the OLID
/// format cannot carry them).
pub fn serialize_olid(docs: &[LabeledDocument]) -> Result<String, CorpusError> {
    let mut out = String::from(OLID_HEADER);
    out.push('\n');
    for doc in docs {
        if doc.raw_text.contains('\t') || doc.raw_text.contains('\n') {
            return Err(CorpusError::Validation(format!(
                "document {}: OLID text may not contain tabs or newlines",
                doc.id
            )));
        }
        out.push_str(&doc.id);
        out.push('\t');
        out.push_str(&doc.raw_text);
        for label in [
            doc.label_a.map(|l| l.as_str()),
            doc.label_b.map(|l| l.as_str()),
            doc.label_c.map(|l| l.as_str()),
        ] {
            out.push('\t');
            out.push_str(label.unwrap_or("NULL"));
        }
        out.push('\n');
    }
    Ok(out)
}

fn escape_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            other => out.push(other),
        }
    }
    out
}

fn unescape_text(text: &str, line: usize) -> Result<String, CorpusError> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('\\') => out.push('\\'),
            other => {
                return Err(CorpusError::Parse {
                    line,
                    message: format!("invalid escape `\\{}`", other.map(String::from).unwrap_or_default()),
                })
            }
        }
    }
    Ok(out)
}

/// Parse the internal single-label line format `id<TAB>label<TAB>text`.
///
/// The label value determines its slot; labels below subtask A imply their
/// ancestors (IND implies TIN implies OFF), keeping the hierarchy valid.
pub fn parse_internal(src: &str, source: &str) -> Result<Vec<LabeledDocument>, CorpusError> {
    let mut lines = src.lines();
    let header = lines
        .next()
        .ok_or(CorpusError::Parse { line: 1, message: "missing header row".to_owned() })?;
    if header != INTERNAL_HEADER {
        return Err(CorpusError::Parse {
            line: 1,
            message: format!("expected header `{INTERNAL_HEADER}`, got `{header}`"),
        });
    }
    let mut docs = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(CorpusError::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let mut doc = LabeledDocument {
            id: fields[0].to_owned(),
            raw_text: unescape_text(fields[2], line_no)?,
            label_a: None,
            label_b: None,
            label_c: None,
            label_hate: None,
            source: source.to_owned(),
        };
        let label = fields[1];
        if let Some(a) = LabelA::parse(label) {
            doc.label_a = Some(a);
        } else if let Some(b) = LabelB::parse(label) {
            doc.label_a = Some(LabelA::Off);
            doc.label_b = Some(b);
        } else if let Some(c) = LabelC::parse(label) {
            doc.label_a = Some(LabelA::Off);
            doc.label_b = Some(LabelB::Tin);
            doc.label_c = Some(c);
        } else if let Some(h) = LabelHate::parse(label) {
            doc.label_hate = Some(h);
        } else {
            return Err(CorpusError::Parse { line: line_no, message: format!("unknown label `{label}`") });
        }
        doc.validate()?;
        docs.push(doc);
    }
    Ok(docs)
}

/// Serialize per-task single-label lines; documents without the target
/// label are rejected.
pub fn serialize_internal(docs: &[LabeledDocument], task: Task) -> Result<String, CorpusError> {
    let mut out = String::from(INTERNAL_HEADER);
    out.push('\n');
    for doc in docs {
        let label = task.label_of(doc).ok_or_else(|| {
            CorpusError::Validation(format!("document {}: no {} label", doc.id, task.as_str()))
        })?;
        out.push_str(&doc.id);
        out.push('\t');
        out.push_str(label);
        out.push('\t');
        out.push_str(&escape_text(&doc.raw_text));
        out.push('\n');
    }
    Ok(out)
}

/// Per-class target counts plus the seed that makes application
/// deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub targets: BTreeMap<String, usize>,
    pub max_ratio: f64,
    pub seed: u64,
    pub balanced: bool,
}

fn check_counts(class_counts: &BTreeMap<String, usize>) -> Result<(), CorpusError> {
    if class_counts.len() < 2 {
        return Err(CorpusError::Plan("need at least two classes".to_owned()));
    }
    if let Some((label, _)) = class_counts.iter().find(|(_, &c)| c == 0) {
        return Err(CorpusError::Plan(format!("class `{label}` has zero count")));
    }
    Ok(())
}

/// Downsample-then-oversample plan: every class above
/// `ceil(max_ratio * minority)` is cut to that cap (never below the
/// minority count), then all classes are brought up to the post-cut
/// maximum. The result is balanced.
pub fn make_sampling_plan(
    class_counts: &BTreeMap<String, usize>,
    max_ratio: f64,
    seed: u64,
) -> Result<SamplingPlan, CorpusError> {
    check_counts(class_counts)?;
    if !(max_ratio > 0.0) || !max_ratio.is_finite() {
        return Err(CorpusError::Plan(format!("max_ratio must be positive, got {max_ratio}")));
    }
    let minority = *class_counts.values().min().expect("non-empty");
    let cap = math::ceil(max_ratio * minority as f64) as usize;
    let cap = cap.max(minority);
    let target = class_counts.values().map(|&c| c.min(cap)).max().expect("non-empty");
    let targets = class_counts.keys().map(|k| (k.clone(), target)).collect();
    Ok(SamplingPlan { targets, max_ratio, seed, balanced: true })
}

/// Oversample-only plan (the FULL regime): all classes brought up to the
/// majority count, nothing downsampled.
pub fn make_full_plan(
    class_counts: &BTreeMap<String, usize>,
    seed: u64,
) -> Result<SamplingPlan, CorpusError> {
    check_counts(class_counts)?;
    let target = *class_counts.values().max().expect("non-empty");
    let targets = class_counts.keys().map(|k| (k.clone(), target)).collect();
    Ok(SamplingPlan { targets, max_ratio: f64::INFINITY, seed, balanced: true })
}

/// Identity plan (the UNB regime): class counts kept as they are.
pub fn make_unbalanced_plan(
    class_counts: &BTreeMap<String, usize>,
    seed: u64,
) -> Result<SamplingPlan, CorpusError> {
    check_counts(class_counts)?;
    let targets = class_counts.iter().map(|(k, &v)| (k.clone(), v)).collect();
    Ok(SamplingPlan { targets, max_ratio: f64::INFINITY, seed, balanced: false })
}

/// Count labels, preserving the caller's label extraction.
pub fn class_counts(labels: &[&str]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for &l in labels {
        *counts.entry(l.to_owned()).or_insert(0) += 1;
    }
    counts
}

/// Apply a sampling plan. `labels[i]` is the class of `docs[i]`.
///
/// Downsampling selects without replacement (original order kept);
/// oversampling keeps every document and appends duplicates drawn with
/// replacement. Documents whose class is missing from the plan are
/// dropped. Output is grouped by class in sorted class order and is a pure
/// function of `(docs, labels, plan)`.
pub fn apply_sampling(
    docs: &[LabeledDocument],
    labels: &[&str],
    plan: &SamplingPlan,
) -> Result<Vec<LabeledDocument>, CorpusError> {
    if docs.len() != labels.len() {
        return Err(CorpusError::Plan("docs/labels length mismatch".to_owned()));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    for class in plan.targets.keys() {
        if !by_class.contains_key(class.as_str()) {
            return Err(CorpusError::Plan(format!("plan references missing class `{class}`")));
        }
    }
    let mut out = Vec::new();
    for (class_idx, (class, &target)) in plan.targets.iter().enumerate() {
        let indices = &by_class[class.as_str()];
        let mut rng = rng::stream(plan.seed, &[tag::SAMPLING, class_idx as u64]);
        if indices.len() > target {
            let mut chosen: Vec<usize> =
                sample_without_replacement(&mut rng, indices.len(), target).into_iter().collect();
            chosen.sort_unstable();
            out.extend(chosen.into_iter().map(|i| docs[indices[i]].clone()));
        } else {
            out.extend(indices.iter().map(|&i| docs[i].clone()));
            for _ in 0..target - indices.len() {
                let pick = rng.gen_range(0..indices.len());
                out.push(docs[indices[pick]].clone());
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<LabeledDocument>,
    pub dev: Vec<LabeledDocument>,
    pub test: Vec<LabeledDocument>,
    pub fractions: [f64; 3],
}

/// Stratified train/dev/test split.
///
/// Per-class allocation uses largest-remainder apportionment, which keeps
/// every split within one document of the class's global proportion.
/// Deterministic under `seed`.
pub fn stratified_split(
    docs: &[LabeledDocument],
    labels: &[&str],
    fractions: [f64; 3],
    seed: u64,
) -> Result<DatasetSplit, CorpusError> {
    if docs.len() != labels.len() {
        return Err(CorpusError::Validation("docs/labels length mismatch".to_owned()));
    }
    if fractions.iter().any(|&f| !(f > 0.0)) {
        return Err(CorpusError::Validation("split fractions must all be positive".to_owned()));
    }
    let sum: f64 = fractions.iter().sum();
    if math::abs(sum - 1.0) > 1e-9 {
        return Err(CorpusError::Validation(format!("split fractions sum to {sum}, expected 1")));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    for (class, indices) in &by_class {
        if indices.len() < 3 {
            return Err(CorpusError::Validation(format!(
                "class `{class}` has {} documents, need at least one per split",
                indices.len()
            )));
        }
    }
    let mut parts: [Vec<LabeledDocument>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (class_idx, (_, indices)) in by_class.iter().enumerate() {
        let mut shuffled = indices.clone();
        let mut rng = rng::stream(seed, &[tag::SPLIT, class_idx as u64]);
        rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut rng);
        let n = shuffled.len();
        let quotas: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
        let mut alloc: Vec<usize> = quotas.iter().map(|&q| q as usize).collect();
        let assigned: usize = alloc.iter().sum();
        let mut remainder_order: Vec<usize> = (0..3).collect();
        remainder_order.sort_by(|&a, &b| {
            let fa = quotas[a] - alloc[a] as f64;
            let fb = quotas[b] - alloc[b] as f64;
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        for r in 0..n - assigned {
            alloc[remainder_order[r % 3]] += 1;
        }
        let mut offset = 0;
        for (part, &count) in parts.iter_mut().zip(&alloc) {
            part.extend(shuffled[offset..offset + count].iter().map(|&i| docs[i].clone()));
            offset += count;
        }
    }
    Ok(DatasetSplit { train: parts[0].clone(), dev: parts[1].clone(), test: parts[2].clone(), fractions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::vec;

    fn doc(id: &str, text: &str, label: &str) -> LabeledDocument {
        let src = format!("{INTERNAL_HEADER}\n{id}\t{label}\t{text}\n");
        parse_internal(&src, "test").unwrap().pop().unwrap()
    }

    #[test]
    fn parse_olid_header_only_is_empty() {
        assert_eq!(parse_olid(OLID_HEADER).unwrap(), vec![]);
        assert_eq!(parse_olid("id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c\n").unwrap(), vec![]);
    }

    #[test]
    fn parse_olid_full_row() {
        let src = format!("{OLID_HEADER}\n17\t@u you suck\tOFF\tTIN\tIND\n");
        let docs = parse_olid(&src).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].id, "17");
        assert_eq!(docs[0].label_a, Some(LabelA::Off));
        assert_eq!(docs[0].label_b, Some(LabelB::Tin));
        assert_eq!(docs[0].label_c, Some(LabelC::Ind));
    }

    #[test]
    fn parse_olid_rejects_hierarchy_violation() {
        let src = format!("{OLID_HEADER}\n9\tmeh\tNOT\tTIN\tNULL\n");
        let err = parse_olid(&src).unwrap_err();
        assert!(matches!(err, CorpusError::Validation(ref m) if m.contains("9")));
    }

    #[test]
    fn parse_olid_rejects_wrong_column_count() {
        let src = format!("{OLID_HEADER}\n1\tonly three\tOFF\n");
        let err = parse_olid(&src).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }));
    }

    #[test]
    fn parse_olid_null_means_absent() {
        let src = format!("{OLID_HEADER}\n5\thello there\tNOT\tNULL\tNULL\n");
        let docs = parse_olid(&src).unwrap();
        assert_eq!(docs[0].label_a, Some(LabelA::Not));
        assert_eq!(docs[0].label_b, None);
        assert_eq!(docs[0].label_c, None);
    }

    #[test]
    fn olid_round_trip() {
        let src = format!("{OLID_HEADER}\n17\t@u you suck\tOFF\tTIN\tIND\n5\thi\tNOT\tNULL\tNULL\n");
        let docs = parse_olid(&src).unwrap();
        assert_eq!(serialize_olid(&docs).unwrap(), src);
    }

    #[test]
    fn internal_format_escapes_round_trip() {
        let mut d = doc("1", "plain", "OFF");
        d.raw_text = String::from("tab\there\nand \\ back");
        let text = serialize_internal(&[d.clone()], Task::SixA).unwrap();
        let back = parse_internal(&text, "test").unwrap();
        assert_eq!(back[0].raw_text, d.raw_text);
    }

    #[test]
    fn internal_label_implies_ancestors() {
        let d = doc("1", "x y", "IND");
        assert_eq!(d.label_a, Some(LabelA::Off));
        assert_eq!(d.label_b, Some(LabelB::Tin));
        assert_eq!(d.label_c, Some(LabelC::Ind));
        d.validate().unwrap();
    }

    fn counts(pairs: &[(&str, usize)]) -> BTreeMap<String, usize> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn plan_downsample_then_oversample() {
        let plan = make_sampling_plan(&counts(&[("A", 10), ("B", 4)]), 2.0, 1).unwrap();
        assert_eq!(plan.targets, counts(&[("A", 8), ("B", 8)]));
    }

    #[test]
    fn plan_balanced_input_unchanged_for_any_ratio() {
        for ratio in [0.5, 1.0, 2.0, 100.0] {
            let plan = make_sampling_plan(&counts(&[("A", 5), ("B", 5)]), ratio, 1).unwrap();
            assert_eq!(plan.targets, counts(&[("A", 5), ("B", 5)]));
        }
    }

    #[test]
    fn plan_task6c_corpus_counts() {
        // IND/GRP/OTH counts of the additional task-6 corpus; ratio 3 caps
        // the two large classes at 3*1025 and re-raises OTH to match.
        let plan =
            make_sampling_plan(&counts(&[("IND", 18506), ("GRP", 6761), ("OTH", 1025)]), 3.0, 1).unwrap();
        assert_eq!(plan.targets, counts(&[("IND", 3075), ("GRP", 3075), ("OTH", 3075)]));
    }

    #[test]
    fn plan_rejects_degenerate_inputs() {
        assert!(make_sampling_plan(&counts(&[("A", 10)]), 2.0, 1).is_err());
        assert!(make_sampling_plan(&counts(&[("A", 10), ("B", 0)]), 2.0, 1).is_err());
        assert!(make_sampling_plan(&counts(&[("A", 1), ("B", 2)]), 0.0, 1).is_err());
    }

    fn dataset(spec: &[(&str, usize)]) -> (Vec<LabeledDocument>, Vec<String>) {
        let mut docs = Vec::new();
        let mut labels = Vec::new();
        for (label, n) in spec {
            for i in 0..*n {
                docs.push(doc(&format!("{label}{i}"), "some text", label));
                labels.push(label.to_string());
            }
        }
        (docs, labels)
    }

    #[test]
    fn apply_sampling_identity_plan() {
        let (docs, labels) = dataset(&[("OFF", 3), ("NOT", 3)]);
        let labels: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        let plan = make_unbalanced_plan(&class_counts(&labels), 7).unwrap();
        let out = apply_sampling(&docs, &labels, &plan).unwrap();
        let mut got: Vec<&str> = out.iter().map(|d| d.id.as_str()).collect();
        let mut want: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
        got.sort_unstable();
        want.sort_unstable();
        assert_eq!(got, want);
    }

    #[test]
    fn apply_sampling_exact_targets_and_multiset_shape() {
        let (docs, labels) = dataset(&[("OFF", 10), ("NOT", 4)]);
        let labels: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        let plan = make_sampling_plan(&class_counts(&labels), 2.0, 11).unwrap();
        let out = apply_sampling(&docs, &labels, &plan).unwrap();
        let off: Vec<&str> =
            out.iter().filter(|d| d.label_a == Some(LabelA::Off)).map(|d| d.id.as_str()).collect();
        let not: Vec<&str> =
            out.iter().filter(|d| d.label_a == Some(LabelA::Not)).map(|d| d.id.as_str()).collect();
        assert_eq!(off.len(), 8);
        assert_eq!(not.len(), 8);
        // Downsampled class is a subset without duplicates.
        let unique_off: BTreeSet<&&str> = off.iter().collect();
        assert_eq!(unique_off.len(), 8);
        // Oversampled class keeps all four originals.
        let unique_not: BTreeSet<&&str> = not.iter().collect();
        assert_eq!(unique_not.len(), 4);
    }

    #[test]
    fn apply_sampling_is_deterministic() {
        let (docs, labels) = dataset(&[("OFF", 10), ("NOT", 4)]);
        let labels: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        let plan = make_sampling_plan(&class_counts(&labels), 2.0, 11).unwrap();
        let a = apply_sampling(&docs, &labels, &plan).unwrap();
        let b = apply_sampling(&docs, &labels, &plan).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn apply_sampling_rejects_missing_class() {
        let (docs, labels) = dataset(&[("OFF", 3), ("NOT", 3)]);
        let labels: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        let mut plan = make_unbalanced_plan(&class_counts(&labels), 7).unwrap();
        plan.targets.insert(String::from("TIN"), 2);
        assert!(apply_sampling(&docs, &labels, &plan).is_err());
    }

    #[test]
    fn split_is_stratified_and_deterministic() {
        let (docs, labels) = dataset(&[("OFF", 50), ("NOT", 50)]);
        let labels: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        let s1 = stratified_split(&docs, &labels, [0.8, 0.1, 0.1], 3).unwrap();
        let s2 = stratified_split(&docs, &labels, [0.8, 0.1, 0.1], 3).unwrap();
        assert_eq!(s1.train.len(), 80);
        assert_eq!(s1.dev.len(), 10);
        assert_eq!(s1.test.len(), 10);
        let off_in_train = s1.train.iter().filter(|d| d.label_a == Some(LabelA::Off)).count();
        assert!((39..=41).contains(&off_in_train));
        let ids = |part: &[LabeledDocument]| part.iter().map(|d| d.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&s1.train), ids(&s2.train));
        assert_eq!(ids(&s1.dev), ids(&s2.dev));
        assert_eq!(ids(&s1.test), ids(&s2.test));
        //

        let mut all: Vec<String> = ids(&s1.train);
        all.extend(ids(&s1.dev));
        all.extend(ids(&s1.test));
        let unique: BTreeSet<&String> = all.iter().collect();
        assert_eq!(unique.len(), 100);
    }

    #[test]
    fn split_rejects_zero_fraction() {
        let (docs, labels) = dataset(&[("OFF", 5), ("NOT", 5)]);
        let labels: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        assert!(stratified_split(&docs, &labels, [1.0, 0.0, 0.0], 3).is_err());
    }

    #[test]
    fn split_rejects_tiny_class() {
        let (docs, labels) = dataset(&[("OFF", 2), ("NOT", 5)]);
        let labels: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        assert!(stratified_split(&docs, &labels, [0.8, 0.1, 0.1], 3).is_err());
    }
}
