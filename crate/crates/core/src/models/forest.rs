//! Random forest: bagged CART trees with Gini-impurity splits at midpoint
//! thresholds.
//!
//! All tie-breaking is pinned (lowest feature index, then lowest
//! threshold) and each tree derives its RNG from `(seed, tree index)`, so
//! the forest is identical whether trees are trained serially or fanned
//! out across threads.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample as sample_without_replacement;
use rand::Rng;

use crate::linalg::Matrix;
use crate::rng::{self, tag};

use super::{
    class_list, labels_to_indices, validate_training_input, ClassifierKind, ModelError, Params,
    TrainedModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitFeatures {
    /// floor(sqrt(d)), at least 1. The usual default.
    Sqrt,
    All,
    Fixed(usize),
}

impl SplitFeatures {
    fn count(&self, d: usize) -> usize {
        match self {
            SplitFeatures::Sqrt => {
                let mut m = 1;
                while (m + 1) * (m + 1) <= d {
                    m += 1;
                }
                m
            }
            SplitFeatures::All => d.max(1),
            SplitFeatures::Fixed(n) => (*n).clamp(1, d.max(1)),
        }
    }

    fn as_str(&self) -> String {
        match self {
            SplitFeatures::Sqrt => "sqrt".to_string(),
            SplitFeatures::All => "all".to_string(),
            SplitFeatures::Fixed(n) => format!("{n}"),
        }
    }

    fn parse(s: &str) -> Option<SplitFeatures> {
        match s {
            "sqrt" => Some(SplitFeatures::Sqrt),
            "all" => Some(SplitFeatures::All),
            other => other.parse().ok().map(SplitFeatures::Fixed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestConfig {
    pub trees: usize,
    /// 0 means unlimited depth.
    pub max_depth: usize,
    pub min_leaf: usize,
    pub split_features: SplitFeatures,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            trees: 200,
            max_depth: 0,
            min_leaf: 1,
            split_features: SplitFeatures::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Split { feature: usize, threshold: f64, left: u32, right: u32 },
    Leaf { dist: Vec<f64> },
}

/// Nodes in child-before-parent order; the root is the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub(crate) nodes: Vec<Node>,
}

impl Tree {
    fn leaf_dist(&self, x: &[f64]) -> &[f64] {
        let mut idx = self.nodes.len() - 1;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { dist } => return dist,
                Node::Split { feature, threshold, left, right } => {
                    idx = if x[*feature] <= *threshold { *left as usize } else { *right as usize };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub(crate) trees: Vec<Tree>,
    n_classes: usize,
    config: ForestConfig,
}

impl Forest {
    pub(crate) fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.leaf_dist(x)) {
                *a += p;
            }
        }
        for a in acc.iter_mut() {
            *a /= self.trees.len() as f64;
        }
        acc
    }

    pub(crate) fn write(&self, out: &mut String) {
        let c = &self.config;
        out.push_str(&format!(
            "config\ttrees={} max_depth={} min_leaf={} split={} bootstrap={}\n",
            c.trees,
            c.max_depth,
            c.min_leaf,
            c.split_features.as_str(),
            c.bootstrap
        ));
        out.push_str(&format!("trees\t{}\n", self.trees.len()));
        for (idx, tree) in self.trees.iter().enumerate() {
            out.push_str(&format!("tree\t{idx}\t{}\n", tree.nodes.len()));
            for node in &tree.nodes {
                match node {
                    Node::Leaf { dist } => {
                        let values: Vec<String> = dist.iter().map(|v| format!("{v}")).collect();
                        out.push_str(&format!("leaf\t{}\n", values.join(" ")));
                    }
                    Node::Split { feature, threshold, left, right } => {
                        out.push_str(&format!("split\t{feature}\t{threshold}\t{left}\t{right}\n"));
                    }
                }
            }
        }
    }

    pub(crate) fn read(lines: &[&str], n_classes: usize, offset: usize) -> Result<Forest, ModelError> {
        let perr = |line: usize, m: &str| ModelError::Parse { line: line + offset, message: m.to_string() };
        let mut trees = Vec::new();
        let mut current: Option<Tree> = None;
        let mut config = ForestConfig::default();
        for (idx, line) in lines.iter().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["config", kv] => {
                    config = parse_forest_config(kv).ok_or_else(|| perr(idx, "bad config"))?;
                }
                ["trees", _] => {}
                ["tree", _, _] => {
                    if let Some(t) = current.take() {
                        trees.push(t);
                    }
                    current = Some(Tree { nodes: Vec::new() });
                }
                ["leaf", values] => {
                    let dist: Result<Vec<f64>, _> = values.split(' ').map(|v| v.parse()).collect();
                    let dist = dist.map_err(|_| perr(idx, "bad leaf distribution"))?;
                    current.as_mut().ok_or_else(|| perr(idx, "leaf outside tree"))?.nodes.push(Node::Leaf { dist });
                }
                ["split", feature, threshold, left, right] => {
                    let node = Node::Split {
                        feature: feature.parse().map_err(|_| perr(idx, "bad feature"))?,
                        threshold: threshold.parse().map_err(|_| perr(idx, "bad threshold"))?,
                        left: left.parse().map_err(|_| perr(idx, "bad left"))?,
                        right: right.parse().map_err(|_| perr(idx, "bad right"))?,
                    };
                    current.as_mut().ok_or_else(|| perr(idx, "split outside tree"))?.nodes.push(node);
                }
                _ => return Err(perr(idx, "unknown record")),
            }
        }
        if let Some(t) = current.take() {
            trees.push(t);
        }
        if trees.is_empty() {
            return Err(perr(0, "no trees"));
        }
        Ok(Forest { trees, n_classes, config })
    }
}

fn parse_forest_config(kv: &str) -> Option<ForestConfig> {
    let mut config = ForestConfig::default();
    for pair in kv.split(' ') {
        let (key, value) = pair.split_once('=')?;
        match key {
            "trees" => config.trees = value.parse().ok()?,
            "max_depth" => config.max_depth = value.parse().ok()?,
            "min_leaf" => config.min_leaf = value.parse().ok()?,
            "split" => config.split_features = SplitFeatures::parse(value)?,
            "bootstrap" => config.bootstrap = value.parse().ok()?,
            _ => return None,
        }
    }
    Some(config)
}

/// Validated training problem shared by the serial and parallel drivers.
#[derive(Debug, Clone)]
pub struct ForestProblem {
    pub classes: Vec<String>,
    pub y_indices: Vec<usize>,
}

pub fn prepare_forest(x: &Matrix, y: &[&str], config: &ForestConfig) -> Result<ForestProblem, ModelError> {
    validate_training_input(x, y)?;
    if config.trees == 0 {
        return Err(ModelError::ShapeMismatch("tree count must be >= 1".to_string()));
    }
    let classes = class_list(y)?;
    let y_indices = labels_to_indices(y, &classes)?;
    Ok(ForestProblem { classes, y_indices })
}

/// Train tree `tree_index` of the forest. Pure function of its arguments:
/// the RNG stream is derived from `(seed, tree_index)`, never from any
/// global state, which is what makes parallel training reproducible.
pub fn train_single_tree(
    x: &Matrix,
    problem: &ForestProblem,
    config: &ForestConfig,
    seed: u64,
    tree_index: usize,
) -> Tree {
    let mut rng = rng::stream(seed, &[tag::TREE, tree_index as u64]);
    let n = x.rows();
    let indices: Vec<usize> = if config.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut builder = TreeBuilder {
        x,
        y: &problem.y_indices,
        n_classes: problem.classes.len(),
        config,
        rng,
        nodes: Vec::new(),
    };
    builder.build(indices, 0);
    Tree { nodes: builder.nodes }
}

pub fn assemble_forest(
    problem: &ForestProblem,
    feature_dim: usize,
    config: &ForestConfig,
    seed: u64,
    trees: Vec<Tree>,
) -> TrainedModel {
    TrainedModel {
        kind: ClassifierKind::Forest,
        classes: problem.classes.clone(),
        feature_dim,
        seed,
        params: Params::Forest(Forest { trees, n_classes: problem.classes.len(), config: *config }),
    }
}

/// Serial training; the parallel driver in the CLI crate produces the
/// identical forest by calling [`train_single_tree`] per index.
pub fn train_random_forest(
    x: &Matrix,
    y: &[&str],
    config: &ForestConfig,
    seed: u64,
) -> Result<TrainedModel, ModelError> {
    let problem = prepare_forest(x, y, config)?;
    let trees: Vec<Tree> =
        (0..config.trees).map(|t| train_single_tree(x, &problem, config, seed, t)).collect();
    Ok(assemble_forest(&problem, x.cols(), config, seed, trees))
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    config: &'a ForestConfig,
    rng: rng::Xoshiro256PlusPlus,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn build(&mut self, indices: Vec<usize>, depth: usize) -> u32 {
        let dist = self.distribution(&indices);
        let impurity = gini(&dist);
        let depth_capped = self.config.max_depth > 0 && depth >= self.config.max_depth;
        if depth_capped || impurity == 0.0 || indices.len() < 2 * self.config.min_leaf.max(1) {
            return self.push_leaf(dist);
        }
        match self.best_split(&indices, impurity) {
            Some((feature, threshold)) => {
                let (left, right): (Vec<usize>, Vec<usize>) =
                    indices.iter().partition(|&&i| self.x.get(i, feature) <= threshold);
                let left_id = self.build(left, depth + 1);
                let right_id = self.build(right, depth + 1);
                self.nodes.push(Node::Split { feature, threshold, left: left_id, right: right_id });
                (self.nodes.len() - 1) as u32
            }
            None => self.push_leaf(dist),
        }
    }

    fn push_leaf(&mut self, dist: Vec<f64>) -> u32 {
        self.nodes.push(Node::Leaf { dist });
        (self.nodes.len() - 1) as u32
    }

    fn distribution(&self, indices: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.n_classes];
        for &i in indices {
            counts[self.y[i]] += 1.0;
        }
        for c in counts.iter_mut() {
            *c /= indices.len() as f64;
        }
        counts
    }

    /// Exhaustive scan over the sampled feature subset. Candidate features
    /// are visited in ascending index order and thresholds in ascending
    /// value order with a strictly-greater acceptance rule, so equal gains
    /// resolve to the lowest feature index, then the lowest threshold.
    fn best_split(&mut self, indices: &[usize], parent_impurity: f64) -> Option<(usize, f64)> {
        let d = self.x.cols();
        let m = self.config.split_features.count(d);
        let mut features: Vec<usize> =
            sample_without_replacement(&mut self.rng, d, m.min(d)).into_iter().collect();
        features.sort_unstable();

        let n = indices.len() as f64;
        let min_leaf = self.config.min_leaf.max(1);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(indices.len());
        for &feature in &features {
            pairs.clear();
            pairs.extend(indices.iter().map(|&i| (self.x.get(i, feature), self.y[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_counts = vec![0u64; self.n_classes];
            let mut right_counts = vec![0u64; self.n_classes];
            for &(_, class) in pairs.iter() {
                right_counts[class] += 1;
            }
            let mut left_n = 0u64;
            let total = pairs.len() as u64;
            for k in 0..pairs.len() - 1 {
                let (value, class) = pairs[k];
                left_counts[class] += 1;
                right_counts[class] -= 1;
                left_n += 1;
                let next_value = pairs[k + 1].0;
                if next_value == value {
                    continue;
                }
                if (left_n as usize) < min_leaf || ((total - left_n) as usize) < min_leaf {
                    continue;
                }
                let threshold = (value + next_value) / 2.0;
                // Adjacent floats can collapse the midpoint onto the upper
                // value; that partition would differ from the scan.
                if threshold >= next_value {
                    continue;
                }
                let gl = gini_counts(&left_counts, left_n);
                let gr = gini_counts(&right_counts, total - left_n);
                let gain = parent_impurity
                    - (left_n as f64 / n) * gl
                    - ((total - left_n) as f64 / n) * gr;
                if gain > 1e-12 && best.map_or(true, |(bg, _, _)| gain > bg) {
                    best = Some((gain, feature, threshold));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }
}

fn gini(dist: &[f64]) -> f64 {
    1.0 - dist.iter().map(|p| p * p).sum::<f64>()
}

fn gini_counts(counts: &[u64], n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n) * (c as f64 / n)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::argmax;

    fn xor_dataset(n: usize, margin: f64, seed: u64) -> (Matrix, Vec<&'static str>) {
        let mut rng = rng::stream(seed, &[tag::TREE, 999]);
        let mut data = Vec::with_capacity(n * 2);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let sx: f64 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let sy: f64 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let x = sx * (margin + rng.gen::<f64>() * (1.0 - margin));
            let y = sy * (margin + rng.gen::<f64>() * (1.0 - margin));
            data.push(x);
            data.push(y);
            labels.push(if (x > 0.0) != (y > 0.0) { "one" } else { "zero" });
        }
        (Matrix::from_vec(n, 2, data), labels)
    }

    #[test]
    fn single_class_training_set_predicts_it_everywhere() {
        let x = Matrix::from_vec(3, 2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let y = ["OFF", "OFF", "OFF"];
        let model = train_random_forest(&x, &y, &ForestConfig { trees: 5, ..Default::default() }, 1).unwrap();
        for probe in [[0.0, 0.0], [100.0, -3.0]] {
            assert_eq!(model.predict_proba(&probe).unwrap(), vec![1.0]);
        }
    }

    #[test]
    fn xor_training_accuracy() {
        let (x, y) = xor_dataset(200, 0.2, 7);
        let config = ForestConfig { trees: 50, ..Default::default() };
        let model = train_random_forest(&x, &y, &config, 42).unwrap();
        let correct = (0..x.rows())
            .filter(|&r| model.predict(x.row(r)).unwrap() == y[r])
            .count();
        assert!(correct as f64 / x.rows() as f64 >= 0.95, "accuracy {correct}/200");
    }

    #[test]
    fn forest_is_deterministic() {
        let (x, y) = xor_dataset(60, 0.2, 3);
        let config = ForestConfig { trees: 11, ..Default::default() };
        let a = train_random_forest(&x, &y, &config, 9).unwrap();
        let b = train_random_forest(&x, &y, &config, 9).unwrap();
        assert_eq!(a.serialize(), b.serialize());
    }

    #[test]
    fn training_rejects_bad_input() {
        let x = Matrix::from_vec(1, 2, vec![0.0, 1.0]);
        assert!(matches!(
            train_random_forest(&x, &["a"], &ForestConfig::default(), 1).unwrap_err(),
            ModelError::TooFewSamples(1)
        ));
        let x = Matrix::from_vec(2, 1, vec![f64::NAN, 1.0]);
        assert!(matches!(
            train_random_forest(&x, &["a", "b"], &ForestConfig::default(), 1).unwrap_err(),
            ModelError::NonFiniteFeature { row: 0, col: 0 }
        ));
    }

    #[test]
    fn probability_rows_are_simplex_and_argmax_consistent() {
        let (x, y) = xor_dataset(80, 0.1, 5);
        let config = ForestConfig { trees: 20, ..Default::default() };
        let model = train_random_forest(&x, &y, &config, 2).unwrap();
        let mut rng = rng::stream(1, &[tag::TREE, 1234]);
        for _ in 0..200 {
            let probe = [rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0];
            let proba = model.predict_proba(&probe).unwrap();
            assert!(proba.iter().all(|&p| p >= 0.0));
            assert!((proba.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert_eq!(model.predict(&probe).unwrap(), model.classes[argmax(&proba)]);
        }
    }

    #[test]
    fn training_accuracy_not_below_majority_baseline() {
        for seed in [1u64, 2, 3] {
            let mut rng = rng::stream(seed, &[tag::TREE, 555]);
            let n = 40;
            let mut data = Vec::new();
            let mut labels = Vec::new();
            for _ in 0..n {
                data.push(rng.gen::<f64>());
                data.push(rng.gen::<f64>());
                labels.push(if rng.gen::<f64>() < 0.7 { "maj" } else { "min" });
            }
            let x = Matrix::from_vec(n, 2, data);
            let y: Vec<&str> = labels.clone();
            let model =
                train_random_forest(&x, &y, &ForestConfig { trees: 30, ..Default::default() }, seed).unwrap();
            let correct =
                (0..n).filter(|&r| model.predict(x.row(r)).unwrap() == y[r]).count() as f64 / n as f64;
            let majority = labels.iter().filter(|&&l| l == "maj").count().max(
                labels.iter().filter(|&&l| l == "min").count(),
            ) as f64 / n as f64;
            assert!(correct >= majority, "seed {seed}: {correct} < {majority}");
        }
    }

    #[test]
    fn forest_serialization_round_trip() {
        let (x, y) = xor_dataset(40, 0.2, 8);
        let config = ForestConfig { trees: 3, ..Default::default() };
        let model = train_random_forest(&x, &y, &config, 4).unwrap();
        let text = model.serialize();
        let back = TrainedModel::parse(&text).unwrap();
        assert_eq!(text, back.serialize());
        assert_eq!(model, back);
    }

    #[test]
    fn stub_tree_distribution_passes_through() {
        let forest = Forest {
            trees: vec![Tree { nodes: vec![Node::Leaf { dist: vec![0.25, 0.75] }] }],
            n_classes: 2,
            config: ForestConfig::default(),
        };
        assert_eq!(forest.predict_proba(&[1.0, 2.0, 3.0]), vec![0.25, 0.75]);
    }

    #[test]
    fn split_features_sqrt_is_floor() {
        assert_eq!(SplitFeatures::Sqrt.count(1), 1);
        assert_eq!(SplitFeatures::Sqrt.count(4), 2);
        assert_eq!(SplitFeatures::Sqrt.count(8), 2);
        assert_eq!(SplitFeatures::Sqrt.count(9), 3);
        assert_eq!(SplitFeatures::Sqrt.count(100), 10);
    }
}
