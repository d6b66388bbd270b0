//! Linear SVM trained by epoch-shuffled primal subgradient descent on the
//! L2-regularized hinge loss (Pegasos step schedule, unregularized bias),
//! with decision scores mapped to probabilities by a Platt sigmoid fitted
//! on out-of-fold scores. Multiclass problems run one-vs-rest with
//! renormalized probabilities.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::linalg::{dot, Matrix};
use crate::math;
use crate::rng::{self, tag};

use super::{
    class_list, labels_to_indices, validate_training_input, ClassifierKind, ModelError, Params,
    TrainedModel,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub calibration_folds: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { lambda: 1e-3, epochs: 50, calibration_folds: 5 }
    }
}

/// One binary machine: weights, bias, and the Platt sigmoid
/// `P(positive | s) = 1 / (1 + exp(a*s + b))`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BinaryMachine {
    w: Vec<f64>,
    b: f64,
    platt_a: f64,
    platt_b: f64,
}

impl BinaryMachine {
    fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }

    fn probability(&self, x: &[f64]) -> f64 {
        math::sigmoid(-(self.platt_a * self.decision(x) + self.platt_b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    /// One machine per class (one-vs-rest); binary problems carry a single
    /// machine whose positive class is the second class in order.
    machines: Vec<BinaryMachine>,
    config: SvmConfig,
}

impl SvmParams {
    pub(crate) fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        if self.machines.len() == 1 {
            let p = self.machines[0].probability(x);
            return vec![1.0 - p, p];
        }
        let mut probs: Vec<f64> = self.machines.iter().map(|m| m.probability(x)).collect();
        let sum: f64 = probs.iter().sum();
        if sum > 0.0 {
            for p in probs.iter_mut() {
                *p /= sum;
            }
        } else {
            let uniform = 1.0 / probs.len() as f64;
            probs.iter_mut().for_each(|p| *p = uniform);
        }
        probs
    }

    pub(crate) fn write(&self, out: &mut String) {
        let c = &self.config;
        out.push_str(&format!(
            "config\tlambda={} epochs={} folds={}\n",
            c.lambda, c.epochs, c.calibration_folds
        ));
        for (idx, m) in self.machines.iter().enumerate() {
            let weights: Vec<String> = m.w.iter().map(|v| format!("{v}")).collect();
            out.push_str(&format!(
                "machine\t{idx}\t{}\t{}\t{}\t{}\n",
                m.b,
                m.platt_a,
                m.platt_b,
                weights.join(" ")
            ));
        }
    }

    pub(crate) fn read(lines: &[&str], offset: usize) -> Result<SvmParams, ModelError> {
        let perr = |line: usize, m: &str| ModelError::Parse { line: line + offset, message: m.to_string() };
        let mut machines = Vec::new();
        let mut config = SvmConfig::default();
        for (idx, line) in lines.iter().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["config", kv] => {
                    for pair in kv.split(' ') {
                        let (key, value) = pair.split_once('=').ok_or_else(|| perr(idx, "bad config"))?;
                        match key {
                            "lambda" => config.lambda = value.parse().map_err(|_| perr(idx, "bad lambda"))?,
                            "epochs" => config.epochs = value.parse().map_err(|_| perr(idx, "bad epochs"))?,
                            "folds" => {
                                config.calibration_folds =
                                    value.parse().map_err(|_| perr(idx, "bad folds"))?
                            }
                            _ => return Err(perr(idx, "unknown config key")),
                        }
                    }
                }
                ["machine", _, b, a, pb, weights] => {
                    let w: Result<Vec<f64>, _> = weights.split(' ').map(|v| v.parse()).collect();
                    machines.push(BinaryMachine {
                        w: w.map_err(|_| perr(idx, "bad weights"))?,
                        b: b.parse().map_err(|_| perr(idx, "bad bias"))?,
                        platt_a: a.parse().map_err(|_| perr(idx, "bad platt a"))?,
                        platt_b: pb.parse().map_err(|_| perr(idx, "bad platt b"))?,
                    });
                }
                _ => return Err(perr(idx, "unknown record")),
            }
        }
        if machines.is_empty() {
            return Err(perr(0, "no machines"));
        }
        Ok(SvmParams { machines, config })
    }
}

/// Full hinge objective `lambda/2 (||w||^2 + b^2) + mean(max(0, 1 - y f(x)))`
/// with `y in {-1, +1}`. The bias is regularized like a weight (a constant
/// pseudo-feature), which keeps the Pegasos shrink step well-behaved.
pub fn hinge_objective(w: &[f64], b: f64, x: &Matrix, y: &[f64], lambda: f64) -> f64 {
    let mut loss = 0.0;
    for r in 0..x.rows() {
        loss += (1.0 - y[r] * (dot(w, x.row(r)) + b)).max(0.0);
    }
    lambda / 2.0 * (dot(w, w) + b * b) + loss / x.rows() as f64
}

/// Subgradient of [`hinge_objective`]. Away from the hinge kinks
/// (margins exactly 1) this is the gradient.
pub fn hinge_subgradient(w: &[f64], b: f64, x: &Matrix, y: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let n = x.rows() as f64;
    let mut gw: Vec<f64> = w.iter().map(|v| lambda * v).collect();
    let mut gb = lambda * b;
    for r in 0..x.rows() {
        if y[r] * (dot(w, x.row(r)) + b) < 1.0 {
            for (g, v) in gw.iter_mut().zip(x.row(r)) {
                *g -= y[r] * v / n;
            }
            gb -= y[r] / n;
        }
    }
    (gw, gb)
}

/// Pegasos-schedule subgradient descent. `targets` are +-1.
fn train_binary(
    x: &Matrix,
    rows: &[usize],
    targets: &[f64],
    config: &SvmConfig,
    rng: &mut rng::Xoshiro256PlusPlus,
) -> (Vec<f64>, f64) {
    let d = x.cols();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut t = 0u64;
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for &k in &order {
            t += 1;
            let eta = 1.0 / (config.lambda * t as f64);
            let row = x.row(rows[k]);
            let y = targets[k];
            let margin = y * (dot(&w, row) + b);
            let shrink = 1.0 - eta * config.lambda;
            if margin < 1.0 {
                for (wv, xv) in w.iter_mut().zip(row) {
                    *wv = shrink * *wv + eta * y * xv;
                }
                b = shrink * b + eta * y;
            } else {
                for wv in w.iter_mut() {
                    *wv *= shrink;
                }
                b *= shrink;
            }
        }
    }
    (w, b)
}

/// Platt sigmoid fit on (score, is-positive) pairs: regularized targets,
/// Newton iterations with backtracking. Deterministic.
fn fit_platt(scores: &[f64], positives: &[bool]) -> (f64, f64) {
    let n_pos = positives.iter().filter(|&&p| p).count() as f64;
    let n_neg = positives.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = positives.iter().map(|&p| if p { hi } else { lo }).collect();

    let objective = |a: f64, b: f64| -> f64 {
        let mut obj = 0.0;
        for (s, t) in scores.iter().zip(&targets) {
            let f = a * s + b;
            // t*f + ln(1 + exp(-f)), written to stay stable at both tails.
            obj += if f >= 0.0 {
                t * f + math::ln_1p_exp(-f)
            } else {
                (t - 1.0) * f + math::ln_1p_exp(f)
            };
        }
        obj
    };

    let mut a = 0.0;
    let mut b = math::ln((n_neg + 1.0) / (n_pos + 1.0));
    let mut fval = objective(a, b);
    let sigma = 1e-12;
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21) = (sigma, sigma, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (s, t) in scores.iter().zip(&targets) {
            let f = a * s + b;
            let p = math::sigmoid(-f);
            let q = 1.0 - p;
            let d2 = p * q;
            h11 += s * s * d2;
            h22 += d2;
            h21 += s * d2;
            let d1 = t - p;
            g1 += s * d1;
            g2 += d1;
        }
        if math::abs(g1) < 1e-10 && math::abs(g2) < 1e-10 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        let mut improved = false;
        while step >= 1e-10 {
            let na = a + step * da;
            let nb = b + step * db;
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                improved = true;
                break;
            }
            step /= 2.0;
        }
        if !improved {
            break;
        }
    }
    (a, b)
}

/// One-vs-rest training with Platt calibration on out-of-fold decision
/// scores. Fold assignment, per-fold training, and the final full-data
/// training each use their own `(seed, class, fold)` derived stream, so
/// the result is independent of any execution interleaving.
pub fn train_linear_svm(
    x: &Matrix,
    y: &[&str],
    config: &SvmConfig,
    seed: u64,
) -> Result<TrainedModel, ModelError> {
    validate_training_input(x, y)?;
    let classes = class_list(y)?;
    if classes.len() < 2 {
        return Err(ModelError::SingleClass(classes[0].clone()));
    }
    let y_idx = labels_to_indices(y, &classes)?;
    let machine_classes: Vec<usize> =
        if classes.len() == 2 { vec![1] } else { (0..classes.len()).collect() };
    let all_rows: Vec<usize> = (0..x.rows()).collect();
    let mut machines = Vec::with_capacity(machine_classes.len());
    for &positive in &machine_classes {
        let targets: Vec<f64> =
            y_idx.iter().map(|&c| if c == positive { 1.0 } else { -1.0 }).collect();
        let (scores, score_targets) = out_of_fold_scores(x, &targets, config, seed, positive);
        let (platt_a, platt_b) = fit_platt(&scores, &score_targets);
        let mut rng = rng::stream(seed, &[tag::SVM_SHUFFLE, positive as u64, u64::MAX]);
        let (w, b) = train_binary(x, &all_rows, &targets, config, &mut rng);
        machines.push(BinaryMachine { w, b, platt_a, platt_b });
    }
    Ok(TrainedModel {
        kind: ClassifierKind::Svm,
        classes,
        feature_dim: x.cols(),
        seed,
        params: Params::Svm(SvmParams { machines, config: *config }),
    })
}

/// Held-out decision scores for calibration. Falls back to in-sample
/// scores when the data cannot support the fold count (a fold's training
/// part must see both classes).
fn out_of_fold_scores(
    x: &Matrix,
    targets: &[f64],
    config: &SvmConfig,
    seed: u64,
    positive: usize,
) -> (Vec<f64>, Vec<bool>) {
    let n = x.rows();
    let folds = config.calibration_folds.max(2);
    let mut assignment: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(seed, &[tag::SVM_FOLDS, positive as u64]);
    assignment.shuffle(&mut rng);
    let fold_of: Vec<usize> = {
        let mut f = vec![0; n];
        for (pos, &row) in assignment.iter().enumerate() {
            f[row] = pos % folds;
        }
        f
    };
    let usable = folds <= n
        && (0..folds).all(|fold| {
            let mut pos = false;
            let mut neg = false;
            for r in 0..n {
                if fold_of[r] != fold {
                    if targets[r] > 0.0 {
                        pos = true;
                    } else {
                        neg = true;
                    }
                }
            }
            pos && neg
        });

    let mut scores = Vec::with_capacity(n);
    let mut score_targets = Vec::with_capacity(n);
    if usable {
        for fold in 0..folds {
            let train_rows: Vec<usize> = (0..n).filter(|&r| fold_of[r] != fold).collect();
            let train_targets: Vec<f64> = train_rows.iter().map(|&r| targets[r]).collect();
            let mut fold_rng = rng::stream(seed, &[tag::SVM_SHUFFLE, positive as u64, fold as u64]);
            let (w, b) = train_binary(x, &train_rows, &train_targets, config, &mut fold_rng);
            for r in 0..n {
                if fold_of[r] == fold {
                    scores.push(dot(&w, x.row(r)) + b);
                    score_targets.push(targets[r] > 0.0);
                }
            }
        }
    } else {
        let rows: Vec<usize> = (0..n).collect();
        let mut rng = rng::stream(seed, &[tag::SVM_SHUFFLE, positive as u64, u64::MAX - 1]);
        let (w, b) = train_binary(x, &rows, targets, config, &mut rng);
        for r in 0..n {
            scores.push(dot(&w, x.row(r)) + b);
            score_targets.push(targets[r] > 0.0);
        }
    }
    (scores, score_targets)
}
