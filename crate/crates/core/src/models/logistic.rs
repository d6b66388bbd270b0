//! Multinomial logistic regression: zero-initialized weights, full-batch
//! gradient descent with a backtracking line search (so the training loss
//! decreases monotonically until tolerance), small L2 penalty on the
//! weights, bias unregularized. The deterministic calibrated baseline of
//! the ensemble.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::math;

use super::{
    class_list, labels_to_indices, validate_training_input, ClassifierKind, ModelError, Params,
    TrainedModel,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticConfig {
    pub l2: f64,
    pub max_epochs: usize,
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig { l2: 1e-4, max_epochs: 200, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticParams {
    /// Class-by-feature weight matrix.
    weights: Matrix,
    bias: Vec<f64>,
    config: LogisticConfig,
}

impl LogisticParams {
    pub(crate) fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let c = self.bias.len();
        let mut z = vec![0.0; c];
        for k in 0..c {
            z[k] = crate::linalg::dot(self.weights.row(k), x) + self.bias[k];
        }
        softmax(&mut z);
        z
    }

    pub(crate) fn write(&self, out: &mut String) {
        let c = &self.config;
        out.push_str(&format!("config\tl2={} max_epochs={} tol={}\n", c.l2, c.max_epochs, c.tol));
        for k in 0..self.bias.len() {
            let row: Vec<String> = self.weights.row(k).iter().map(|v| format!("{v}")).collect();
            out.push_str(&format!("weights\t{k}\t{}\t{}\n", self.bias[k], row.join(" ")));
        }
    }

    pub(crate) fn read(lines: &[&str], offset: usize) -> Result<LogisticParams, ModelError> {
        let perr = |line: usize, m: &str| ModelError::Parse { line: line + offset, message: m.to_string() };
        let mut config = LogisticConfig::default();
        let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
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
                            "l2" => config.l2 = value.parse().map_err(|_| perr(idx, "bad l2"))?,
                            "max_epochs" => {
                                config.max_epochs = value.parse().map_err(|_| perr(idx, "bad max_epochs"))?
                            }
                            "tol" => config.tol = value.parse().map_err(|_| perr(idx, "bad tol"))?,
                            _ => return Err(perr(idx, "unknown config key")),
                        }
                    }
                }
                ["weights", _, bias, values] => {
                    let w: Result<Vec<f64>, _> = values.split(' ').map(|v| v.parse()).collect();
                    rows.push((
                        bias.parse().map_err(|_| perr(idx, "bad bias"))?,
                        w.map_err(|_| perr(idx, "bad weights"))?,
                    ));
                }
                _ => return Err(perr(idx, "unknown record")),
            }
        }
        if rows.is_empty() {
            return Err(perr(0, "no weights"));
        }
        let d = rows[0].1.len();
        let mut weights = Matrix::zeros(rows.len(), d);
        let mut bias = Vec::with_capacity(rows.len());
        for (k, (b, w)) in rows.into_iter().enumerate() {
            if w.len() != d {
                return Err(perr(0, "inconsistent weight rows"));
            }
            weights.row_mut(k).copy_from_slice(&w);
            bias.push(b);
        }
        Ok(LogisticParams { weights, bias, config })
    }
}

fn softmax(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = math::exp(*v - max);
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Mean multinomial log-loss plus `l2/2 ||W||^2` (bias excluded).
pub fn log_loss(weights: &Matrix, bias: &[f64], x: &Matrix, y: &[usize], l2: f64) -> f64 {
    let n = x.rows();
    let c = bias.len();
    let mut loss = 0.0;
    let mut z = vec![0.0; c];
    for r in 0..n {
        for k in 0..c {
            z[k] = crate::linalg::dot(weights.row(k), x.row(r)) + bias[k];
        }
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = max + math::ln(z.iter().map(|&v| math::exp(v - max)).sum::<f64>());
        loss += log_sum - z[y[r]];
    }
    loss / n as f64 + l2 / 2.0 * weights.data().iter().map(|w| w * w).sum::<f64>()
}

/// Analytic gradient of [`log_loss`].
pub fn log_loss_gradient(
    weights: &Matrix,
    bias: &[f64],
    x: &Matrix,
    y: &[usize],
    l2: f64,
) -> (Matrix, Vec<f64>) {
    let n = x.rows();
    let c = bias.len();
    let d = x.cols();
    let mut gw = Matrix::zeros(c, d);
    let mut gb = vec![0.0; c];
    let mut z = vec![0.0; c];
    for r in 0..n {
        for k in 0..c {
            z[k] = crate::linalg::dot(weights.row(k), x.row(r)) + bias[k];
        }
        softmax(&mut z);
        z[y[r]] -= 1.0;
        for k in 0..c {
            let coeff = z[k] / n as f64;
            gb[k] += coeff;
            for (g, xv) in gw.row_mut(k).iter_mut().zip(x.row(r)) {
                *g += coeff * xv;
            }
        }
    }
    for k in 0..c {
        for (g, w) in gw.row_mut(k).iter_mut().zip(weights.row(k)) {
            *g += l2 * w;
        }
    }
    (gw, gb)
}

/// Fit with monotone line-searched gradient descent. Returns the model
/// and the loss recorded at each accepted step (index 0 is the
/// zero-weight loss).
pub(crate) fn fit(
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    config: &LogisticConfig,
) -> (LogisticParams, Vec<f64>) {
    let d = x.cols();
    let mut weights = Matrix::zeros(n_classes, d);
    let mut bias = vec![0.0; n_classes];
    let mut losses = vec![log_loss(&weights, &bias, x, y, config.l2)];
    let mut step = 1.0f64;
    for _ in 0..config.max_epochs {
        let (gw, gb) = log_loss_gradient(&weights, &bias, x, y, config.l2);
        let grad_sq: f64 =
            gw.data().iter().map(|g| g * g).sum::<f64>() + gb.iter().map(|g| g * g).sum::<f64>();
        if grad_sq == 0.0 {
            break;
        }
        let current = *losses.last().expect("non-empty");
        step = (step * 2.0).min(1e6);
        let mut accepted = false;
        while step >= 1e-18 {
            let mut wt = weights.clone();
            for (w, g) in wt.data_mut().iter_mut().zip(gw.data()) {
                *w -= step * g;
            }
            let bt: Vec<f64> = bias.iter().zip(&gb).map(|(b, g)| b - step * g).collect();
            let candidate = log_loss(&wt, &bt, x, y, config.l2);
            if candidate <= current - 1e-4 * step * grad_sq {
                weights = wt;
                bias = bt;
                losses.push(candidate);
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            break;
        }
        let last = losses.len() - 1;
        if losses[last - 1] - losses[last] < config.tol {
            break;
        }
    }
    (LogisticParams { weights, bias, config: *config }, losses)
}

pub fn train_logistic(
    x: &Matrix,
    y: &[&str],
    config: &LogisticConfig,
    seed: u64,
) -> Result<TrainedModel, ModelError> {
    validate_training_input(x, y)?;
    let classes = class_list(y)?;
    if classes.len() < 2 {
        return Err(ModelError::SingleClass(classes[0].clone()));
    }
    let y_idx = labels_to_indices(y, &classes)?;
    let (params, _) = fit(x, &y_idx, classes.len(), config);
    Ok(TrainedModel {
        kind: ClassifierKind::Logistic,
        classes,
        feature_dim: x.cols(),
        seed,
        params: Params::Logistic(params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, tag};
    use rand::Rng;

    fn separable() -> (Matrix, Vec<usize>) {
        let mut data = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let jitter = i as f64 * 0.03;
            data.extend([-1.0 - jitter, 0.5 - jitter]);
            y.push(0);
            data.extend([1.0 + jitter, -0.5 + jitter]);
            y.push(1);
        }
        (Matrix::from_vec(20, 2, data), y)
    }

    #[test]
    fn zero_epochs_gives_uniform_probabilities() {
        let (x, y) = separable();
        let labels: Vec<&str> = y.iter().map(|&c| if c == 0 { "a" } else { "b" }).collect();
        let config = LogisticConfig { max_epochs: 0, ..Default::default() };
        let model = train_logistic(&x, &labels, &config, 1).unwrap();
        let p = model.predict_proba(&[0.3, -0.4]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn loss_strictly_decreases_until_tolerance() {
        let (x, y) = separable();
        let config = LogisticConfig { l2: 1e-6, max_epochs: 100, tol: 1e-10 };
        let (_, losses) = fit(&x, &y, 2, &config);
        assert!(losses.len() > 2);
        for w in losses.windows(2) {
            assert!(w[1] < w[0], "loss increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng::stream(31, &[tag::TREE, 4]);
        let n = 15;
        let d = 3;
        let c = 3;
        let mut data = Vec::with_capacity(n * d);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            for _ in 0..d {
                data.push(rng.gen::<f64>() * 2.0 - 1.0);
            }
            y.push(i % c);
        }
        let x = Matrix::from_vec(n, d, data);
        let l2 = 0.05;
        let mut weights = Matrix::zeros(c, d);
        for r in 0..c {
            for col in 0..d {
                weights.set(r, col, rng.gen::<f64>() - 0.5);
            }
        }
        let bias: Vec<f64> = (0..c).map(|_| rng.gen::<f64>() - 0.5).collect();
        let (gw, gb) = log_loss_gradient(&weights, &bias, &x, &y, l2);
        let h = 1e-5;
        let mut max_rel = 0.0f64;
        for r in 0..c {
            for col in 0..d {
                let mut plus = weights.clone();
                plus.set(r, col, plus.get(r, col) + h);
                let mut minus = weights.clone();
                minus.set(r, col, minus.get(r, col) - h);
                let fd = (log_loss(&plus, &bias, &x, &y, l2) - log_loss(&minus, &bias, &x, &y, l2))
                    / (2.0 * h);
                let g = gw.get(r, col);
                max_rel = max_rel.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-3));
            }
        }
        for k in 0..c {
            let mut bp = bias.clone();
            bp[k] += h;
            let mut bm = bias.clone();
            bm[k] -= h;
            let fd =
                (log_loss(&weights, &bp, &x, &y, l2) - log_loss(&weights, &bm, &x, &y, l2)) / (2.0 * h);
            max_rel = max_rel.max((gb[k] - fd).abs() / gb[k].abs().max(fd.abs()).max(1e-3));
        }
        assert!(max_rel <= 1e-6, "max relative error {max_rel}");
    }

    #[test]
    fn separable_data_classified_correctly() {
        let (x, y) = separable();
        let labels: Vec<&str> = y.iter().map(|&c| if c == 0 { "a" } else { "b" }).collect();
        let model = train_logistic(&x, &labels, &LogisticConfig::default(), 1).unwrap();
        for r in 0..x.rows() {
            assert_eq!(model.predict(x.row(r)).unwrap(), labels[r]);
        }
    }

    #[test]
    fn logistic_serialization_round_trip() {
        let (x, y) = separable();
        let labels: Vec<&str> = y.iter().map(|&c| if c == 0 { "a" } else { "b" }).collect();
        let model = train_logistic(&x, &labels, &LogisticConfig::default(), 1).unwrap();
        let back = TrainedModel::parse(&model.serialize()).unwrap();
        assert_eq!(model, back);
    }
}
