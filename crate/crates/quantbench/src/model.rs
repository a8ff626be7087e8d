//! Binary logistic regression trained by full-batch gradient descent.
//!
//! The trainer is precision-aware: an `F64` matrix is fitted entirely in
//! 64-bit arithmetic, an `F32` matrix entirely in 32-bit arithmetic, and an
//! `I32` matrix keeps its 4-byte storage with each element widened to `f32`
//! inside the dot products. Weights start at zero, so training is fully
//! deterministic and the measured fit time reflects the input bit depth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Buffer, LabelVector, Matrix, Precision};

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LRConfig {
    /// L2 penalty on the weights (bias excluded), scaled by 1/(2 n_samples).
    pub l2_strength: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stopping threshold on the gradient infinity-norm.
    pub tolerance: f64,
    /// Reserved; zero-initialized training does not consume randomness.
    pub seed: u64,
}

impl Default for LRConfig {
    fn default() -> Self {
        LRConfig {
            l2_strength: 1.0,
            learning_rate: 0.1,
            max_iters: 1000,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

impl LRConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParam(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParam("max_iters must be >= 1".into()));
        }
        if self.l2_strength < 0.0 || self.tolerance < 0.0 {
            return Err(Error::InvalidParam(
                "l2_strength and tolerance must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// A trained classifier: weights, bias and the convergence record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LRModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub compute_precision: Precision,
    pub iterations_run: usize,
    pub final_loss: f64,
    pub converged: bool,
    pub config: LRConfig,
}

/// Numerically stable logistic function; no overflow for any finite input.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Arithmetic used by the training kernel, monomorphized per precision.
trait Scalar:
    Copy
    + PartialOrd
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
{
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(v: f64) -> Self;
    fn exp(self) -> Self;
    fn ln_1p(self) -> Self;
    fn abs(self) -> Self;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn from_f64(v: f64) -> Self {
        v
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln_1p(self) -> Self {
        f64::ln_1p(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn exp(self) -> Self {
        f32::exp(self)
    }
    fn ln_1p(self) -> Self {
        f32::ln_1p(self)
    }
    fn abs(self) -> Self {
        f32::abs(self)
    }
}

/// Element widening from the storage type to the compute type.
trait Widen<F>: Copy {
    fn widen(self) -> F;
}

impl Widen<f64> for f64 {
    fn widen(self) -> f64 {
        self
    }
}

impl Widen<f32> for f32 {
    fn widen(self) -> f32 {
        self
    }
}

impl Widen<f32> for i32 {
    fn widen(self) -> f32 {
        self as f32
    }
}

fn sigmoid_t<F: Scalar>(z: F) -> F {
    if z >= F::ZERO {
        F::ONE / (F::ONE + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::ONE + e)
    }
}

/// Stable per-sample cross entropy: max(z, 0) - y z + ln(1 + e^{-|z|}).
fn cross_entropy_t<F: Scalar>(z: F, y: F) -> F {
    let pos = if z > F::ZERO { z } else { F::ZERO };
    pos - y * z + (-z.abs()).exp().ln_1p()
}

struct TrainOutcome<F> {
    weights: Vec<F>,
    bias: F,
    iterations: usize,
    final_loss: F,
    converged: bool,
}

fn train<F: Scalar, S: Widen<F>>(
    data: &[S],
    rows: usize,
    cols: usize,
    labels: &[u8],
    cfg: &LRConfig,
) -> TrainOutcome<F> {
    let n = F::from_f64(rows as f64);
    let lr = F::from_f64(cfg.learning_rate);
    let l2 = F::from_f64(cfg.l2_strength);
    let tol = F::from_f64(cfg.tolerance);

    let mut weights = vec![F::ZERO; cols];
    let mut bias = F::ZERO;
    let mut grad = vec![F::ZERO; cols];
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..cfg.max_iters {
        grad.iter_mut().for_each(|g| *g = F::ZERO);
        let mut grad_b = F::ZERO;
        for (r, &label) in labels.iter().enumerate() {
            let row = &data[r * cols..(r + 1) * cols];
            let mut z = bias;
            for (w, &v) in weights.iter().zip(row) {
                z = z + *w * v.widen();
            }
            let y = if label == 1 { F::ONE } else { F::ZERO };
            let d = sigmoid_t(z) - y;
            for (g, &v) in grad.iter_mut().zip(row) {
                *g += d * v.widen();
            }
            grad_b += d;
        }
        let mut norm = (grad_b / n).abs();
        for (g, w) in grad.iter_mut().zip(&weights) {
            *g = *g / n + l2 * *w / n;
            let a = g.abs();
            if a > norm {
                norm = a;
            }
        }
        if norm <= tol {
            converged = true;
            break;
        }
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w = *w - lr * *g;
        }
        bias = bias - lr * (grad_b / n);
        iterations += 1;
    }

    // Regularized mean cross-entropy at the exit point.
    let mut loss = F::ZERO;
    for (r, &label) in labels.iter().enumerate() {
        let row = &data[r * cols..(r + 1) * cols];
        let mut z = bias;
        for (w, &v) in weights.iter().zip(row) {
            z = z + *w * v.widen();
        }
        let y = if label == 1 { F::ONE } else { F::ZERO };
        loss += cross_entropy_t(z, y);
    }
    let mut penalty = F::ZERO;
    for w in &weights {
        penalty += *w * *w;
    }
    let half = F::from_f64(0.5);
    loss = loss / n + half * l2 * penalty / n;

    TrainOutcome {
        weights,
        bias,
        iterations,
        final_loss: loss,
        converged,
    }
}

/// Fit by full-batch gradient descent from zero initialization.
///
/// Stops when the gradient infinity-norm drops to `tolerance` or after
/// `max_iters` updates. Identical inputs give identical models.
pub fn fit(x: &Matrix, y: &LabelVector, cfg: &LRConfig) -> Result<LRModel> {
    cfg.validate()?;
    if x.rows() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::InsufficientData("fit on empty matrix".into()));
    }
    if let Buffer::F64(v) = x.buffer() {
        if v.iter().any(|e| e.is_nan()) {
            return Err(Error::Data("NaN in training matrix".into()));
        }
    }
    if let Buffer::F32(v) = x.buffer() {
        if v.iter().any(|e| e.is_nan()) {
            return Err(Error::Data("NaN in training matrix".into()));
        }
    }

    let (rows, cols) = (x.rows(), x.cols());
    let labels = y.as_slice();
    let (out, precision) = match x.buffer() {
        Buffer::F64(v) => (train::<f64, f64>(v, rows, cols, labels, cfg), Precision::F64),
        Buffer::F32(v) => (
            widen_outcome(train::<f32, f32>(v, rows, cols, labels, cfg)),
            Precision::F32,
        ),
        Buffer::I32(v) => (
            widen_outcome(train::<f32, i32>(v, rows, cols, labels, cfg)),
            Precision::F32,
        ),
    };

    Ok(LRModel {
        weights: out.weights,
        bias: out.bias,
        compute_precision: precision,
        iterations_run: out.iterations,
        final_loss: out.final_loss,
        converged: out.converged,
        config: cfg.clone(),
    })
}

fn widen_outcome(o: TrainOutcome<f32>) -> TrainOutcome<f64> {
    TrainOutcome {
        weights: o.weights.iter().map(|&w| f64::from(w)).collect(),
        bias: f64::from(o.bias),
        iterations: o.iterations,
        final_loss: f64::from(o.final_loss),
        converged: o.converged,
    }
}

/// Per-row probability of class 1, computed in the model's precision.
pub fn predict_proba(model: &LRModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.cols() != model.weights.len() {
        return Err(Error::Shape(format!(
            "model has {} features, matrix has {} columns",
            model.weights.len(),
            x.cols()
        )));
    }
    let mut out = Vec::with_capacity(x.rows());
    match model.compute_precision {
        Precision::F32 => {
            // Weights trained in f32 widen exactly to f64, so narrowing
            // them back is lossless.
            let w32: Vec<f32> = model.weights.iter().map(|&w| w as f32).collect();
            let b32 = model.bias as f32;
            for r in 0..x.rows() {
                let mut z = b32;
                for (c, w) in w32.iter().enumerate() {
                    z += w * x.get(r, c) as f32;
                }
                out.push(f64::from(sigmoid_t(z)));
            }
        }
        _ => {
            for r in 0..x.rows() {
                let mut z = model.bias;
                for (c, w) in model.weights.iter().enumerate() {
                    z += w * x.get(r, c);
                }
                out.push(sigmoid(z));
            }
        }
    }
    Ok(out)
}

/// Threshold probabilities at 0.5 (>= 0.5 maps to class 1).
pub fn predict(model: &LRModel, x: &Matrix) -> Result<LabelVector> {
    let proba = predict_proba(model, x)?;
    LabelVector::new(proba.iter().map(|&p| u8::from(p >= 0.5)).collect())
}

/// Fraction of exact label matches.
pub fn accuracy(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} labels",
            pred.len(),
            truth.len()
        )));
    }
    let hits = pred
        .iter()
        .zip(truth.iter())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Regularized loss and its analytic gradient at an arbitrary point, in f64.
///
/// Diagnostic surface used by the finite-difference checks; the training
/// loop has its own accumulation path.
pub fn loss_and_grad(
    x: &Matrix,
    y: &LabelVector,
    weights: &[f64],
    bias: f64,
    l2_strength: f64,
) -> Result<(f64, Vec<f64>, f64)> {
    if x.rows() != y.len() || x.cols() != weights.len() {
        return Err(Error::Shape("loss_and_grad shape mismatch".into()));
    }
    let n = x.rows() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (r, label) in y.iter().enumerate() {
        let mut z = bias;
        for (c, w) in weights.iter().enumerate() {
            z += w * x.get(r, c);
        }
        let yf = f64::from(label);
        loss += z.max(0.0) - yf * z + (-z.abs()).exp().ln_1p();
        let d = sigmoid(z) - yf;
        for (c, g) in grad.iter_mut().enumerate() {
            *g += d * x.get(r, c);
        }
        grad_b += d;
    }
    loss /= n;
    loss += l2_strength / (2.0 * n) * weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in grad.iter_mut().zip(weights) {
        *g = *g / n + l2_strength * w / n;
    }
    Ok((loss, grad, grad_b / n))
}
