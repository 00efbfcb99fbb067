//! Fully connected layers, the softmax head and the two losses.

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::tensor::{glorot_uniform, Matrix, Rng, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub w: Matrix,
    pub b: Vector,
    pub activation: ActivationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseCache {
    pub x: Vec<f64>,
    pub pre: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub w: Matrix,
    pub b: Vector,
}

impl DenseGrads {
    pub fn zeros_like(p: &DenseParams) -> Self {
        DenseGrads {
            w: Matrix::zeros(p.w.rows(), p.w.cols()),
            b: Vector::zeros(p.b.len()),
        }
    }
}

impl DenseParams {
    pub fn init(rng: &mut Rng, input: usize, output: usize, activation: ActivationKind) -> Result<Self> {
        if input == 0 || output == 0 {
            return Err(Error::Config(format!(
                "dense dims must be positive (in {input}, out {output})"
            )));
        }
        Ok(DenseParams {
            w: glorot_uniform(rng, output, input),
            b: Vector::zeros(output),
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.b.len() != self.w.rows() {
            return Err(Error::dim(format!(
                "dense bias length {} for {} outputs",
                self.b.len(),
                self.w.rows()
            )));
        }
        self.w.ensure_finite()?;
        self.b.ensure_finite()
    }
}

/// `y = act(W x + b)`
pub fn dense_forward(params: &DenseParams, x: &Vector) -> Result<(Vector, DenseCache)> {
    if x.len() != params.input_dim() {
        return Err(Error::dim(format!(
            "dense layer expects {} inputs, got {}",
            params.input_dim(),
            x.len()
        )));
    }
    let (y, cache) = forward_slice(params, x.as_slice());
    Ok((Vector::from(y), cache))
}

pub(crate) fn forward_slice(params: &DenseParams, x: &[f64]) -> (Vec<f64>, DenseCache) {
    let mut pre = params.b.as_slice().to_vec();
    params.w.matvec_acc(x, &mut pre);
    let y = pre.iter().map(|&a| params.activation.value(a)).collect();
    (
        y,
        DenseCache {
            x: x.to_vec(),
            pre,
        },
    )
}

/// Returns `(dL/dW, dL/db, dL/dx)`.
pub fn dense_backward(
    params: &DenseParams,
    cache: &DenseCache,
    dl_dy: &Vector,
) -> Result<(DenseGrads, Vector)> {
    if dl_dy.len() != params.output_dim() || cache.pre.len() != params.output_dim() {
        return Err(Error::dim(format!(
            "dense backward: {} outputs, upstream {}, cache {}",
            params.output_dim(),
            dl_dy.len(),
            cache.pre.len()
        )));
    }
    if cache.x.len() != params.input_dim() {
        return Err(Error::dim(format!(
            "dense backward: cache input {} for {} inputs",
            cache.x.len(),
            params.input_dim()
        )));
    }
    let mut grads = DenseGrads::zeros_like(params);
    let dx = backward_into(params, cache, dl_dy.as_slice(), &mut grads);
    Ok((grads, Vector::from(dx)))
}

/// Accumulates parameter gradients into `grads`, returns `dL/dx`.
pub(crate) fn backward_into(
    params: &DenseParams,
    cache: &DenseCache,
    dl_dy: &[f64],
    grads: &mut DenseGrads,
) -> Vec<f64> {
    let da: Vec<f64> = dl_dy
        .iter()
        .zip(&cache.pre)
        .map(|(&g, &a)| g * params.activation.derivative(a))
        .collect();
    grads.w.add_outer(&da, &cache.x);
    for (b, d) in grads.b.as_mut_slice().iter_mut().zip(&da) {
        *b += d;
    }
    let mut dx = vec![0.0; params.input_dim()];
    params.w.matvec_t_acc(&da, &mut dx);
    dx
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &Vector) -> Vector {
    Vector::from(softmax_slice(logits.as_slice()))
}

pub(crate) fn softmax_slice(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

const PROB_FLOOR: f64 = 1e-15;

/// Cross-entropy of softmax probabilities against `label`. The returned
/// gradient is with respect to the logits that produced `probs`.
pub fn cross_entropy_loss(probs: &Vector, label: usize) -> Result<(f64, Vector)> {
    if label >= probs.len() {
        return Err(Error::Input(format!(
            "label {label} out of range for {} classes",
            probs.len()
        )));
    }
    let loss = -probs[label].max(PROB_FLOOR).ln();
    let mut grad = probs.clone();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Mean squared error and its gradient `2 (pred - target) / n`.
pub fn mse_loss(pred: &Vector, target: &Vector) -> Result<(f64, Vector)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::dim(format!(
            "mse on lengths {} and {}",
            pred.len(),
            target.len()
        )));
    }
    let n = pred.len() as f64;
    let diff: Vec<f64> = pred.iter().zip(target.iter()).map(|(p, t)| p - t).collect();
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let grad = diff.into_iter().map(|d| 2.0 * d / n).collect::<Vec<_>>();
    Ok((loss, Vector::from(grad)))
}
