//! GRU -> dense stack -> output head, with batched loss and gradients.
//!
//! The final hidden state `h_T` represents the sequence. Classification
//! heads are an identity dense layer followed by softmax and cross-entropy;
//! regression heads are an identity dense layer scored by MSE.

use crate::activation::ActivationKind;
use crate::data::{SequenceDataset, Target};
use crate::dense::{self, DenseCache, DenseGrads, DenseParams};
use crate::error::{Error, Result};
use crate::gru::{self, GruParams, GruVariant, StepCache};
use crate::tensor::{Matrix, Rng, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Classification { classes: usize },
    Regression { out_dim: usize },
}

impl Task {
    pub fn output_dim(&self) -> usize {
        match *self {
            Task::Classification { classes } => classes,
            Task::Regression { out_dim } => out_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub dense_dims: Vec<usize>,
    pub gate_activation: ActivationKind,
    pub dense_activation: ActivationKind,
    pub task: Task,
    pub seed: u64,
}

impl ModelConfig {
    /// Squared-sigmoid gates with squared-tanh dense layers.
    pub fn sst(input_dim: usize, hidden_dim: usize, task: Task) -> Self {
        ModelConfig {
            input_dim,
            hidden_dim,
            dense_dims: vec![hidden_dim],
            gate_activation: ActivationKind::Ss,
            dense_activation: ActivationKind::St,
            task,
            seed: 0,
        }
    }

    /// Sigmoid gates with tanh dense layers.
    pub fn classical(input_dim: usize, hidden_dim: usize, task: Task) -> Self {
        ModelConfig {
            gate_activation: ActivationKind::Sf,
            dense_activation: ActivationKind::Tf,
            ..ModelConfig::sst(input_dim, hidden_dim, task)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Config(format!(
                "model.input_dim ({}) and model.hidden_dim ({}) must be positive",
                self.input_dim, self.hidden_dim
            )));
        }
        if self.dense_dims.contains(&0) {
            return Err(Error::Config("model.dense_dims entries must be positive".into()));
        }
        GruVariant::new(self.gate_activation)?;
        match self.task {
            Task::Classification { classes } if classes < 2 => Err(Error::Config(format!(
                "classification needs at least 2 classes, got {classes}"
            ))),
            Task::Regression { out_dim: 0 } => Err(Error::Config("regression out_dim must be positive".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub variant: GruVariant,
    pub gru: GruParams,
    pub dense: Vec<DenseParams>,
    pub head: DenseParams,
}

/// Gradients with the same layout as [`Model`] parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub gru: GruParams,
    pub dense: Vec<DenseGrads>,
    pub head: DenseGrads,
}

/// Everything kept from one sample's forward pass.
#[derive(Debug, Clone)]
pub struct SampleCache {
    pub steps: Vec<StepCache>,
    pub dense: Vec<DenseCache>,
    pub head: DenseCache,
    /// `dL/d(head output)` for this sample, already divided by the batch size.
    pub dl_dout: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Mean loss over the batch.
    pub loss: f64,
    /// Class probabilities or regression predictions, one per sample.
    pub outputs: Vec<Vec<f64>>,
    pub caches: Vec<SampleCache>,
}

pub fn build_model(cfg: &ModelConfig) -> Result<Model> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);
    let gru = gru::init_params(&mut rng, cfg.input_dim, cfg.hidden_dim)?;
    let mut dense = Vec::with_capacity(cfg.dense_dims.len());
    let mut width = cfg.hidden_dim;
    for &out in &cfg.dense_dims {
        dense.push(DenseParams::init(&mut rng, width, out, cfg.dense_activation)?);
        width = out;
    }
    let head = DenseParams::init(&mut rng, width, cfg.task.output_dim(), ActivationKind::Identity)?;
    Ok(Model {
        variant: GruVariant::new(cfg.gate_activation)?,
        config: cfg.clone(),
        gru,
        dense,
        head,
    })
}

impl Grads {
    pub fn zeros_like(model: &Model) -> Self {
        Grads {
            gru: GruParams::zeros(model.gru.input_dim(), model.gru.hidden_dim()),
            dense: model.dense.iter().map(DenseGrads::zeros_like).collect(),
            head: DenseGrads::zeros_like(&model.head),
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.gru.tensors().iter().map(|(_, t)| *t).collect();
        for d in self.dense.iter().chain(std::iter::once(&self.head)) {
            out.push(d.w.data());
            out.push(d.b.as_slice());
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.gru.tensors_mut().into_iter().collect();
        for d in self.dense.iter_mut().chain(std::iter::once(&mut self.head)) {
            out.push(d.w.data_mut());
            out.push(d.b.as_mut_slice());
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|g| *g *= factor);
        }
    }

    /// Rescales to `max_norm` when the global norm exceeds it.
    pub fn clip_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
        norm
    }
}

impl Model {
    /// Names of the parameter arrays, in [`Model::tensors`] order.
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names: Vec<String> = gru::GRU_TENSOR_NAMES.iter().map(|n| format!("gru.{n}")).collect();
        for i in 0..self.dense.len() {
            names.push(format!("dense{i}.w"));
            names.push(format!("dense{i}.b"));
        }
        names.push("head.w".into());
        names.push("head.b".into());
        names
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.gru.tensors().iter().map(|(_, t)| *t).collect();
        for d in self.dense.iter().chain(std::iter::once(&self.head)) {
            out.push(d.w.data());
            out.push(d.b.as_slice());
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.gru.tensors_mut().into_iter().collect();
        for d in self.dense.iter_mut().chain(std::iter::once(&mut self.head)) {
            out.push(d.w.data_mut());
            out.push(d.b.as_mut_slice());
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn task(&self) -> Task {
        self.config.task
    }

    /// Checks that a dataset is compatible with this model.
    pub fn check_dataset(&self, ds: &SequenceDataset) -> Result<()> {
        if !ds.is_empty() && ds.channels() != self.config.input_dim {
            return Err(Error::dim(format!(
                "dataset has {} channels, model expects {}",
                ds.channels(),
                self.config.input_dim
            )));
        }
        match (self.config.task, ds.classes()) {
            (Task::Classification { classes }, Some(k)) if k <= classes => Ok(()),
            (Task::Classification { classes }, Some(k)) => Err(Error::dim(format!(
                "dataset has {k} classes, model head has {classes}"
            ))),
            (Task::Regression { out_dim }, None) => match &ds.targets {
                crate::data::Targets::Values { dim, .. } if *dim == out_dim => Ok(()),
                crate::data::Targets::Values { dim, .. } => Err(Error::dim(format!(
                    "dataset has {dim} targets, model predicts {out_dim}"
                ))),
                _ => unreachable!(),
            },
            (Task::Classification { .. }, None) => Err(Error::Input("classification model given regression data".into())),
            (Task::Regression { .. }, Some(_)) => Err(Error::Input("regression model given labelled data".into())),
        }
    }

    fn forward_one(&self, xs: &Matrix) -> Result<(Vec<f64>, Vec<StepCache>, Vec<DenseCache>, DenseCache)> {
        let h0 = Vector::zeros(self.config.hidden_dim);
        let (hs, steps) = gru::forward_sequence(&self.gru, &self.variant, xs, &h0)?;
        let mut x = hs.row(hs.rows() - 1).to_vec();
        let mut caches = Vec::with_capacity(self.dense.len());
        for layer in &self.dense {
            let (y, c) = dense::forward_slice(layer, &x);
            caches.push(c);
            x = y;
        }
        let (out, head) = dense::forward_slice(&self.head, &x);
        Ok((out, steps, caches, head))
    }

    /// Class probabilities (classification) or predictions (regression).
    pub fn predict(&self, xs: &Matrix) -> Result<Vec<f64>> {
        let (out, ..) = self.forward_one(xs)?;
        Ok(match self.config.task {
            Task::Classification { .. } => dense::softmax_slice(&out),
            Task::Regression { .. } => out,
        })
    }
}

/// Mean loss over the samples `indices` of `ds`.
pub fn forward_loss(model: &Model, ds: &SequenceDataset, indices: &[usize]) -> Result<ForwardPass> {
    if indices.is_empty() {
        return Err(Error::Input("empty batch".into()));
    }
    model.check_dataset(ds)?;
    let scale = 1.0 / indices.len() as f64;
    let mut loss = 0.0;
    let mut outputs = Vec::with_capacity(indices.len());
    let mut caches = Vec::with_capacity(indices.len());
    for &i in indices {
        let (out, steps, dense, head) = model.forward_one(&ds.sequences[i])?;
        let (l, out, grad) = match ds.targets.get(i) {
            Target::Class(label) => {
                let probs = Vector::from(dense::softmax_slice(&out));
                let (l, g) = dense::cross_entropy_loss(&probs, label)?;
                (l, probs.into_vec(), g)
            }
            Target::Values(t) => {
                let pred = Vector::from(out);
                let (l, g) = dense::mse_loss(&pred, &Vector::from(t.to_vec()))?;
                (l, pred.into_vec(), g)
            }
        };
        if !l.is_finite() {
            return Err(Error::Numeric(format!("non-finite loss on sample {i}")));
        }
        loss += l * scale;
        outputs.push(out);
        caches.push(SampleCache {
            steps,
            dense,
            head,
            dl_dout: grad.iter().map(|g| g * scale).collect(),
        });
    }
    Ok(ForwardPass { loss, outputs, caches })
}

/// Gradients of the batch-mean loss; the per-sample upstream gradients are
/// taken from the caches.
pub fn backward(model: &Model, caches: &[SampleCache]) -> Result<Grads> {
    let mut grads = Grads::zeros_like(model);
    let hidden = model.config.hidden_dim;
    for cache in caches {
        if cache.dense.len() != model.dense.len() || cache.dl_dout.len() != model.head.output_dim() {
            return Err(Error::Input("cache does not match model layout".into()));
        }
        let mut up = dense::backward_into(&model.head, &cache.head, &cache.dl_dout, &mut grads.head);
        for (k, layer) in model.dense.iter().enumerate().rev() {
            up = dense::backward_into(layer, &cache.dense[k], &up, &mut grads.dense[k]);
        }
        let t = cache.steps.len();
        let mut dl_dhs = Matrix::zeros(t, hidden);
        dl_dhs.data_mut()[(t - 1) * hidden..].copy_from_slice(&up);
        let g = gru::backward_sequence(&model.gru, &model.variant, &cache.steps, &dl_dhs)?;
        for (acc, part) in grads.gru.tensors_mut().into_iter().zip(g.params.tensors()) {
            for (a, p) in acc.iter_mut().zip(part.1) {
                *a += p;
            }
        }
    }
    Ok(grads)
}
