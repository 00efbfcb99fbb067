//! Optimisers and the mini-batch training loop.

use std::fmt::Write as _;
use std::time::Instant;

use crate::data::{SequenceDataset, Target};
use crate::error::{Error, Result};
use crate::metrics::argmax;
use crate::model::{backward, forward_loss, Grads, Model, Task};
use crate::tensor::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        let d = AdamConfig::default();
        Optimizer::Adam {
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon: d.epsilon,
        }
    }
}

/// First and second moment estimates, one buffer per parameter array.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn for_shapes(lens: impl IntoIterator<Item = usize>) -> Self {
        let lens: Vec<usize> = lens.into_iter().collect();
        AdamState {
            m: lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: lens.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

/// One bias-corrected Adam update at step `t` (1-based).
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut AdamState,
    t: u64,
    cfg: &AdamConfig,
) -> Result<()> {
    if t == 0 {
        return Err(Error::Input("adam step counter starts at 1".into()));
    }
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(Error::dim(format!(
            "adam: {} parameter arrays, {} gradients, {} state buffers",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        if p.len() != g.len() || state.m[k].len() != p.len() {
            return Err(Error::dim(format!("adam: array {k} length mismatch")));
        }
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

pub fn sgd_step(params: &mut [&mut [f64]], grads: &[&[f64]], learning_rate: f64) {
    for (p, g) in params.iter_mut().zip(grads) {
        for (x, d) in p.iter_mut().zip(g.iter()) {
            *x -= learning_rate * d;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub grad_clip: Option<f64>,
    pub early_stop_patience: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 16,
            learning_rate: 1e-3,
            optimizer: Optimizer::adam(),
            grad_clip: None,
            early_stop_patience: Some(20),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("train.epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("train.batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "train.learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if let Optimizer::Adam { beta1, beta2, epsilon } = self.optimizer {
            for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
                if !(b > 0.0 && b < 1.0) {
                    return Err(Error::Config(format!("train.{name} must be in (0, 1), got {b}")));
                }
            }
            if !(epsilon > 0.0) {
                return Err(Error::Config(format!("train.epsilon must be positive, got {epsilon}")));
            }
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::Config(format!("train.grad_clip must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Accuracy for classification, MSE for regression.
    pub train_metric: f64,
    pub val_loss: Option<f64>,
    pub val_metric: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters were returned (1-based).
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    /// One `key=value` group per line, one line per epoch.
    pub fn to_text(&self, task: Task) -> String {
        let metric = match task {
            Task::Classification { .. } => "accuracy",
            Task::Regression { .. } => "mse",
        };
        let mut out = String::new();
        for r in &self.records {
            let _ = write!(
                out,
                "epoch={} train_loss={:.10} train_{metric}={:.10}",
                r.epoch, r.train_loss, r.train_metric
            );
            if let (Some(l), Some(m)) = (r.val_loss, r.val_metric) {
                let _ = write!(out, " val_loss={l:.10} val_{metric}={m:.10}");
            }
            let _ = writeln!(out, " seconds={:.3}", r.seconds);
        }
        out
    }
}

/// Accuracy (classification) or MSE (regression) of `outputs` against the
/// targets at `indices`.
fn batch_metric(ds: &SequenceDataset, indices: &[usize], outputs: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (&i, out) in indices.iter().zip(outputs) {
        total += match ds.targets.get(i) {
            Target::Class(l) => f64::from(u8::from(argmax(out) == l)),
            Target::Values(t) => {
                t.iter().zip(out).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / t.len() as f64
            }
        };
    }
    total / indices.len().max(1) as f64
}

/// Loss and metric of `model` over every sample of `ds`.
pub fn evaluate_loss(model: &Model, ds: &SequenceDataset) -> Result<(f64, f64)> {
    let idx: Vec<usize> = (0..ds.n()).collect();
    let pass = forward_loss(model, ds, &idx)?;
    Ok((pass.loss, batch_metric(ds, &idx, &pass.outputs)))
}

fn apply_update(
    model: &mut Model,
    grads: &Grads,
    cfg: &TrainConfig,
    adam: &mut AdamState,
    step: u64,
) -> Result<()> {
    let g = grads.tensors();
    let mut p = model.tensors_mut();
    match cfg.optimizer {
        Optimizer::Sgd => sgd_step(&mut p, &g, cfg.learning_rate),
        Optimizer::Adam { beta1, beta2, epsilon } => adam_step(
            &mut p,
            &g,
            adam,
            step,
            &AdamConfig {
                learning_rate: cfg.learning_rate,
                beta1,
                beta2,
                epsilon,
            },
        )?,
    }
    Ok(())
}

/// Seeded mini-batch training. With a validation set the returned model is
/// the one from the epoch with the lowest validation loss, and training
/// stops after `early_stop_patience` epochs without improvement.
pub fn train(
    mut model: Model,
    train_ds: &SequenceDataset,
    val_ds: Option<&SequenceDataset>,
    cfg: &TrainConfig,
) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    if train_ds.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    model.check_dataset(train_ds)?;
    let val_ds = val_ds.filter(|v| !v.is_empty());
    if let Some(v) = val_ds {
        model.check_dataset(v)?;
    }

    let start = Instant::now();
    let mut rng = Rng::new(cfg.seed);
    let mut adam = AdamState::for_shapes(model.tensors().iter().map(|t| t.len()));
    let mut step = 0u64;
    let mut order: Vec<usize> = (0..train_ds.n()).collect();
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, Model)> = None;
    let mut since_best = 0usize;

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut metric_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let pass = forward_loss(&model, train_ds, batch).map_err(|e| match e {
                Error::Numeric(m) => Error::Numeric(format!("epoch {epoch}: {m}")),
                other => other,
            })?;
            loss_sum += pass.loss * batch.len() as f64;
            metric_sum += batch_metric(train_ds, batch, &pass.outputs) * batch.len() as f64;
            let mut grads = backward(&model, &pass.caches)?;
            if let Some(max) = cfg.grad_clip {
                grads.clip_norm(max);
            }
            step += 1;
            apply_update(&mut model, &grads, cfg, &mut adam, step)?;
            if let Some((name, _)) = model
                .tensor_names()
                .into_iter()
                .zip(model.tensors())
                .find(|(_, t)| t.iter().any(|v| !v.is_finite()))
            {
                return Err(Error::Numeric(format!(
                    "epoch {epoch}: parameter {name} became non-finite"
                )));
            }
        }
        let train_loss = loss_sum / train_ds.n() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Numeric(format!("epoch {epoch}: training loss is {train_loss}")));
        }

        let (val_loss, val_metric) = match val_ds {
            Some(v) => {
                let (l, m) = evaluate_loss(&model, v)?;
                (Some(l), Some(m))
            }
            None => (None, None),
        };
        history.records.push(EpochRecord {
            epoch,
            train_loss,
            train_metric: metric_sum / train_ds.n() as f64,
            val_loss,
            val_metric,
            seconds: start.elapsed().as_secs_f64(),
        });

        if let Some(vl) = val_loss {
            if best.as_ref().is_none_or(|(b, _)| vl < *b) {
                best = Some((vl, model.clone()));
                history.best_epoch = epoch;
                since_best = 0;
            } else {
                since_best += 1;
                if cfg.early_stop_patience.is_some_and(|p| since_best >= p) {
                    history.stopped_early = true;
                    break;
                }
            }
        } else {
            history.best_epoch = epoch;
        }
    }

    let model = match best {
        Some((_, m)) => m,
        None => model,
    };
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{
        split, standardize, synth_classification, synth_regression, ClassificationSpec, RegressionSpec,
        SparsityConfig,
    };
    use crate::model::{build_model, ModelConfig};

    #[test]
    fn adam_zero_gradient_leaves_params() {
        let mut a = vec![0.5, -1.0, 2.0];
        let g = [0.0; 3];
        let mut st = AdamState::for_shapes([3]);
        for t in 1..=5 {
            adam_step(&mut [&mut a[..]], &[&g[..]], &mut st, t, &AdamConfig::default()).unwrap();
        }
        assert_eq!(a, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn adam_first_step_is_signed_learning_rate() {
        // m_hat = g and v_hat = g^2 after bias correction, so the step is
        // lr * g / (|g| + eps).
        let cfg = AdamConfig::default();
        let mut p = [0.0; 4];
        let g = vec![3.0, -0.02, 1e-3, -50.0];
        let mut st = AdamState::for_shapes([4]);
        adam_step(&mut [&mut p[..]], &[&g[..]], &mut st, 1, &cfg).unwrap();
        for (x, gi) in p.iter().zip(&g) {
            let expected = -cfg.learning_rate * gi / (gi.abs() + cfg.epsilon);
            assert!((x - expected).abs() < 1e-15);
            assert!((x + cfg.learning_rate * gi.signum()).abs() < 1e-7);
        }
        assert!(adam_step(&mut [&mut p[..]], &[&g[..]], &mut st, 0, &cfg).is_err());
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let mut p = vec![1.0, 2.0];
            let mut st = AdamState::for_shapes([2]);
            for t in 1..=10 {
                let g = [p[0] * 0.3, -p[1]];
                adam_step(&mut [&mut p[..]], &[&g[..]], &mut st, t, &AdamConfig::default()).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { epochs: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { learning_rate: 0.0, ..TrainConfig::default() }.validate().is_err());
        let bad_beta = TrainConfig {
            optimizer: Optimizer::Adam { beta1: 1.0, beta2: 0.999, epsilon: 1e-8 },
            ..TrainConfig::default()
        };
        assert!(bad_beta.validate().is_err());
    }

    fn classification_splits() -> crate::data::Splits {
        let ds = synth_classification(&ClassificationSpec {
            n_per_class: 20,
            classes: 3,
            len: 24,
            channels: 2,
            noise: 0.1,
            sparsity: SparsityConfig::default(),
            seed: 3,
        })
        .unwrap();
        split(&ds, 0.7, 0.15, 3).unwrap()
    }

    #[test]
    fn one_epoch_one_record() {
        let s = classification_splits();
        let m = build_model(&ModelConfig::sst(2, 6, Task::Classification { classes: 3 })).unwrap();
        let cfg = TrainConfig { epochs: 1, ..TrainConfig::default() };
        let (_, h) = train(m, &s.train, Some(&s.val), &cfg).unwrap();
        assert_eq!(h.records.len(), 1);
        assert_eq!(h.best_epoch, 1);
        let text = h.to_text(Task::Classification { classes: 3 });
        assert!(text.starts_with("epoch=1 train_loss="));
        assert!(text.contains("val_accuracy="));
    }

    #[test]
    fn empty_training_set_rejected() {
        let s = classification_splits();
        let m = build_model(&ModelConfig::sst(2, 6, Task::Classification { classes: 3 })).unwrap();
        let empty = s.train.subset(&[]);
        assert!(matches!(train(m, &empty, None, &TrainConfig::default()), Err(Error::Input(_))));
    }

    #[test]
    fn training_is_deterministic_and_keeps_best_epoch() {
        let s = classification_splits();
        let cfg = TrainConfig {
            epochs: 15,
            learning_rate: 5e-3,
            early_stop_patience: Some(3),
            seed: 9,
            ..TrainConfig::default()
        };
        let build = || build_model(&ModelConfig::sst(2, 6, Task::Classification { classes: 3 })).unwrap();
        let (a, ha) = train(build(), &s.train, Some(&s.val), &cfg).unwrap();
        let (b, hb) = train(build(), &s.train, Some(&s.val), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            ha.records.iter().map(|r| r.train_loss.to_bits()).collect::<Vec<_>>(),
            hb.records.iter().map(|r| r.train_loss.to_bits()).collect::<Vec<_>>()
        );
        let best = ha
            .records
            .iter()
            .map(|r| r.val_loss.unwrap())
            .fold(f64::INFINITY, f64::min);
        let (returned, _) = evaluate_loss(&a, &s.val).unwrap();
        assert_eq!(returned.to_bits(), best.to_bits());
        assert_eq!(ha.records[ha.best_epoch - 1].val_loss, Some(best));
    }

    #[test]
    fn regression_loss_decreases() {
        let ds = synth_regression(&RegressionSpec { n: 120, len: 12, ..RegressionSpec::default() }).unwrap();
        let (ds, _) = standardize(&ds).unwrap();
        let m = build_model(&ModelConfig {
            seed: 1,
            ..ModelConfig::sst(1, 8, Task::Regression { out_dim: 1 })
        })
        .unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            learning_rate: 1e-2,
            early_stop_patience: None,
            ..TrainConfig::default()
        };
        let (_, h) = train(m, &ds, None, &cfg).unwrap();
        let first = h.records[0].train_loss;
        let last = h.records.last().unwrap().train_loss;
        assert!(last < first, "{first} -> {last}");
        assert_eq!(h.records[0].train_loss, h.records[0].train_metric);
    }

    #[test]
    fn absurd_sgd_rate_is_a_numeric_failure() {
        let ds = synth_regression(&RegressionSpec { n: 40, len: 8, ..RegressionSpec::default() }).unwrap();
        let m = build_model(&ModelConfig::sst(1, 4, Task::Regression { out_dim: 1 })).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            learning_rate: 1e6,
            optimizer: Optimizer::Sgd,
            ..TrainConfig::default()
        };
        assert!(matches!(train(m, &ds, None, &cfg), Err(Error::Numeric(_))));
    }
}
