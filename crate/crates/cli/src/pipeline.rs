//! Dataset preparation and single training runs shared by the commands.

use sst_core::data::{
    induce_sparsity, load_dsv, persistence_mse, split, synth_classification, synth_regression, Scaler, Schema,
    SequenceDataset, Splits, Targets,
};
use sst_core::metrics::{evaluate, EvalReport};
use sst_core::model::{build_model, Model, ModelConfig, Task};
use sst_core::train::{train, TrainHistory};
use sst_core::{ActivationKind, Error, Result};

use crate::config::{DataSource, RunConfig};

/// Loads or generates the full dataset, with sparsity already induced.
pub fn load_dataset(cfg: &RunConfig) -> Result<SequenceDataset> {
    match &cfg.data.source {
        DataSource::SyntheticClassification(spec) => synth_classification(spec),
        DataSource::SyntheticRegression(spec) => induce_sparsity(&synth_regression(spec)?, &cfg.sparsity),
        DataSource::File { path, schema } => {
            let schema = Schema::load(schema).map_err(|e| match e {
                Error::Config(m) => Error::Input(m),
                other => other,
            })?;
            induce_sparsity(&load_dsv(path, &schema)?, &cfg.sparsity)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub splits: Splits,
    /// Fitted on the training split when `data.standardize` is on.
    pub scaler: Option<Scaler>,
    pub task: Task,
    pub channels: usize,
    /// Persistence MSE on the test split, in the units the model sees.
    pub persistence_mse: Option<f64>,
}

/// Sparsify, split, then standardise every split with statistics from the
/// training split.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let ds = load_dataset(cfg)?;
    prepare_dataset(cfg, &ds)
}

pub fn prepare_dataset(cfg: &RunConfig, ds: &SequenceDataset) -> Result<Prepared> {
    let task = match &ds.targets {
        Targets::Labels { classes, .. } => Task::Classification { classes: *classes },
        Targets::Values { dim, .. } => Task::Regression { out_dim: *dim },
    };
    let raw = split(ds, cfg.data.train_fraction, cfg.data.val_fraction, cfg.data.seed)?;
    if raw.train.is_empty() {
        return Err(Error::Input("training split is empty".into()));
    }
    let (splits, scaler) = if cfg.data.standardize {
        let scaler = Scaler::fit(&raw.train)?;
        let s = Splits {
            train: scaler.apply(&raw.train)?,
            val: scaler.apply(&raw.val)?,
            test: scaler.apply(&raw.test)?,
        };
        (s, Some(scaler))
    } else {
        (raw.clone(), None)
    };
    let persistence = match task {
        Task::Regression { .. } if !raw.test.is_empty() => Some(persistence_mse(&raw.test, scaler.as_ref())?),
        _ => None,
    };
    Ok(Prepared {
        splits,
        scaler,
        task,
        channels: ds.channels(),
        persistence_mse: persistence,
    })
}

pub fn model_config(cfg: &RunConfig, prepared: &Prepared, gate: ActivationKind, dense: ActivationKind) -> ModelConfig {
    ModelConfig {
        input_dim: prepared.channels,
        hidden_dim: cfg.model.hidden_dim,
        dense_dims: cfg.dense_dims(),
        gate_activation: gate,
        dense_activation: dense,
        task: prepared.task,
        seed: cfg.model.seed,
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub model: Model,
    pub history: TrainHistory,
    /// On the test split, or the training split when the test split is empty.
    pub report: EvalReport,
}

pub fn run(cfg: &RunConfig, prepared: &Prepared, gate: ActivationKind, dense: ActivationKind) -> Result<RunResult> {
    let model = build_model(&model_config(cfg, prepared, gate, dense))?;
    let s = &prepared.splits;
    let (model, history) = train(model, &s.train, Some(&s.val), &cfg.train)?;
    let eval_on = if s.test.is_empty() { &s.train } else { &s.test };
    let report = evaluate(&model, eval_on)?;
    Ok(RunResult { model, history, report })
}

/// Classical and SST activation pairs, in reporting order.
pub const VARIANTS: [(&str, ActivationKind, ActivationKind); 2] = [
    ("classical", ActivationKind::Sf, ActivationKind::Tf),
    ("sst", ActivationKind::Ss, ActivationKind::St),
];
