//! Plain Rust behind the browser bindings, so it can be tested natively.

use std::f64::consts::PI;

use sst_core::data::{split, synth_classification, ClassificationSpec, Scaler, SparsityConfig};
use sst_core::gru::{forward_sequence, init_params};
use sst_core::metrics::evaluate;
use sst_core::model::{build_model, ModelConfig, Task};
use sst_core::train::{train, TrainConfig};
use sst_core::{ActivationKind, Error, GruVariant, Matrix, Result, Rng, Vector};

pub const CURVE_KINDS: [ActivationKind; 4] = [
    ActivationKind::Sf,
    ActivationKind::Ss,
    ActivationKind::Tf,
    ActivationKind::St,
];

/// Row-major table with 9 columns: x, SF, SS, TF, ST, then the four
/// derivatives.
pub fn curves(xmin: f64, xmax: f64, steps: usize) -> Result<Vec<f64>> {
    if !(xmin < xmax) || !(2..=100_000).contains(&steps) {
        return Err(Error::Config(format!(
            "need xmin < xmax and 2 <= steps <= 100000, got [{xmin}, {xmax}] with {steps}"
        )));
    }
    let mut out = Vec::with_capacity(steps * 9);
    for i in 0..steps {
        let x = xmin + (xmax - xmin) * i as f64 / (steps - 1) as f64;
        out.push(x);
        out.extend(CURVE_KINDS.iter().map(|k| k.value(x)));
        out.extend(CURVE_KINDS.iter().map(|k| k.derivative(x)));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub input: Vec<f64>,
    /// Mean update gate per step.
    pub classical_z: Vec<f64>,
    pub sst_z: Vec<f64>,
    /// First hidden unit per step.
    pub classical_h: Vec<f64>,
    pub sst_h: Vec<f64>,
}

/// Runs one sparse sine-burst sequence through a GRU twice, with identical
/// weights, once with sigmoid gates and once with squared-sigmoid gates.
pub fn gate_trajectory(seed: u64, len: usize, zero_fraction: f64) -> Result<Trajectory> {
    if !(8..=1024).contains(&len) {
        return Err(Error::Config(format!("length must be in 8..=1024, got {len}")));
    }
    if !(0.0..=1.0).contains(&zero_fraction) {
        return Err(Error::Config(format!("zero fraction must be in [0, 1], got {zero_fraction}")));
    }
    let mut rng = Rng::new(seed);
    let burst = (len / 4).max(2);
    let start = rng.below(len - burst + 1);
    let mut input: Vec<f64> = (0..len)
        .map(|t| {
            let signal = if (start..start + burst).contains(&t) {
                (2.0 * PI * (t - start) as f64 / burst as f64).sin() * 2.0
            } else {
                0.0
            };
            signal + 0.05 * rng.normal()
        })
        .collect();
    let zeros = (zero_fraction * len as f64).round() as usize;
    for i in rng.sample_indices(len, zeros) {
        input[i] = 0.0;
    }

    let params = init_params(&mut rng, 1, 8)?;
    let xs = Matrix::from_vec(len, 1, input.clone())?;
    let h0 = Vector::zeros(8);
    let run = |variant: GruVariant| -> Result<(Vec<f64>, Vec<f64>)> {
        let (hs, caches) = forward_sequence(&params, &variant, &xs, &h0)?;
        let z = caches.iter().map(|c| c.z.iter().sum::<f64>() / c.z.len() as f64).collect();
        let h = (0..len).map(|t| hs.get(t, 0)).collect();
        Ok((z, h))
    };
    let (classical_z, classical_h) = run(GruVariant::classical())?;
    let (sst_z, sst_h) = run(GruVariant::sst())?;
    Ok(Trajectory {
        input,
        classical_z,
        sst_z,
        classical_h,
        sst_h,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocRun {
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub auc: f64,
    pub accuracy: f64,
}

/// Trains a small binary classifier on the synthetic motif task and scores
/// it on a held-out split.
pub fn train_roc(sst: bool, seed: u64, epochs: usize, sparsity: f64) -> Result<RocRun> {
    if !(1..=200).contains(&epochs) {
        return Err(Error::Config(format!("epochs must be in 1..=200, got {epochs}")));
    }
    let spec = ClassificationSpec {
        classes: 2,
        n_per_class: 40,
        len: 32,
        channels: 2,
        sparsity: SparsityConfig {
            seq_fraction: sparsity,
            value_fraction: sparsity,
            seed: 0,
        },
        seed: 11,
        ..ClassificationSpec::default()
    };
    let ds = synth_classification(&spec)?;
    let raw = split(&ds, 0.6, 0.15, 11)?;
    let scaler = Scaler::fit(&raw.train)?;
    let (tr, val, test) = (scaler.apply(&raw.train)?, scaler.apply(&raw.val)?, scaler.apply(&raw.test)?);

    let task = Task::Classification { classes: 2 };
    let mut cfg = if sst {
        ModelConfig::sst(2, 8, task)
    } else {
        ModelConfig::classical(2, 8, task)
    };
    cfg.seed = seed;
    let train_cfg = TrainConfig {
        epochs,
        learning_rate: 5e-3,
        seed,
        ..TrainConfig::default()
    };
    let (model, _) = train(build_model(&cfg)?, &tr, Some(&val), &train_cfg)?;
    let report = evaluate(&model, &test)?;
    let points = report
        .roc_points
        .ok_or_else(|| Error::Input("test split lacks one of the classes".into()))?;
    Ok(RocRun {
        fpr: points.iter().map(|p| p.0).collect(),
        tpr: points.iter().map(|p| p.1).collect(),
        auc: report.auc.unwrap_or(0.5),
        accuracy: report.accuracy.unwrap_or(0.0),
    })
}
