//! Central-difference check of every analytic model gradient.

use crate::activation::sigmoid;
use crate::data::SequenceDataset;
use crate::error::{Error, Result};
use crate::model::{backward, forward_loss, Model};

pub const MAX_GRADCHECK_PARAMS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    /// Largest relative error per parameter array, in model order.
    pub groups: Vec<(String, f64)>,
    pub max_relative_error: f64,
    /// Array name and flat index of the worst coordinate.
    pub worst: (String, usize),
}

impl GradcheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error < tolerance
    }
}

/// `|a - n| / max(1e-8, |a| + |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Perturbs each scalar parameter by `±h` and compares the symmetric
/// difference quotient of the batch loss with the backward pass.
pub fn gradcheck(model: &Model, ds: &SequenceDataset, indices: &[usize], h: f64) -> Result<GradcheckReport> {
    let n_params = model.param_count();
    if n_params > MAX_GRADCHECK_PARAMS {
        return Err(Error::Config(format!(
            "gradcheck is limited to {MAX_GRADCHECK_PARAMS} parameters, model has {n_params}"
        )));
    }
    let pass = forward_loss(model, ds, indices)?;
    let grads = backward(model, &pass.caches)?;
    let analytic = grads.tensors();
    let names = model.tensor_names();

    let mut probe = model.clone();
    let mut groups = Vec::with_capacity(names.len());
    let mut worst = (names[0].clone(), 0usize, -1.0f64);
    for (ti, name) in names.iter().enumerate() {
        let mut group_max = 0.0f64;
        for k in 0..analytic[ti].len() {
            let orig = probe.tensors()[ti][k];
            let mut loss_at = |v: f64| -> Result<f64> {
                probe.tensors_mut()[ti][k] = v;
                let l = forward_loss(&probe, ds, indices).map(|p| p.loss);
                match l {
                    Ok(l) if l.is_finite() => Ok(l),
                    Ok(l) => Err(Error::Numeric(format!("loss {l} at {name}[{k}] = {v}"))),
                    Err(Error::Numeric(m)) => Err(Error::Numeric(format!("{m} at {name}[{k}] = {v}"))),
                    Err(e) => Err(e),
                }
            };
            let plus = loss_at(orig + h)?;
            let minus = loss_at(orig - h)?;
            probe.tensors_mut()[ti][k] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let rel = relative_error(analytic[ti][k], numeric);
            group_max = group_max.max(rel);
            if rel > worst.2 {
                worst = (name.clone(), k, rel);
            }
        }
        groups.push((name.clone(), group_max));
    }
    let max_relative_error = groups.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    Ok(GradcheckReport {
        groups,
        max_relative_error,
        worst: (worst.0, worst.1),
    })
}

/// A deliberately wrong squared-sigmoid derivative, `SF^2 (1 - SF)`, missing
/// the factor 2. Used to show the checker detects a broken derivative.
pub fn ss_derivative_missing_factor_two(x: f64) -> f64 {
    let s = sigmoid(x);
    s * s * (1.0 - s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::data::{synth_regression, RegressionSpec, SequenceDataset, Targets};
    use crate::model::{build_model, ModelConfig, Task};
    use crate::tensor::{Matrix, Rng};

    fn random_ds(classes: Option<usize>) -> SequenceDataset {
        let mut rng = Rng::new(17);
        let seqs: Vec<Matrix> = (0..3)
            .map(|_| Matrix::from_vec(5, 3, (0..15).map(|_| rng.normal()).collect()).unwrap())
            .collect();
        let targets = match classes {
            Some(k) => Targets::Labels { labels: vec![0, 1, 2 % k], classes: k },
            None => Targets::Values {
                values: (0..3).map(|_| vec![rng.normal(), rng.normal()]).collect(),
                dim: 2,
            },
        };
        SequenceDataset::new("gc", seqs, targets).unwrap()
    }

    #[test]
    fn every_activation_combination_passes() {
        for gate in [ActivationKind::Sf, ActivationKind::Ss] {
            for dense in [ActivationKind::Tf, ActivationKind::St, ActivationKind::Relu] {
                for task in [Task::Classification { classes: 3 }, Task::Regression { out_dim: 2 }] {
                    let cfg = ModelConfig {
                        input_dim: 3,
                        hidden_dim: 4,
                        dense_dims: vec![4],
                        gate_activation: gate,
                        dense_activation: dense,
                        task,
                        seed: 3,
                    };
                    let ds = random_ds(match task {
                        Task::Classification { classes } => Some(classes),
                        Task::Regression { .. } => None,
                    });
                    let m = build_model(&cfg).unwrap();
                    let r = gradcheck(&m, &ds, &[0, 1, 2], 1e-5).unwrap();
                    assert!(r.passes(1e-5), "{gate}/{dense}/{task:?}: {r:?}");
                    assert_eq!(r.groups.len(), m.tensor_names().len());
                }
            }
        }
    }

    #[test]
    fn broken_squared_sigmoid_derivative_is_caught() {
        let cfg = ModelConfig {
            seed: 3,
            ..ModelConfig::sst(3, 4, Task::Classification { classes: 3 })
        };
        let mut m = build_model(&cfg).unwrap();
        m.variant = m.variant.with_gate_derivative(ss_derivative_missing_factor_two);
        let r = gradcheck(&m, &random_ds(Some(3)), &[0, 1, 2], 1e-5).unwrap();
        assert!(r.max_relative_error > 1e-2, "{r:?}");
        assert!(r.worst.0.starts_with("gru."));
    }

    #[test]
    fn oversized_model_refused() {
        let ds = synth_regression(&RegressionSpec { n: 4, len: 4, ..RegressionSpec::default() }).unwrap();
        let m = build_model(&ModelConfig::sst(1, 32, Task::Regression { out_dim: 1 })).unwrap();
        assert!(matches!(gradcheck(&m, &ds, &[0], 1e-5), Err(Error::Config(_))));
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert_eq!(relative_error(1e-10, 0.0), 1e-10 / 1e-8);
        assert!((relative_error(1.0, 1.1) - 0.1 / 2.1).abs() < 1e-15);
    }
}
