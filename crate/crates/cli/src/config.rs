//! Flat `key=value` run configuration.
//!
//! Keys are grouped by prefix (`model.`, `train.`, `data.`, `sparsity.`,
//! `bench.`, `gradcheck.`, `curves.`, `output.`). Every key is checked
//! before anything is computed; an unknown or malformed key is a
//! configuration error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sst_core::data::{ClassificationSpec, RegressionSpec, SparsityConfig};
use sst_core::train::{Optimizer, TrainConfig};
use sst_core::{parse_activation, ActivationKind, Error, Result};

const KEYS: &[&str] = &[
    "model.hidden_dim",
    "model.dense_dims",
    "model.gate_activation",
    "model.dense_activation",
    "model.seed",
    "train.epochs",
    "train.batch_size",
    "train.learning_rate",
    "train.optimizer",
    "train.beta1",
    "train.beta2",
    "train.epsilon",
    "train.grad_clip",
    "train.patience",
    "data.source",
    "data.path",
    "data.schema",
    "data.seed",
    "data.train_fraction",
    "data.val_fraction",
    "data.standardize",
    "data.classes",
    "data.n_per_class",
    "data.length",
    "data.channels",
    "data.noise",
    "data.n",
    "data.horizon",
    "data.slope",
    "sparsity.seq_fraction",
    "sparsity.value_fraction",
    "bench.seeds",
    "bench.parallel",
    "gradcheck.samples",
    "gradcheck.h",
    "curves.xmin",
    "curves.xmax",
    "curves.steps",
    "output.dir",
];

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    SyntheticClassification(ClassificationSpec),
    SyntheticRegression(RegressionSpec),
    File { path: PathBuf, schema: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub hidden_dim: usize,
    /// `None` means one dense layer as wide as the hidden state.
    pub dense_dims: Option<Vec<usize>>,
    pub gate_activation: ActivationKind,
    pub dense_activation: ActivationKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSection {
    pub source: DataSource,
    pub seed: u64,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub standardize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSection,
    /// `train.seed` mirrors `model.seed`: batch order is part of the model
    /// side of the two-seed split.
    pub train: TrainConfig,
    pub data: DataSection,
    /// Its seed is derived from `data.seed`.
    pub sparsity: SparsityConfig,
    pub bench_seeds: Vec<u64>,
    pub bench_parallel: bool,
    pub gradcheck_samples: usize,
    pub gradcheck_h: f64,
    pub curves: (f64, f64, usize),
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::parse("", Path::new(".")).expect("defaults are valid")
    }
}

struct Entries<'a> {
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Entries<'a> {
    fn bad(key: &str, value: &str, want: &str) -> Error {
        Error::Config(format!("{key}={value}: expected {want}"))
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.map.get(key).copied()
    }

    fn num<T: std::str::FromStr>(&self, key: &str, default: T, want: &str) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Self::bad(key, v, want)),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        self.num(key, default, "a non-negative integer")
    }

    fn u64(&self, key: &str, default: u64) -> Result<u64> {
        self.num(key, default, "a non-negative integer")
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        let v: f64 = self.num(key, default, "a number")?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Self::bad(key, self.raw(key).unwrap_or(""), "a finite number"))
        }
    }

    fn fraction(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.f64(key, default)?;
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(Self::bad(key, self.raw(key).unwrap_or(""), "a value in [0, 1]"))
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(Self::bad(key, v, "true or false")),
        }
    }

    /// A number, or `none` for "off".
    fn optional<T: std::str::FromStr>(&self, key: &str, default: Option<T>, want: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(default),
            Some("none") | Some("off") => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Self::bad(key, v, want)),
        }
    }

    fn activation(&self, key: &str, default: ActivationKind) -> Result<ActivationKind> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_activation(v).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{key}: {m}")),
                other => other,
            }),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str, want: &str) -> Result<Option<Vec<T>>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        if v.is_empty() || v == "none" {
            return Ok(Some(Vec::new()));
        }
        v.split(',')
            .map(|s| s.trim().parse().map_err(|_| Self::bad(key, v, want)))
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Relative `data.path`, `data.schema` and `output.dir` values are
    /// resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<RunConfig> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{line}'", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config(format!("line {}: unknown key '{k}'", i + 1)));
            }
            if map.insert(k, v).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        let e = Entries { map };
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_relative() {
                base.join(p)
            } else {
                p
            }
        };

        let model = ModelSection {
            hidden_dim: e.usize("model.hidden_dim", 16)?,
            dense_dims: e.list("model.dense_dims", "comma-separated positive integers")?,
            gate_activation: e.activation("model.gate_activation", ActivationKind::Ss)?,
            dense_activation: e.activation("model.dense_activation", ActivationKind::St)?,
            seed: e.u64("model.seed", 0)?,
        };
        if model.hidden_dim == 0 {
            return Err(Error::Config("model.hidden_dim must be positive".into()));
        }
        if model.dense_dims.as_ref().is_some_and(|d| d.contains(&0)) {
            return Err(Error::Config("model.dense_dims entries must be positive".into()));
        }
        if !matches!(model.gate_activation, ActivationKind::Sf | ActivationKind::Ss) {
            return Err(Error::Config(format!(
                "model.gate_activation must be sigmoid or ss, got {}",
                model.gate_activation
            )));
        }

        let optimizer = match e.raw("train.optimizer").unwrap_or("adam") {
            "adam" => Optimizer::Adam {
                beta1: e.f64("train.beta1", 0.9)?,
                beta2: e.f64("train.beta2", 0.999)?,
                epsilon: e.f64("train.epsilon", 1e-8)?,
            },
            "sgd" => Optimizer::Sgd,
            other => return Err(Entries::bad("train.optimizer", other, "adam or sgd")),
        };
        let train = TrainConfig {
            epochs: e.usize("train.epochs", 100)?,
            batch_size: e.usize("train.batch_size", 16)?,
            learning_rate: e.f64("train.learning_rate", 1e-3)?,
            optimizer,
            grad_clip: e.optional("train.grad_clip", None, "a positive number or none")?,
            early_stop_patience: e.optional("train.patience", Some(20), "an integer or none")?,
            seed: model.seed,
        };
        train.validate()?;

        let seed = e.u64("data.seed", 0)?;
        let sparsity = SparsityConfig {
            seq_fraction: e.fraction("sparsity.seq_fraction", 0.2)?,
            value_fraction: e.fraction("sparsity.value_fraction", 0.2)?,
            seed,
        };
        let source = match e.raw("data.source").unwrap_or("synthetic_classification") {
            "synthetic_classification" => {
                let d = ClassificationSpec::default();
                DataSource::SyntheticClassification(ClassificationSpec {
                    n_per_class: e.usize("data.n_per_class", d.n_per_class)?,
                    classes: e.usize("data.classes", d.classes)?,
                    len: e.usize("data.length", d.len)?,
                    channels: e.usize("data.channels", d.channels)?,
                    noise: e.f64("data.noise", d.noise)?,
                    sparsity: SparsityConfig { seed: 0, ..sparsity },
                    seed,
                })
            }
            "synthetic_regression" => {
                let d = RegressionSpec::default();
                if e.raw("data.channels").is_some_and(|c| c != "1") {
                    return Err(Error::Config("synthetic_regression has exactly 1 channel".into()));
                }
                DataSource::SyntheticRegression(RegressionSpec {
                    n: e.usize("data.n", d.n)?,
                    len: e.usize("data.length", d.len)?,
                    horizon: e.usize("data.horizon", d.horizon)?,
                    slope: e.f64("data.slope", d.slope)?,
                    noise: e.f64("data.noise", d.noise)?,
                    seed,
                    ..d
                })
            }
            "file" => {
                let path = e
                    .raw("data.path")
                    .ok_or_else(|| Error::Config("data.source=file needs data.path".into()))?;
                let schema = e
                    .raw("data.schema")
                    .ok_or_else(|| Error::Config("data.source=file needs data.schema".into()))?;
                DataSource::File {
                    path: resolve(path),
                    schema: resolve(schema),
                }
            }
            other => {
                return Err(Entries::bad(
                    "data.source",
                    other,
                    "synthetic_classification, synthetic_regression or file",
                ))
            }
        };
        let data = DataSection {
            source,
            seed,
            train_fraction: e.fraction("data.train_fraction", 0.6)?,
            val_fraction: e.fraction("data.val_fraction", 0.15)?,
            standardize: e.bool("data.standardize", true)?,
        };
        if data.train_fraction + data.val_fraction > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "data.train_fraction + data.val_fraction = {} exceeds 1",
                data.train_fraction + data.val_fraction
            )));
        }

        let bench_seeds = e
            .list("bench.seeds", "comma-separated integers")?
            .unwrap_or_else(|| vec![1, 2, 3, 4, 5]);
        if bench_seeds.is_empty() {
            return Err(Error::Config("bench.seeds must list at least one seed".into()));
        }
        let gradcheck_h = e.f64("gradcheck.h", 1e-5)?;
        if gradcheck_h <= 0.0 {
            return Err(Error::Config("gradcheck.h must be positive".into()));
        }
        let curves = (
            e.f64("curves.xmin", -6.0)?,
            e.f64("curves.xmax", 6.0)?,
            e.usize("curves.steps", 1201)?,
        );
        Ok(RunConfig {
            model,
            train,
            data,
            sparsity,
            bench_seeds,
            bench_parallel: e.bool("bench.parallel", true)?,
            gradcheck_samples: e.usize("gradcheck.samples", 3)?.max(1),
            gradcheck_h,
            curves,
            output_dir: e.raw("output.dir").map(resolve),
        })
    }

    /// Applies `--seed`, which replaces the model seed (and with it the
    /// batch-order seed); the data seed is left alone.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.model.seed = seed;
        self.train.seed = seed;
        self
    }

    pub fn dense_dims(&self) -> Vec<usize> {
        self.model
            .dense_dims
            .clone()
            .unwrap_or_else(|| vec![self.model.hidden_dim])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("/cfg"))
    }

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.model.gate_activation, ActivationKind::Ss);
        assert_eq!(c.dense_dims(), vec![16]);
        assert_eq!(c.train.early_stop_patience, Some(20));
        assert_eq!(c.bench_seeds, vec![1, 2, 3, 4, 5]);
        assert!(matches!(c.data.source, DataSource::SyntheticClassification(_)));
    }

    #[test]
    fn values_and_paths() {
        let c = parse(
            "# comment\nmodel.hidden_dim = 8\nmodel.dense_dims=4,3\ntrain.optimizer=sgd\n\
             train.patience=none\ndata.source=file\ndata.path=d.csv\ndata.schema=/abs/s.schema\n",
        )
        .unwrap();
        assert_eq!(c.model.hidden_dim, 8);
        assert_eq!(c.dense_dims(), vec![4, 3]);
        assert_eq!(c.train.optimizer, Optimizer::Sgd);
        assert_eq!(c.train.early_stop_patience, None);
        assert_eq!(
            c.data.source,
            DataSource::File {
                path: PathBuf::from("/cfg/d.csv"),
                schema: PathBuf::from("/abs/s.schema")
            }
        );
        assert_eq!(parse("model.dense_dims=none").unwrap().dense_dims(), Vec::<usize>::new());
    }

    #[test]
    fn seed_override_touches_model_side_only() {
        let c = parse("model.seed=3\ndata.seed=9").unwrap().with_seed(42);
        assert_eq!((c.model.seed, c.train.seed, c.data.seed, c.sparsity.seed), (42, 42, 9, 9));
    }

    #[test]
    fn rejects_bad_keys_and_values() {
        for bad in [
            "model.hiden_dim=4",
            "model.dense_activation=sqaured",
            "model.gate_activation=relu",
            "train.epochs=ten",
            "train.epochs=0",
            "train.learning_rate=-1",
            "sparsity.seq_fraction=1.5",
            "data.source=web",
            "data.source=file",
            "data.train_fraction=0.9\ndata.val_fraction=0.2",
            "no equals sign",
            "model.seed=1\nmodel.seed=2",
            "bench.seeds=",
        ] {
            assert!(matches!(parse(bad), Err(Error::Config(_))), "{bad}");
        }
        let msg = parse("model.dense_activation=sqaured").unwrap_err().to_string();
        assert!(msg.contains("model.dense_activation"), "{msg}");
    }
}
