//! The six subcommands. Each returns its result so callers (the binary and
//! the tests) decide what to print and which exit code to use.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sst_core::activation::ActivationKind;
use sst_core::checkpoint;
use sst_core::data::{induce_sparsity, load_dsv, save_dsv, Schema, SparsityConfig};
use sst_core::gradcheck::{gradcheck, ss_derivative_missing_factor_two, GradcheckReport};
use sst_core::metrics::{evaluate, EvalReport};
use sst_core::model::build_model;
use sst_core::{Error, Result};

use crate::bench::{run_bench, BenchResult};
use crate::config::RunConfig;
use crate::pipeline::{model_config, prepare, run, RunResult};

pub const GRADCHECK_TOLERANCE: f64 = 1e-5;

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
}

/// Trains the configured model and writes `model.ckpt`, `history.txt`,
/// `report.txt` and, for binary tasks, `roc.tsv` into `out`.
pub fn cmd_train(cfg: &RunConfig, out: &Path) -> Result<RunResult> {
    let prepared = prepare(cfg)?;
    let result = run(cfg, &prepared, cfg.model.gate_activation, cfg.model.dense_activation)?;
    ensure_dir(out)?;
    checkpoint::save(out.join("model.ckpt"), &result.model, prepared.scaler.as_ref())?;
    write(out.join("history.txt"), &result.history.to_text(prepared.task))?;
    let mut report = result.report.to_text();
    let _ = writeln!(report, "best_epoch={}", result.history.best_epoch);
    if let Some(p) = prepared.persistence_mse {
        let _ = writeln!(report, "persistence_mse={p:.10}");
    }
    write(out.join("report.txt"), &report)?;
    if let Some(roc) = result.report.roc_text() {
        write(out.join("roc.tsv"), &roc)?;
    }
    Ok(result)
}

pub enum EvalData<'a> {
    /// A delimited data file and its schema sidecar.
    File { data: &'a Path, schema: &'a Path },
    /// The test split produced by a run configuration.
    Config(&'a RunConfig),
}

/// Scores a saved model. Writes `roc.tsv` into `roc_dir` for binary tasks.
pub fn cmd_eval(checkpoint_path: &Path, data: EvalData<'_>, roc_dir: &Path) -> Result<EvalReport> {
    let ck = checkpoint::load(checkpoint_path)?;
    let ds = match data {
        EvalData::File { data, schema } => {
            let schema = Schema::load(schema).map_err(|e| match e {
                Error::Config(m) => Error::Input(m),
                other => other,
            })?;
            let raw = load_dsv(data, &schema)?;
            match &ck.scaler {
                Some(s) => s.apply(&raw)?,
                None => raw,
            }
        }
        EvalData::Config(cfg) => prepare(cfg)?.splits.test,
    };
    let report = evaluate(&ck.model, &ds)?;
    if let Some(roc) = report.roc_text() {
        ensure_dir(roc_dir)?;
        write(roc_dir.join("roc.tsv"), &roc)?;
    }
    Ok(report)
}

/// Central-difference check of the configured model on the first
/// `gradcheck.samples` training sequences.
///
/// `mutate` swaps in a squared-sigmoid derivative that lacks its factor 2;
/// the check is expected to fail with it.
pub fn cmd_gradcheck(cfg: &RunConfig, mutate: bool) -> Result<GradcheckReport> {
    let prepared = prepare(cfg)?;
    let mut model = build_model(&model_config(
        cfg,
        &prepared,
        cfg.model.gate_activation,
        cfg.model.dense_activation,
    ))?;
    if mutate {
        if model.variant.gate() != ActivationKind::Ss {
            return Err(Error::Config(
                "the derivative mutation applies to model.gate_activation=ss only".into(),
            ));
        }
        model.variant = model.variant.with_gate_derivative(ss_derivative_missing_factor_two);
    }
    let train = &prepared.splits.train;
    let idx: Vec<usize> = (0..cfg.gradcheck_samples.min(train.n())).collect();
    gradcheck(&model, train, &idx, cfg.gradcheck_h)
}

pub fn gradcheck_text(report: &GradcheckReport) -> String {
    let mut s = String::new();
    for (name, err) in &report.groups {
        let _ = writeln!(s, "group={name} max_relative_error={err:.3e}");
    }
    let _ = writeln!(s, "max_relative_error={:.3e}", report.max_relative_error);
    let _ = writeln!(s, "worst={}[{}]", report.worst.0, report.worst.1);
    let status = if report.passes(GRADCHECK_TOLERANCE) { "pass" } else { "fail" };
    let _ = writeln!(s, "tolerance={GRADCHECK_TOLERANCE:e} status={status}");
    s
}

/// Runs the comparison and, with `out`, writes `bench.txt`.
pub fn cmd_bench(cfg: &RunConfig, out: Option<&Path>) -> Result<BenchResult> {
    let result = run_bench(cfg)?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write(dir.join("bench.txt"), &result.to_text())?;
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparsifySummary {
    pub sparse: usize,
    pub nonsparse: usize,
}

impl std::fmt::Display for SparsifySummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "sparse={} nonsparse={}", self.sparse, self.nonsparse)
    }
}

/// Writes `<stem>.sparse.csv` and `<stem>.sparse.schema` into `out`.
pub fn cmd_sparsify(input: &Path, schema: &Path, sparsity: &SparsityConfig, out: &Path) -> Result<SparsifySummary> {
    sparsity.validate()?;
    let schema = Schema::load(schema).map_err(|e| match e {
        Error::Config(m) => Error::Input(m),
        other => other,
    })?;
    let ds = load_dsv(input, &schema)?;
    let sparse = induce_sparsity(&ds, sparsity)?;
    ensure_dir(out)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    let mut written = save_dsv(&sparse, out.join(format!("{stem}.sparse.csv")))?;
    written.header = false;
    written.save(out.join(format!("{stem}.sparse.schema")))?;
    let n_sparse = sparse.sparse_count();
    Ok(SparsifySummary {
        sparse: n_sparse,
        nonsparse: sparse.n() - n_sparse,
    })
}

const CURVE_COLUMNS: [ActivationKind; 4] = [
    ActivationKind::Sf,
    ActivationKind::Ss,
    ActivationKind::Tf,
    ActivationKind::St,
];

/// Tab-separated table: `x`, the four activations, then their derivatives.
pub fn cmd_curves(xmin: f64, xmax: f64, steps: usize) -> Result<String> {
    if !(xmin < xmax) || !xmin.is_finite() || !xmax.is_finite() {
        return Err(Error::Config(format!("curves need xmin < xmax, got [{xmin}, {xmax}]")));
    }
    if steps < 2 {
        return Err(Error::Config(format!("curves need at least 2 steps, got {steps}")));
    }
    let mut s = String::from("x\tSF\tSS\tTF\tST\tSF'\tSS'\tTF'\tST'\n");
    for i in 0..steps {
        let x = if i == steps - 1 {
            xmax
        } else {
            xmin + (xmax - xmin) * i as f64 / (steps - 1) as f64
        };
        let _ = write!(s, "{x:.10}");
        for a in CURVE_COLUMNS {
            let _ = write!(s, "\t{:.16e}", a.value(x));
        }
        for a in CURVE_COLUMNS {
            let _ = write!(s, "\t{:.16e}", a.derivative(x));
        }
        s.push('\n');
    }
    Ok(s)
}
