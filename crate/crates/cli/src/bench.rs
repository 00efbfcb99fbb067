//! Classical vs SST comparison over several model seeds.

use std::fmt::Write as _;

use rayon::prelude::*;
use sst_core::metrics::EvalReport;
use sst_core::model::Task;
use sst_core::Result;

use crate::config::RunConfig;
use crate::pipeline::{prepare, run, VARIANTS};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub variant: &'static str,
    pub seed: u64,
    pub epochs: usize,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub task: Task,
    pub seeds: Vec<u64>,
    pub rows: Vec<BenchRow>,
    pub persistence_mse: Option<f64>,
}

/// Every model seed trains both variants on the same data split.
pub fn run_bench(cfg: &RunConfig) -> Result<BenchResult> {
    let prepared = prepare(cfg)?;
    let jobs: Vec<(u64, usize)> = cfg
        .bench_seeds
        .iter()
        .flat_map(|&s| (0..VARIANTS.len()).map(move |v| (s, v)))
        .collect();
    let one = |&(seed, v): &(u64, usize)| -> Result<BenchRow> {
        let (name, gate, dense) = VARIANTS[v];
        let run_cfg = cfg.clone().with_seed(seed);
        let r = run(&run_cfg, &prepared, gate, dense)?;
        Ok(BenchRow {
            variant: name,
            seed,
            epochs: r.history.records.len(),
            report: r.report,
        })
    };
    let rows: Vec<BenchRow> = if cfg.bench_parallel {
        jobs.par_iter().map(one).collect::<Result<_>>()?
    } else {
        jobs.iter().map(one).collect::<Result<_>>()?
    };
    Ok(BenchResult {
        task: prepared.task,
        seeds: cfg.bench_seeds.clone(),
        rows,
        persistence_mse: prepared.persistence_mse,
    })
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

impl BenchResult {
    pub fn metric_names(&self) -> Vec<&'static str> {
        match self.task {
            Task::Classification { classes: 2 } => vec!["accuracy", "precision", "recall", "f1", "auc"],
            Task::Classification { .. } => vec!["accuracy", "precision", "recall", "f1"],
            Task::Regression { .. } => vec!["mse"],
        }
    }

    fn metric(report: &EvalReport, name: &str) -> Option<f64> {
        match name {
            "accuracy" => report.accuracy,
            "precision" => report.precision,
            "recall" => report.recall,
            "f1" => report.f1,
            "auc" => report.auc,
            "mse" => report.mse,
            _ => None,
        }
    }

    /// Values of `metric` for `variant`, in seed order. Runs without the
    /// metric (a test split missing a class has no AUC) are skipped.
    pub fn values(&self, variant: &str, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.variant == variant)
            .filter_map(|r| Self::metric(&r.report, metric))
            .collect()
    }

    pub fn summary(&self, variant: &str, metric: &str) -> Option<(f64, f64)> {
        let v = self.values(variant, metric);
        (!v.is_empty()).then(|| mean_std(&v))
    }

    /// Machine-readable result: `key=value` groups, one line per run and one
    /// summary line per variant. Contains no timings, so reruns with the
    /// same configuration produce identical bytes.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self.task {
            Task::Classification { classes } => {
                let _ = writeln!(s, "task=classification classes={classes}");
            }
            Task::Regression { out_dim } => {
                let _ = writeln!(s, "task=regression out_dim={out_dim}");
            }
        }
        let seeds: Vec<String> = self.seeds.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "seeds={}", seeds.join(","));
        if let Some(p) = self.persistence_mse {
            let _ = writeln!(s, "persistence_mse={p:.10}");
        }
        let metrics = self.metric_names();
        for r in &self.rows {
            let _ = write!(s, "run variant={} seed={} epochs={}", r.variant, r.seed, r.epochs);
            for m in &metrics {
                if let Some(v) = Self::metric(&r.report, m) {
                    let _ = write!(s, " {m}={v:.10}");
                }
            }
            s.push('\n');
        }
        for (name, _, _) in VARIANTS {
            let _ = write!(s, "summary variant={name}");
            for m in &metrics {
                if let Some((mean, std)) = self.summary(name, m) {
                    let _ = write!(s, " {m}_mean={mean:.10} {m}_std={std:.10}");
                }
            }
            s.push('\n');
        }
        s
    }

    /// Console table with mean ± std per metric and variant.
    pub fn table(&self) -> String {
        let mut s = format!("{:<10}", "metric");
        for (name, _, _) in VARIANTS {
            let _ = write!(s, "{name:>22}");
        }
        s.push('\n');
        for m in self.metric_names() {
            let _ = write!(s, "{m:<10}");
            for (name, _, _) in VARIANTS {
                let cell = match self.summary(name, m) {
                    Some((mean, std)) => format!("{mean:.4} ± {std:.4}"),
                    None => "-".into(),
                };
                let _ = write!(s, "{cell:>22}");
            }
            s.push('\n');
        }
        if let Some(p) = self.persistence_mse {
            let _ = writeln!(s, "persistence baseline mse: {p:.4}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_sample() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }
}
