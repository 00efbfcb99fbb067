//! Classification and regression metrics.

use std::fmt::Write as _;

use crate::data::{SequenceDataset, Target};
use crate::error::{Error, Result};
use crate::model::{Model, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    Binary { positive: usize },
    Macro,
}

impl Averaging {
    pub fn name(&self) -> String {
        match self {
            Averaging::Binary { positive } => format!("binary(positive={positive})"),
            Averaging::Macro => "macro".into(),
        }
    }
}

/// `counts[i][j]` is the number of samples of true class `i` predicted as `j`.
pub fn confusion_matrix(preds: &[usize], truth: &[usize], classes: usize) -> Result<Vec<Vec<usize>>> {
    if preds.len() != truth.len() {
        return Err(Error::dim(format!(
            "{} predictions for {} labels",
            preds.len(),
            truth.len()
        )));
    }
    let mut m = vec![vec![0usize; classes]; classes];
    for (&p, &t) in preds.iter().zip(truth) {
        if p >= classes || t >= classes {
            return Err(Error::Input(format!(
                "label {} out of range for {classes} classes",
                p.max(t)
            )));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_prf(confusion: &[Vec<usize>], c: usize) -> (f64, f64, f64) {
    let tp = confusion[c][c];
    let predicted: usize = confusion.iter().map(|row| row[c]).sum();
    let actual: usize = confusion[c].iter().sum();
    let p = ratio(tp, predicted);
    let r = ratio(tp, actual);
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

/// Precision, recall and F1. Empty denominators count as 0.
pub fn prf1(confusion: &[Vec<usize>], averaging: Averaging) -> (f64, f64, f64) {
    match averaging {
        Averaging::Binary { positive } => class_prf(confusion, positive),
        Averaging::Macro => {
            let k = confusion.len().max(1) as f64;
            let (p, r, f) = (0..confusion.len())
                .map(|c| class_prf(confusion, c))
                .fold((0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
            (p / k, r / k, f / k)
        }
    }
}

pub fn accuracy(confusion: &[Vec<usize>]) -> f64 {
    let trace: usize = (0..confusion.len()).map(|i| confusion[i][i]).sum();
    let total: usize = confusion.iter().flatten().sum();
    ratio(trace, total)
}

/// ROC curve from a descending threshold sweep. Tied scores form a single
/// step; the curve starts at (0, 0) and ends at (1, 1).
pub fn roc_points(scores: &[f64], truth: &[bool]) -> Result<Vec<(f64, f64)>> {
    if scores.len() != truth.len() {
        return Err(Error::dim(format!(
            "{} scores for {} labels",
            scores.len(),
            truth.len()
        )));
    }
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Input("ROC needs both positive and negative samples".into()));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Input(format!("non-finite score {s}")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(points)
}

/// Trapezoidal area under a ROC curve.
pub fn auc(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub task: Task,
    pub n: usize,
    pub confusion: Option<Vec<Vec<usize>>>,
    pub averaging: Option<Averaging>,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub roc_points: Option<Vec<(f64, f64)>>,
    pub auc: Option<f64>,
    pub mse: Option<f64>,
}

impl EvalReport {
    /// `key=value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self.task {
            Task::Classification { classes } => {
                let _ = writeln!(s, "task=classification");
                let _ = writeln!(s, "classes={classes}");
            }
            Task::Regression { out_dim } => {
                let _ = writeln!(s, "task=regression");
                let _ = writeln!(s, "out_dim={out_dim}");
            }
        }
        let _ = writeln!(s, "n={}", self.n);
        if let Some(a) = &self.averaging {
            let _ = writeln!(s, "averaging={}", a.name());
        }
        for (k, v) in [
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
            ("auc", self.auc),
            ("mse", self.mse),
        ] {
            if let Some(v) = v {
                let _ = writeln!(s, "{k}={v:.10}");
            }
        }
        if let Some(c) = &self.confusion {
            let rows: Vec<String> = c
                .iter()
                .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
                .collect();
            let _ = writeln!(s, "confusion={}", rows.join(";"));
        }
        s
    }

    /// Two tab-separated columns, `fpr` and `tpr`, with a header line.
    pub fn roc_text(&self) -> Option<String> {
        self.roc_points.as_ref().map(|pts| {
            let mut s = String::from("fpr\ttpr\n");
            for (x, y) in pts {
                let _ = writeln!(s, "{x:.10}\t{y:.10}");
            }
            s
        })
    }
}

pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

/// Scores `model` on every sample of `ds`. Binary tasks also get a ROC curve
/// and AUC from the positive-class (class 1) probability.
pub fn evaluate(model: &Model, ds: &SequenceDataset) -> Result<EvalReport> {
    if ds.is_empty() {
        return Err(Error::Input("cannot evaluate on an empty split".into()));
    }
    model.check_dataset(ds)?;
    let outputs = ds
        .sequences
        .iter()
        .map(|s| model.predict(s))
        .collect::<Result<Vec<_>>>()?;
    let task = model.task();
    let mut report = EvalReport {
        task,
        n: ds.n(),
        confusion: None,
        averaging: None,
        accuracy: None,
        precision: None,
        recall: None,
        f1: None,
        roc_points: None,
        auc: None,
        mse: None,
    };
    match task {
        Task::Classification { classes } => {
            let truth = ds.labels().expect("checked by check_dataset");
            let preds: Vec<usize> = outputs.iter().map(|o| argmax(o)).collect();
            let confusion = confusion_matrix(&preds, truth, classes)?;
            let averaging = if classes == 2 {
                Averaging::Binary { positive: 1 }
            } else {
                Averaging::Macro
            };
            let (p, r, f) = prf1(&confusion, averaging);
            report.accuracy = Some(accuracy(&confusion));
            report.precision = Some(p);
            report.recall = Some(r);
            report.f1 = Some(f);
            report.averaging = Some(averaging);
            report.confusion = Some(confusion);
            if classes == 2 {
                let scores: Vec<f64> = outputs.iter().map(|o| o[1]).collect();
                let positives: Vec<bool> = truth.iter().map(|&l| l == 1).collect();
                if let Ok(points) = roc_points(&scores, &positives) {
                    report.auc = Some(auc(&points));
                    report.roc_points = Some(points);
                }
            }
        }
        Task::Regression { .. } => {
            let mut total = 0.0;
            let mut count = 0usize;
            for (i, out) in outputs.iter().enumerate() {
                if let Target::Values(t) = ds.targets.get(i) {
                    total += t.iter().zip(out).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                    count += t.len();
                }
            }
            report.mse = Some(total / count.max(1) as f64);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Rng;

    /// Mann-Whitney form: P(score+ > score-) + P(tie) / 2, over all pairs.
    fn pairwise_auc(scores: &[f64], truth: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &ti) in truth.iter().enumerate() {
            if !ti {
                continue;
            }
            for (j, &tj) in truth.iter().enumerate() {
                if tj {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    /// Recounts (FPR, TPR) at every distinct threshold, classifying score >= threshold as positive.
    fn threshold_recount(scores: &[f64], truth: &[bool]) -> Vec<(f64, f64)> {
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let pos = truth.iter().filter(|&&t| t).count() as f64;
        let neg = truth.len() as f64 - pos;
        let mut pts = vec![(0.0, 0.0)];
        for th in thresholds {
            let tp = scores.iter().zip(truth).filter(|(&s, &t)| t && s >= th).count() as f64;
            let fp = scores.iter().zip(truth).filter(|(&s, &t)| !t && s >= th).count() as f64;
            pts.push((fp / neg, tp / pos));
        }
        pts
    }

    #[test]
    fn confusion_cases() {
        let m = confusion_matrix(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(m, vec![vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);
        let m = confusion_matrix(&[2], &[0], 3).unwrap();
        assert_eq!(m.iter().flatten().filter(|&&c| c > 0).count(), 1);
        assert_eq!(m[0][2], 1);
        let truth = [0, 0, 1, 2, 2, 2];
        let m = confusion_matrix(&[1, 0, 1, 0, 2, 1], &truth, 3).unwrap();
        assert_eq!(m.iter().map(|r| r.iter().sum::<usize>()).collect::<Vec<_>>(), vec![2, 1, 3]);
        assert!(confusion_matrix(&[3], &[0], 3).is_err());
    }

    #[test]
    fn prf1_closed_forms() {
        let perfect = confusion_matrix(&[0, 1, 1, 0], &[0, 1, 1, 0], 2).unwrap();
        assert_eq!(prf1(&perfect, Averaging::Binary { positive: 1 }), (1.0, 1.0, 1.0));
        let all_pos = confusion_matrix(&[1, 1, 1, 1], &[0, 1, 0, 1], 2).unwrap();
        let (p, r, f) = prf1(&all_pos, Averaging::Binary { positive: 1 });
        assert_eq!((p, r), (0.5, 1.0));
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
        // class 0 is never predicted: its precision is 0/0 -> 0
        let (p, _, _) = prf1(&all_pos, Averaging::Macro);
        assert_eq!(p, 0.25);
    }

    #[test]
    fn macro_matches_hand_summation() {
        let mut rng = Rng::new(4);
        let k = 4;
        let m: Vec<Vec<usize>> = (0..k).map(|_| (0..k).map(|_| rng.below(20)).collect()).collect();
        let (p, r, f) = prf1(&m, Averaging::Macro);
        let (mut ps, mut rs, mut fs) = (0.0, 0.0, 0.0);
        for c in 0..k {
            let tp = m[c][c] as f64;
            let mut col = 0.0;
            let mut row = 0.0;
            for i in 0..k {
                col += m[i][c] as f64;
                row += m[c][i] as f64;
            }
            let pc = if col > 0.0 { tp / col } else { 0.0 };
            let rc = if row > 0.0 { tp / row } else { 0.0 };
            ps += pc;
            rs += rc;
            fs += if pc + rc > 0.0 { 2.0 * pc * rc / (pc + rc) } else { 0.0 };
        }
        assert!((p - ps / k as f64).abs() < 1e-12);
        assert!((r - rs / k as f64).abs() < 1e-12);
        assert!((f - fs / k as f64).abs() < 1e-12);
    }

    #[test]
    fn roc_perfect_and_tied() {
        let pts = roc_points(&[0.9, 0.8, 0.3, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(pts, vec![(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (0.5, 1.0), (1.0, 1.0)]);
        assert_eq!(auc(&pts), 1.0);

        let pts = roc_points(&[0.4; 6], &[true, false, true, false, false, true]).unwrap();
        assert_eq!(pts, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auc(&pts), 0.5);

        assert!(matches!(roc_points(&[0.1, 0.2], &[true, true]), Err(Error::Input(_))));
    }

    #[test]
    fn roc_matches_threshold_recount() {
        let mut rng = Rng::new(50);
        let n = 50;
        // coarse scores so ties occur
        let scores: Vec<f64> = (0..n).map(|_| (rng.next_f64() * 20.0).floor() / 20.0).collect();
        let truth: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let pts = roc_points(&scores, &truth).unwrap();
        assert_eq!(pts, threshold_recount(&scores, &truth));
        for w in pts.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
        assert_eq!(*pts.last().unwrap(), (1.0, 1.0));
    }

    #[test]
    fn trapezoid_equals_pairwise() {
        let mut rng = Rng::new(99);
        for case in 0..100 {
            let n = 2 + rng.below(199);
            let coarse = case % 2 == 0;
            let scores: Vec<f64> = (0..n)
                .map(|_| if coarse { rng.below(7) as f64 / 7.0 } else { rng.next_f64() })
                .collect();
            let mut truth: Vec<bool> = (0..n).map(|_| rng.next_f64() < 0.4).collect();
            truth[0] = true;
            truth[1] = false;
            let a = auc(&roc_points(&scores, &truth).unwrap());
            assert!((a - pairwise_auc(&scores, &truth)).abs() < 1e-12, "case {case}");
        }
    }

    #[test]
    fn report_text_is_key_value() {
        let report = EvalReport {
            task: Task::Classification { classes: 2 },
            n: 4,
            confusion: Some(vec![vec![2, 0], vec![1, 1]]),
            averaging: Some(Averaging::Binary { positive: 1 }),
            accuracy: Some(0.75),
            precision: Some(1.0),
            recall: Some(0.5),
            f1: Some(2.0 / 3.0),
            roc_points: Some(vec![(0.0, 0.0), (0.0, 0.5), (1.0, 1.0)]),
            auc: Some(0.75),
            mse: None,
        };
        let text = report.to_text();
        for line in text.lines() {
            assert!(line.split_once('=').is_some(), "{line}");
        }
        assert!(text.contains("accuracy=0.7500000000"));
        assert!(text.contains("confusion=2 0;1 1"));
        assert_eq!(report.roc_text().unwrap().lines().count(), 4);
    }
}
