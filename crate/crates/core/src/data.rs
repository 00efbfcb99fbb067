//! Sequence datasets: delimited-text ingestion, standardisation, stratified
//! splitting, random value zeroing, and two synthetic generators.
//!
//! A dataset holds `N` sequences of shape `T x D` (time-major) with either
//! one class label or a real target vector per sequence.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Matrix, Rng};

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Labels { labels: Vec<usize>, classes: usize },
    Values { values: Vec<Vec<f64>>, dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target<'a> {
    Class(usize),
    Values(&'a [f64]),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Labels { labels, .. } => labels.len(),
            Targets::Values { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Target<'_> {
        match self {
            Targets::Labels { labels, .. } => Target::Class(labels[i]),
            Targets::Values { values, .. } => Target::Values(&values[i]),
        }
    }

    fn select(&self, idx: &[usize]) -> Targets {
        match self {
            Targets::Labels { labels, classes } => Targets::Labels {
                labels: idx.iter().map(|&i| labels[i]).collect(),
                classes: *classes,
            },
            Targets::Values { values, dim } => Targets::Values {
                values: idx.iter().map(|&i| values[i].clone()).collect(),
                dim: *dim,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    pub sequences: Vec<Matrix>,
    pub targets: Targets,
    pub sparse_flags: Vec<bool>,
    pub name: String,
    len: usize,
    channels: usize,
}

impl SequenceDataset {
    pub fn new(name: impl Into<String>, sequences: Vec<Matrix>, targets: Targets) -> Result<Self> {
        if sequences.len() != targets.len() {
            return Err(Error::Input(format!(
                "{} sequences but {} targets",
                sequences.len(),
                targets.len()
            )));
        }
        let (len, channels) = sequences.first().map_or((0, 0), |m| m.shape());
        if let Some(i) = sequences.iter().position(|m| m.shape() != (len, channels)) {
            return Err(Error::Input(format!(
                "sequence {i} has shape {:?}, expected ({len}, {channels})",
                sequences[i].shape()
            )));
        }
        match &targets {
            Targets::Labels { labels, classes } => {
                if let Some(&bad) = labels.iter().find(|&&l| l >= *classes) {
                    return Err(Error::Input(format!("label {bad} not below class count {classes}")));
                }
            }
            Targets::Values { values, dim } => {
                if values.iter().any(|v| v.len() != *dim) {
                    return Err(Error::Input(format!("target vectors must all have length {dim}")));
                }
            }
        }
        let n = sequences.len();
        Ok(SequenceDataset {
            sequences,
            targets,
            sparse_flags: vec![false; n],
            name: name.into(),
            len,
            channels,
        })
    }

    pub fn n(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Sequence length `T`.
    pub fn seq_len(&self) -> usize {
        self.len
    }

    /// Channel count `D`.
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn classes(&self) -> Option<usize> {
        match self.targets {
            Targets::Labels { classes, .. } => Some(classes),
            Targets::Values { .. } => None,
        }
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match &self.targets {
            Targets::Labels { labels, .. } => Some(labels),
            Targets::Values { .. } => None,
        }
    }

    pub fn sparse_count(&self) -> usize {
        self.sparse_flags.iter().filter(|&&f| f).count()
    }

    pub fn subset(&self, idx: &[usize]) -> SequenceDataset {
        SequenceDataset {
            sequences: idx.iter().map(|&i| self.sequences[i].clone()).collect(),
            targets: self.targets.select(idx),
            sparse_flags: idx.iter().map(|&i| self.sparse_flags[i]).collect(),
            name: self.name.clone(),
            len: self.len,
            channels: self.channels,
        }
    }
}

// ---------------------------------------------------------------------------
// Delimited text

#[derive(Debug, Clone, PartialEq)]
pub enum TargetColumns {
    Label { column: usize, classes: Option<usize> },
    Values(Vec<usize>),
}

/// Sidecar schema describing one delimited data file.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub len: usize,
    pub channels: usize,
    pub target: TargetColumns,
    /// `None` means auto-detect among comma, tab and semicolon.
    pub delimiter: Option<char>,
    pub header: bool,
}

fn delimiter_name(c: char) -> &'static str {
    match c {
        '\t' => "tab",
        ';' => "semicolon",
        _ => "comma",
    }
}

impl Schema {
    pub fn parse(text: &str, origin: &str) -> Result<Schema> {
        let mut kv = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_string(),
                line: i + 1,
                msg: format!("expected key=value, got '{line}'"),
            })?;
            kv.insert(k.trim().to_string(), (v.trim().to_string(), i + 1));
        }
        let cfg_err = |msg: String| Error::Config(format!("schema {origin}: {msg}"));
        let uint = |key: &str| -> Result<Option<usize>> {
            kv.get(key)
                .map(|(v, _)| v.parse::<usize>().map_err(|_| cfg_err(format!("{key}={v} is not a non-negative integer"))))
                .transpose()
        };
        let len = uint("T")?.ok_or_else(|| cfg_err("missing T".into()))?;
        let channels = uint("D")?.ok_or_else(|| cfg_err("missing D".into()))?;
        if len == 0 || channels == 0 {
            return Err(cfg_err("T and D must be positive".into()));
        }
        let target = match (kv.get("label_column"), kv.get("target_columns")) {
            (Some(_), Some(_)) => return Err(cfg_err("label_column and target_columns are exclusive".into())),
            (Some(_), None) => TargetColumns::Label {
                column: uint("label_column")?.unwrap(),
                classes: uint("classes")?,
            },
            (None, Some((v, _))) => TargetColumns::Values(
                v.split(',')
                    .map(|c| c.trim().parse::<usize>().map_err(|_| cfg_err(format!("bad target column '{c}'"))))
                    .collect::<Result<_>>()?,
            ),
            (None, None) => return Err(cfg_err("one of label_column or target_columns is required".into())),
        };
        let delimiter = match kv.get("delimiter").map(|(v, _)| v.as_str()) {
            None | Some("auto") => None,
            Some("comma") | Some(",") => Some(','),
            Some("tab") | Some("\\t") => Some('\t'),
            Some("semicolon") | Some(";") => Some(';'),
            Some(other) => return Err(cfg_err(format!("unknown delimiter '{other}'"))),
        };
        let header = match kv.get("header").map(|(v, _)| v.as_str()) {
            None | Some("false") | Some("0") => false,
            Some("true") | Some("1") => true,
            Some(other) => return Err(cfg_err(format!("header must be true or false, got '{other}'"))),
        };
        let known = ["T", "D", "label_column", "target_columns", "classes", "delimiter", "header"];
        if let Some((k, (_, line))) = kv.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(cfg_err(format!("unknown key '{k}' on line {line}")));
        }
        Ok(Schema {
            len,
            channels,
            target,
            delimiter,
            header,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Schema> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Schema::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("T={}\nD={}\n", self.len, self.channels);
        match &self.target {
            TargetColumns::Label { column, classes } => {
                let _ = writeln!(s, "label_column={column}");
                if let Some(k) = classes {
                    let _ = writeln!(s, "classes={k}");
                }
            }
            TargetColumns::Values(cols) => {
                let cols: Vec<String> = cols.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(s, "target_columns={}", cols.join(","));
            }
        }
        let _ = writeln!(
            s,
            "delimiter={}",
            self.delimiter.map_or("auto", delimiter_name)
        );
        let _ = writeln!(s, "header={}", self.header);
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn detect_delimiter(line: &str) -> char {
    [',', '\t', ';']
        .into_iter()
        .max_by_key(|&c| (line.matches(c).count(), std::cmp::Reverse(c as u32)))
        .unwrap_or(',')
}

/// Parses delimited text, one flattened sequence (`T*D` values, time-major)
/// plus target fields per row.
pub fn parse_dsv(text: &str, schema: &Schema, origin: &str) -> Result<SequenceDataset> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    if schema.header {
        rows.next();
    }
    let rows: Vec<(usize, &str)> = rows.collect();
    let delim = schema
        .delimiter
        .unwrap_or_else(|| rows.first().map_or(',', |(_, l)| detect_delimiter(l)));

    let n_values = schema.len * schema.channels;
    let target_cols: Vec<usize> = match &schema.target {
        TargetColumns::Label { column, .. } => vec![*column],
        TargetColumns::Values(cols) => cols.clone(),
    };
    let width = n_values + target_cols.len();
    if let Some(&c) = target_cols.iter().find(|&&c| c >= width) {
        return Err(Error::Config(format!(
            "target column {c} outside row width {width}"
        )));
    }

    let mut sequences = Vec::with_capacity(rows.len());
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (i, line) in rows {
        let lineno = i + 1;
        let fields: Vec<&str> = line.trim_end_matches('\r').split(delim).collect();
        if fields.len() != width {
            return Err(perr(lineno, format!("expected {width} fields, found {}", fields.len())));
        }
        let mut seq = Vec::with_capacity(n_values);
        let mut tgt = Vec::with_capacity(target_cols.len());
        for (c, f) in fields.iter().enumerate() {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| perr(lineno, format!("field {} ('{}') is not numeric", c + 1, f.trim())))?;
            if !v.is_finite() {
                return Err(perr(lineno, format!("field {} is not finite", c + 1)));
            }
            if target_cols.contains(&c) {
                tgt.push((c, v));
            } else {
                seq.push(v);
            }
        }
        match &schema.target {
            TargetColumns::Label { .. } => {
                let v = tgt[0].1;
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(perr(lineno, format!("label {v} is not a non-negative integer")));
                }
                labels.push(v as usize);
            }
            TargetColumns::Values(cols) => {
                values.push(
                    cols.iter()
                        .map(|c| tgt.iter().find(|(tc, _)| tc == c).unwrap().1)
                        .collect::<Vec<_>>(),
                );
            }
        }
        sequences.push(Matrix::from_vec(schema.len, schema.channels, seq)?);
    }

    let targets = match &schema.target {
        TargetColumns::Label { classes, .. } => {
            let observed = labels.iter().max().map_or(0, |m| m + 1);
            let classes = classes.unwrap_or(observed);
            if observed > classes {
                return Err(Error::Input(format!(
                    "label {} exceeds declared class count {classes}",
                    observed - 1
                )));
            }
            Targets::Labels { labels, classes }
        }
        TargetColumns::Values(cols) => Targets::Values {
            values,
            dim: cols.len(),
        },
    };
    SequenceDataset::new(origin, sequences, targets)
}

pub fn load_dsv(path: impl AsRef<Path>, schema: &Schema) -> Result<SequenceDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dsv(&text, schema, &path.display().to_string())
}

/// Comma-separated rendering: sequence values first, then targets. Values are
/// written with 17 significant digits so they parse back bit-exactly.
pub fn to_dsv(ds: &SequenceDataset) -> (String, Schema) {
    let mut out = String::new();
    for (i, seq) in ds.sequences.iter().enumerate() {
        let mut fields: Vec<String> = seq.data().iter().map(|v| format!("{v:.16e}")).collect();
        match ds.targets.get(i) {
            Target::Class(c) => fields.push(c.to_string()),
            Target::Values(v) => fields.extend(v.iter().map(|x| format!("{x:.16e}"))),
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    let base = ds.seq_len() * ds.channels();
    let target = match &ds.targets {
        Targets::Labels { classes, .. } => TargetColumns::Label {
            column: base,
            classes: Some(*classes),
        },
        Targets::Values { dim, .. } => TargetColumns::Values((base..base + dim).collect()),
    };
    let schema = Schema {
        len: ds.seq_len(),
        channels: ds.channels(),
        target,
        delimiter: Some(','),
        header: false,
    };
    (out, schema)
}

/// Writes the data file and returns the matching schema.
pub fn save_dsv(ds: &SequenceDataset, path: impl AsRef<Path>) -> Result<Schema> {
    let path = path.as_ref();
    let (text, schema) = to_dsv(ds);
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(schema)
}

// ---------------------------------------------------------------------------
// Standardisation

pub const STD_FLOOR: f64 = 1e-8;

/// Per-channel (and, for regression, per-target) affine normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub target_mean: Vec<f64>,
    pub target_std: Vec<f64>,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt().max(STD_FLOOR))
}

impl Scaler {
    /// Fits on `ds` (the training split).
    pub fn fit(ds: &SequenceDataset) -> Result<Scaler> {
        if ds.n() < 2 {
            return Err(Error::Input(format!(
                "standardisation needs at least 2 sequences, got {}",
                ds.n()
            )));
        }
        let d = ds.channels();
        let (mean, std) = (0..d)
            .map(|c| mean_std(ds.sequences.iter().flat_map(move |s| s.data().iter().skip(c).step_by(d).copied())))
            .unzip();
        let (target_mean, target_std) = match &ds.targets {
            Targets::Labels { .. } => (Vec::new(), Vec::new()),
            Targets::Values { values, dim } => (0..*dim)
                .map(|k| mean_std(values.iter().map(move |v| v[k])))
                .unzip(),
        };
        Ok(Scaler {
            mean,
            std,
            target_mean,
            target_std,
        })
    }

    pub fn apply(&self, ds: &SequenceDataset) -> Result<SequenceDataset> {
        if ds.channels() != self.mean.len() {
            return Err(Error::dim(format!(
                "scaler fitted on {} channels applied to {}",
                self.mean.len(),
                ds.channels()
            )));
        }
        let mut out = ds.clone();
        let d = ds.channels();
        for seq in &mut out.sequences {
            for (i, v) in seq.data_mut().iter_mut().enumerate() {
                let c = i % d;
                *v = (*v - self.mean[c]) / self.std[c];
            }
        }
        if let Targets::Values { values, dim } = &mut out.targets {
            if *dim != self.target_mean.len() {
                return Err(Error::dim(format!(
                    "scaler fitted on {} targets applied to {dim}",
                    self.target_mean.len()
                )));
            }
            for v in values.iter_mut() {
                for (k, x) in v.iter_mut().enumerate() {
                    *x = (*x - self.target_mean[k]) / self.target_std[k];
                }
            }
        }
        Ok(out)
    }

    /// Maps a raw target value of dimension `k` into standardised units.
    pub fn scale_target(&self, k: usize, v: f64) -> f64 {
        match (self.target_mean.get(k), self.target_std.get(k)) {
            (Some(m), Some(s)) => (v - m) / s,
            _ => v,
        }
    }
}

/// Fits a scaler on `ds` and applies it.
pub fn standardize(ds: &SequenceDataset) -> Result<(SequenceDataset, Scaler)> {
    let scaler = Scaler::fit(ds)?;
    Ok((scaler.apply(ds)?, scaler))
}

// ---------------------------------------------------------------------------
// Splitting

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: SequenceDataset,
    pub val: SequenceDataset,
    pub test: SequenceDataset,
}

/// Largest-remainder apportionment of `total` over `weights` (proportional).
fn apportion(total: usize, sizes: &[usize]) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return vec![0; sizes.len()];
    }
    let exact: Vec<f64> = sizes.iter().map(|&s| total as f64 * s as f64 / n as f64).collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut rest = total - out.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in &order {
        if rest == 0 {
            break;
        }
        if out[i] < sizes[i] {
            out[i] += 1;
            rest -= 1;
        }
    }
    out
}

/// Seeded shuffle into train/validation/test. Classification datasets are
/// stratified by class.
pub fn split(ds: &SequenceDataset, train_frac: f64, val_frac: f64, seed: u64) -> Result<Splits> {
    if !(0.0..=1.0).contains(&train_frac) || !(0.0..=1.0).contains(&val_frac) || train_frac + val_frac > 1.0 + 1e-12 {
        return Err(Error::Config(format!(
            "split fractions train={train_frac} val={val_frac} must be in [0,1] and sum to at most 1"
        )));
    }
    let mut rng = Rng::new(seed);
    let n = ds.n();
    let n_train = (train_frac * n as f64).round() as usize;
    let n_val = ((val_frac * n as f64).round() as usize).min(n - n_train.min(n));

    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    match ds.labels() {
        Some(labels) => {
            let classes = ds.classes().unwrap_or(0);
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
            for (i, &l) in labels.iter().enumerate() {
                by_class[l].push(i);
            }
            if let Some((c, members)) = by_class.iter().enumerate().find(|(_, m)| !m.is_empty() && m.len() < 3) {
                return Err(Error::Input(format!(
                    "class {c} has {} samples; stratified splitting needs at least 3",
                    members.len()
                )));
            }
            let sizes: Vec<usize> = by_class.iter().map(|m| m.len()).collect();
            let train_sizes = apportion(n_train, &sizes);
            let remaining: Vec<usize> = sizes.iter().zip(&train_sizes).map(|(s, t)| s - t).collect();
            let val_sizes = apportion(n_val, &remaining);
            for (c, members) in by_class.iter_mut().enumerate() {
                rng.shuffle(members);
                let (a, b) = (train_sizes[c], train_sizes[c] + val_sizes[c]);
                train.extend_from_slice(&members[..a]);
                val.extend_from_slice(&members[a..b]);
                test.extend_from_slice(&members[b..]);
            }
            rng.shuffle(&mut train);
            rng.shuffle(&mut val);
            rng.shuffle(&mut test);
        }
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut idx);
            train.extend_from_slice(&idx[..n_train]);
            val.extend_from_slice(&idx[n_train..n_train + n_val]);
            test.extend_from_slice(&idx[n_train + n_val..]);
        }
    }
    Ok(Splits {
        train: ds.subset(&train),
        val: ds.subset(&val),
        test: ds.subset(&test),
    })
}

// ---------------------------------------------------------------------------
// Sparsity induction

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityConfig {
    /// Fraction of sequences that receive zeroed values.
    pub seq_fraction: f64,
    /// Fraction of the `T*D` values zeroed inside each selected sequence.
    pub value_fraction: f64,
    pub seed: u64,
}

impl Default for SparsityConfig {
    fn default() -> Self {
        SparsityConfig {
            seq_fraction: 0.2,
            value_fraction: 0.2,
            seed: 0,
        }
    }
}

impl SparsityConfig {
    pub fn none() -> Self {
        SparsityConfig {
            seq_fraction: 0.0,
            value_fraction: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("seq_fraction", self.seq_fraction), ("value_fraction", self.value_fraction)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("sparsity.{name}={v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Number of positions zeroed in each selected sequence of `values` entries.
    pub fn zeros_per_sequence(&self, values: usize) -> usize {
        (self.value_fraction * values as f64).round() as usize
    }
}

/// Picks `round(seq_fraction * N)` sequences without replacement and zeroes
/// `round(value_fraction * T * D)` distinct positions in each.
pub fn induce_sparsity(ds: &SequenceDataset, cfg: &SparsityConfig) -> Result<SequenceDataset> {
    cfg.validate()?;
    let mut out = ds.clone();
    let n_seq = (cfg.seq_fraction * ds.n() as f64).round() as usize;
    let k = cfg.zeros_per_sequence(ds.seq_len() * ds.channels());
    if n_seq == 0 || k == 0 {
        return Ok(out);
    }
    let mut rng = Rng::new(cfg.seed);
    let chosen = rng.sample_indices(ds.n(), n_seq);
    for i in chosen {
        let data = out.sequences[i].data_mut();
        for p in rng.sample_indices(data.len(), k) {
            data[p] = 0.0;
        }
        out.sparse_flags[i] = true;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Parameters for [`synth_classification`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationSpec {
    pub n_per_class: usize,
    pub classes: usize,
    pub len: usize,
    pub channels: usize,
    pub noise: f64,
    pub sparsity: SparsityConfig,
    pub seed: u64,
}

impl Default for ClassificationSpec {
    fn default() -> Self {
        ClassificationSpec {
            n_per_class: 60,
            classes: 4,
            len: 64,
            channels: 3,
            noise: 0.1,
            sparsity: SparsityConfig::default(),
            seed: 0,
        }
    }
}

pub fn motif_len(seq_len: usize) -> usize {
    (seq_len / 8).max(2).min(seq_len)
}

/// Motif value of class `k` on channel `d` at burst position `j` of `l`.
pub fn motif_value(k: usize, d: usize, channels: usize, j: usize, l: usize) -> f64 {
    let cycles = 0.5 + 0.5 * k as f64;
    let phase = PI * (d as f64) * (k as f64 + 1.0) / channels as f64;
    (2.0 * PI * cycles * j as f64 / l as f64 + phase).sin()
}

/// Mostly-zero sequences carrying one short class-specific sinusoid burst
/// at a random offset, plus Gaussian noise, then [`induce_sparsity`].
///
/// Class `k` uses `0.5 + 0.5k` cycles over a burst of `T/8` steps, with a
/// per-channel phase shift of `pi * d * (k + 1) / D`.
pub fn synth_classification(spec: &ClassificationSpec) -> Result<SequenceDataset> {
    if spec.classes < 2 {
        return Err(Error::Config(format!("need at least 2 classes, got {}", spec.classes)));
    }
    if spec.len == 0 || spec.channels == 0 || spec.n_per_class == 0 {
        return Err(Error::Config("sequence length, channels and n_per_class must be positive".into()));
    }
    let mut rng = Rng::new(spec.seed);
    let l = motif_len(spec.len);
    let (t, d) = (spec.len, spec.channels);
    let mut sequences = Vec::with_capacity(spec.n_per_class * spec.classes);
    let mut labels = Vec::with_capacity(spec.n_per_class * spec.classes);
    for k in 0..spec.classes {
        for _ in 0..spec.n_per_class {
            let offset = rng.below(t - l + 1);
            let mut data = vec![0.0; t * d];
            for j in 0..l {
                for c in 0..d {
                    data[(offset + j) * d + c] = motif_value(k, c, d, j, l);
                }
            }
            if spec.noise > 0.0 {
                for v in &mut data {
                    *v += spec.noise * rng.normal();
                }
            }
            sequences.push(Matrix::from_vec(t, d, data)?);
            labels.push(k);
        }
    }
    let ds = SequenceDataset::new(
        "synthetic-classification",
        sequences,
        Targets::Labels {
            labels,
            classes: spec.classes,
        },
    )?;
    let sparsity = SparsityConfig {
        seed: spec.sparsity.seed ^ spec.seed.rotate_left(17),
        ..spec.sparsity
    };
    induce_sparsity(&ds, &sparsity)
}

/// Parameters for [`synth_regression`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSpec {
    pub n: usize,
    pub len: usize,
    pub horizon: usize,
    pub slope: f64,
    pub amplitudes: [f64; 2],
    pub periods: [f64; 2],
    pub noise: f64,
    pub seed: u64,
}

impl Default for RegressionSpec {
    fn default() -> Self {
        RegressionSpec {
            n: 400,
            len: 16,
            horizon: 1,
            slope: 0.005,
            amplitudes: [1.0, 0.5],
            periods: [20.0, 7.0],
            noise: 0.05,
            seed: 0,
        }
    }
}

/// The underlying series: linear trend plus two sinusoids plus noise.
/// Phases come from the seed.
pub fn synth_series(spec: &RegressionSpec, total: usize) -> Vec<f64> {
    let mut rng = Rng::new(spec.seed);
    let phases = [rng.uniform(0.0, 2.0 * PI), rng.uniform(0.0, 2.0 * PI)];
    (0..total)
        .map(|i| {
            let i = i as f64;
            let mut v = spec.slope * i;
            for k in 0..2 {
                v += spec.amplitudes[k] * (2.0 * PI * i / spec.periods[k] + phases[k]).sin();
            }
            if spec.noise > 0.0 {
                v += spec.noise * rng.normal();
            }
            v
        })
        .collect()
}

/// Sliding windows over [`synth_series`]: input is `len` consecutive values
/// (`D = 1`), target is the value `horizon` steps after the window's last.
pub fn synth_regression(spec: &RegressionSpec) -> Result<SequenceDataset> {
    if spec.horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    if spec.n == 0 || spec.len == 0 {
        return Err(Error::Config("n and window length must be positive".into()));
    }
    let series = synth_series(spec, spec.n + spec.len + spec.horizon - 1);
    let mut sequences = Vec::with_capacity(spec.n);
    let mut values = Vec::with_capacity(spec.n);
    for j in 0..spec.n {
        sequences.push(Matrix::from_vec(spec.len, 1, series[j..j + spec.len].to_vec())?);
        values.push(vec![series[j + spec.len - 1 + spec.horizon]]);
    }
    SequenceDataset::new("synthetic-regression", sequences, Targets::Values { values, dim: 1 })
}

/// MSE of predicting every target as the last observed value of channel 0.
/// With a scaler, predictions and targets are mapped to standardised target
/// units first, so the figure is comparable to a model trained on scaled data.
pub fn persistence_mse(ds: &SequenceDataset, scaler: Option<&Scaler>) -> Result<f64> {
    let Targets::Values { values, dim } = &ds.targets else {
        return Err(Error::Input("persistence baseline needs a regression dataset".into()));
    };
    if ds.is_empty() {
        return Err(Error::Input("empty dataset".into()));
    }
    let mut total = 0.0;
    for (seq, target) in ds.sequences.iter().zip(values) {
        let last = seq.get(seq.rows() - 1, 0);
        for (k, &y) in target.iter().enumerate() {
            let (p, y) = match scaler {
                Some(s) => (s.scale_target(k, last), s.scale_target(k, y)),
                None => (last, y),
            };
            total += (p - y) * (p - y);
        }
    }
    Ok(total / (ds.n() * dim) as f64)
}
