//! Plain-text model checkpoints.
//!
//! Every parameter array is a block: a `rows cols` line followed by `rows`
//! lines of space-separated values with 17 significant digits (vectors are
//! stored as `1 len`). A model file is
//!
//! ```text
//! task classification <K> | task regression <d>
//! gru <input_dim> <hidden_dim> <gate_activation>
//! <wz> <wr> <wh> <uz> <ur> <uh> <bz> <br> <bh>
//! dense <in> <out> <activation>      (once per hidden dense layer)
//! <W> <b>
//! dense <in> <out> identity          (output head)
//! <W> <b>
//! scaler <channels> <target_dim>     (optional)
//! <mean> <std> [<target_mean> <target_std>]
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::activation::{parse_activation, ActivationKind};
use crate::data::Scaler;
use crate::dense::DenseParams;
use crate::error::{Error, Result};
use crate::gru::{GruParams, GruVariant};
use crate::model::{Model, ModelConfig, Task};
use crate::tensor::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub scaler: Option<Scaler>,
}

pub fn write_matrix(out: &mut String, m: &Matrix) {
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

fn write_vector(out: &mut String, v: &[f64]) {
    let _ = writeln!(out, "1 {}", v.len());
    let row: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
    let _ = writeln!(out, "{}", row.join(" "));
}

fn write_dense(out: &mut String, d: &DenseParams) {
    let _ = writeln!(out, "dense {} {} {}", d.input_dim(), d.output_dim(), d.activation);
    write_matrix(out, &d.w);
    write_vector(out, d.b.as_slice());
}

pub fn to_text(model: &Model, scaler: Option<&Scaler>) -> String {
    let mut s = String::new();
    match model.task() {
        Task::Classification { classes } => {
            let _ = writeln!(s, "task classification {classes}");
        }
        Task::Regression { out_dim } => {
            let _ = writeln!(s, "task regression {out_dim}");
        }
    }
    let g = &model.gru;
    let _ = writeln!(s, "gru {} {} {}", g.input_dim(), g.hidden_dim(), model.variant.gate());
    for m in [&g.wz, &g.wr, &g.wh, &g.uz, &g.ur, &g.uh] {
        write_matrix(&mut s, m);
    }
    for v in [&g.bz, &g.br, &g.bh] {
        write_vector(&mut s, v.as_slice());
    }
    for d in &model.dense {
        write_dense(&mut s, d);
    }
    write_dense(&mut s, &model.head);
    if let Some(sc) = scaler {
        let _ = writeln!(s, "scaler {} {}", sc.mean.len(), sc.target_mean.len());
        write_vector(&mut s, &sc.mean);
        write_vector(&mut s, &sc.std);
        if !sc.target_mean.is_empty() {
            write_vector(&mut s, &sc.target_mean);
            write_vector(&mut s, &sc.target_std);
        }
    }
    s
}

pub fn save(path: impl AsRef<Path>, model: &Model, scaler: Option<&Scaler>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_text(model, scaler)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, &path.display().to_string())
}

struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
    origin: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, origin: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Cursor { lines, pos: 0, origin }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.origin.to_string(),
            line,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|(_, l)| *l)
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let last = self.lines.last().map_or(0, |(n, _)| *n);
        let item = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.err(last + 1, format!("unexpected end of file, expected {what}")))?;
        self.pos += 1;
        Ok(item)
    }

    fn usize_field(&self, line: usize, s: &str) -> Result<usize> {
        s.parse().map_err(|_| self.err(line, format!("expected a non-negative integer, got '{s}'")))
    }

    /// Header line: `<keyword> <fields...>`.
    fn header(&mut self, keyword: &str, fields: usize) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.next(keyword)?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.first() != Some(&keyword) || parts.len() != fields + 1 {
            return Err(self.err(n, format!("expected '{keyword}' header with {fields} fields, got '{line}'")));
        }
        Ok((n, parts[1..].to_vec()))
    }

    fn matrix(&mut self, rows: usize, cols: usize, what: &str) -> Result<Matrix> {
        let (n, line) = self.next(what)?;
        let dims: Vec<&str> = line.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(self.err(n, format!("expected '<rows> <cols>' for {what}, got '{line}'")));
        }
        let (r, c) = (self.usize_field(n, dims[0])?, self.usize_field(n, dims[1])?);
        if (r, c) != (rows, cols) {
            return Err(Error::dim(format!(
                "{}:{n}: {what} is {r}x{c}, expected {rows}x{cols}",
                self.origin
            )));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (n, line) = self.next(what)?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| self.err(n, format!("bad number '{tok}' in {what}")))?;
                if !v.is_finite() {
                    return Err(self.err(n, format!("non-finite value in {what}")));
                }
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(self.err(n, format!("{what} row has {} values, expected {cols}", data.len() - before)));
            }
        }
        Matrix::from_vec(rows, cols, data)
    }

    fn vector(&mut self, len: usize, what: &str) -> Result<Vector> {
        Ok(Vector::from(self.matrix(1, len, what)?.data().to_vec()))
    }

    fn dense(&mut self, expect_in: usize) -> Result<DenseParams> {
        let (n, f) = self.header("dense", 3)?;
        let input = self.usize_field(n, f[0])?;
        let output = self.usize_field(n, f[1])?;
        if input != expect_in {
            return Err(Error::dim(format!(
                "{}:{n}: dense layer takes {input} inputs, previous layer gives {expect_in}",
                self.origin
            )));
        }
        let activation = parse_activation(f[2]).map_err(|e| self.err(n, e.to_string()))?;
        Ok(DenseParams {
            w: self.matrix(output, input, "dense weights")?,
            b: self.vector(output, "dense bias")?,
            activation,
        })
    }
}

pub fn parse(text: &str, origin: &str) -> Result<Checkpoint> {
    let mut c = Cursor::new(text, origin);

    let (n, f) = c.header("task", 2)?;
    let k = c.usize_field(n, f[1])?;
    let task = match f[0] {
        "classification" => Task::Classification { classes: k },
        "regression" => Task::Regression { out_dim: k },
        other => return Err(c.err(n, format!("unknown task '{other}'"))),
    };

    let (n, f) = c.header("gru", 3)?;
    let input = c.usize_field(n, f[0])?;
    let hidden = c.usize_field(n, f[1])?;
    let gate = parse_activation(f[2]).map_err(|e| c.err(n, e.to_string()))?;
    let variant = GruVariant::new(gate).map_err(|e| c.err(n, e.to_string()))?;
    let gru = GruParams {
        wz: c.matrix(hidden, input, "wz")?,
        wr: c.matrix(hidden, input, "wr")?,
        wh: c.matrix(hidden, input, "wh")?,
        uz: c.matrix(hidden, hidden, "uz")?,
        ur: c.matrix(hidden, hidden, "ur")?,
        uh: c.matrix(hidden, hidden, "uh")?,
        bz: c.vector(hidden, "bz")?,
        br: c.vector(hidden, "br")?,
        bh: c.vector(hidden, "bh")?,
    };

    let mut layers = Vec::new();
    let mut width = hidden;
    while c.peek().is_some_and(|l| l.starts_with("dense")) {
        let d = c.dense(width)?;
        width = d.output_dim();
        layers.push(d);
    }
    let head = layers
        .pop()
        .ok_or_else(|| c.err(0, "checkpoint has no output head"))?;
    if head.activation != ActivationKind::Identity || head.output_dim() != task.output_dim() {
        return Err(Error::dim(format!(
            "{origin}: output head must be identity with {} outputs, found {} with {}",
            task.output_dim(),
            head.activation,
            head.output_dim()
        )));
    }

    let scaler = if c.peek().is_some() {
        let (n, f) = c.header("scaler", 2)?;
        let channels = c.usize_field(n, f[0])?;
        let tdim = c.usize_field(n, f[1])?;
        if channels != input {
            return Err(Error::dim(format!(
                "{origin}:{n}: scaler has {channels} channels, model expects {input}"
            )));
        }
        let mean = c.vector(channels, "scaler mean")?.into_vec();
        let std = c.vector(channels, "scaler std")?.into_vec();
        let (target_mean, target_std) = if tdim > 0 {
            (
                c.vector(tdim, "scaler target mean")?.into_vec(),
                c.vector(tdim, "scaler target std")?.into_vec(),
            )
        } else {
            (Vec::new(), Vec::new())
        };
        Some(Scaler {
            mean,
            std,
            target_mean,
            target_std,
        })
    } else {
        None
    };
    if let Some((n, line)) = c.lines.get(c.pos) {
        return Err(c.err(*n, format!("trailing content '{line}'")));
    }

    let dense_activation = layers.first().map_or(ActivationKind::St, |d| d.activation);
    if layers.iter().any(|d| d.activation != dense_activation) {
        return Err(c.err(0, "dense layers must share one activation"));
    }
    let config = ModelConfig {
        input_dim: input,
        hidden_dim: hidden,
        dense_dims: layers.iter().map(|d| d.output_dim()).collect(),
        gate_activation: gate,
        dense_activation,
        task,
        seed: 0,
    };
    config.validate()?;
    Ok(Checkpoint {
        model: Model {
            config,
            variant,
            gru,
            dense: layers,
            head,
        },
        scaler,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_model;

    fn sample_model(task: Task) -> Model {
        let mut cfg = ModelConfig::sst(3, 5, task);
        cfg.dense_dims = vec![4, 6];
        cfg.seed = 12;
        build_model(&cfg).unwrap()
    }

    #[test]
    fn matrix_block_layout() {
        let mut s = String::new();
        write_matrix(&mut s, &Matrix::from_rows(&[&[1.0, -0.5], &[0.1, 2.0]]).unwrap());
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "2 2");
        assert_eq!(lines[1], "1.0000000000000000e0 -5.0000000000000000e-1");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        for task in [Task::Classification { classes: 3 }, Task::Regression { out_dim: 2 }] {
            let m = sample_model(task);
            let scaler = Scaler {
                mean: vec![0.1, -3.0, 1e-300],
                std: vec![1.0, 2.5, 1e-8],
                target_mean: if matches!(task, Task::Regression { .. }) { vec![0.3, 0.7] } else { vec![] },
                target_std: if matches!(task, Task::Regression { .. }) { vec![1.5, 0.2] } else { vec![] },
            };
            let text = to_text(&m, Some(&scaler));
            let ck = parse(&text, "mem").unwrap();
            assert_eq!(ck.model.tensors(), m.tensors());
            assert_eq!(ck.model.config.dense_dims, vec![4, 6]);
            assert_eq!(ck.scaler.as_ref(), Some(&scaler));
            assert_eq!(to_text(&ck.model, ck.scaler.as_ref()), text);

            let bare = parse(&to_text(&m, None), "mem").unwrap();
            assert!(bare.scaler.is_none());
        }
    }

    #[test]
    fn gru_header_first_after_task() {
        let text = to_text(&sample_model(Task::Classification { classes: 2 }), None);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("task classification 2"));
        assert_eq!(lines.next(), Some("gru 3 5 ss"));
    }

    #[test]
    fn corrupted_files_rejected() {
        let text = to_text(&sample_model(Task::Classification { classes: 2 }), None);
        let truncated: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(matches!(parse(&truncated, "t"), Err(Error::Parse { .. })));

        let bad_gate = text.replacen("gru 3 5 ss", "gru 3 5 relu", 1);
        assert!(matches!(parse(&bad_gate, "t"), Err(Error::Parse { line: 2, .. })));

        let bad_shape = text.replacen("gru 3 5 ss", "gru 4 5 ss", 1);
        assert!(matches!(parse(&bad_shape, "t"), Err(Error::Dimension(_))));

        let bad_num = text.replacen("e-1", "e-1x", 1);
        assert!(matches!(parse(&bad_num, "t"), Err(Error::Parse { .. })));

        let trailing = format!("{text}junk\n");
        assert!(parse(&trailing, "t").is_err());
    }
}
