//! Gated recurrent unit with exact backpropagation through time.
//!
//! One step, with `g` the gate activation:
//!
//! ```text
//! z  = g(Wz x + Uz h_prev + bz)
//! r  = g(Wr x + Ur h_prev + br)
//! h~ = tanh(Wh x + Uh (r * h_prev) + bh)
//! h  = (1 - z) * h_prev + z * h~
//! ```
//!
//! The classical cell uses the logistic sigmoid for `g`; the SST cell uses
//! the squared sigmoid. The candidate activation is tanh in both.

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::tensor::{glorot_uniform, Matrix, Rng, Vector};

/// Which gate activation a GRU uses.
#[derive(Debug, Clone, Copy)]
pub struct GruVariant {
    gate: ActivationKind,
    gate_grad: Option<fn(f64) -> f64>,
}

impl PartialEq for GruVariant {
    fn eq(&self, other: &Self) -> bool {
        self.gate == other.gate && self.gate_grad.is_none() && other.gate_grad.is_none()
    }
}

impl GruVariant {
    pub const CANDIDATE: ActivationKind = ActivationKind::Tf;

    pub fn new(gate: ActivationKind) -> Result<Self> {
        match gate {
            ActivationKind::Sf | ActivationKind::Ss => Ok(GruVariant {
                gate,
                gate_grad: None,
            }),
            other => Err(Error::Config(format!(
                "GRU gate activation must be sigmoid or ss, got {other}"
            ))),
        }
    }

    pub fn classical() -> Self {
        GruVariant {
            gate: ActivationKind::Sf,
            gate_grad: None,
        }
    }

    pub fn sst() -> Self {
        GruVariant {
            gate: ActivationKind::Ss,
            gate_grad: None,
        }
    }

    pub fn gate(&self) -> ActivationKind {
        self.gate
    }

    /// Replaces the gate derivative used by the backward pass.
    ///
    /// Only meant for proving that the gradient checker catches a wrong
    /// derivative; the forward pass is unaffected.
    #[doc(hidden)]
    pub fn with_gate_derivative(mut self, f: fn(f64) -> f64) -> Self {
        self.gate_grad = Some(f);
        self
    }

    #[inline]
    fn gate_derivative(&self, a: f64) -> f64 {
        match self.gate_grad {
            Some(f) => f(a),
            None => self.gate.derivative(a),
        }
    }
}

/// The nine weight and bias arrays of a GRU cell. Also used to hold
/// gradients of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub wz: Matrix,
    pub wr: Matrix,
    pub wh: Matrix,
    pub uz: Matrix,
    pub ur: Matrix,
    pub uh: Matrix,
    pub bz: Vector,
    pub br: Vector,
    pub bh: Vector,
}

pub const GRU_TENSOR_NAMES: [&str; 9] = ["wz", "wr", "wh", "uz", "ur", "uh", "bz", "br", "bh"];

impl GruParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        GruParams {
            wz: Matrix::zeros(hidden_dim, input_dim),
            wr: Matrix::zeros(hidden_dim, input_dim),
            wh: Matrix::zeros(hidden_dim, input_dim),
            uz: Matrix::zeros(hidden_dim, hidden_dim),
            ur: Matrix::zeros(hidden_dim, hidden_dim),
            uh: Matrix::zeros(hidden_dim, hidden_dim),
            bz: Vector::zeros(hidden_dim),
            br: Vector::zeros(hidden_dim),
            bh: Vector::zeros(hidden_dim),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.wz.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.wz.rows()
    }

    /// Parameter arrays in checkpoint order, paired with their names.
    pub fn tensors(&self) -> [(&'static str, &[f64]); 9] {
        [
            ("wz", self.wz.data()),
            ("wr", self.wr.data()),
            ("wh", self.wh.data()),
            ("uz", self.uz.data()),
            ("ur", self.ur.data()),
            ("uh", self.uh.data()),
            ("bz", self.bz.as_slice()),
            ("br", self.br.as_slice()),
            ("bh", self.bh.as_slice()),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 9] {
        [
            self.wz.data_mut(),
            self.wr.data_mut(),
            self.wh.data_mut(),
            self.uz.data_mut(),
            self.ur.data_mut(),
            self.uh.data_mut(),
            self.bz.as_mut_slice(),
            self.br.as_mut_slice(),
            self.bh.as_mut_slice(),
        ]
    }

    /// Checks that all nine arrays agree on input and hidden sizes and are finite.
    pub fn validate(&self) -> Result<()> {
        let (h, i) = (self.hidden_dim(), self.input_dim());
        let mats = [
            ("wz", &self.wz, (h, i)),
            ("wr", &self.wr, (h, i)),
            ("wh", &self.wh, (h, i)),
            ("uz", &self.uz, (h, h)),
            ("ur", &self.ur, (h, h)),
            ("uh", &self.uh, (h, h)),
        ];
        for (name, m, shape) in mats {
            if m.shape() != shape {
                return Err(Error::dim(format!(
                    "gru {name} is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    shape.0,
                    shape.1
                )));
            }
            m.ensure_finite()?;
        }
        for (name, b) in [("bz", &self.bz), ("br", &self.br), ("bh", &self.bh)] {
            if b.len() != h {
                return Err(Error::dim(format!("gru {name} has length {}, expected {h}", b.len())));
            }
            b.ensure_finite()?;
        }
        Ok(())
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(rng: &mut Rng, input_dim: usize, hidden_dim: usize) -> Result<GruParams> {
    if input_dim == 0 || hidden_dim == 0 {
        return Err(Error::Config(format!(
            "GRU dims must be positive (input {input_dim}, hidden {hidden_dim})"
        )));
    }
    Ok(GruParams {
        wz: glorot_uniform(rng, hidden_dim, input_dim),
        wr: glorot_uniform(rng, hidden_dim, input_dim),
        wh: glorot_uniform(rng, hidden_dim, input_dim),
        uz: glorot_uniform(rng, hidden_dim, hidden_dim),
        ur: glorot_uniform(rng, hidden_dim, hidden_dim),
        uh: glorot_uniform(rng, hidden_dim, hidden_dim),
        bz: Vector::zeros(hidden_dim),
        br: Vector::zeros(hidden_dim),
        bh: Vector::zeros(hidden_dim),
    })
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub a_z: Vec<f64>,
    pub a_r: Vec<f64>,
    pub a_h: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub h_cand: Vec<f64>,
}

pub fn step_forward(
    params: &GruParams,
    variant: &GruVariant,
    x_t: &Vector,
    h_prev: &Vector,
) -> Result<(Vector, StepCache)> {
    if x_t.len() != params.input_dim() {
        return Err(Error::dim(format!(
            "input of length {} for GRU with input_dim {}",
            x_t.len(),
            params.input_dim()
        )));
    }
    if h_prev.len() != params.hidden_dim() {
        return Err(Error::dim(format!(
            "state of length {} for GRU with hidden_dim {}",
            h_prev.len(),
            params.hidden_dim()
        )));
    }
    let (h, cache) = step(params, variant, x_t.as_slice(), h_prev.as_slice());
    Ok((Vector::from(h), cache))
}

fn step(params: &GruParams, variant: &GruVariant, x: &[f64], h_prev: &[f64]) -> (Vec<f64>, StepCache) {
    let gate = variant.gate;
    let affine = |w: &Matrix, u: &Matrix, b: &Vector, hv: &[f64]| {
        let mut a = b.as_slice().to_vec();
        w.matvec_acc(x, &mut a);
        u.matvec_acc(hv, &mut a);
        a
    };

    let a_z = affine(&params.wz, &params.uz, &params.bz, h_prev);
    let a_r = affine(&params.wr, &params.ur, &params.br, h_prev);
    let z: Vec<f64> = a_z.iter().map(|&a| gate.value(a)).collect();
    let r: Vec<f64> = a_r.iter().map(|&a| gate.value(a)).collect();
    let rh: Vec<f64> = r.iter().zip(h_prev).map(|(r, h)| r * h).collect();
    let a_h = affine(&params.wh, &params.uh, &params.bh, &rh);
    let h_cand: Vec<f64> = a_h.iter().map(|&a| GruVariant::CANDIDATE.value(a)).collect();
    let h: Vec<f64> = (0..h_prev.len())
        .map(|j| (1.0 - z[j]) * h_prev[j] + z[j] * h_cand[j])
        .collect();

    let cache = StepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        a_z,
        a_r,
        a_h,
        z,
        r,
        h_cand,
    };
    (h, cache)
}

/// Unrolls the cell over the rows of `xs` (T x input_dim). Row `t` of the
/// returned T x hidden matrix is the state after consuming `xs[t]`.
pub fn forward_sequence(
    params: &GruParams,
    variant: &GruVariant,
    xs: &Matrix,
    h0: &Vector,
) -> Result<(Matrix, Vec<StepCache>)> {
    if xs.rows() == 0 {
        return Err(Error::Input("empty sequence".into()));
    }
    if xs.cols() != params.input_dim() {
        return Err(Error::dim(format!(
            "sequence has {} channels, GRU expects {}",
            xs.cols(),
            params.input_dim()
        )));
    }
    if h0.len() != params.hidden_dim() {
        return Err(Error::dim(format!(
            "initial state of length {}, GRU hidden_dim is {}",
            h0.len(),
            params.hidden_dim()
        )));
    }
    let hidden = params.hidden_dim();
    let mut hs = Matrix::zeros(xs.rows(), hidden);
    let mut caches = Vec::with_capacity(xs.rows());
    let mut h = h0.as_slice().to_vec();
    for t in 0..xs.rows() {
        let (next, cache) = step(params, variant, xs.row(t), &h);
        hs.data_mut()[t * hidden..(t + 1) * hidden].copy_from_slice(&next);
        caches.push(cache);
        h = next;
    }
    Ok((hs, caches))
}

#[derive(Debug, Clone)]
pub struct GruGradients {
    pub params: GruParams,
    pub dl_dxs: Matrix,
    pub dl_dh0: Vector,
}

/// Exact gradients given `dl_dhs[t] = dL/dh_t` (the direct, non-recurrent
/// part for each step). The recurrence through `h_{t-1}` is accumulated here.
pub fn backward_sequence(
    params: &GruParams,
    variant: &GruVariant,
    caches: &[StepCache],
    dl_dhs: &Matrix,
) -> Result<GruGradients> {
    let hidden = params.hidden_dim();
    let input = params.input_dim();
    if caches.len() != dl_dhs.rows() {
        return Err(Error::Input(format!(
            "{} cached steps but {} state gradients",
            caches.len(),
            dl_dhs.rows()
        )));
    }
    if caches.is_empty() {
        return Err(Error::Input("empty sequence".into()));
    }
    if dl_dhs.cols() != hidden {
        return Err(Error::dim(format!(
            "state gradients have {} columns, hidden_dim is {hidden}",
            dl_dhs.cols()
        )));
    }

    let mut g = GruParams::zeros(input, hidden);
    let mut dl_dxs = Matrix::zeros(caches.len(), input);
    let mut carry = vec![0.0; hidden];

    let mut da_z = vec![0.0; hidden];
    let mut da_r = vec![0.0; hidden];
    let mut da_h = vec![0.0; hidden];
    let mut rh = vec![0.0; hidden];

    for (t, c) in caches.iter().enumerate().rev() {
        let mut dh_prev = vec![0.0; hidden];
        for j in 0..hidden {
            let dh = dl_dhs.get(t, j) + carry[j];
            da_z[j] = dh * (c.h_cand[j] - c.h_prev[j]) * variant.gate_derivative(c.a_z[j]);
            let dh_cand = dh * c.z[j];
            da_h[j] = dh_cand * GruVariant::CANDIDATE.derivative(c.a_h[j]);
            dh_prev[j] = dh * (1.0 - c.z[j]);
            rh[j] = c.r[j] * c.h_prev[j];
        }

        // through Uh (r * h_prev)
        let mut d_rh = vec![0.0; hidden];
        params.uh.matvec_t_acc(&da_h, &mut d_rh);
        for j in 0..hidden {
            da_r[j] = d_rh[j] * c.h_prev[j] * variant.gate_derivative(c.a_r[j]);
            dh_prev[j] += d_rh[j] * c.r[j];
        }
        params.uz.matvec_t_acc(&da_z, &mut dh_prev);
        params.ur.matvec_t_acc(&da_r, &mut dh_prev);

        g.wz.add_outer(&da_z, &c.x);
        g.wr.add_outer(&da_r, &c.x);
        g.wh.add_outer(&da_h, &c.x);
        g.uz.add_outer(&da_z, &c.h_prev);
        g.ur.add_outer(&da_r, &c.h_prev);
        g.uh.add_outer(&da_h, &rh);
        for j in 0..hidden {
            g.bz[j] += da_z[j];
            g.br[j] += da_r[j];
            g.bh[j] += da_h[j];
        }

        let dx = &mut dl_dxs.data_mut()[t * input..(t + 1) * input];
        params.wz.matvec_t_acc(&da_z, dx);
        params.wr.matvec_t_acc(&da_r, dx);
        params.wh.matvec_t_acc(&da_h, dx);

        carry = dh_prev;
    }

    Ok(GruGradients {
        params: g,
        dl_dxs,
        dl_dh0: Vector::from(carry),
    })
}
