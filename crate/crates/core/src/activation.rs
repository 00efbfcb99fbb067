//! Scalar activations and their exact derivatives.
//!
//! Besides the classical logistic sigmoid (`Sf`) and hyperbolic tangent
//! (`Tf`), two squared variants are provided:
//!
//! * `Ss(x) = Sf(x)^2`, a sigmoid that pushes small gate values further
//!   towards zero while large ones stay close to one;
//! * `St(x) = sign(x) * Tf(x)^2`, a sign-preserving squared tanh bounded
//!   in `[-1, 1]`.
//!
//! `Identity` and `Relu` are baselines.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Identity,
    Sf,
    Tf,
    Relu,
    Ss,
    St,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 6] = [
        ActivationKind::Identity,
        ActivationKind::Sf,
        ActivationKind::Tf,
        ActivationKind::Relu,
        ActivationKind::Ss,
        ActivationKind::St,
    ];

    /// Name accepted by [`parse_activation`] and written to checkpoints.
    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Identity => "identity",
            ActivationKind::Sf => "sigmoid",
            ActivationKind::Tf => "tanh",
            ActivationKind::Relu => "relu",
            ActivationKind::Ss => "ss",
            ActivationKind::St => "st",
        }
    }

    /// Value at `x`. Finite for every finite `x`.
    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            ActivationKind::Identity => x,
            ActivationKind::Sf => sigmoid(x),
            ActivationKind::Tf => x.tanh(),
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::Ss => {
                let s = sigmoid(x);
                s * s
            }
            ActivationKind::St => {
                let t = x.abs().tanh();
                let sq = t * t;
                if x < 0.0 {
                    -sq
                } else {
                    sq
                }
            }
        }
    }

    /// First derivative at `x`. `Relu` and `St` use 0 at the origin.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ActivationKind::Identity => 1.0,
            ActivationKind::Sf => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            ActivationKind::Tf => {
                let t = x.tanh();
                1.0 - t * t
            }
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Ss => {
                let s = sigmoid(x);
                2.0 * s * s * (1.0 - s)
            }
            ActivationKind::St => {
                // d/dx sign(x) tanh(x)^2 = 2 |tanh x| sech^2 x
                let t = x.abs().tanh();
                2.0 * t * (1.0 - t * t)
            }
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_activation(s)
    }
}

/// Logistic sigmoid, evaluated branchwise so `exp` never overflows.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_domain(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("activation input {x} is not finite")))
    }
}

pub fn eval(kind: ActivationKind, x: f64) -> Result<f64> {
    check_domain(x)?;
    Ok(kind.value(x))
}

pub fn grad(kind: ActivationKind, x: f64) -> Result<f64> {
    check_domain(x)?;
    Ok(kind.derivative(x))
}

pub fn eval_vec(kind: ActivationKind, v: &Vector) -> Result<Vector> {
    v.iter().map(|&x| eval(kind, x)).collect::<Result<Vec<_>>>().map(Vector::from)
}

pub fn grad_vec(kind: ActivationKind, v: &Vector) -> Result<Vector> {
    v.iter().map(|&x| grad(kind, x)).collect::<Result<Vec<_>>>().map(Vector::from)
}

pub fn parse_activation(name: &str) -> Result<ActivationKind> {
    let lower = name.trim().to_ascii_lowercase();
    ActivationKind::ALL
        .into_iter()
        .find(|k| k.name() == lower)
        .ok_or_else(|| {
            let valid: Vec<_> = ActivationKind::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!(
                "unknown activation '{name}'; valid names: {}",
                valid.join(", ")
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActivationKind::*;

    fn central_diff(kind: ActivationKind, x: f64, h: f64) -> f64 {
        (kind.value(x + h) - kind.value(x - h)) / (2.0 * h)
    }

    #[test]
    fn squared_sigmoid_at_log_nine() {
        let ln9 = 9f64.ln();
        assert!((Sf.value(ln9) - 0.9).abs() < 1e-15);
        assert!((Ss.value(ln9) - 0.81).abs() < 1e-12);
        assert!((Ss.value(-ln9) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn midpoints() {
        assert_eq!(Ss.value(0.0), 0.25);
        assert_eq!(St.value(0.0), 0.0);
        assert_eq!(Sf.value(0.0), 0.5);
        assert_eq!(Tf.value(0.0), 0.0);
    }

    #[test]
    fn squared_tanh_at_one() {
        // tanh(1)^2 = 0.58002565838597393060... (mpmath, 30 digits)
        let expected = 0.580_025_658_385_973_9;
        assert!((St.value(1.0) - expected).abs() < 1e-12);
        assert!((St.value(-1.0) + expected).abs() < 1e-12);
    }

    #[test]
    fn derivatives_at_origin() {
        assert_eq!(Ss.derivative(0.0), 0.25);
        assert_eq!(St.derivative(0.0), 0.0);
        assert_eq!(Sf.derivative(0.0), 0.25);
        assert_eq!(Relu.derivative(0.0), 0.0);
        assert!((central_diff(Ss, 0.0, 1e-6) - 0.25).abs() < 1e-9);
        // the symmetric quotient is tanh(h)^2 / h ~ h, vanishing with h
        assert!(central_diff(St, 0.0, 1e-6).abs() < 2e-6);
        assert!(central_diff(St, 0.0, 1e-9).abs() < 2e-9);
    }

    #[test]
    fn extreme_inputs_stay_finite() {
        for kind in ActivationKind::ALL {
            for x in [-1e4, -745.0, -50.0, 50.0, 710.0, 1e4] {
                assert!(kind.value(x).is_finite(), "{kind} at {x}");
                assert!(kind.derivative(x).is_finite(), "{kind}' at {x}");
            }
        }
        assert_eq!(Ss.value(1e4), 1.0);
        assert_eq!(Ss.value(-1e4), 0.0);
        assert_eq!(St.value(-1e4), -1.0);
    }

    #[test]
    fn non_finite_input_is_domain_error() {
        assert!(matches!(eval(Ss, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(grad(St, f64::INFINITY), Err(Error::Domain(_))));
        let v = Vector::from(vec![0.0, f64::NEG_INFINITY]);
        assert!(eval_vec(Tf, &v).is_err());
    }

    #[test]
    fn vector_forms() {
        assert_eq!(eval_vec(St, &Vector::zeros(3)).unwrap(), Vector::zeros(3));
        let v = Vector::from(vec![-2.0, -0.3, 0.0, 0.7, 4.0]);
        for kind in ActivationKind::ALL {
            let g = grad_vec(kind, &v).unwrap();
            for (gi, &x) in g.iter().zip(v.iter()) {
                assert_eq!(*gi, kind.derivative(x));
            }
        }
    }

    #[test]
    fn squared_sigmoid_below_sigmoid() {
        let mut rng = crate::tensor::Rng::new(5);
        let v = Vector::from((0..10_000).map(|_| rng.uniform(-20.0, 20.0)).collect::<Vec<_>>());
        let ss = eval_vec(Ss, &v).unwrap();
        let sf = eval_vec(Sf, &v).unwrap();
        assert!(ss.iter().zip(sf.iter()).all(|(a, b)| a <= b));
    }

    #[test]
    fn parse_names() {
        assert_eq!(parse_activation("ss").unwrap(), Ss);
        assert_eq!(parse_activation("TANH").unwrap(), Tf);
        assert_eq!(parse_activation("Sigmoid").unwrap(), Sf);
        let err = parse_activation("swish").unwrap_err().to_string();
        assert!(err.contains("swish") && err.contains("relu"), "{err}");
        for kind in ActivationKind::ALL {
            assert_eq!(kind.name().parse::<ActivationKind>().unwrap(), kind);
        }
    }

    #[test]
    fn squared_tanh_is_not_additive() {
        let (a, b) = (1.0, 1.0);
        assert!((St.value(a + b) - St.value(a) - St.value(b)).abs() > 0.1);
    }

    #[test]
    fn squared_tanh_continuous_at_zero() {
        assert!(St.value(1e-9).abs() < 1e-17);
        assert!(St.value(-1e-9).abs() < 1e-17);
    }

    #[test]
    fn squared_sigmoid_derivative_closed_form() {
        for i in -1000..=1000 {
            let x = i as f64 * 0.01;
            let s = Sf.value(x);
            assert!((Ss.derivative(x) - 2.0 * s * s * (1.0 - s)).abs() < 1e-12);
        }
    }
}
