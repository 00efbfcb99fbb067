//! Dense row-major matrices, vectors and the seeded random source.
//!
//! Everything is `f64`. Public operations validate shapes and report
//! non-finite results as [`Error::Numeric`]; the `pub(crate)` fast paths
//! used inside the recurrent and dense layers skip those checks and leave
//! finiteness to the loss computation.

use rand::seq::index;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementwiseOp {
    Add,
    Sub,
    Mul,
}

fn check_finite(what: &str, data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::Numeric(format!(
            "{what} has non-finite value {} at flat index {i}",
            data[i]
        ))),
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim(format!("matrix shape {rows}x{cols} has a zero dimension")));
        }
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        check_finite("matrix", &data)?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dim("ragged rows"));
        }
        Matrix::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn ensure_finite(&self) -> Result<()> {
        check_finite("matrix", &self.data)
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "matmul of {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out.ensure_finite()?;
        Ok(out)
    }

    pub fn matvec(&self, v: &Vector) -> Result<Vector> {
        if self.cols != v.len() {
            return Err(Error::dim(format!(
                "matrix {}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        self.matvec_acc(v.as_slice(), &mut out);
        check_finite("matvec result", &out)?;
        Ok(Vector(out))
    }

    /// `out += self * v`
    pub(crate) fn matvec_acc(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o += self.row(r).iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// `out += selfᵀ * v`
    pub(crate) fn matvec_t_acc(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * vr;
            }
        }
    }

    /// `self += u vᵀ`
    pub(crate) fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (r, &ur) in u.iter().enumerate() {
            if ur == 0.0 {
                continue;
            }
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (x, b) in row.iter_mut().zip(v) {
                *x += ur * b;
            }
        }
    }
}

impl Vector {
    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn ensure_finite(&self) -> Result<()> {
        check_finite("vector", &self.0)
    }

    pub fn elementwise(&self, other: &Vector, op: ElementwiseOp) -> Result<Vector> {
        if self.len() != other.len() {
            return Err(Error::dim(format!(
                "elementwise {op:?} on lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        let f = match op {
            ElementwiseOp::Add => |a: f64, b: f64| a + b,
            ElementwiseOp::Sub => |a: f64, b: f64| a - b,
            ElementwiseOp::Mul => |a: f64, b: f64| a * b,
        };
        let out: Vec<f64> = self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect();
        check_finite("elementwise result", &out)?;
        Ok(Vector(out))
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        self.elementwise(other, ElementwiseOp::Add)
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.elementwise(other, ElementwiseOp::Sub)
    }

    pub fn mul(&self, other: &Vector) -> Result<Vector> {
        self.elementwise(other, ElementwiseOp::Mul)
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Seeded pseudorandom source backed by ChaCha8.
///
/// The stream is fully determined by the 64-bit seed. Normal deviates use
/// the ziggurat sampler of `rand_distr`.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform in `[lo, hi]`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }

    /// `k` distinct indices from `0..n`, in sampling order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        index::sample(&mut self.inner, n, k.min(n)).into_vec()
    }
}

/// Glorot/Xavier uniform initialisation: entries in `[-L, L]`, `L = sqrt(6 / (rows + cols))`.
pub fn glorot_uniform(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let limit = glorot_limit(rows, cols);
    let data = (0..rows * cols).map(|_| rng.uniform(-limit, limit)).collect();
    Matrix { rows, cols, data }
}

pub fn glorot_limit(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};

    fn naive_matmul(a: &Matrix, b: &Matrix) -> Vec<f64> {
        let mut out = vec![0.0; a.rows() * b.cols()];
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out[i * b.cols() + j] = s;
            }
        }
        out
    }

    fn random_matrix(rng: &mut Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_vec(r, c, (0..r * c).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
    }

    #[test]
    fn identity_times_m() {
        let m = Matrix::from_rows(&[&[1.5, -2.0], &[0.25, 7.0]]).unwrap();
        assert_eq!(Matrix::identity(2).matmul(&m).unwrap(), m);
    }

    #[test]
    fn hand_product() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[&[1.0], &[1.0]]).unwrap();
        assert_eq!(a.matmul(&b).unwrap().data(), &[3.0, 7.0]);
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = Rng::new(11);
        let a = random_matrix(&mut rng, 5, 7);
        let b = random_matrix(&mut rng, 7, 3);
        let got = a.matmul(&b).unwrap();
        assert_eq!(got.shape(), (5, 3));
        for (g, e) in got.data().iter().zip(naive_matmul(&a, &b)) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        let err = a.matmul(&b).unwrap_err().to_string();
        assert!(err.contains("2x3 by 2x3"), "{err}");
    }

    #[test]
    fn non_finite_is_reported() {
        assert!(matches!(
            Matrix::from_vec(1, 2, vec![1.0, f64::NAN]),
            Err(Error::Numeric(_))
        ));
        let big = Matrix::from_rows(&[&[1e200]]).unwrap();
        assert!(matches!(big.matmul(&big), Err(Error::Numeric(_))));
    }

    #[test]
    fn elementwise_cases() {
        let a = Vector::from(vec![1.0, 0.0, 2.0]);
        let b = Vector::from(vec![3.0, 4.0, 5.0]);
        assert_eq!(a.mul(&b).unwrap().as_slice(), &[3.0, 0.0, 10.0]);
        assert_eq!(a.add(&Vector::zeros(3)).unwrap(), a);
        assert_eq!(a.sub(&a).unwrap(), Vector::zeros(3));
        assert!(matches!(a.add(&Vector::zeros(2)), Err(Error::Dimension(_))));
    }

    #[test]
    fn matvec_helpers_agree_with_matmul() {
        let mut rng = Rng::new(3);
        let m = random_matrix(&mut rng, 4, 6);
        let v: Vec<f64> = (0..6).map(|_| rng.normal()).collect();
        let col = Matrix::from_vec(6, 1, v.clone()).unwrap();
        let expect = m.matmul(&col).unwrap();
        let got = m.matvec(&Vector::from(v)).unwrap();
        for (a, b) in got.iter().zip(expect.data()) {
            assert!((a - b).abs() < 1e-14);
        }

        let u: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let mut out = vec![0.0; 6];
        m.matvec_t_acc(&u, &mut out);
        let expect = m.transpose().matvec(&Vector::from(u)).unwrap();
        for (a, b) in out.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn glorot_bounds_and_determinism() {
        let limit = glorot_limit(30, 20);
        let a = glorot_uniform(&mut Rng::new(42), 30, 20);
        let b = glorot_uniform(&mut Rng::new(42), 30, 20);
        assert!(a.data().iter().all(|v| v.abs() <= limit));
        assert_eq!(a.data(), b.data());
        let c = glorot_uniform(&mut Rng::new(43), 30, 20);
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn glorot_sample_mean_is_centered() {
        // Uniform on [-L, L] has sigma = L / sqrt(3).
        let (rows, cols) = (1000, 1000);
        let m = glorot_uniform(&mut Rng::new(7), rows, cols);
        let n = m.data().len() as f64;
        let mean = m.data().iter().sum::<f64>() / n;
        let sigma = glorot_limit(rows, cols) / 3f64.sqrt();
        assert!(mean.abs() < 3.0 * sigma / n.sqrt(), "mean {mean}");
    }

    #[test]
    fn sample_indices_distinct() {
        let mut rng = Rng::new(1);
        let mut idx = rng.sample_indices(100, 40);
        idx.sort_unstable();
        idx.dedup();
        assert_eq!(idx.len(), 40);
        assert!(idx.iter().all(|&i| i < 100));
    }

    proptest! {
        #[test]
        fn matmul_is_associative(seed in any::<u64>(), m in 1usize..=16, n in 1usize..=16, p in 1usize..=16, q in 1usize..=16) {
            let mut rng = Rng::new(seed);
            let a = random_matrix(&mut rng, m, n);
            let b = random_matrix(&mut rng, n, p);
            let c = random_matrix(&mut rng, p, q);
            let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
            let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
            for (x, y) in left.data().iter().zip(right.data()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn rng_replays_from_seed(seed in any::<u64>()) {
            let mut a = Rng::new(seed);
            let mut b = Rng::new(seed);
            for _ in 0..16 {
                prop_assert_eq!(a.next_f64().to_bits(), b.next_f64().to_bits());
                prop_assert_eq!(a.normal().to_bits(), b.normal().to_bits());
            }
        }
    }
}
