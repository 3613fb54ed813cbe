//! Dense row-major matrices, activations, loss and seeded randomness.
//!
//! Everything is `f64`. Products go through `matrixmultiply::dgemm`, which
//! takes arbitrary strides, so transposed operands never get materialized.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Lower clamp applied to probabilities before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("data length {len} does not match shape {rows}x{cols}")]
    BadLength { rows: usize, cols: usize, len: usize },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("target id {id} at row {row} is out of range for {classes} classes")]
    TargetOutOfRange { row: usize, id: usize, classes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::BadLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input; meant for
    /// literals in tests and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 })
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
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

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy of rows `start..end`.
    pub fn row_block(&self, start: usize, end: usize) -> Matrix {
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    fn zip_with(
        &self,
        other: &Matrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix, NumericsError> {
        if self.shape() != other.shape() {
            return Err(NumericsError::ShapeMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, NumericsError> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, NumericsError> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn hadamard(&self, other: &Matrix) -> Result<Matrix, NumericsError> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    pub fn scale(&self, k: f64) -> Matrix {
        self.map(|x| x * k)
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// Sum over rows, as a `1 x cols` matrix.
    pub fn column_sums(&self) -> Matrix {
        let mut out = Matrix::zeros(1, self.cols);
        for r in 0..self.rows {
            for (o, &x) in out.data.iter_mut().zip(self.row(r)) {
                *o += x;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Whether an operand of [`gemm`] is read transposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trans {
    No,
    Yes,
}

/// `c = alpha * op(a) * op(b) + beta * c`.
///
/// `c` must already have the output shape; with `beta == 0` its prior
/// contents are ignored.
pub fn gemm(
    alpha: f64,
    a: &Matrix,
    ta: Trans,
    b: &Matrix,
    tb: Trans,
    beta: f64,
    c: &mut Matrix,
) -> Result<(), NumericsError> {
    let (m, k) = match ta {
        Trans::No => a.shape(),
        Trans::Yes => (a.cols, a.rows),
    };
    let (kb, n) = match tb {
        Trans::No => b.shape(),
        Trans::Yes => (b.cols, b.rows),
    };
    if k != kb || c.shape() != (m, n) {
        return Err(NumericsError::ShapeMismatch {
            op: "gemm",
            left: (m, k),
            right: (kb, n),
        });
    }
    gemm_slices(alpha, &a.data, a.cols, ta, &b.data, b.cols, tb, beta, &mut c.data, m, k, n);
    Ok(())
}

/// Raw-slice product. `lda`/`ldb` are the row lengths of the stored
/// (untransposed) operands; `c` is a dense `m x n` block.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm_slices(
    alpha: f64,
    a: &[f64],
    lda: usize,
    ta: Trans,
    b: &[f64],
    ldb: usize,
    tb: Trans,
    beta: f64,
    c: &mut [f64],
    m: usize,
    k: usize,
    n: usize,
) {
    assert_eq!(c.len(), m * n, "gemm output block");
    if m == 0 || n == 0 {
        return;
    }
    // Extent of the stored operands; dgemm reads through raw pointers.
    let (a_rows, a_cols) = if ta == Trans::No { (m, k) } else { (k, m) };
    let (b_rows, b_cols) = if tb == Trans::No { (k, n) } else { (n, k) };
    assert!(
        k == 0 || (a_cols <= lda && a.len() >= (a_rows - 1) * lda + a_cols),
        "gemm operand a out of bounds"
    );
    assert!(
        k == 0 || (b_cols <= ldb && b.len() >= (b_rows - 1) * ldb + b_cols),
        "gemm operand b out of bounds"
    );
    if k == 0 {
        c.iter_mut().for_each(|x| *x *= beta);
        return;
    }
    let (rsa, csa) = match ta {
        Trans::No => (lda as isize, 1),
        Trans::Yes => (1, lda as isize),
    };
    let (rsb, csb) = match tb {
        Trans::No => (ldb as isize, 1),
        Trans::Yes => (1, ldb as isize),
    };
    // matrixmultiply treats beta == 0 as "overwrite", so NaN garbage in c is fine.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix, NumericsError> {
    if a.cols != b.rows {
        return Err(NumericsError::ShapeMismatch {
            op: "matmul",
            left: a.shape(),
            right: b.shape(),
        });
    }
    let mut c = Matrix::zeros(a.rows, b.cols);
    gemm(1.0, a, Trans::No, b, Trans::No, 0.0, &mut c)?;
    Ok(c)
}

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(m: &Matrix) -> Matrix {
    m.map(sigmoid_scalar)
}

pub fn tanh_el(m: &Matrix) -> Matrix {
    m.map(f64::tanh)
}

/// In-place numerically stable softmax of one row.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}

pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows {
        softmax_in_place(out.row_mut(r));
    }
    out
}

/// Floors `p` at [`PROB_FLOOR`]; NaN passes through so divergence stays visible.
#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    if p < PROB_FLOOR {
        PROB_FLOOR
    } else {
        p
    }
}

/// Mean over rows of `-ln p[row][target]`.
pub fn cross_entropy(probs: &Matrix, targets: &[usize]) -> Result<f64, NumericsError> {
    if probs.rows != targets.len() {
        return Err(NumericsError::ShapeMismatch {
            op: "cross_entropy",
            left: probs.shape(),
            right: (targets.len(), 1),
        });
    }
    if targets.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        if t >= probs.cols {
            return Err(NumericsError::TargetOutOfRange {
                row: r,
                id: t,
                classes: probs.cols,
            });
        }
        total -= clamp_prob(probs.get(r, t)).ln();
    }
    Ok(total / targets.len() as f64)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw from a normalized probability row.
pub fn sample_categorical(probs: &[f64], rng: &mut Rng) -> Result<usize, NumericsError> {
    let sum: f64 = probs.iter().sum();
    if !((sum - 1.0).abs() <= 1e-6) || probs.iter().any(|&p| p < 0.0) {
        return Err(NumericsError::NotNormalized { sum });
    }
    let u = rng.next_f64() * sum;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = i;
        }
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    // u landed in the rounding gap above the final partial sum.
    Ok(last_nonzero)
}

/// Seeded ChaCha8 generator. Named substreams select distinct ChaCha
/// stream ids under the same key, so "weights", "dropout" and "sampling"
/// never share output.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

fn fnv1a(parent: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ parent;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fresh generator for `name`, independent of how much of `self` has
    /// been consumed.
    pub fn substream(&self, name: &str) -> Rng {
        Self::with_stream(self.seed, fnv1a(self.stream, name))
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.gen::<u64>()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use super::Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.uniform(-1.0, 1.0))
    }

    fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_times_m_is_m() {
        let mut rng = Rng::new(1);
        let m = random_matrix(3, 4, &mut rng);
        assert_eq!(matmul(&Matrix::identity(3), &m).unwrap(), m);
    }

    #[test]
    fn two_by_two_product() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = Matrix::from_rows(&[&[5.0], &[6.0]]);
        let c = matmul(&a, &b).unwrap();
        assert_eq!(c.data(), &[17.0, 39.0]);
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = Rng::new(7);
        let a = random_matrix(7, 5, &mut rng);
        let b = random_matrix(5, 3, &mut rng);
        assert!(max_abs_diff(&matmul(&a, &b).unwrap(), &naive_matmul(&a, &b)) < 1e-12);
    }

    #[test]
    fn gemm_transposed_operands() {
        let mut rng = Rng::new(8);
        let a = random_matrix(6, 4, &mut rng);
        let b = random_matrix(5, 4, &mut rng);
        let mut c = Matrix::zeros(6, 5);
        gemm(1.0, &a, Trans::No, &b, Trans::Yes, 0.0, &mut c).unwrap();
        assert!(max_abs_diff(&c, &naive_matmul(&a, &b.transpose())) < 1e-12);

        let mut d = Matrix::zeros(4, 4);
        gemm(1.0, &a, Trans::Yes, &a, Trans::No, 0.0, &mut d).unwrap();
        assert!(max_abs_diff(&d, &naive_matmul(&a.transpose(), &a)) < 1e-12);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let err = matmul(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3)).unwrap_err();
        assert_eq!(
            err,
            NumericsError::ShapeMismatch {
                op: "matmul",
                left: (2, 3),
                right: (2, 3)
            }
        );
    }

    #[test]
    fn activations_at_zero_and_saturation() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        assert_eq!(0.0f64.tanh(), 0.0);
        assert_eq!(sigmoid_scalar(1000.0), 1.0);
        assert_eq!(sigmoid_scalar(-1000.0), 0.0);
        assert!(!sigmoid_scalar(-1e308).is_nan());
    }

    #[test]
    fn sigmoid_symmetry() {
        let mut rng = Rng::new(3);
        for _ in 0..1000 {
            let x = rng.uniform(-30.0, 30.0);
            assert!((sigmoid_scalar(-x) - (1.0 - sigmoid_scalar(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_examples() {
        let u = softmax_rows(&Matrix::from_rows(&[&[0.0, 0.0, 0.0, 0.0]]));
        assert_eq!(u.data(), &[0.25; 4]);

        // exp/sum evaluated directly, independent of the max-shift path
        let e: Vec<f64> = [1.0f64, 2.0, 3.0].iter().map(|x| x.exp()).collect();
        let s: f64 = e.iter().sum();
        let oracle: Vec<f64> = e.iter().map(|x| x / s).collect();
        let p = softmax_rows(&Matrix::from_rows(&[&[1.0, 2.0, 3.0]]));
        for ((got, want), frozen) in p.data().iter().zip(&oracle).zip([0.09003057, 0.24472847, 0.66524096]) {
            assert!((got - want).abs() < 1e-12);
            assert!((got - frozen).abs() < 1e-8);
        }
    }

    #[test]
    fn cross_entropy_cases() {
        let one_hot = Matrix::from_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0]]);
        assert_eq!(cross_entropy(&one_hot, &[1, 0]).unwrap(), 0.0);

        let v = 87;
        let uniform = Matrix::from_fn(5, v, |_, _| 1.0 / v as f64);
        let loss = cross_entropy(&uniform, &[0, 5, 9, 86, 3]).unwrap();
        assert!((loss - (v as f64).ln()).abs() < 1e-12);
        assert!((loss - 4.4659).abs() < 1e-3);

        let mut rng = Rng::new(11);
        let probs = softmax_rows(&random_matrix(10, 5, &mut rng).scale(3.0));
        let targets: Vec<usize> = (0..10).map(|_| rng.below(5)).collect();
        let mut oracle = 0.0;
        for r in 0..10 {
            oracle += -probs.get(r, targets[r]).ln();
        }
        oracle /= 10.0;
        assert!((cross_entropy(&probs, &targets).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_rejects_bad_targets() {
        let p = Matrix::from_rows(&[&[0.5, 0.5]]);
        assert!(matches!(
            cross_entropy(&p, &[2]),
            Err(NumericsError::TargetOutOfRange { .. })
        ));
        assert!(matches!(
            cross_entropy(&p, &[0, 1]),
            Err(NumericsError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn cross_entropy_clamps_zero_probability() {
        let p = Matrix::from_rows(&[&[1.0, 0.0]]);
        let loss = cross_entropy(&p, &[1]).unwrap();
        assert!((loss - (-PROB_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn categorical_degenerate_and_frequency() {
        let mut rng = Rng::new(5);
        let p = [0.0, 0.0, 0.0, 1.0, 0.0];
        for _ in 0..1000 {
            assert_eq!(sample_categorical(&p, &mut rng).unwrap(), 3);
        }
        let half = [0.5, 0.5];
        let zeros = (0..100_000)
            .filter(|_| sample_categorical(&half, &mut rng).unwrap() == 0)
            .count();
        let freq = zeros as f64 / 100_000.0;
        assert!((0.49..=0.51).contains(&freq), "freq {freq}");
    }

    #[test]
    fn categorical_determinism_and_validation() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let draw = |seed| {
            let mut rng = Rng::new(seed);
            (0..50)
                .map(|_| sample_categorical(&p, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        let mut rng = Rng::new(0);
        assert!(matches!(
            sample_categorical(&[0.5, 0.6], &mut rng),
            Err(NumericsError::NotNormalized { .. })
        ));
    }

    #[test]
    fn named_substreams_differ() {
        let root = Rng::new(42);
        let mut a = root.substream("weights");
        let mut b = root.substream("dropout");
        let mut c = root.substream("sampling");
        let xs: Vec<u64> = (0..64).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..64).map(|_| b.next_u64()).collect();
        let zs: Vec<u64> = (0..64).map(|_| c.next_u64()).collect();
        assert!(xs.iter().zip(&ys).all(|(x, y)| x != y));
        assert!(xs.iter().zip(&zs).all(|(x, z)| x != z));
        let mut again = Rng::new(42).substream("weights");
        assert_eq!(xs[0], again.next_u64());
    }

    proptest! {
        #[test]
        fn softmax_rows_normalized_and_positive(row in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
            let p = softmax_rows(&Matrix::from_rows(&[&row]));
            let s: f64 = p.data().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            prop_assert!(p.data().iter().all(|&x| x.is_finite() && x >= 0.0));
        }

        #[test]
        fn softmax_shift_invariant(row in proptest::collection::vec(-50f64..50.0, 1..20), c in -100f64..100.0) {
            let a = softmax_rows(&Matrix::from_rows(&[&row]));
            let shifted: Vec<f64> = row.iter().map(|x| x + c).collect();
            let b = softmax_rows(&Matrix::from_rows(&[&shifted]));
            for (x, y) in a.data().iter().zip(b.data()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn activations_finite_at_extremes(xs in proptest::collection::vec(-1e3f64..1e3, 1..50)) {
            let m = Matrix::from_rows(&[&xs]);
            let s = sigmoid(&m);
            let t = tanh_el(&m);
            prop_assert!(s.data().iter().all(|&v| v.is_finite() && (0.0..=1.0).contains(&v)));
            prop_assert!(t.data().iter().all(|&v| v.is_finite() && (-1.0..=1.0).contains(&v)));
        }

        #[test]
        fn matmul_distributes_over_addition(seed in 0u64..1000) {
            let mut rng = Rng::new(seed);
            let a = random_matrix(4, 3, &mut rng);
            let b = random_matrix(3, 5, &mut rng);
            let c = random_matrix(3, 5, &mut rng);
            let lhs = matmul(&a, &b.add(&c).unwrap()).unwrap();
            let rhs = matmul(&a, &b).unwrap().add(&matmul(&a, &c).unwrap()).unwrap();
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-10);
            let left_id = matmul(&Matrix::identity(4), &a).unwrap();
            prop_assert!(max_abs_diff(&left_id, &a) < 1e-10);
        }
    }
}
