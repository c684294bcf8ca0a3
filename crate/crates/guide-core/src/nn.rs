//! Minimal numerical kernel: dense/sparse matrices, the forward/backward
//! rules the model needs, Glorot initialization, and Adam.
//!
//! Everything is f64. Matrix products parallelize over output rows, which
//! keeps results bit-identical regardless of thread count: each output row
//! is accumulated by exactly one thread in a fixed order.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite gradient in parameter {name} at step {step}")]
    NonFiniteGradient { name: String, step: u64 },
}

/// Row-major dense matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must be rows*cols");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
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

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) {
        assert_eq!(self.shape(), other.shape(), "add_assign shape mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.shape(), other.shape(), "sub shape mismatch");
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        DenseMatrix::from_vec(self.rows, self.cols, data)
    }

    /// Maximum absolute difference between two same-shaped matrices.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Compressed sparse row matrix; shared by the normalized adjacency and
/// any other sparse operand.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from per-row (column, value) lists. Columns within a row must
    /// be strictly increasing.
    pub fn from_row_entries(rows: usize, cols: usize, entries: &[Vec<(usize, f64)>]) -> Self {
        assert_eq!(entries.len(), rows);
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in entries {
            let mut last: Option<usize> = None;
            for &(c, v) in row {
                assert!(c < cols, "column index out of range");
                if let Some(prev) = last {
                    assert!(c > prev, "row columns must be strictly increasing");
                }
                last = Some(c);
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self { rows, cols, indptr, indices, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let start = self.indptr[i];
        let end = self.indptr[i + 1];
        self.indices[start..end]
            .iter()
            .zip(self.values[start..end].iter())
            .map(|(&c, &v)| (c, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let start = self.indptr[i];
        let end = self.indptr[i + 1];
        match self.indices[start..end].binary_search(&j) {
            Ok(p) => self.values[start + p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row_entries(i) {
                out.set(i, j, v);
            }
        }
        out
    }
}

/// Dense product a·b.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(
        a.cols, b.rows,
        "matmul dimension mismatch: {}x{} · {}x{}",
        a.rows, a.cols, b.rows, b.cols
    );
    let (n, k, m) = (a.rows, a.cols, b.cols);
    let mut out = DenseMatrix::zeros(n, m);
    out.data
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(i, out_row)| {
            let a_row = &a.data[i * k..(i + 1) * k];
            for (p, &aip) in a_row.iter().enumerate() {
                if aip == 0.0 {
                    continue;
                }
                let b_row = &b.data[p * m..(p + 1) * m];
                for (o, &bv) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += aip * bv;
                }
            }
        });
    out
}

/// aᵀ·b without materializing the transpose twice over.
pub fn matmul_at_b(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.rows, b.rows, "matmul_at_b dimension mismatch");
    matmul(&a.transpose(), b)
}

/// a·bᵀ via row-by-row dot products (both operands row-contiguous).
pub fn matmul_a_bt(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.cols, b.cols, "matmul_a_bt dimension mismatch");
    let (n, k, m) = (a.rows, a.cols, b.rows);
    let mut out = DenseMatrix::zeros(n, m);
    out.data
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(i, out_row)| {
            let a_row = &a.data[i * k..(i + 1) * k];
            for (j, o) in out_row.iter_mut().enumerate() {
                let b_row = &b.data[j * k..(j + 1) * k];
                let mut acc = 0.0;
                for (x, y) in a_row.iter().zip(b_row.iter()) {
                    acc += x * y;
                }
                *o = acc;
            }
        });
    out
}

/// Sparse·dense product; skips stored zeros by construction.
pub fn spmm(s: &CsrMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(
        s.cols, b.rows,
        "spmm dimension mismatch: {}x{} · {}x{}",
        s.rows, s.cols, b.rows, b.cols
    );
    let m = b.cols;
    let mut out = DenseMatrix::zeros(s.rows, m);
    out.data
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(i, out_row)| {
            let start = s.indptr[i];
            let end = s.indptr[i + 1];
            for p in start..end {
                let c = s.indices[p];
                let v = s.values[p];
                let b_row = &b.data[c * m..(c + 1) * m];
                for (o, &bv) in out_row.iter_mut().zip(b_row.iter()) {
                    *o += v * bv;
                }
            }
        });
    out
}

/// Elementwise max(0, x).
pub fn relu(x: &DenseMatrix) -> DenseMatrix {
    let data = x.data.iter().map(|&v| v.max(0.0)).collect();
    DenseMatrix::from_vec(x.rows, x.cols, data)
}

/// Backward of ReLU: passes upstream where the pre-activation was > 0.
/// The subgradient at exactly 0 is 0.
pub fn relu_backward(pre_activation: &DenseMatrix, upstream: &DenseMatrix) -> DenseMatrix {
    assert_eq!(pre_activation.shape(), upstream.shape(), "relu_backward shape mismatch");
    let data = pre_activation
        .data
        .iter()
        .zip(upstream.data.iter())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    DenseMatrix::from_vec(upstream.rows, upstream.cols, data)
}

/// Squared Frobenius norm. Gradient of ‖M‖² w.r.t. M is 2·M.
pub fn frobenius_sq(m: &DenseMatrix) -> f64 {
    m.data.iter().map(|v| v * v).sum()
}

/// Per-row squared norms, accumulated left to right so that their sum is
/// bit-identical to a row-major full-matrix accumulation.
pub fn row_sq_norms(m: &DenseMatrix) -> Vec<f64> {
    (0..m.rows)
        .map(|i| m.row(i).iter().map(|v| v * v).sum())
        .collect()
}

/// Glorot (Xavier) uniform init on ±√(6/(rows+cols)).
pub fn glorot_init(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    assert!(rows > 0 && cols > 0, "glorot_init needs positive dims");
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    DenseMatrix::from_vec(rows, cols, data)
}

/// A trainable value with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub value: DenseMatrix,
    pub grad: DenseMatrix,
}

impl Parameter {
    pub fn new(value: DenseMatrix) -> Self {
        let grad = DenseMatrix::zeros(value.rows(), value.cols());
        Self { value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Adam state for one parameter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: DenseMatrix,
    v: DenseMatrix,
}

/// Adam optimizer over a fixed list of parameters. Hyperparameter defaults:
/// β₁=0.9, β₂=0.999, ε=1e-8.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    states: Vec<AdamState>,
}

impl Adam {
    pub fn new(lr: f64, shapes: &[(usize, usize)]) -> Self {
        let states = shapes
            .iter()
            .map(|&(r, c)| AdamState {
                m: DenseMatrix::zeros(r, c),
                v: DenseMatrix::zeros(r, c),
            })
            .collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            states,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update with bias correction; gradients are zeroed afterwards.
    /// `params` must be passed in the same order every step.
    pub fn step(&mut self, params: &mut [(&str, &mut Parameter)]) -> Result<(), NnError> {
        assert_eq!(params.len(), self.states.len(), "parameter count changed");
        self.step += 1;
        let t = self.step;
        for (name, p) in params.iter() {
            if !p.grad.is_finite() {
                return Err(NnError::NonFiniteGradient {
                    name: name.to_string(),
                    step: t,
                });
            }
        }
        let bc1 = 1.0 - self.beta1.powi(t as i32);
        let bc2 = 1.0 - self.beta2.powi(t as i32);
        for ((_, p), st) in params.iter_mut().zip(self.states.iter_mut()) {
            for idx in 0..p.value.data.len() {
                let g = p.grad.data[idx];
                let m = self.beta1 * st.m.data[idx] + (1.0 - self.beta1) * g;
                let v = self.beta2 * st.v.data[idx] + (1.0 - self.beta2) * g * g;
                st.m.data[idx] = m;
                st.v.data[idx] = v;
                let m_hat = m / bc1;
                let v_hat = v / bc2;
                p.value.data[idx] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
            p.zero_grad();
        }
        Ok(())
    }
}
