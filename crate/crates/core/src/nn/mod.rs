//! A small double-precision neural network engine: valid 1-D convolution over
//! embedding sequences, max-over-time pooling, dense layers, binary
//! cross-entropy, backpropagation and Adam.

mod layers;
mod optim;
mod params;

use rayon::prelude::*;
use thiserror::Error;

pub use layers::{cnn_block, max_pool, Activation, CnnBlock, ConvLayer, DenseLayer, Mlp};
pub use optim::{adam_step, AdamState};
pub use params::{init_params, LayerShape, ModelParams, ParamBlock, ParamSpec, Parameters, ParamsError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },
    #[error("sequence of length {len} is shorter than filter width {width}")]
    SequenceTooShort { len: usize, width: usize },
    #[error("cannot pool an empty sequence")]
    EmptyPool,
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NnError> {
        if data.len() != rows * cols {
            return Err(NnError::Shape {
                expected: format!("{rows}x{cols} = {} values", rows * cols),
                got: format!("{} values", data.len()),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NnError> {
        let cols = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Matrix::from_vec(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// Rows `start..start + count` as one contiguous slice.
    pub fn rows_slice(&self, start: usize, count: usize) -> &[f64] {
        &self.data[start * self.cols..(start + count) * self.cols]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators let the compiler vectorize the reduction.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let k = i * 4;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in chunks * 4..a.len() {
        sum += a[k] * b[k];
    }
    sum
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (y, x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}

pub const BCE_EPSILON: f64 = 1e-7;

/// Binary cross-entropy with the prediction clamped to `[ε, 1-ε]`.
pub fn bce_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A differentiable binary classifier whose output is a sigmoid probability.
pub trait Network: Parameters + Clone + Send + Sync {
    type Input: Sync;

    /// Probability of the positive class.
    fn predict(&self, input: &Self::Input) -> Result<f64, NnError>;

    /// Adds `scale · ∂bce/∂θ` for one example into `grad` and returns the
    /// unscaled loss.
    fn accumulate_gradient(
        &self,
        input: &Self::Input,
        label: f64,
        scale: f64,
        grad: &mut Self,
    ) -> Result<f64, NnError>;

    fn zeros_like(&self) -> Self {
        let mut g = self.clone();
        let mut slices = Vec::new();
        g.slices_mut(&mut slices);
        for s in slices {
            s.fill(0.0);
        }
        g
    }
}

/// Examples per gradient work unit. Fixed so that the floating-point
/// reduction order does not depend on the number of threads.
const GRAD_CHUNK: usize = 8;

/// Mean batch loss and its exact gradient with respect to every parameter.
pub fn backward<N: Network>(
    network: &N,
    inputs: &[&N::Input],
    labels: &[f64],
) -> Result<(f64, N), NnError> {
    if inputs.len() != labels.len() {
        return Err(NnError::Shape {
            expected: format!("{} labels", inputs.len()),
            got: format!("{} labels", labels.len()),
        });
    }
    if inputs.is_empty() {
        return Ok((0.0, network.zeros_like()));
    }
    let scale = 1.0 / inputs.len() as f64;
    let partials: Vec<Result<(f64, N), NnError>> = inputs
        .par_chunks(GRAD_CHUNK)
        .zip(labels.par_chunks(GRAD_CHUNK))
        .map(|(xs, ys)| {
            let mut grad = network.zeros_like();
            let mut loss = 0.0;
            for (x, &y) in xs.iter().zip(ys) {
                loss += network.accumulate_gradient(x, y, scale, &mut grad)?;
            }
            Ok((loss, grad))
        })
        .collect();

    let mut partials = partials.into_iter();
    let (mut loss, mut total) = partials.next().expect("non-empty batch")?;
    for partial in partials {
        let (l, g) = partial?;
        loss += l;
        add_assign(&mut total, &g);
    }
    Ok((loss * scale, total))
}

/// `target += other`, parameter by parameter.
pub fn add_assign<N: Parameters>(target: &mut N, other: &N) {
    let mut dst = Vec::new();
    target.slices_mut(&mut dst);
    let mut src = Vec::new();
    other.slices(&mut src);
    for (d, s) in dst.into_iter().zip(src) {
        axpy(1.0, s, d);
    }
}

/// Mean BCE loss of a batch without gradients.
pub fn batch_loss<N: Network>(network: &N, inputs: &[&N::Input], labels: &[f64]) -> Result<f64, NnError> {
    let mut total = 0.0;
    for (x, &y) in inputs.iter().zip(labels) {
        total += bce_loss(network.predict(x)?, y);
    }
    Ok(total / inputs.len().max(1) as f64)
}
