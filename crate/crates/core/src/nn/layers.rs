use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{glorot_uniform, ParamSpec, Parameters};
use super::{axpy, dot, sigmoid, Matrix, NnError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output. ReLU uses the
    /// subgradient 0 at 0.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

/// Valid 1-D convolution with ReLU over an `L × in_dim` sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub width: usize,
    pub in_dim: usize,
    /// `filters × (width · in_dim)`; row `f` is filter `f` over a flattened window.
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

impl ConvLayer {
    pub fn new<R: Rng>(width: usize, in_dim: usize, filters: usize, rng: &mut R) -> Self {
        let fan_in = width * in_dim;
        ConvLayer {
            width,
            in_dim,
            weights: Matrix::from_vec(filters, fan_in, glorot_uniform(rng, fan_in, filters, filters * fan_in))
                .expect("consistent shape"),
            biases: vec![0.0; filters],
        }
    }

    pub fn filters(&self) -> usize {
        self.weights.rows()
    }

    /// `out[t][f] = relu(b_f + w_f · window_t)`, one row per window position.
    pub fn forward(&self, input: &Matrix) -> Result<Matrix, NnError> {
        if input.cols() != self.in_dim {
            return Err(NnError::Shape {
                expected: format!("{} input columns", self.in_dim),
                got: format!("{} columns", input.cols()),
            });
        }
        if input.rows() < self.width {
            return Err(NnError::SequenceTooShort {
                len: input.rows(),
                width: self.width,
            });
        }
        let steps = input.rows() - self.width + 1;
        let filters = self.filters();
        let mut out = Matrix::zeros(steps, filters);
        for t in 0..steps {
            let window = input.rows_slice(t, self.width);
            let row = out.row_mut(t);
            for (f, o) in row.iter_mut().enumerate() {
                *o = (self.biases[f] + dot(self.weights.row(f), window)).max(0.0);
            }
        }
        Ok(out)
    }

    /// Accumulates parameter gradients into `grad` given `∂L/∂output`.
    /// Returns `∂L/∂input` when `input_grad` is set.
    pub fn backward(
        &self,
        input: &Matrix,
        output: &Matrix,
        d_output: &Matrix,
        grad: &mut ConvLayer,
        input_grad: bool,
    ) -> Option<Matrix> {
        let steps = output.rows();
        let mut d_input = input_grad.then(|| Matrix::zeros(input.rows(), input.cols()));
        let span = self.width * self.in_dim;
        for t in 0..steps {
            let window = input.rows_slice(t, self.width);
            for f in 0..self.filters() {
                if output.get(t, f) <= 0.0 {
                    continue;
                }
                let g = d_output.get(t, f);
                if g == 0.0 {
                    continue;
                }
                grad.biases[f] += g;
                axpy(g, window, grad.weights.row_mut(f));
                if let Some(d) = d_input.as_mut() {
                    let start = t * self.in_dim;
                    axpy(g, self.weights.row(f), &mut d.data_mut()[start..start + span]);
                }
            }
        }
        d_input
    }
}

impl Parameters for ConvLayer {
    fn specs(&self, prefix: &str, out: &mut Vec<ParamSpec>) {
        out.push(ParamSpec::new(format!("{prefix}.weight"), vec![self.filters(), self.width, self.in_dim]));
        out.push(ParamSpec::new(format!("{prefix}.bias"), vec![self.filters()]));
    }

    fn slices<'a>(&'a self, out: &mut Vec<&'a [f64]>) {
        out.push(self.weights.data());
        out.push(&self.biases);
    }

    fn slices_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        out.push(self.weights.data_mut());
        out.push(&mut self.biases);
    }
}

fn pool_with_argmax(input: &Matrix) -> Result<(Vec<f64>, Vec<usize>), NnError> {
    if input.rows() == 0 {
        return Err(NnError::EmptyPool);
    }
    let mut best = input.row(0).to_vec();
    let mut argmax = vec![0; input.cols()];
    for t in 1..input.rows() {
        for (f, &v) in input.row(t).iter().enumerate() {
            // Strict comparison keeps the first maximal position on ties.
            if v > best[f] {
                best[f] = v;
                argmax[f] = t;
            }
        }
    }
    Ok((best, argmax))
}

/// Max over time: component `f` is the column maximum of `input`.
pub fn max_pool(input: &Matrix) -> Result<Vec<f64>, NnError> {
    pool_with_argmax(input).map(|(v, _)| v)
}

/// Parallel branches of stacked convolutions, each max-pooled over time, with
/// the pooled vectors concatenated in branch order.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnBlock {
    pub branches: Vec<Vec<ConvLayer>>,
}

/// Intermediate values from a [`CnnBlock`] forward pass.
#[derive(Debug, Clone)]
pub struct CnnCache {
    outputs: Vec<Vec<Matrix>>,
    argmax: Vec<Vec<usize>>,
}

impl CnnBlock {
    /// One branch per width; each branch stacks `depth` convolutions with
    /// `filters` filters.
    pub fn new<R: Rng>(widths: &[usize], filters: usize, depth: usize, in_dim: usize, rng: &mut R) -> Self {
        let branches = widths
            .iter()
            .map(|&w| {
                (0..depth)
                    .map(|d| ConvLayer::new(w, if d == 0 { in_dim } else { filters }, filters, rng))
                    .collect()
            })
            .collect();
        CnnBlock { branches }
    }

    pub fn out_dim(&self) -> usize {
        self.branches
            .iter()
            .map(|b| b.last().map_or(0, ConvLayer::filters))
            .sum()
    }

    /// Shortest input sequence every branch accepts.
    pub fn min_len(&self) -> usize {
        self.branches
            .iter()
            .map(|b| b.iter().map(|l| l.width - 1).sum::<usize>() + 1)
            .max()
            .unwrap_or(1)
    }

    pub fn forward_cached(&self, input: &Matrix) -> Result<(Vec<f64>, CnnCache), NnError> {
        let mut pooled = Vec::with_capacity(self.out_dim());
        let mut outputs = Vec::with_capacity(self.branches.len());
        let mut argmax = Vec::with_capacity(self.branches.len());
        for branch in &self.branches {
            let mut maps: Vec<Matrix> = Vec::with_capacity(branch.len());
            for layer in branch {
                let next = layer.forward(maps.last().unwrap_or(input))?;
                maps.push(next);
            }
            let (values, idx) = pool_with_argmax(maps.last().expect("branch has layers"))?;
            pooled.extend(values);
            outputs.push(maps);
            argmax.push(idx);
        }
        Ok((pooled, CnnCache { outputs, argmax }))
    }

    pub fn forward(&self, input: &Matrix) -> Result<Vec<f64>, NnError> {
        self.forward_cached(input).map(|(v, _)| v)
    }

    /// Accumulates parameter gradients. The input is treated as a constant
    /// (frozen embeddings), so no input gradient is produced.
    pub fn backward(&self, input: &Matrix, cache: &CnnCache, d_out: &[f64], grad: &mut CnnBlock) {
        let mut offset = 0;
        for (b, branch) in self.branches.iter().enumerate() {
            let maps = &cache.outputs[b];
            let last = maps.last().expect("branch has layers");
            let filters = last.cols();
            let mut d = Matrix::zeros(last.rows(), filters);
            for f in 0..filters {
                d.set(cache.argmax[b][f], f, d_out[offset + f]);
            }
            offset += filters;
            for l in (0..branch.len()).rev() {
                let layer_input = if l == 0 { input } else { &maps[l - 1] };
                let next = branch[l].backward(layer_input, &maps[l], &d, &mut grad.branches[b][l], l > 0);
                match next {
                    Some(next) => d = next,
                    None => break,
                }
            }
        }
    }
}

impl Parameters for CnnBlock {
    fn specs(&self, prefix: &str, out: &mut Vec<ParamSpec>) {
        for (b, branch) in self.branches.iter().enumerate() {
            for (l, layer) in branch.iter().enumerate() {
                layer.specs(&format!("{prefix}.branch{b}.conv{l}"), out);
            }
        }
    }

    fn slices<'a>(&'a self, out: &mut Vec<&'a [f64]>) {
        for layer in self.branches.iter().flatten() {
            layer.slices(out);
        }
    }

    fn slices_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        for layer in self.branches.iter_mut().flatten() {
            layer.slices_mut(out);
        }
    }
}

/// Runs a block of single-layer branches (one per filter width) and
/// concatenates their pooled outputs.
pub fn cnn_block(input: &Matrix, layers: &[ConvLayer]) -> Result<Vec<f64>, NnError> {
    let block = CnnBlock {
        branches: layers.iter().map(|l| vec![l.clone()]).collect(),
    };
    block.forward(input)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out_dim × in_dim`.
    pub weights: Matrix,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new<R: Rng>(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut R) -> Self {
        DenseLayer {
            weights: Matrix::from_vec(out_dim, in_dim, glorot_uniform(rng, in_dim, out_dim, in_dim * out_dim))
                .expect("consistent shape"),
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        if input.len() != self.in_dim() {
            return Err(NnError::Shape {
                expected: format!("input of length {}", self.in_dim()),
                got: format!("length {}", input.len()),
            });
        }
        Ok((0..self.out_dim())
            .map(|o| self.activation.apply(self.biases[o] + dot(self.weights.row(o), input)))
            .collect())
    }

    /// Backward pass given `∂L/∂z` for the pre-activation `z`.
    pub fn backward_pre(&self, input: &[f64], d_pre: &[f64], grad: &mut DenseLayer) -> Vec<f64> {
        let mut d_input = vec![0.0; self.in_dim()];
        for (o, &g) in d_pre.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.biases[o] += g;
            axpy(g, input, grad.weights.row_mut(o));
            axpy(g, self.weights.row(o), &mut d_input);
        }
        d_input
    }

    /// Backward pass given `∂L/∂y` for the layer output `y`.
    pub fn backward(&self, input: &[f64], output: &[f64], d_output: &[f64], grad: &mut DenseLayer) -> Vec<f64> {
        let d_pre: Vec<f64> = output
            .iter()
            .zip(d_output)
            .map(|(&y, &g)| g * self.activation.derivative_from_output(y))
            .collect();
        self.backward_pre(input, &d_pre, grad)
    }
}

impl Parameters for DenseLayer {
    fn specs(&self, prefix: &str, out: &mut Vec<ParamSpec>) {
        out.push(ParamSpec::new(format!("{prefix}.weight"), vec![self.out_dim(), self.in_dim()]));
        out.push(ParamSpec::new(format!("{prefix}.bias"), vec![self.out_dim()]));
    }

    fn slices<'a>(&'a self, out: &mut Vec<&'a [f64]>) {
        out.push(self.weights.data());
        out.push(&self.biases);
    }

    fn slices_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        out.push(self.weights.data_mut());
        out.push(&mut self.biases);
    }
}

/// A stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

impl Mlp {
    /// Hidden layers of the given widths, all with `activation`.
    pub fn new<R: Rng>(in_dim: usize, dims: &[usize], activation: Activation, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(dims.len());
        let mut prev = in_dim;
        for &d in dims {
            layers.push(DenseLayer::new(prev, d, activation, rng));
            prev = d;
        }
        Mlp { layers }
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::out_dim)
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, DenseLayer::in_dim)
    }

    /// Output of every layer, in order.
    pub fn forward_cached(&self, input: &[f64]) -> Result<Vec<Vec<f64>>, NnError> {
        let mut outs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let next = layer.forward(outs.last().map_or(input, Vec::as_slice))?;
            outs.push(next);
        }
        Ok(outs)
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        Ok(self.forward_cached(input)?.pop().unwrap_or_else(|| input.to_vec()))
    }

    /// Backpropagates `d_out` (w.r.t. the final output, or the final
    /// pre-activation when `d_out_is_pre`) and returns `∂L/∂input`.
    pub fn backward(
        &self,
        input: &[f64],
        outputs: &[Vec<f64>],
        d_out: &[f64],
        d_out_is_pre: bool,
        grad: &mut Mlp,
    ) -> Vec<f64> {
        let mut d = d_out.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer_input = if l == 0 { input } else { &outputs[l - 1] };
            d = if d_out_is_pre && l == self.layers.len() - 1 {
                self.layers[l].backward_pre(layer_input, &d, &mut grad.layers[l])
            } else {
                self.layers[l].backward(layer_input, &outputs[l], &d, &mut grad.layers[l])
            };
        }
        d
    }
}

impl Parameters for Mlp {
    fn specs(&self, prefix: &str, out: &mut Vec<ParamSpec>) {
        for (i, layer) in self.layers.iter().enumerate() {
            layer.specs(&format!("{prefix}.dense{i}"), out);
        }
    }

    fn slices<'a>(&'a self, out: &mut Vec<&'a [f64]>) {
        for layer in &self.layers {
            layer.slices(out);
        }
    }

    fn slices_mut<'a>(&'a mut self, out: &mut Vec<&'a mut [f64]>) {
        for layer in &mut self.layers {
            layer.slices_mut(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn conv(width: usize, in_dim: usize, filters: usize, bias: f64) -> ConvLayer {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = ConvLayer::new(width, in_dim, filters, &mut rng);
        c.biases.fill(bias);
        c
    }

    #[test]
    fn zero_input_conv_yields_relu_bias() {
        let input = Matrix::zeros(6, 3);
        let out = conv(2, 3, 4, 0.7).forward(&input).unwrap();
        assert_eq!((out.rows(), out.cols()), (5, 4));
        assert!(out.data().iter().all(|&v| v == 0.7));
        let out = conv(2, 3, 4, -0.7).forward(&input).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
        let out = conv(4, 3, 2, 0.0).forward(&Matrix::zeros(4, 3)).unwrap();
        assert_eq!(out.rows(), 1);
    }

    #[test]
    fn conv_rejects_short_or_wrong_width_input() {
        assert_eq!(
            conv(4, 3, 2, 0.0).forward(&Matrix::zeros(3, 3)),
            Err(NnError::SequenceTooShort { len: 3, width: 4 })
        );
        assert!(matches!(conv(2, 3, 2, 0.0).forward(&Matrix::zeros(3, 2)), Err(NnError::Shape { .. })));
    }

    #[test]
    fn conv_matches_hand_computation() {
        let mut c = conv(2, 1, 1, 0.5);
        c.weights = Matrix::from_vec(1, 2, vec![1.0, -2.0]).unwrap();
        let input = Matrix::from_vec(3, 1, vec![3.0, 1.0, 2.0]).unwrap();
        let out = c.forward(&input).unwrap();
        // 0.5 + 3 - 2 = 1.5; 0.5 + 1 - 4 = -2.5 -> 0
        assert_eq!(out.data(), &[1.5, 0.0]);
    }

    #[test]
    fn pooling() {
        let m = Matrix::from_rows(&[vec![1.0, 5.0]]).unwrap();
        assert_eq!(max_pool(&m).unwrap(), vec![1.0, 5.0]);
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![2.0, 3.0], vec![2.0, -1.0]]).unwrap();
        assert_eq!(max_pool(&m).unwrap(), vec![2.0, 3.0]);
        let (_, idx) = pool_with_argmax(&m).unwrap();
        assert_eq!(idx, vec![0, 1]);
        assert_eq!(max_pool(&Matrix::zeros(0, 2)), Err(NnError::EmptyPool));
    }

    #[test]
    fn block_widths_and_zero_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let block = CnnBlock::new(&[2, 3, 4], 64, 1, 5, &mut rng);
        assert_eq!(block.out_dim(), 192);
        assert_eq!(block.min_len(), 4);
        let out = block.forward(&Matrix::zeros(4, 5)).unwrap();
        assert_eq!(out, vec![0.0; 192]);

        let layers: Vec<ConvLayer> = block.branches.iter().map(|b| b[0].clone()).collect();
        assert_eq!(cnn_block(&Matrix::zeros(7, 5), &layers).unwrap().len(), 192);

        let stacked = CnnBlock::new(&[2], 200, 5, 5, &mut rng);
        assert_eq!(stacked.out_dim(), 200);
        assert_eq!(stacked.min_len(), 6);
        assert_eq!(stacked.forward(&Matrix::zeros(6, 5)).unwrap().len(), 200);
    }

    #[test]
    fn dense_forward_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut layer = DenseLayer::new(3, 3, Activation::Identity, &mut rng);
        layer.weights = Matrix::from_rows(&[vec![1., 0., 0.], vec![0., 1., 0.], vec![0., 0., 1.]]).unwrap();
        assert_eq!(layer.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);

        let mut sig = DenseLayer::new(2, 2, Activation::Sigmoid, &mut rng);
        sig.weights.data_mut().fill(0.0);
        assert_eq!(sig.forward(&[4.0, 5.0]).unwrap(), vec![0.5, 0.5]);

        let mut relu = DenseLayer::new(1, 1, Activation::Relu, &mut rng);
        relu.weights.data_mut().fill(1.0);
        assert_eq!(relu.forward(&[-3.0]).unwrap(), vec![0.0]);
        assert!(relu.forward(&[1.0, 2.0]).is_err());
    }
}
