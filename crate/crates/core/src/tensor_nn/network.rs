use std::ops::Range;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fourier::{FourierFeatureConfig, FourierFeatures};
use super::matrix::{gemm, Matrix};
use super::Activation;
use crate::{Error, Result};

/// Shape and initialization of a dense network.
///
/// A `depth`-layer network has `depth` weight matrices and `depth - 1`
/// hidden activations; the output layer is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub depth: usize,
    pub hidden_dim: usize,
    /// Raw input width, before any Fourier encoding.
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<FourierFeatureConfig>,
    pub init_seed: u64,
}

impl NetworkConfig {
    pub fn new(depth: usize, hidden_dim: usize, input_dim: usize, output_dim: usize) -> Self {
        Self {
            depth,
            hidden_dim,
            input_dim,
            output_dim,
            activation: Activation::Relu,
            fourier: None,
            init_seed: 0,
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.init_seed = seed;
        self
    }

    pub fn with_fourier(mut self, fourier: Option<FourierFeatureConfig>) -> Self {
        self.fourier = fourier;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::Config("network depth must be >= 1".into()));
        }
        if self.input_dim == 0 || self.output_dim == 0 || (self.depth > 1 && self.hidden_dim == 0) {
            return Err(Error::Config(format!(
                "network dimensions must be >= 1 (in {}, hidden {}, out {})",
                self.input_dim, self.hidden_dim, self.output_dim
            )));
        }
        if let Some(ff) = &self.fourier {
            if ff.column >= self.input_dim {
                return Err(Error::Config(format!(
                    "Fourier column {} outside input width {}",
                    ff.column, self.input_dim
                )));
            }
            if ff.mapping_size == 0 {
                return Err(Error::Config("Fourier mapping size must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Width seen by the first weight matrix.
    pub fn encoded_input_dim(&self) -> usize {
        match &self.fourier {
            Some(ff) => self.input_dim - 1 + 2 * ff.mapping_size,
            None => self.input_dim,
        }
    }

    /// `(fan_in, fan_out)` of every layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let input = self.encoded_input_dim();
        if self.depth == 1 {
            return vec![(input, self.output_dim)];
        }
        let mut dims = Vec::with_capacity(self.depth);
        dims.push((input, self.hidden_dim));
        for _ in 0..self.depth - 2 {
            dims.push((self.hidden_dim, self.hidden_dim));
        }
        dims.push((self.hidden_dim, self.output_dim));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|&(i, o)| i * o + o).sum()
    }
}

/// Location of one layer inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpan {
    pub fan_in: usize,
    pub fan_out: usize,
    /// `fan_in x fan_out` row-major weight block.
    pub weights: Range<usize>,
    pub bias: Range<usize>,
}

fn layout(config: &NetworkConfig) -> Vec<LayerSpan> {
    let mut offset = 0;
    config
        .layer_dims()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let weights = offset..offset + fan_in * fan_out;
            let bias = weights.end..weights.end + fan_out;
            offset = bias.end;
            LayerSpan { fan_in, fan_out, weights, bias }
        })
        .collect()
}

/// Dense network with all trainable parameters in one flat vector
/// (layer by layer, weights then bias).
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    params: Vec<f64>,
    layers: Vec<LayerSpan>,
    fourier: Option<FourierFeatures>,
}

/// Gradient of a scalar loss with respect to every network parameter, in
/// flatten order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    values: Vec<f64>,
}

impl Gradients {
    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        assert_eq!(self.values.len(), other.values.len(), "gradient length mismatch");
        self.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += b);
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Input of every layer; `inputs[0]` is the encoded network input.
    inputs: Vec<Matrix>,
    /// Pre-activations of every hidden layer.
    pre_activations: Vec<Matrix>,
    output: Matrix,
}

impl ForwardPass {
    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre_activations
    }

    pub fn output(&self) -> &Matrix {
        &self.output
    }

    pub fn into_output(self) -> Matrix {
        self.output
    }
}

/// He-uniform initialization: weights in `±sqrt(6 / fan_in)`, zero biases.
pub fn mlp_init(config: NetworkConfig) -> Result<Network> {
    config.validate()?;
    let layers = layout(&config);
    let mut params = vec![0.0; config.param_count()];
    let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
    for span in &layers {
        let bound = (6.0 / span.fan_in as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound)
            .map_err(|e| Error::Config(format!("init bound: {e}")))?;
        for w in &mut params[span.weights.clone()] {
            *w = dist.sample(&mut rng);
        }
    }
    let fourier = config.fourier.clone().map(FourierFeatures::new).transpose()?;
    Ok(Network { config, params, layers, fourier })
}

/// Rebuilds a network from a flat parameter vector.
pub fn unflatten_params(config: NetworkConfig, params: Vec<f64>) -> Result<Network> {
    config.validate()?;
    let expected = config.param_count();
    if params.len() != expected {
        return Err(Error::Shape(format!(
            "parameter vector has {} entries, network needs {expected}",
            params.len()
        )));
    }
    let layers = layout(&config);
    let fourier = config.fourier.clone().map(FourierFeatures::new).transpose()?;
    Ok(Network { config, params, layers, fourier })
}

pub fn flatten_params(net: &Network) -> Vec<f64> {
    net.params.clone()
}

impl Network {
    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layers(&self) -> &[LayerSpan] {
        &self.layers
    }

    pub fn fourier(&self) -> Option<&FourierFeatures> {
        self.fourier.as_ref()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "parameter vector has {} entries, network needs {}",
                params.len(),
                self.params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Weight matrices and bias vectors as separate ranges, in flatten order.
    pub fn param_blocks(&self) -> Vec<Range<usize>> {
        self.layers.iter().flat_map(|l| [l.weights.clone(), l.bias.clone()]).collect()
    }

    /// Layer index owning a flat parameter index.
    pub fn layer_of(&self, index: usize) -> Option<usize> {
        self.layers.iter().position(|l| index >= l.weights.start && index < l.bias.end)
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.params[self.layers[layer].weights.clone()]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.params[self.layers[layer].bias.clone()]
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut [f64] {
        let r = self.layers[layer].bias.clone();
        &mut self.params[r]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        let r = self.layers[layer].weights.clone();
        &mut self.params[r]
    }

    /// Bit-level checksum of all trainable parameters.
    pub fn checksum(&self) -> u64 {
        super::checksum_f64(&self.params)
    }

    fn encode_input(&self, batch: &Matrix) -> Result<Matrix> {
        if batch.cols() != self.config.input_dim {
            return Err(Error::Shape(format!(
                "input has {} columns, network expects {}",
                batch.cols(),
                self.config.input_dim
            )));
        }
        let Some(ff) = &self.fourier else {
            return Ok(batch.clone());
        };
        let col = ff.config().column;
        let width = self.config.encoded_input_dim();
        let mut out = Matrix::zeros(batch.rows(), width);
        for r in 0..batch.rows() {
            let src = batch.row(r);
            let dst = out.row_mut(r);
            dst[..col].copy_from_slice(&src[..col]);
            ff.encode_into(src[col], &mut dst[col..col + ff.width()]);
            dst[col + ff.width()..].copy_from_slice(&src[col + 1..]);
        }
        Ok(out)
    }

    fn affine(&self, layer: usize, input: &Matrix) -> Matrix {
        let span = &self.layers[layer];
        let rows = input.rows();
        let mut z = Matrix::zeros(rows, span.fan_out);
        let bias = &self.params[span.bias.clone()];
        for r in 0..rows {
            z.row_mut(r).copy_from_slice(bias);
        }
        gemm(
            rows,
            span.fan_in,
            span.fan_out,
            input.as_slice(),
            (span.fan_in as isize, 1),
            &self.params[span.weights.clone()],
            (span.fan_out as isize, 1),
            1.0,
            z.as_mut_slice(),
        );
        z
    }

    /// Forward pass; rows are independent samples.
    pub fn forward(&self, batch: &Matrix) -> Result<Matrix> {
        let mut a = self.encode_input(batch)?;
        let act = self.config.activation;
        let last = self.layers.len() - 1;
        for l in 0..=last {
            let mut z = self.affine(l, &a);
            if l < last {
                z.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
            }
            a = z;
        }
        Ok(a)
    }

    /// Forward pass that keeps the intermediates needed by [`Network::backward_pass`].
    pub fn forward_pass(&self, batch: &Matrix) -> Result<ForwardPass> {
        let act = self.config.activation;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(last);
        inputs.push(self.encode_input(batch)?);
        let mut output = None;
        for l in 0..=last {
            let z = self.affine(l, &inputs[l]);
            if l < last {
                let mut a = z.clone();
                a.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
                pre_activations.push(z);
                inputs.push(a);
            } else {
                output = Some(z);
            }
        }
        Ok(ForwardPass { inputs, pre_activations, output: output.expect("network has a layer") })
    }

    /// Exact reverse-mode gradients of the scalar loss whose derivative with
    /// respect to the network output is `upstream`.
    pub fn backward_pass(&self, pass: &ForwardPass, upstream: &Matrix) -> Result<Gradients> {
        let out = &pass.output;
        if upstream.rows() != out.rows() || upstream.cols() != out.cols() {
            return Err(Error::Shape(format!(
                "upstream gradient is {}x{}, output is {}x{}",
                upstream.rows(),
                upstream.cols(),
                out.rows(),
                out.cols()
            )));
        }
        let act = self.config.activation;
        let rows = out.rows();
        let mut grads = Gradients::zeros(self.params.len());
        let mut delta = upstream.clone();
        for l in (0..self.layers.len()).rev() {
            let span = &self.layers[l];
            let input = &pass.inputs[l];
            // dW = input^T * delta
            gemm(
                span.fan_in,
                rows,
                span.fan_out,
                input.as_slice(),
                (1, span.fan_in as isize),
                delta.as_slice(),
                (span.fan_out as isize, 1),
                0.0,
                &mut grads.values[span.weights.clone()],
            );
            let db = &mut grads.values[span.bias.clone()];
            for r in 0..rows {
                db.iter_mut().zip(delta.row(r)).for_each(|(g, d)| *g += d);
            }
            if l > 0 {
                // d input = delta * W^T
                let mut da = Matrix::zeros(rows, span.fan_in);
                gemm(
                    rows,
                    span.fan_out,
                    span.fan_in,
                    delta.as_slice(),
                    (span.fan_out as isize, 1),
                    &self.params[span.weights.clone()],
                    (1, span.fan_out as isize),
                    0.0,
                    da.as_mut_slice(),
                );
                let z = &pass.pre_activations[l - 1];
                da.as_mut_slice()
                    .iter_mut()
                    .zip(z.as_slice())
                    .for_each(|(g, &zv)| *g *= act.derivative(zv));
                delta = da;
            }
        }
        Ok(grads)
    }

    /// Convenience wrapper: forward then backward on the same batch.
    pub fn backward(&self, batch: &Matrix, upstream: &Matrix) -> Result<Gradients> {
        let pass = self.forward_pass(batch)?;
        self.backward_pass(&pass, upstream)
    }
}
