//! The nonlinear component: a small fully-connected perceptron with explicit
//! forward and backward passes.
//!
//! The network maps the expanded feature vector to a scalar through L hidden
//! layers and a head vector (no head bias). Weight layout per layer is
//! `(in_dim, out_dim)` row-major: `out[c] = sum_r in[r] * W[r, c] + b[c]`.

use serde::{Deserialize, Serialize};

use crate::numeric::{dot, relu, relu_prime, sigmoid, sigmoid_prime_from_output, Matrix, SeededRng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
    Sigmoid,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => relu(x),
            Activation::Linear => x,
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative given both pre-activation and output.
    fn derivative(self, pre: f64, out: f64) -> f64 {
        match self {
            Activation::Relu => relu_prime(pre),
            Activation::Linear => 1.0,
            Activation::Sigmoid => sigmoid_prime_from_output(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// L-layer perceptron with a linear scalar head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpComponent {
    pub layers: Vec<Layer>,
    pub head: Vec<f64>,
}

/// Per-layer activations kept from a forward pass, enough to run backward.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Layer inputs: element 0 is the network input, element l is the output
    /// of layer l-1.
    activations: Vec<Vec<f64>>,
    /// Pre-activation values per layer.
    pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn last_activations(&self) -> &[f64] {
        self.activations.last().expect("cache has layers")
    }
}

/// Gradients mirroring the parameters of an [`MlpComponent`].
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub layers: Vec<(Matrix, Vec<f64>)>,
    pub head: Vec<f64>,
}

impl MlpGradients {
    pub fn zeros_like(net: &MlpComponent) -> Self {
        MlpGradients {
            layers: net
                .layers
                .iter()
                .map(|l| (Matrix::zeros(l.weights.rows, l.weights.cols), vec![0.0; l.bias.len()]))
                .collect(),
            head: vec![0.0; net.head.len()],
        }
    }

    pub fn accumulate(&mut self, other: &MlpGradients) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in w.data.iter_mut().zip(&ow.data) {
                *x += y;
            }
            for (x, y) in b.iter_mut().zip(ob) {
                *x += y;
            }
        }
        for (x, y) in self.head.iter_mut().zip(&other.head) {
            *x += y;
        }
    }
}

impl MlpComponent {
    /// Glorot-uniform initialized network: hidden widths with the given
    /// activation, biases zero, head uniform in the same scheme.
    pub fn init(
        input_width: usize,
        hidden: &[usize],
        activation: Activation,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if input_width == 0 {
            return Err(Error::config("mlp input width must be positive"));
        }
        let mut layers = Vec::with_capacity(hidden.len());
        let mut fan_in = input_width;
        for &width in hidden {
            if width == 0 {
                return Err(Error::config("hidden layer width must be positive"));
            }
            let limit = (6.0 / (fan_in + width) as f64).sqrt();
            let mut weights = Matrix::zeros(fan_in, width);
            for v in weights.data.iter_mut() {
                *v = rng.uniform(-limit, limit)?;
            }
            layers.push(Layer {
                weights,
                bias: vec![0.0; width],
                activation,
            });
            fan_in = width;
        }
        let limit = (6.0 / (fan_in + 1) as f64).sqrt();
        let mut head = vec![0.0; fan_in];
        for v in head.iter_mut() {
            *v = rng.uniform(-limit, limit)?;
        }
        Ok(MlpComponent { layers, head })
    }

    pub fn input_width(&self) -> usize {
        self.layers
            .first()
            .map_or(self.head.len(), |l| l.weights.rows)
    }

    /// Scalar output plus the cache needed by [`MlpComponent::backward`].
    pub fn forward(&self, input: &[f64]) -> Result<(f64, ForwardCache)> {
        if input.len() != self.input_width() {
            return Err(Error::schema(format!(
                "mlp expects input width {}, got {}",
                self.input_width(),
                input.len()
            )));
        }
        let mut activations = vec![input.to_vec()];
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut pre = vec![0.0; layer.bias.len()];
            layer
                .weights
                .apply_transposed(activations.last().unwrap(), &mut pre);
            for (p, b) in pre.iter_mut().zip(&layer.bias) {
                *p += b;
            }
            let out: Vec<f64> = pre.iter().map(|&p| layer.activation.apply(p)).collect();
            pre_activations.push(pre);
            activations.push(out);
        }
        let output = dot(&self.head, activations.last().unwrap());
        Ok((
            output,
            ForwardCache {
                activations,
                pre_activations,
            },
        ))
    }

    /// Analytic gradients of `upstream * output` with respect to every
    /// parameter, using the cache of the matching forward call.
    pub fn backward(&self, cache: &ForwardCache, upstream: f64) -> Result<MlpGradients> {
        if cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::config("forward cache does not match this network"));
        }
        let mut grads = MlpGradients::zeros_like(self);
        let last = cache.last_activations();
        for (g, a) in grads.head.iter_mut().zip(last) {
            *g = upstream * a;
        }
        // delta over the last layer's outputs
        let mut delta: Vec<f64> = self.head.iter().map(|&h| upstream * h).collect();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let pre = &cache.pre_activations[l];
            let out = &cache.activations[l + 1];
            let input = &cache.activations[l];
            // through the activation
            for ((d, &p), &o) in delta.iter_mut().zip(pre).zip(out) {
                *d *= layer.activation.derivative(p, o);
            }
            let (gw, gb) = &mut grads.layers[l];
            for (r, &inp) in input.iter().enumerate() {
                if inp != 0.0 {
                    let row = &mut gw.data[r * gw.cols..(r + 1) * gw.cols];
                    for (g, &d) in row.iter_mut().zip(&delta) {
                        *g = inp * d;
                    }
                }
            }
            gb.copy_from_slice(&delta);
            if l > 0 {
                let mut next = vec![0.0; layer.weights.rows];
                for (r, nv) in next.iter_mut().enumerate() {
                    let row = layer.weights.row(r);
                    *nv = dot(row, &delta);
                }
                delta = next;
            }
        }
        Ok(grads)
    }
}
