//! Fully-connected network with the fixed 32/64/32 hidden trunk.
//!
//! Forward and backward passes are hand-rolled over flat `Vec<f64>`
//! buffers. Hidden layers are ReLU with optional inverted dropout
//! during training; the output head is linear for regression or
//! softmax for the policy network.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three hidden layer widths every network in this crate uses.
pub const HIDDEN_DIMS: [usize; 3] = [32, 64, 32];

/// Default dropout rate behind each hidden layer during training.
pub const DEFAULT_DROPOUT: f64 = 0.30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Linear,
    Softmax,
}

impl Activation {
    pub fn tag(&self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Linear => 1,
            Activation::Softmax => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Activation::Relu),
            1 => Ok(Activation::Linear),
            2 => Ok(Activation::Softmax),
            t => Err(Error::ParamsFormat(format!("unknown activation tag {t}"))),
        }
    }
}

/// Weights and biases of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// Layer dimensions `[input, 32, 64, 32, output]`.
    pub dims: Vec<usize>,
    /// Per layer, row-major `(out_dim x in_dim)`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub output_activation: Activation,
    /// Applied after each hidden layer during training only.
    pub dropout_rate: f64,
}

impl MlpParams {
    /// He-uniform initialized network with the standard hidden trunk.
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        output_activation: Activation,
        dropout_rate: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(&HIDDEN_DIMS);
        dims.push(output_dim);

        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for l in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let r = (6.0 / fan_in as f64).sqrt();
            weights.push((0..fan_in * fan_out).map(|_| rng.gen_range(-r..r)).collect());
            biases.push(vec![0.0; fan_out]);
        }
        Self {
            dims,
            weights,
            biases,
            output_activation,
            dropout_rate,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("network has layers")
    }

    pub fn layer_count(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: input.len(),
                context: "network input".into(),
            });
        }
        Ok(())
    }

    /// Inference forward pass: dropout off, deterministic.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(input, None)?.output().to_vec())
    }

    /// Forward pass skipping the output activation (the policy logits).
    pub fn forward_logits(&self, input: &[f64]) -> Result<Vec<f64>> {
        let pass = self.forward_cached(input, None)?;
        Ok(pass.pre.last().expect("has layers").clone())
    }

    /// Forward pass retaining everything the backward pass needs. When
    /// `dropout_rng` is given and `dropout_rate > 0`, inverted dropout
    /// masks are drawn behind each hidden layer.
    pub fn forward_cached(
        &self,
        input: &[f64],
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<ForwardPass> {
        self.check_input(input)?;
        let layers = self.layer_count();
        let mut pre = Vec::with_capacity(layers);
        let mut post = Vec::with_capacity(layers);
        let mut masks: Vec<Option<Vec<f64>>> = Vec::with_capacity(layers);

        let mut x: Vec<f64> = input.to_vec();
        for l in 0..layers {
            let (in_dim, out_dim) = (self.dims[l], self.dims[l + 1]);
            let w = &self.weights[l];
            let b = &self.biases[l];
            let mut z = vec![0.0; out_dim];
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &w[o * in_dim..(o + 1) * in_dim];
                let mut acc = b[o];
                for (wi, xi) in row.iter().zip(&x) {
                    acc += wi * xi;
                }
                *zo = acc;
            }
            let is_output = l == layers - 1;
            let mut a = if is_output {
                match self.output_activation {
                    Activation::Linear => z.clone(),
                    Activation::Relu => z.iter().map(|v| v.max(0.0)).collect(),
                    Activation::Softmax => softmax(&z),
                }
            } else {
                z.iter().map(|v| v.max(0.0)).collect()
            };
            let mask = if !is_output && self.dropout_rate > 0.0 {
                if let Some(rng) = dropout_rng.as_deref_mut() {
                    let keep = 1.0 - self.dropout_rate;
                    let m: Vec<f64> = (0..a.len())
                        .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    for (ai, mi) in a.iter_mut().zip(&m) {
                        *ai *= mi;
                    }
                    Some(m)
                } else {
                    None
                }
            } else {
                None
            };
            pre.push(z);
            post.push(a.clone());
            masks.push(mask);
            x = a;
        }
        Ok(ForwardPass {
            input: input.to_vec(),
            pre,
            post,
            masks,
        })
    }

    /// Backpropagates `d_output` (the loss gradient w.r.t. the network
    /// output) through a cached pass, accumulating parameter gradients
    /// into `grads` and returning the gradient w.r.t. the input.
    pub fn backward(&self, pass: &ForwardPass, d_output: &[f64], grads: &mut MlpGrads) -> Vec<f64> {
        assert_eq!(d_output.len(), self.output_dim(), "output gradient arity");
        let layers = self.layer_count();

        // gradient w.r.t. the output pre-activation
        let last = layers - 1;
        let mut dz: Vec<f64> = match self.output_activation {
            Activation::Linear => d_output.to_vec(),
            Activation::Relu => pass.pre[last]
                .iter()
                .zip(d_output)
                .map(|(z, d)| if *z > 0.0 { *d } else { 0.0 })
                .collect(),
            Activation::Softmax => {
                let y = &pass.post[last];
                let dot: f64 = y.iter().zip(d_output).map(|(yi, di)| yi * di).sum();
                y.iter().zip(d_output).map(|(yi, di)| yi * (di - dot)).collect()
            }
        };

        for l in (0..layers).rev() {
            let in_dim = self.dims[l];
            let x: &[f64] = if l == 0 { &pass.input } else { &pass.post[l - 1] };
            let dw = &mut grads.weights[l];
            let db = &mut grads.biases[l];
            for (o, dzo) in dz.iter().enumerate() {
                db[o] += dzo;
                let row = &mut dw[o * in_dim..(o + 1) * in_dim];
                for (ri, xi) in row.iter_mut().zip(x) {
                    *ri += dzo * xi;
                }
            }
            // gradient w.r.t. this layer's input
            let mut dx = vec![0.0; in_dim];
            let w = &self.weights[l];
            for (o, dzo) in dz.iter().enumerate() {
                let row = &w[o * in_dim..(o + 1) * in_dim];
                for (dxi, wi) in dx.iter_mut().zip(row) {
                    *dxi += dzo * wi;
                }
            }
            if l == 0 {
                return dx;
            }
            // through the previous hidden layer's dropout and ReLU
            if let Some(mask) = &pass.masks[l - 1] {
                for (dxi, mi) in dx.iter_mut().zip(mask) {
                    *dxi *= mi;
                }
            }
            dz = pass.pre[l - 1]
                .iter()
                .zip(dx)
                .map(|(z, d)| if *z > 0.0 { d } else { 0.0 })
                .collect();
        }
        unreachable!("loop returns at layer 0")
    }

    /// `self = tau * other + (1 - tau) * self`, the target-network blend.
    pub fn soft_update_from(&mut self, other: &MlpParams, tau: f64) {
        assert_eq!(self.dims, other.dims, "soft update requires equal shapes");
        for (sw, ow) in self.weights.iter_mut().zip(&other.weights) {
            for (s, o) in sw.iter_mut().zip(ow) {
                *s = tau * o + (1.0 - tau) * *s;
            }
        }
        for (sb, ob) in self.biases.iter_mut().zip(&other.biases) {
            for (s, o) in sb.iter_mut().zip(ob) {
                *s = tau * o + (1.0 - tau) * *s;
            }
        }
    }

    /// Structural compatibility check used by transfer learning.
    pub fn same_architecture(&self, other: &MlpParams) -> bool {
        self.dims == other.dims && self.output_activation == other.output_activation
    }
}

/// Cached activations from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub input: Vec<f64>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
    pub masks: Vec<Option<Vec<f64>>>,
}

impl ForwardPass {
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("has layers")
    }

    /// Smallest pre-activation magnitude across all hidden units; used
    /// by gradient checks to reject kink-adjacent instances.
    pub fn min_hidden_preactivation(&self) -> f64 {
        self.pre[..self.pre.len() - 1]
            .iter()
            .flatten()
            .fold(f64::INFINITY, |m, z| m.min(z.abs()))
    }
}

/// Parameter gradients, same shapes as the network.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            weights: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn reset(&mut self) {
        for w in &mut self.weights {
            w.fill(0.0);
        }
        for b in &mut self.biases {
            b.fill(0.0);
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|v| v / sum).collect()
}
