//! Dense layers with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    fn apply<F: Real>(self, z: F) -> F {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(F::zero()),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn grad_from_output<F: Real>(self, a: F) -> F {
        match self {
            Activation::Identity => F::one(),
            Activation::Tanh => F::one() - a * a,
            Activation::Relu => {
                if a > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
        }
    }
}

/// Fully connected layer, weights stored row-major as `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<F> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<F>,
    pub bias: Vec<F>,
    pub activation: Activation,
}

impl<F: Real> Dense<F> {
    /// Glorot-uniform weights, zero bias.
    pub fn init(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| F::of(rng.gen_range(-limit..limit)))
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            bias: vec![F::zero(); out_dim],
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn forward(&self, x: &[F], out: &mut Vec<F>) {
        debug_assert_eq!(x.len(), self.in_dim);
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let z = row.iter().zip(x).fold(self.bias[o], |acc, (w, xi)| acc + *w * *xi);
            out.push(self.activation.apply(z));
        }
    }
}

/// Gradient buffers shaped like a [`Stack`].
#[derive(Debug, Clone, PartialEq)]
pub struct StackGrads<F> {
    pub layers: Vec<(Vec<F>, Vec<F>)>,
}

impl<F: Real> StackGrads<F> {
    pub fn flatten_into(&self, out: &mut Vec<F>) {
        for (w, b) in &self.layers {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
    }
}

/// A sequence of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Stack<F> {
    pub layers: Vec<Dense<F>>,
}

impl<F: Real> Stack<F> {
    /// `dims = [in, h1, ..., out]`; hidden layers use `hidden`, the last uses `last`.
    pub fn init(dims: &[usize], hidden: Activation, last: Activation, rng: &mut impl Rng) -> Self {
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { last } else { hidden };
                Dense::init(dims[i], dims[i + 1], act, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty stack").out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn zero_grads(&self) -> StackGrads<F> {
        StackGrads {
            layers: self
                .layers
                .iter()
                .map(|l| (vec![F::zero(); l.weights.len()], vec![F::zero(); l.bias.len()]))
                .collect(),
        }
    }

    /// Forward pass keeping every activation; `acts[0]` is the input.
    pub fn forward(&self, x: &[F]) -> Vec<Vec<F>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            let mut out = Vec::with_capacity(layer.out_dim);
            layer.forward(acts.last().expect("input present"), &mut out);
            acts.push(out);
        }
        acts
    }

    /// Accumulate parameter gradients for one sample and return the gradient
    /// with respect to the input.
    pub fn backward(&self, acts: &[Vec<F>], d_out: &[F], grads: &mut StackGrads<F>) -> Vec<F> {
        let mut delta = d_out.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let a_in = &acts[i];
            let a_out = &acts[i + 1];
            for (d, a) in delta.iter_mut().zip(a_out) {
                *d *= layer.activation.grad_from_output(*a);
            }
            let (gw, gb) = &mut grads.layers[i];
            let mut d_in = vec![F::zero(); layer.in_dim];
            for o in 0..layer.out_dim {
                let d = delta[o];
                gb[o] += d;
                let row = o * layer.in_dim;
                for j in 0..layer.in_dim {
                    gw[row + j] += d * a_in[j];
                    d_in[j] += layer.weights[row + j] * d;
                }
            }
            delta = d_in;
        }
        delta
    }

    pub fn params_into(&self, out: &mut Vec<F>) {
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
    }

    /// Overwrite parameters from a flat slice; returns the number consumed.
    pub fn set_params(&mut self, p: &[F]) -> usize {
        let mut k = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&p[k..k + nw]);
            k += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&p[k..k + nb]);
            k += nb;
        }
        k
    }
}
