use rand::Rng;

use super::params::{ParamSlot, ParamStore};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => x.sigmoid(),
            Activation::Relu => x.relu(),
        }
    }
}

/// Uniform Glorot bound `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Affine-then-activation composition over explicit layer tensors.
/// Weights are `in x out`, biases `1 x out`, input `batch x in`.
pub fn mlp_forward<T: Real>(
    layers: &[(Tensor<T>, Tensor<T>, Activation)],
    input: &Tensor<T>,
) -> Result<Tensor<T>> {
    let mut h = input.clone();
    for (w, b, act) in layers {
        h = h.matmul(w)?.add(b)?.map(|x| act.apply(x));
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    weight: ParamSlot,
    bias: ParamSlot,
    activation: Activation,
}

/// Multilayer perceptron whose weights live in a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    /// Registers `name.w{i}` / `name.b{i}` for each layer with Glorot-uniform
    /// weights and zero biases. The last layer uses `output`, the others
    /// `hidden`.
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::shape(format!("invalid layer sizes {sizes:?}")));
        }
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for (i, pair) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = glorot_bound(fan_in, fan_out);
            let w = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            let weight = store.add(&format!("{name}.w{i}"), &[fan_in, fan_out], w)?;
            let bias = store.add(&format!("{name}.b{i}"), &[1, fan_out], vec![0.0; fan_out])?;
            let activation = if i + 2 == sizes.len() { output } else { hidden };
            layers.push(Layer {
                fan_in,
                fan_out,
                weight,
                bias,
                activation,
            });
        }
        Ok(Mlp { layers })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map(|l| l.fan_out).unwrap_or(0)
    }

    /// The contiguous block holding every weight and bias of this network.
    pub fn param_range(&self) -> std::ops::Range<usize> {
        let first = self.layers[0].weight.offset;
        let last = self.layers.last().expect("non-empty").bias;
        first..last.offset + last.len
    }

    /// Slot of the output bias, e.g. to shift the initial output.
    pub fn output_bias(&self) -> ParamSlot {
        self.layers.last().expect("non-empty").bias
    }

    /// Layer tensors lifted out of a parameter slice.
    pub fn layer_tensors<T: Real>(
        &self,
        params: &[T],
    ) -> Vec<(Tensor<T>, Tensor<T>, Activation)> {
        self.layers
            .iter()
            .map(|l| {
                let w = Tensor::matrix(l.fan_in, l.fan_out, l.weight.view(params).to_vec())
                    .expect("slot sized at registration");
                let b = Tensor::matrix(1, l.fan_out, l.bias.view(params).to_vec())
                    .expect("slot sized at registration");
                (w, b, l.activation)
            })
            .collect()
    }

    /// Forward pass on one input vector.
    pub fn forward<T: Real>(&self, params: &[T], input: &[T]) -> Result<Vec<T>> {
        if input.len() != self.input_width() {
            return Err(Error::shape(format!(
                "mlp expects width {}, got {}",
                self.input_width(),
                input.len()
            )));
        }
        let mut h = input.to_vec();
        let mut column = Vec::new();
        for l in &self.layers {
            let w = l.weight.view(params);
            let b = l.bias.view(params);
            let mut out = Vec::with_capacity(l.fan_out);
            for j in 0..l.fan_out {
                column.clear();
                column.extend((0..l.fan_in).map(|i| w[i * l.fan_out + j]));
                out.push(l.activation.apply(T::dot(&h, &column) + b[j]));
            }
            h = out;
        }
        Ok(h)
    }

    /// Forward pass on a `batch x in` matrix.
    pub fn forward_batch<T: Real>(&self, params: &[T], input: &Tensor<T>) -> Result<Tensor<T>> {
        mlp_forward(&self.layer_tensors(params), input)
    }
}
