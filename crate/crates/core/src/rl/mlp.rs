//! Fully connected tanh network with a scalar linear output, operating on a
//! flat parameter slice so the optimizer and gradient checks can treat all
//! weights as one vector.
//!
//! Layer `l` stores its weights row-major (`out x in`) followed by its
//! biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    /// Layer widths from input to output; the last entry is 1.
    pub sizes: Vec<usize>,
}

impl MlpShape {
    pub fn new(input: usize, hidden: &[usize]) -> Self {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input);
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Self { sizes }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn num_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        // (offset, fan_in, fan_out)
        self.sizes.windows(2).scan(0, |offset, w| {
            let start = *offset;
            *offset += w[0] * w[1] + w[1];
            Some((start, w[0], w[1]))
        })
    }

    /// Uniform fan-in initialisation with zero biases. The output layer is
    /// scaled by `output_gain`.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R, output_gain: f64) -> Vec<f64> {
        let mut params = vec![0.0; self.num_params()];
        let n_layers = self.sizes.len() - 1;
        for (l, (offset, fan_in, fan_out)) in self.layers().enumerate() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let gain = if l + 1 == n_layers { output_gain } else { 1.0 };
            for w in &mut params[offset..offset + fan_in * fan_out] {
                *w = gain * rng.random_range(-bound..bound);
            }
        }
        params
    }

    /// Evaluates the network, keeping every layer's output in `acts` for
    /// [`MlpShape::backward`]. `acts[0]` is the input.
    pub fn forward(&self, params: &[f64], x: &[f64], acts: &mut Vec<Vec<f64>>) -> f64 {
        debug_assert_eq!(params.len(), self.num_params());
        debug_assert_eq!(x.len(), self.input_dim());
        acts.clear();
        acts.push(x.to_vec());
        let n_layers = self.sizes.len() - 1;
        for (l, (offset, fan_in, fan_out)) in self.layers().enumerate() {
            let weights = &params[offset..offset + fan_in * fan_out];
            let biases = &params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            let input = &acts[l];
            let mut out: Vec<f64> = weights
                .chunks_exact(fan_in)
                .zip(biases)
                .map(|(row, b)| b + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>())
                .collect();
            if l + 1 < n_layers {
                out.iter_mut().for_each(|z| *z = z.tanh());
            }
            acts.push(out);
        }
        acts[n_layers][0]
    }

    /// Accumulates `d_out * d(output)/d(params)` into `grad`.
    pub fn backward(&self, params: &[f64], acts: &[Vec<f64>], d_out: f64, grad: &mut [f64]) {
        let layers: Vec<_> = self.layers().collect();
        let mut delta = vec![d_out];
        for (l, &(offset, fan_in, fan_out)) in layers.iter().enumerate().rev() {
            let input = &acts[l];
            let weights = &params[offset..offset + fan_in * fan_out];
            {
                let (gw, gb) = grad[offset..offset + fan_in * fan_out + fan_out]
                    .split_at_mut(fan_in * fan_out);
                for (o, &d) in delta.iter().enumerate() {
                    gb[o] += d;
                    for (g, a) in gw[o * fan_in..(o + 1) * fan_in].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let mut prev = vec![0.0; fan_in];
            for (o, &d) in delta.iter().enumerate() {
                for (p, w) in prev.iter_mut().zip(&weights[o * fan_in..(o + 1) * fan_in]) {
                    *p += w * d;
                }
            }
            // previous layer is tanh: d tanh = 1 - a^2
            for (p, a) in prev.iter_mut().zip(input) {
                *p *= 1.0 - a * a;
            }
            delta = prev;
        }
    }
}
