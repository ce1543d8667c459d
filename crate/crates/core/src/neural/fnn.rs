use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{output_error, Activation, Dense, Parameters};
use crate::dataset::WindowedSample;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnConfig {
    /// Flattened window width (`τ · I`).
    pub inputs: usize,
    pub hidden: Vec<usize>,
    pub outputs: usize,
    pub bias: bool,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl FnnConfig {
    /// Two sigmoid hidden layers of 10 units and a sigmoid output.
    pub fn standard(inputs: usize, outputs: usize, bias: bool) -> Self {
        Self {
            inputs,
            hidden: vec![10, 10],
            outputs,
            bias,
            hidden_activation: Activation::Sigmoid,
            output_activation: Activation::Sigmoid,
        }
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.inputs];
        w.extend_from_slice(&self.hidden);
        w.push(self.outputs);
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnParams {
    config: FnnConfig,
    /// Input → hidden₁ → … → output.
    pub layers: Vec<Dense>,
}

impl FnnParams {
    pub fn zeros(config: FnnConfig) -> Self {
        let widths = config.widths();
        let layers = widths
            .windows(2)
            .map(|w| Dense::zeros(w[0], w[1], config.bias))
            .collect();
        Self { config, layers }
    }

    pub fn init<R: Rng>(config: FnnConfig, rng: &mut R) -> Self {
        let widths = config.widths();
        let layers = widths
            .windows(2)
            .map(|w| Dense::init(w[0], w[1], config.bias, rng))
            .collect();
        Self { config, layers }
    }

    pub fn config(&self) -> &FnnConfig {
        &self.config
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.config.output_activation
        } else {
            self.config.hidden_activation
        }
    }

    /// Activations of every layer, input first.
    fn trace(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.config.inputs {
            return Err(Error::Dimension(format!(
                "input of width {} for a network expecting {}",
                x.len(),
                self.config.inputs
            )));
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (l, layer) in self.layers.iter().enumerate() {
            let act = self.activation(l);
            let z = layer.affine(acts.last().expect("input present"));
            acts.push(z.into_iter().map(|v| act.apply(v)).collect());
        }
        Ok(acts)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut acts = self.trace(x)?;
        Ok(acts.pop().expect("output layer"))
    }

    pub(crate) fn gradients(&self, batch: &[&WindowedSample]) -> Result<(FnnParams, f64)> {
        let mut grads = self.zeros_like();
        let mut loss = 0.0;
        for sample in batch {
            let acts = self.trace(sample.flattened())?;
            let (mut delta, sq) = output_error(acts.last().expect("output"), &sample.target, batch.len())?;
            loss += sq;
            for l in (0..self.layers.len()).rev() {
                let act = self.activation(l);
                for (d, y) in delta.iter_mut().zip(&acts[l + 1]) {
                    *d *= act.derivative_from_output(*y);
                }
                grads.layers[l].accumulate(&delta, &acts[l]);
                if l > 0 {
                    let mut prev = vec![0.0; self.layers[l].inputs()];
                    self.layers[l].weight.tr_matvec_add_into(&delta, &mut prev);
                    delta = prev;
                }
            }
        }
        Ok((grads, loss / batch.len() as f64))
    }
}

impl Parameters for FnnParams {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            layer.push_named(&format!("layer{l}"), &mut out);
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            layer.push_mut(&mut out);
        }
        out
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.config.clone())
    }
}
