//! Feed-forward and recurrent networks with hand-derived gradients of the
//! windowed MSE loss.

mod fnn;
mod recurrent;

pub use fnn::{FnnConfig, FnnParams};
pub use recurrent::{
    gru_step, lstm_step, rnn_step, sequence_forecast, CellKind, GateParams, RecurrentConfig, RecurrentParams,
};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::WindowedSample;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Config(format!("unknown activation {other:?}"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Anything that owns a fixed, ordered list of named parameter tensors.
/// Gradients use the same type as the parameters they belong to.
pub trait Parameters {
    fn named_tensors(&self) -> Vec<(String, &Matrix)>;

    /// Same order as [`Parameters::named_tensors`].
    fn tensors_mut(&mut self) -> Vec<&mut Matrix>;

    fn zeros_like(&self) -> Self
    where
        Self: Sized;

    fn parameter_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.as_slice().len()).sum()
    }

    /// Name of the first tensor holding a non-finite value.
    fn first_non_finite(&self) -> Option<String> {
        self.named_tensors()
            .into_iter()
            .find(|(_, t)| !t.is_finite())
            .map(|(name, _)| name)
    }
}

/// Weight matrix `out × in` with an optional bias column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Option<Matrix>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize, bias: bool) -> Self {
        Self {
            weight: Matrix::zeros(outputs, inputs),
            bias: bias.then(|| Matrix::zeros(outputs, 1)),
        }
    }

    pub fn init<R: Rng>(inputs: usize, outputs: usize, bias: bool, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs.max(1) as f64).sqrt();
        let mut layer = Self::zeros(inputs, outputs, bias);
        uniform_fill(&mut layer.weight, bound, rng);
        if let Some(b) = layer.bias.as_mut() {
            uniform_fill(b, bound, rng);
        }
        layer
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }

    /// Pre-activation `W a + b`.
    pub fn affine(&self, a: &[f64]) -> Vec<f64> {
        let mut z = self.bias.as_ref().map_or_else(|| vec![0.0; self.outputs()], |b| b.as_slice().to_vec());
        self.weight.matvec_add_into(a, &mut z);
        z
    }

    /// Accumulates the gradient for pre-activation delta `delta` given input `a`.
    pub fn accumulate(&mut self, delta: &[f64], a: &[f64]) {
        self.weight.add_outer(delta, a);
        if let Some(b) = self.bias.as_mut() {
            for (bi, d) in b.as_mut_slice().iter_mut().zip(delta) {
                *bi += d;
            }
        }
    }

    fn push_named<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Matrix)>) {
        out.push((format!("{prefix}.weight"), &self.weight));
        if let Some(b) = &self.bias {
            out.push((format!("{prefix}.bias"), b));
        }
    }

    fn push_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Matrix>) {
        out.push(&mut self.weight);
        if let Some(b) = self.bias.as_mut() {
            out.push(b);
        }
    }
}

pub(crate) fn uniform_fill<R: Rng>(m: &mut Matrix, bound: f64, rng: &mut R) {
    for v in m.as_mut_slice() {
        *v = rng.random_range(-bound..bound);
    }
}

/// A trainable forecaster over windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "network", rename_all = "snake_case")]
pub enum Network {
    Fnn(FnnParams),
    Recurrent(RecurrentParams),
}

impl Network {
    pub fn forecast(&self, window: &Matrix) -> Result<Vec<f64>> {
        match self {
            Network::Fnn(p) => p.forward(window.as_slice()),
            Network::Recurrent(p) => sequence_forecast(p, window),
        }
    }

    pub fn output_width(&self) -> usize {
        match self {
            Network::Fnn(p) => p.config().outputs,
            Network::Recurrent(p) => p.config().outputs,
        }
    }

    /// Width the network expects per time step (the flattened width for the
    /// FNN).
    pub fn input_width(&self) -> usize {
        match self {
            Network::Fnn(p) => p.config().inputs,
            Network::Recurrent(p) => p.config().inputs,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Network::Fnn(_) => "fnn",
            Network::Recurrent(p) => p.config().kind.name(),
        }
    }

    /// Batch-mean of `‖y − ŷ‖²` over `batch`.
    pub fn loss(&self, batch: &[&WindowedSample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("empty batch".into()));
        }
        let mut total = 0.0;
        for sample in batch {
            let out = self.forecast(&sample.inputs)?;
            if out.len() != sample.target.len() {
                return Err(Error::Dimension(format!(
                    "network emits {} outputs for a {}-target sample",
                    out.len(),
                    sample.target.len()
                )));
            }
            total += out.iter().zip(&sample.target).map(|(o, t)| (o - t) * (o - t)).sum::<f64>();
        }
        Ok(total / batch.len() as f64)
    }
}

impl Parameters for Network {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        match self {
            Network::Fnn(p) => p.named_tensors(),
            Network::Recurrent(p) => p.named_tensors(),
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        match self {
            Network::Fnn(p) => p.tensors_mut(),
            Network::Recurrent(p) => p.tensors_mut(),
        }
    }

    fn zeros_like(&self) -> Self {
        match self {
            Network::Fnn(p) => Network::Fnn(p.zeros_like()),
            Network::Recurrent(p) => Network::Recurrent(p.zeros_like()),
        }
    }
}

/// Exact gradients of the batch-mean squared error by reverse accumulation
/// through every layer and every unrolled time step. Returns the gradients
/// and the loss.
pub fn compute_gradients(network: &Network, batch: &[&WindowedSample]) -> Result<(Network, f64)> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("empty batch".into()));
    }
    let (grads, loss) = match network {
        Network::Fnn(p) => {
            let (g, l) = p.gradients(batch)?;
            (Network::Fnn(g), l)
        }
        Network::Recurrent(p) => {
            let (g, l) = p.gradients(batch)?;
            (Network::Recurrent(g), l)
        }
    };
    if let Some(name) = grads.first_non_finite() {
        return Err(Error::numeric(name, "non-finite gradient"));
    }
    if !loss.is_finite() {
        return Err(Error::numeric("loss", format!("non-finite loss {loss}")));
    }
    Ok((grads, loss))
}

/// `∂L/∂ŷ` for `L = ‖y − ŷ‖² / batch` and the sample's squared error.
pub(crate) fn output_error(out: &[f64], target: &[f64], batch: usize) -> Result<(Vec<f64>, f64)> {
    if out.len() != target.len() {
        return Err(Error::Dimension(format!(
            "network emits {} outputs for a {}-target sample",
            out.len(),
            target.len()
        )));
    }
    let scale = 2.0 / batch as f64;
    let mut sq = 0.0;
    let grad = out
        .iter()
        .zip(target)
        .map(|(o, t)| {
            sq += (o - t) * (o - t);
            scale * (o - t)
        })
        .collect();
    Ok((grad, sq))
}
