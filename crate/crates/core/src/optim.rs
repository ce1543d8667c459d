//! SGD and RMSprop updates and the single-window stochastic training loop.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::WindowedSample;
use crate::error::{Error, Result};
use crate::neural::{compute_gradients, Network, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    RmsProp,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::RmsProp => "rmsprop",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// RMSprop decay `ρ`.
    pub decay: f64,
    /// RMSprop denominator offset.
    pub epsilon: f64,
    /// Running mean of squared gradients, one buffer per tensor (RMSprop).
    pub accumulators: Vec<Vec<f64>>,
    pub updates: usize,
}

impl OptimizerState {
    pub fn sgd(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            learning_rate,
            decay: 0.9,
            epsilon: 1e-8,
            accumulators: Vec::new(),
            updates: 0,
        }
    }

    pub fn rmsprop(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::RmsProp,
            ..Self::sgd(learning_rate)
        }
    }

    pub fn validate(&self) -> Result<()> {
        // a zero rate is allowed: it freezes the parameters
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!("learning rate {} must be >= 0", self.learning_rate)));
        }
        if self.kind == OptimizerKind::RmsProp && !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::Config(format!("rmsprop decay {} must lie in (0, 1)", self.decay)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config(format!("rmsprop epsilon {} must be >= 0", self.epsilon)));
        }
        Ok(())
    }

    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        match self.kind {
            OptimizerKind::Sgd => sgd_step(params, grads, self),
            OptimizerKind::RmsProp => rmsprop_step(params, grads, self),
        }
    }
}

fn check_congruent<P: Parameters>(params: &P, grads: &P) -> Result<()> {
    let p = params.named_tensors();
    let g = grads.named_tensors();
    if p.len() != g.len() {
        return Err(Error::Dimension(format!("{} gradient tensors for {} parameters", g.len(), p.len())));
    }
    for ((name, pt), (_, gt)) in p.iter().zip(&g) {
        if pt.shape() != gt.shape() {
            return Err(Error::Dimension(format!(
                "gradient for {name} is {:?}, parameter is {:?}",
                gt.shape(),
                pt.shape()
            )));
        }
        if !gt.is_finite() {
            return Err(Error::numeric(name.clone(), "non-finite gradient"));
        }
    }
    Ok(())
}

/// `p ← p − η g` for every tensor.
pub fn sgd_step<P: Parameters>(params: &mut P, grads: &P, state: &mut OptimizerState) -> Result<()> {
    check_congruent(params, grads)?;
    let lr = state.learning_rate;
    let grad_tensors = grads.named_tensors();
    for (p, (_, g)) in params.tensors_mut().into_iter().zip(grad_tensors) {
        for (pv, gv) in p.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *pv -= lr * gv;
        }
    }
    state.updates += 1;
    Ok(())
}

/// `a ← ρ a + (1 − ρ) g²`, `p ← p − η g / (√a + ε)`.
pub fn rmsprop_step<P: Parameters>(params: &mut P, grads: &P, state: &mut OptimizerState) -> Result<()> {
    check_congruent(params, grads)?;
    let grad_tensors = grads.named_tensors();
    if state.accumulators.is_empty() {
        state.accumulators = grad_tensors.iter().map(|(_, g)| vec![0.0; g.as_slice().len()]).collect();
    } else if state.accumulators.len() != grad_tensors.len()
        || state
            .accumulators
            .iter()
            .zip(&grad_tensors)
            .any(|(a, (_, g))| a.len() != g.as_slice().len())
    {
        return Err(Error::Dimension("optimizer state does not match the parameter set".into()));
    }
    let (lr, rho, eps) = (state.learning_rate, state.decay, state.epsilon);
    for ((p, (_, g)), acc) in params
        .tensors_mut()
        .into_iter()
        .zip(grad_tensors)
        .zip(state.accumulators.iter_mut())
    {
        for ((pv, gv), av) in p.as_mut_slice().iter_mut().zip(g.as_slice()).zip(acc.iter_mut()) {
            *av = rho * *av + (1.0 - rho) * gv * gv;
            *pv -= lr * gv / (av.sqrt() + eps);
        }
    }
    state.updates += 1;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Full passes over the training windows.
    Epochs(usize),
    /// Single-window parameter updates.
    Updates(usize),
}

impl Budget {
    pub fn total_updates(self, samples: usize) -> usize {
        match self {
            Budget::Epochs(e) => e * samples,
            Budget::Updates(u) => u,
        }
    }
}

impl FromStr for Budget {
    type Err = Error;

    /// `"<n> epochs"` or `"<n> updates"`; a bare number means updates.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let n: usize = parts
            .next()
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| Error::Config(format!("bad training budget {s:?}")))?;
        match parts.next() {
            None | Some("updates") => Ok(Budget::Updates(n)),
            Some("epochs") => Ok(Budget::Epochs(n)),
            Some(other) => Err(Error::Config(format!("unknown budget unit {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub budget: Budget,
    pub seed: u64,
    /// Record the full-training-set MSE every this many updates.
    pub eval_every: usize,
    /// Optional cap on the global gradient norm.
    pub clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            budget: Budget::Updates(30_000),
            seed: 0,
            eval_every: 1_000,
            clip: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossPoint {
    pub update: usize,
    pub train_mse: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    pub history: Vec<LossPoint>,
    pub updates: usize,
}

fn clip_gradients(grads: &mut Network, cap: f64) {
    let norm = grads
        .named_tensors()
        .iter()
        .flat_map(|(_, t)| t.as_slice())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if norm > cap {
        let factor = cap / norm;
        for t in grads.tensors_mut() {
            t.scale(factor);
        }
    }
}

/// Minimizes the windowed MSE with one randomly drawn window per update.
/// Windows are visited in a freshly shuffled order on every pass.
pub fn train(
    mut network: Network,
    samples: &[WindowedSample],
    config: &TrainConfig,
    mut optimizer: OptimizerState,
) -> Result<TrainOutcome> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("no training windows".into()));
    }
    optimizer.validate()?;
    let all: Vec<&WindowedSample> = samples.iter().collect();
    let total = config.budget.total_updates(samples.len());
    let eval_every = config.eval_every.max(1);

    let record = |network: &Network, update: usize, history: &mut Vec<LossPoint>| -> Result<()> {
        let train_mse = network.loss(&all)?;
        if !train_mse.is_finite() {
            return Err(Error::Diverged { update, loss: train_mse });
        }
        history.push(LossPoint { update, train_mse });
        Ok(())
    };

    let mut history = Vec::new();
    record(&network, 0, &mut history)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut cursor = order.len();
    for update in 1..=total {
        if cursor == order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let sample = &samples[order[cursor]];
        cursor += 1;
        let (mut grads, loss) = match compute_gradients(&network, &[sample]) {
            Ok(v) => v,
            Err(Error::Numeric { .. }) => return Err(Error::Diverged { update, loss: f64::NAN }),
            Err(e) => return Err(e),
        };
        if !loss.is_finite() {
            return Err(Error::Diverged { update, loss });
        }
        if let Some(cap) = config.clip {
            clip_gradients(&mut grads, cap);
        }
        optimizer.step(&mut network, &grads)?;
        if update % eval_every == 0 || update == total {
            record(&network, update, &mut history)?;
        }
    }
    Ok(TrainOutcome {
        network,
        history,
        updates: total,
    })
}
