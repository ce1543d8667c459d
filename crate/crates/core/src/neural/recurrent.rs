//! Single-layer RNN, LSTM and GRU cells followed by a small fully-connected
//! head. The cell runs over the `τ` rows of a window from a zero state and
//! the final hidden state feeds the head.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{output_error, sigmoid, uniform_fill, Activation, Dense, Parameters};
use crate::dataset::WindowedSample;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Rnn,
    Lstm,
    Gru,
}

impl CellKind {
    pub fn name(self) -> &'static str {
        match self {
            CellKind::Rnn => "rnn",
            CellKind::Lstm => "lstm",
            CellKind::Gru => "gru",
        }
    }

    fn gate_names(self) -> &'static [&'static str] {
        match self {
            CellKind::Rnn => &["hidden"],
            CellKind::Lstm => &["input_gate", "forget_gate", "output_gate", "candidate"],
            CellKind::Gru => &["update_gate", "reset_gate", "candidate"],
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rnn" => Ok(CellKind::Rnn),
            "lstm" => Ok(CellKind::Lstm),
            "gru" => Ok(CellKind::Gru),
            other => Err(Error::Config(format!("unknown cell kind {other:?}"))),
        }
    }
}

/// Input weights `U` (`h × I`), recurrent weights `W` (`h × h`) and an
/// optional bias for one gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub input: Matrix,
    pub recurrent: Matrix,
    pub bias: Option<Matrix>,
}

impl GateParams {
    fn zeros(inputs: usize, hidden: usize, bias: bool) -> Self {
        Self {
            input: Matrix::zeros(hidden, inputs),
            recurrent: Matrix::zeros(hidden, hidden),
            bias: bias.then(|| Matrix::zeros(hidden, 1)),
        }
    }

    /// `U x + W h (+ b)`
    fn pre(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut z = self
            .bias
            .as_ref()
            .map_or_else(|| vec![0.0; self.input.rows()], |b| b.as_slice().to_vec());
        self.input.matvec_add_into(x, &mut z);
        self.recurrent.matvec_add_into(h, &mut z);
        z
    }

    /// Accumulates into `self` (a gradient) the contribution of pre-activation
    /// delta `da`, and adds `Wᵀ da` from `params` into `dh`.
    fn backward(&mut self, params: &GateParams, da: &[f64], x: &[f64], h: &[f64], dh: &mut [f64]) {
        self.input.add_outer(da, x);
        self.recurrent.add_outer(da, h);
        if let Some(b) = self.bias.as_mut() {
            for (bi, d) in b.as_mut_slice().iter_mut().zip(da) {
                *bi += d;
            }
        }
        params.recurrent.tr_matvec_add_into(da, dh);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrentConfig {
    pub kind: CellKind,
    /// Features per time step.
    pub inputs: usize,
    pub hidden: usize,
    /// Widths of the fully-connected layers between the cell and the output.
    pub head: Vec<usize>,
    pub outputs: usize,
    pub bias: bool,
    pub head_activation: Activation,
    pub output_activation: Activation,
}

impl RecurrentConfig {
    /// Ten recurrent units, two tanh layers of ten, linear output.
    pub fn standard(kind: CellKind, inputs: usize, outputs: usize, bias: bool) -> Self {
        Self {
            kind,
            inputs,
            hidden: 10,
            head: vec![10, 10],
            outputs,
            bias,
            head_activation: Activation::Tanh,
            output_activation: Activation::Identity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrentParams {
    config: RecurrentConfig,
    /// Gate order: RNN `[hidden]`; LSTM `[i, f, o, g]`; GRU `[z, r, g]`.
    pub gates: Vec<GateParams>,
    /// Head layers followed by the output layer.
    pub head: Vec<Dense>,
}

impl RecurrentParams {
    pub fn zeros(config: RecurrentConfig) -> Self {
        let gates = config
            .kind
            .gate_names()
            .iter()
            .map(|_| GateParams::zeros(config.inputs, config.hidden, config.bias))
            .collect();
        let mut widths = vec![config.hidden];
        widths.extend_from_slice(&config.head);
        widths.push(config.outputs);
        let head = widths.windows(2).map(|w| Dense::zeros(w[0], w[1], config.bias)).collect();
        Self { config, gates, head }
    }

    /// Uniform on `±1/√fan_in` per weight matrix; gate biases use the
    /// hidden width as fan-in.
    pub fn init<R: Rng>(config: RecurrentConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(config);
        let in_bound = 1.0 / (p.config.inputs.max(1) as f64).sqrt();
        let h_bound = 1.0 / (p.config.hidden.max(1) as f64).sqrt();
        for gate in &mut p.gates {
            uniform_fill(&mut gate.input, in_bound, rng);
            uniform_fill(&mut gate.recurrent, h_bound, rng);
            if let Some(b) = gate.bias.as_mut() {
                uniform_fill(b, h_bound, rng);
            }
        }
        for layer in &mut p.head {
            *layer = Dense::init(layer.inputs(), layer.outputs(), p.config.bias, rng);
        }
        p
    }

    pub fn config(&self) -> &RecurrentConfig {
        &self.config
    }

    fn expect_kind(&self, kind: CellKind) -> Result<()> {
        if self.config.kind != kind {
            return Err(Error::Config(format!(
                "{} step called on {} parameters",
                kind, self.config.kind
            )));
        }
        Ok(())
    }

    fn check_step(&self, x: &[f64], h: &[f64]) -> Result<()> {
        if x.len() != self.config.inputs || h.len() != self.config.hidden {
            return Err(Error::Dimension(format!(
                "step input {}/state {} for a cell of input {} and hidden {}",
                x.len(),
                h.len(),
                self.config.inputs,
                self.config.hidden
            )));
        }
        Ok(())
    }

    fn head_activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.head.len() {
            self.config.output_activation
        } else {
            self.config.head_activation
        }
    }

    fn head_trace(&self, h: Vec<f64>) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.head.len() + 1);
        acts.push(h);
        for (l, layer) in self.head.iter().enumerate() {
            let act = self.head_activation(l);
            let z = layer.affine(acts.last().expect("cell output"));
            acts.push(z.into_iter().map(|v| act.apply(v)).collect());
        }
        acts
    }

    pub(crate) fn gradients(&self, batch: &[&WindowedSample]) -> Result<(RecurrentParams, f64)> {
        let mut grads = self.zeros_like();
        let mut loss = 0.0;
        let hidden = self.config.hidden;
        for sample in batch {
            let window = &sample.inputs;
            self.check_window(window)?;

            let mut steps = Vec::with_capacity(window.rows());
            let mut h = vec![0.0; hidden];
            let mut c = vec![0.0; hidden];
            for t in 0..window.rows() {
                let x = window.row(t);
                let step = match self.config.kind {
                    CellKind::Rnn => Step::Rnn {
                        h: raw_rnn(self, x, &h),
                    },
                    CellKind::Lstm => Step::Lstm(raw_lstm(self, x, &h, &c)),
                    CellKind::Gru => Step::Gru(raw_gru(self, x, &h)),
                };
                h = step.h().to_vec();
                if let Step::Lstm(s) = &step {
                    c = s.c.clone();
                }
                steps.push(step);
            }

            let acts = self.head_trace(h);
            let (mut delta, sq) = output_error(acts.last().expect("output"), &sample.target, batch.len())?;
            loss += sq;
            for l in (0..self.head.len()).rev() {
                let act = self.head_activation(l);
                for (d, y) in delta.iter_mut().zip(&acts[l + 1]) {
                    *d *= act.derivative_from_output(*y);
                }
                grads.head[l].accumulate(&delta, &acts[l]);
                let mut prev = vec![0.0; self.head[l].inputs()];
                self.head[l].weight.tr_matvec_add_into(&delta, &mut prev);
                delta = prev;
            }

            let zero = vec![0.0; hidden];
            let mut dh = delta;
            let mut dc = vec![0.0; hidden];
            for t in (0..steps.len()).rev() {
                let x = window.row(t);
                let h_prev: &[f64] = if t == 0 { &zero } else { steps[t - 1].h() };
                let mut dh_prev = vec![0.0; hidden];
                match &steps[t] {
                    Step::Rnn { h } => {
                        let da: Vec<f64> = dh.iter().zip(h).map(|(d, y)| d * (1.0 - y * y)).collect();
                        grads.gates[0].backward(&self.gates[0], &da, x, h_prev, &mut dh_prev);
                    }
                    Step::Lstm(s) => {
                        let c_prev: &[f64] = if t == 0 {
                            &zero
                        } else {
                            match &steps[t - 1] {
                                Step::Lstm(p) => &p.c,
                                _ => unreachable!("homogeneous steps"),
                            }
                        };
                        let mut dai = vec![0.0; hidden];
                        let mut daf = vec![0.0; hidden];
                        let mut dao = vec![0.0; hidden];
                        let mut dag = vec![0.0; hidden];
                        for k in 0..hidden {
                            let d_o = dh[k] * s.tc[k];
                            let dct = dc[k] + dh[k] * s.o[k] * (1.0 - s.tc[k] * s.tc[k]);
                            dai[k] = dct * s.g[k] * s.i[k] * (1.0 - s.i[k]);
                            daf[k] = dct * c_prev[k] * s.f[k] * (1.0 - s.f[k]);
                            dao[k] = d_o * s.o[k] * (1.0 - s.o[k]);
                            dag[k] = dct * s.i[k] * (1.0 - s.g[k] * s.g[k]);
                            dc[k] = dct * s.f[k];
                        }
                        for (gate, da) in [dai, daf, dao, dag].iter().enumerate() {
                            grads.gates[gate].backward(&self.gates[gate], da, x, h_prev, &mut dh_prev);
                        }
                    }
                    Step::Gru(s) => {
                        let mut daz = vec![0.0; hidden];
                        let mut dag = vec![0.0; hidden];
                        for k in 0..hidden {
                            let dz = dh[k] * (h_prev[k] - s.g[k]);
                            daz[k] = dz * s.z[k] * (1.0 - s.z[k]);
                            dag[k] = dh[k] * (1.0 - s.z[k]) * (1.0 - s.g[k] * s.g[k]);
                            dh_prev[k] += dh[k] * s.z[k];
                        }
                        // candidate sees h ⊙ r through its recurrent weights
                        let mut dhr = vec![0.0; hidden];
                        grads.gates[2].backward(&self.gates[2], &dag, x, &s.hr, &mut dhr);
                        let mut dar = vec![0.0; hidden];
                        for k in 0..hidden {
                            dh_prev[k] += dhr[k] * s.r[k];
                            dar[k] = dhr[k] * h_prev[k] * s.r[k] * (1.0 - s.r[k]);
                        }
                        grads.gates[1].backward(&self.gates[1], &dar, x, h_prev, &mut dh_prev);
                        grads.gates[0].backward(&self.gates[0], &daz, x, h_prev, &mut dh_prev);
                    }
                }
                dh = dh_prev;
            }
        }
        Ok((grads, loss / batch.len() as f64))
    }

    fn check_window(&self, window: &Matrix) -> Result<()> {
        if window.rows() == 0 || window.cols() != self.config.inputs {
            return Err(Error::Dimension(format!(
                "window of {}x{} for a cell expecting width {}",
                window.rows(),
                window.cols(),
                self.config.inputs
            )));
        }
        Ok(())
    }
}

impl Parameters for RecurrentParams {
    fn named_tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::new();
        for (gate, name) in self.gates.iter().zip(self.config.kind.gate_names()) {
            out.push((format!("cell.{name}.input"), &gate.input));
            out.push((format!("cell.{name}.recurrent"), &gate.recurrent));
            if let Some(b) = &gate.bias {
                out.push((format!("cell.{name}.bias"), b));
            }
        }
        let last = self.head.len() - 1;
        for (l, layer) in self.head.iter().enumerate() {
            let prefix = if l == last { "output".to_string() } else { format!("head{l}") };
            layer.push_named(&prefix, &mut out);
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        for gate in &mut self.gates {
            out.push(&mut gate.input);
            out.push(&mut gate.recurrent);
            if let Some(b) = gate.bias.as_mut() {
                out.push(b);
            }
        }
        for layer in &mut self.head {
            layer.push_mut(&mut out);
        }
        out
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.config.clone())
    }
}

enum Step {
    Rnn { h: Vec<f64> },
    Lstm(LstmState),
    Gru(GruState),
}

impl Step {
    fn h(&self) -> &[f64] {
        match self {
            Step::Rnn { h } => h,
            Step::Lstm(s) => &s.h,
            Step::Gru(s) => &s.h,
        }
    }
}

struct LstmState {
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    c: Vec<f64>,
    /// `tanh(c)`
    tc: Vec<f64>,
    h: Vec<f64>,
}

struct GruState {
    z: Vec<f64>,
    r: Vec<f64>,
    /// `h_prev ⊙ r`
    hr: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
}

fn raw_rnn(p: &RecurrentParams, x: &[f64], h: &[f64]) -> Vec<f64> {
    p.gates[0].pre(x, h).into_iter().map(f64::tanh).collect()
}

fn raw_lstm(p: &RecurrentParams, x: &[f64], h: &[f64], c_prev: &[f64]) -> LstmState {
    let sig = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(sigmoid).collect() };
    let i = sig(p.gates[0].pre(x, h));
    let f = sig(p.gates[1].pre(x, h));
    let o = sig(p.gates[2].pre(x, h));
    let g: Vec<f64> = p.gates[3].pre(x, h).into_iter().map(f64::tanh).collect();
    let c: Vec<f64> = (0..g.len()).map(|k| c_prev[k] * f[k] + g[k] * i[k]).collect();
    let tc: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h = tc.iter().zip(&o).map(|(t, o)| t * o).collect();
    LstmState { i, f, o, g, c, tc, h }
}

fn raw_gru(p: &RecurrentParams, x: &[f64], h: &[f64]) -> GruState {
    let z: Vec<f64> = p.gates[0].pre(x, h).into_iter().map(sigmoid).collect();
    let r: Vec<f64> = p.gates[1].pre(x, h).into_iter().map(sigmoid).collect();
    let hr: Vec<f64> = h.iter().zip(&r).map(|(a, b)| a * b).collect();
    let g: Vec<f64> = p.gates[2].pre(x, &hr).into_iter().map(f64::tanh).collect();
    let h_next = (0..g.len()).map(|k| (1.0 - z[k]) * g[k] + z[k] * h[k]).collect();
    GruState { z, r, hr, g, h: h_next }
}

/// `h' = tanh(U x + W h)`
pub fn rnn_step(params: &RecurrentParams, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
    params.expect_kind(CellKind::Rnn)?;
    params.check_step(x, h_prev)?;
    Ok(raw_rnn(params, x, h_prev))
}

/// One LSTM step; returns `(h', c')`.
pub fn lstm_step(params: &RecurrentParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    params.expect_kind(CellKind::Lstm)?;
    params.check_step(x, h_prev)?;
    if c_prev.len() != params.config.hidden {
        return Err(Error::Dimension(format!("cell state of width {}", c_prev.len())));
    }
    let s = raw_lstm(params, x, h_prev, c_prev);
    Ok((s.h, s.c))
}

pub fn gru_step(params: &RecurrentParams, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
    params.expect_kind(CellKind::Gru)?;
    params.check_step(x, h_prev)?;
    Ok(raw_gru(params, x, h_prev).h)
}

/// Runs the cell over every row of `window` from a zero state, then the head.
pub fn sequence_forecast(params: &RecurrentParams, window: &Matrix) -> Result<Vec<f64>> {
    params.check_window(window)?;
    let hidden = params.config.hidden;
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    for t in 0..window.rows() {
        let x = window.row(t);
        match params.config.kind {
            CellKind::Rnn => h = raw_rnn(params, x, &h),
            CellKind::Lstm => {
                let s = raw_lstm(params, x, &h, &c);
                h = s.h;
                c = s.c;
            }
            CellKind::Gru => h = raw_gru(params, x, &h).h,
        }
    }
    let mut acts = params.head_trace(h);
    Ok(acts.pop().expect("output layer"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros(kind: CellKind) -> RecurrentParams {
        RecurrentParams::zeros(RecurrentConfig::standard(kind, 4, 1, true))
    }

    #[test]
    fn zero_rnn_step() {
        let p = zeros(CellKind::Rnn);
        assert_eq!(rnn_step(&p, &[1.0; 4], &[0.3; 10]).unwrap(), vec![0.0; 10]);
    }

    #[test]
    fn rnn_one_hot_propagation() {
        let mut p = zeros(CellKind::Rnn);
        p.gates[0].recurrent = Matrix::identity(10);
        let mut e1 = vec![0.0; 10];
        e1[0] = 1.0;
        let h = rnn_step(&p, &[0.5; 4], &e1).unwrap();
        assert!((h[0] - 0.76159).abs() < 1e-5);
        assert!(h[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_lstm_step() {
        let p = zeros(CellKind::Lstm);
        let c: Vec<f64> = (0..10).map(|k| k as f64 - 4.5).collect();
        let (h, c2) = lstm_step(&p, &[1.0; 4], &[0.2; 10], &c).unwrap();
        for k in 0..10 {
            assert_eq!(c2[k], 0.5 * c[k]);
            assert_eq!(h[k], 0.5 * (0.5 * c[k]).tanh());
        }
        let (h, c) = lstm_step(&p, &[1.0; 4], &[0.0; 10], &[0.0; 10]).unwrap();
        assert_eq!((h, c), (vec![0.0; 10], vec![0.0; 10]));
    }

    #[test]
    fn zero_gru_step() {
        let p = zeros(CellKind::Gru);
        let h: Vec<f64> = (0..10).map(|k| 0.1 * k as f64 - 0.5).collect();
        let next = gru_step(&p, &[1.0; 4], &h).unwrap();
        for k in 0..10 {
            assert_eq!(next[k], 0.5 * h[k]);
        }
        assert_eq!(gru_step(&p, &[1.0; 4], &[0.0; 10]).unwrap(), vec![0.0; 10]);
    }

    #[test]
    fn step_kind_and_shape_checked() {
        let p = zeros(CellKind::Gru);
        assert!(rnn_step(&p, &[0.0; 4], &[0.0; 10]).is_err());
        assert!(matches!(gru_step(&p, &[0.0; 3], &[0.0; 10]), Err(Error::Dimension(_))));
        assert!(matches!(gru_step(&p, &[0.0; 4], &[0.0; 9]), Err(Error::Dimension(_))));
    }

    #[test]
    fn zero_network_forecasts_zero() {
        for kind in [CellKind::Rnn, CellKind::Lstm, CellKind::Gru] {
            let p = RecurrentParams::zeros(RecurrentConfig::standard(kind, 4, 3, true));
            let window = Matrix::from_vec(5, 4, vec![0.9; 20]).unwrap();
            assert_eq!(sequence_forecast(&p, &window).unwrap(), vec![0.0; 3]);
        }
    }

    #[test]
    fn gate_tensor_names() {
        let p = zeros(CellKind::Lstm);
        let names: Vec<String> = p.named_tensors().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names[0], "cell.input_gate.input");
        assert_eq!(names[3], "cell.forget_gate.input");
        assert!(names.contains(&"output.weight".to_string()));
        assert_eq!(names.len(), p.zeros_like().named_tensors().len());
    }
}
