//! Fitted models and the JSON checkpoint container that stores them.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! saved model reloads bit-for-bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Normalizer, Target};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::neural::{Network, Parameters};
use crate::shallow::{ForestModel, MultiOutput, SvrModel};

pub const CHECKPOINT_FORMAT: &str = "tbm-forecast-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Any trained forecaster, tagged by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnyModel {
    Network(Network),
    Svr(MultiOutput<SvrModel>),
    Rf(MultiOutput<ForestModel>),
}

impl AnyModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AnyModel::Network(n) => n.kind_name(),
            AnyModel::Svr(_) => "svr",
            AnyModel::Rf(_) => "rf",
        }
    }

    pub fn output_width(&self) -> usize {
        match self {
            AnyModel::Network(n) => n.output_width(),
            AnyModel::Svr(m) => m.outputs(),
            AnyModel::Rf(m) => m.outputs(),
        }
    }

    /// Forecast for a `τ × I` window (normalized units).
    pub fn predict(&self, window: &Matrix) -> Result<Vec<f64>> {
        match self {
            AnyModel::Network(n) => n.forecast(window),
            AnyModel::Svr(m) => m.predict(window.as_slice()),
            AnyModel::Rf(m) => m.predict(window.as_slice()),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            AnyModel::Network(n) => {
                let reference = n.zeros_like();
                let expected = reference.named_tensors();
                let got = n.named_tensors();
                if expected.len() != got.len()
                    || expected.iter().zip(&got).any(|((a, x), (b, y))| a != b || x.shape() != y.shape())
                {
                    return Err(Error::Checkpoint("network tensors do not match its configuration".into()));
                }
                if let Some(name) = n.first_non_finite() {
                    return Err(Error::Checkpoint(format!("non-finite values in {name}")));
                }
            }
            AnyModel::Svr(m) => {
                for s in &m.models {
                    if s.coefficients.len() != s.support.rows() {
                        return Err(Error::Checkpoint("SVR coefficient count differs from support size".into()));
                    }
                }
            }
            AnyModel::Rf(m) => {
                for f in &m.models {
                    for t in &f.trees {
                        let ok = !t.nodes.is_empty()
                            && t.nodes.iter().all(|n| match *n {
                                crate::shallow::Node::Split {
                                    feature, left, right, ..
                                } => feature < f.inputs && left < t.nodes.len() && right < t.nodes.len(),
                                crate::shallow::Node::Leaf { .. } => true,
                            });
                        if !ok {
                            return Err(Error::Checkpoint("malformed tree".into()));
                        }
                    }
                }
            }
        }
        if self.output_width() == 0 {
            return Err(Error::Checkpoint("model has no outputs".into()));
        }
        Ok(())
    }
}

/// A model with everything needed to forecast from raw rows: the window
/// width, the per-step feature names in input order, the forecast targets and
/// the normalizer restricted to the input features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub tau: usize,
    pub features: Vec<String>,
    pub targets: Vec<Target>,
    /// Positions of the targets within `features`.
    pub target_positions: Vec<usize>,
    pub normalizer: Option<Normalizer>,
    pub model: AnyModel,
}

impl Checkpoint {
    pub fn new(
        model: AnyModel,
        tau: usize,
        features: Vec<String>,
        targets: Vec<Target>,
        target_positions: Vec<usize>,
        normalizer: Option<Normalizer>,
    ) -> Result<Self> {
        let ck = Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            tau,
            features,
            targets,
            target_positions,
            normalizer,
            model,
        };
        ck.validate()?;
        Ok(ck)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint {:?} version {}",
                self.format, self.version
            )));
        }
        if self.tau == 0 || self.features.is_empty() {
            return Err(Error::Checkpoint("window width and feature list must be non-empty".into()));
        }
        if self.targets.len() != self.model.output_width() || self.target_positions.len() != self.targets.len() {
            return Err(Error::Checkpoint(format!(
                "{} targets for a model with {} outputs",
                self.targets.len(),
                self.model.output_width()
            )));
        }
        if self.target_positions.iter().any(|&p| p >= self.features.len()) {
            return Err(Error::Checkpoint("target position outside the feature list".into()));
        }
        if let Some(n) = &self.normalizer {
            if n.names() != self.features.as_slice() {
                return Err(Error::Checkpoint("normalizer features differ from the model's".into()));
            }
        }
        self.model.check()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        ck.validate()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Forecast in physical units from the last `τ` raw rows (oldest first,
    /// columns in `features` order).
    pub fn forecast_raw(&self, rows: &Matrix) -> Result<Vec<f64>> {
        if rows.shape() != (self.tau, self.features.len()) {
            return Err(Error::Dimension(format!(
                "window of shape {:?}, model expects ({}, {})",
                rows.shape(),
                self.tau,
                self.features.len()
            )));
        }
        let Some(norm) = &self.normalizer else {
            return self.model.predict(rows);
        };
        let mut scaled = rows.clone();
        for r in 0..scaled.rows() {
            for (c, v) in scaled.row_mut(r).iter_mut().enumerate() {
                *v = norm.normalize_value(c, *v);
            }
        }
        let out = self.model.predict(&scaled)?;
        Ok(out
            .iter()
            .zip(&self.target_positions)
            .map(|(v, &p)| norm.denormalize_value(p, *v))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{CellKind, FnnConfig, FnnParams, RecurrentConfig, RecurrentParams};
    use crate::shallow::{fit_rf, fit_svr, ForestParams, SvrParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    fn round_trip(model: AnyModel, tau: usize, width: usize) {
        let outputs = model.output_width();
        let ck = Checkpoint::new(
            model,
            tau,
            names(width),
            Target::ALL[..outputs].to_vec(),
            (0..outputs).collect(),
            None,
        )
        .unwrap();
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
        assert_eq!(back, ck);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = Matrix::from_vec(tau, width, (0..tau * width).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let a = ck.model.predict(&w).unwrap();
        let b = back.model.predict(&w).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn networks_round_trip_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fnn = FnnParams::init(FnnConfig::standard(12, 3, true), &mut rng);
        round_trip(AnyModel::Network(Network::Fnn(fnn)), 3, 4);
        for kind in [CellKind::Rnn, CellKind::Lstm, CellKind::Gru] {
            let p = RecurrentParams::init(RecurrentConfig::standard(kind, 4, 2, true), &mut rng);
            round_trip(AnyModel::Network(Network::Recurrent(p)), 3, 4);
        }
    }

    #[test]
    fn shallow_models_round_trip_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Matrix::from_vec(30, 6, (0..180).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let y: Vec<f64> = (0..30).map(|i| x[(i, 0)] + 0.5 * x[(i, 3)]).collect();
        let svr = fit_svr(&x, &y, &SvrParams::default()).unwrap();
        round_trip(AnyModel::Svr(MultiOutput { models: vec![svr] }), 2, 3);
        let rf = fit_rf(&x, &y, &ForestParams::default()).unwrap();
        round_trip(AnyModel::Rf(MultiOutput { models: vec![rf] }), 2, 3);
    }

    #[test]
    fn corrupted_checkpoints_rejected() {
        let fnn = FnnParams::zeros(FnnConfig::standard(4, 1, true));
        let ck = Checkpoint::new(
            AnyModel::Network(Network::Fnn(fnn)),
            2,
            names(2),
            vec![Target::Torque],
            vec![0],
            None,
        )
        .unwrap();
        let text = ck.to_json().unwrap();
        assert!(matches!(
            Checkpoint::from_json(&text.replacen("\"version\": 1", "\"version\": 9", 1)),
            Err(Error::Checkpoint(_))
        ));
        assert!(matches!(Checkpoint::from_json("{"), Err(Error::Checkpoint(_))));
        let broken = text.replacen("\"rows\": 10", "\"rows\": 11", 1);
        assert!(Checkpoint::from_json(&broken).is_err());
    }
}
