//! Shallow baselines over flattened windows: RBF support vector regression
//! and random-forest regression, plus the one-model-per-output wrapper that
//! lets either serve a multi-output setting.

pub mod forest;
pub mod svr;

pub use forest::{fit_rf, ForestModel, ForestParams, Node, Tree};
pub use svr::{fit_svr, rbf, scale_gamma, SvrModel, SvrParams};

use serde::{Deserialize, Serialize};

use crate::dataset::WindowedSample;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Stacks flattened windows into an `N × (τ·I)` design and splits the targets
/// into one column per output.
pub fn design_from_windows(samples: &[WindowedSample]) -> Result<(Matrix, Vec<Vec<f64>>)> {
    let first = samples
        .first()
        .ok_or_else(|| Error::EmptyInput("no windows".into()))?;
    let width = first.flattened().len();
    let outputs = first.target.len();
    let mut data = Vec::with_capacity(samples.len() * width);
    let mut targets = vec![Vec::with_capacity(samples.len()); outputs];
    for s in samples {
        if s.flattened().len() != width || s.target.len() != outputs {
            return Err(Error::Dimension("windows of differing shapes".into()));
        }
        data.extend_from_slice(s.flattened());
        for (col, v) in targets.iter_mut().zip(&s.target) {
            col.push(*v);
        }
    }
    Ok((Matrix::from_vec(samples.len(), width, data)?, targets))
}

/// A scalar regressor over flattened windows.
pub trait Regressor {
    fn predict(&self, x: &[f64]) -> Result<f64>;
}

impl Regressor for SvrModel {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        SvrModel::predict(self, x)
    }
}

impl Regressor for ForestModel {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        ForestModel::predict(self, x)
    }
}

/// Independent single-target models, one per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiOutput<M> {
    pub models: Vec<M>,
}

impl<M: Regressor> MultiOutput<M> {
    /// Fits one model per target column of `samples` with `fit`.
    pub fn fit<F>(samples: &[WindowedSample], mut fit: F) -> Result<Self>
    where
        F: FnMut(&Matrix, &[f64]) -> Result<M>,
    {
        let (x, targets) = design_from_windows(samples)?;
        let models = targets.iter().map(|y| fit(&x, y)).collect::<Result<Vec<_>>>()?;
        Ok(Self { models })
    }

    pub fn outputs(&self) -> usize {
        self.models.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.models.iter().map(|m| m.predict(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_output_fits_each_column() {
        let samples: Vec<WindowedSample> = (0..12)
            .map(|k| {
                let x = k as f64 / 12.0;
                WindowedSample {
                    inputs: Matrix::from_vec(2, 1, vec![x, x * x]).unwrap(),
                    target: vec![x, 1.0 - x],
                    anchor: k,
                }
            })
            .collect();
        let m = MultiOutput::fit(&samples, |x, y| fit_rf(x, y, &ForestParams::default())).unwrap();
        assert_eq!(m.outputs(), 2);
        let p = m.predict(samples[3].flattened()).unwrap();
        assert_eq!(p.len(), 2);
        let single = fit_rf(
            &design_from_windows(&samples).unwrap().0,
            &samples.iter().map(|s| s.target[1]).collect::<Vec<_>>(),
            &ForestParams::default(),
        )
        .unwrap();
        assert_eq!(p[1], single.predict(samples[3].flattened()).unwrap());
    }
}
