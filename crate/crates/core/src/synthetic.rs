//! Synthetic TBM-like series with a known sparse lagged structure, and the
//! persistence forecaster used as a skill yardstick.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureSchema, SeriesTable, Target, WindowedSample, TBM_FEATURES};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Order-2 autoregression `x_t = a₁ x_{t−1} + a₂ x_{t−2} + σ e_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArProcess {
    pub a1: f64,
    pub a2: f64,
    pub sigma: f64,
}

impl ArProcess {
    /// Both characteristic roots strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1 + self.a2 < 1.0 && self.a2 - self.a1 < 1.0
    }

    /// Largest modulus of the roots of `z² − a₁ z − a₂`.
    pub fn spectral_radius(&self) -> f64 {
        let disc = self.a1 * self.a1 + 4.0 * self.a2;
        if disc >= 0.0 {
            let s = disc.sqrt();
            ((self.a1 + s) / 2.0).abs().max(((self.a1 - s) / 2.0).abs())
        } else {
            (-self.a2).sqrt()
        }
    }
}

/// `target_t = Σ coef · driver_{t−1} + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSupport {
    pub target: Target,
    pub column: usize,
    /// `(driver column, coefficient)`, ascending by column.
    pub terms: Vec<(usize, f64)>,
}

impl TargetSupport {
    pub fn columns(&self) -> Vec<usize> {
        self.terms.iter().map(|&(c, _)| c).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub names: Vec<String>,
    pub length: usize,
    /// Indexed by column; `None` for target columns.
    pub drivers: Vec<Option<ArProcess>>,
    pub supports: Vec<TargetSupport>,
    /// Target noise standard deviation relative to the standard deviation of
    /// the noiseless target signal.
    pub noise_scale: f64,
    pub burn_in: usize,
    pub seed: u64,
}

/// Default variance ratio of target signal to target noise.
pub const DEFAULT_SNR: f64 = 10.0;
pub const DEFAULT_SUPPORT: usize = 5;

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self::random(TBM_FEATURES.len(), 3000, DEFAULT_SUPPORT, 0).expect("default synthetic spec is valid")
    }
}

impl SyntheticSpec {
    /// Draws a random stable structure from `seed`. With 44 features the
    /// columns carry the TBM feature names and target positions; otherwise
    /// columns are named `x0, x1, …` with the three targets first.
    pub fn random(features: usize, length: usize, support: usize, seed: u64) -> Result<Self> {
        let (names, targets) = if features == TBM_FEATURES.len() {
            let schema = FeatureSchema::tbm();
            (schema.names().to_vec(), schema.targets().to_vec())
        } else {
            let names = (0..features).map(|j| format!("x{j}")).collect();
            (names, Target::ALL.iter().enumerate().map(|(i, &t)| (t, i)).collect())
        };
        let driver_columns: Vec<usize> = (0..features).filter(|c| !targets.iter().any(|&(_, t)| t == *c)).collect();
        if support == 0 || support > driver_columns.len() {
            return Err(Error::Config(format!(
                "support size {support} needs between 1 and {} driver columns",
                driver_columns.len()
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut drivers = vec![None; features];
        for &c in &driver_columns {
            // complex pole pair r·e^{±iθ}
            let r: f64 = rng.random_range(0.4..0.85);
            let theta: f64 = rng.random_range(std::f64::consts::FRAC_PI_6..std::f64::consts::FRAC_PI_2);
            drivers[c] = Some(ArProcess {
                a1: 2.0 * r * theta.cos(),
                a2: -r * r,
                sigma: rng.random_range(0.5..2.0),
            });
        }
        let mut supports = Vec::new();
        for &(target, column) in &targets {
            let mut picked: Vec<usize> = sample(&mut rng, driver_columns.len(), support)
                .into_iter()
                .map(|i| driver_columns[i])
                .collect();
            picked.sort_unstable();
            let terms = picked
                .into_iter()
                .map(|c| {
                    let magnitude: f64 = rng.random_range(0.5..1.5);
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    (c, sign * magnitude)
                })
                .collect();
            supports.push(TargetSupport { target, column, terms });
        }
        let spec = Self {
            names,
            length,
            drivers,
            supports,
            noise_scale: 1.0 / DEFAULT_SNR.sqrt(),
            burn_in: 200,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn features(&self) -> usize {
        self.names.len()
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        FeatureSchema::new(
            self.names.clone(),
            self.supports.iter().map(|s| (s.target, s.column)).collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 3 {
            return Err(Error::Config(format!("series length {} is too short", self.length)));
        }
        if self.drivers.len() != self.names.len() {
            return Err(Error::Config(format!(
                "{} driver slots for {} features",
                self.drivers.len(),
                self.names.len()
            )));
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return Err(Error::Config(format!("noise scale {} must be >= 0", self.noise_scale)));
        }
        for (c, d) in self.drivers.iter().enumerate() {
            if let Some(ar) = d {
                if !ar.is_stable() {
                    return Err(Error::Config(format!(
                        "driver {} has an unstable AR(2) kernel (a1 = {}, a2 = {})",
                        self.names[c], ar.a1, ar.a2
                    )));
                }
                if !(ar.sigma >= 0.0) {
                    return Err(Error::Config(format!("driver {} has negative noise", self.names[c])));
                }
            }
        }
        for s in &self.supports {
            if self.drivers.get(s.column).is_none_or(|d| d.is_some()) {
                return Err(Error::Config(format!("target column {} is not a target slot", s.column)));
            }
            for &(c, _) in &s.terms {
                if self.drivers.get(c).is_none_or(|d| d.is_none()) {
                    return Err(Error::Config(format!("support column {c} of {} is not a driver", s.target)));
                }
            }
        }
        self.schema()?;
        Ok(())
    }
}

/// The generated series plus the structure that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticSeries {
    pub table: SeriesTable,
    pub supports: Vec<TargetSupport>,
    /// Constant added to each column after generation to keep values positive.
    pub offsets: Vec<f64>,
}

impl SyntheticSeries {
    pub fn true_support(&self, target: Target) -> Option<&TargetSupport> {
        self.supports.iter().find(|s| s.target == target)
    }
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Deterministic in the spec (including its seed).
pub fn generate_series(spec: &SyntheticSpec) -> Result<SyntheticSeries> {
    spec.validate()?;
    let (t_len, width) = (spec.length, spec.features());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x005e_ed5e_71e5_u64);
    let mut values = Matrix::zeros(t_len, width);

    for (c, driver) in spec.drivers.iter().enumerate() {
        let Some(ar) = driver else { continue };
        let (mut prev2, mut prev1) = (0.0, 0.0);
        for step in 0..spec.burn_in + t_len {
            let e: f64 = rng.sample(StandardNormal);
            let x = ar.a1 * prev1 + ar.a2 * prev2 + ar.sigma * e;
            prev2 = prev1;
            prev1 = x;
            if step >= spec.burn_in {
                values[(step - spec.burn_in, c)] = x;
            }
        }
    }

    for s in &spec.supports {
        // row 0 has no lagged drivers inside the table; use its own burn-in value 0
        let mut signal = vec![0.0; t_len];
        for (t, out) in signal.iter_mut().enumerate().skip(1) {
            *out = s.terms.iter().map(|&(c, b)| b * values[(t - 1, c)]).sum();
        }
        let scale = spec.noise_scale * std_dev(&signal[1..]);
        for (t, v) in signal.iter().enumerate() {
            let e: f64 = rng.sample(StandardNormal);
            values[(t, s.column)] = v + scale * e;
        }
    }

    let mut offsets = vec![0.0; width];
    for (c, off) in offsets.iter_mut().enumerate() {
        let col = values.col(c);
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        *off = 1.0 + std_dev(&col) - min;
        for t in 0..t_len {
            values[(t, c)] += *off;
        }
    }

    let table = SeriesTable::new(values, spec.schema()?)?;
    Ok(SyntheticSeries {
        table,
        supports: spec.supports.clone(),
        offsets,
    })
}

/// `ŷ_{t+1} = y_t`: the last row of each window at `positions`, the
/// target columns within the window's feature set.
pub fn persistence_baseline(windows: &[WindowedSample], positions: &[usize]) -> Result<Vec<Vec<f64>>> {
    if windows.is_empty() {
        return Err(Error::EmptyInput("no windows for the persistence baseline".into()));
    }
    windows
        .iter()
        .map(|w| {
            let last = w.inputs.row(w.inputs.rows() - 1);
            positions
                .iter()
                .map(|&p| {
                    last.get(p).copied().ok_or(Error::Index {
                        index: p,
                        len: last.len(),
                    })
                })
                .collect()
        })
        .collect()
}
