//! The flat `key = value` experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset::{FitScope, SplitSpec, Target};
use crate::error::{Error, Result};
use crate::lasso::{LambdaRule, LambdaSearch, LambdaSetting};
use crate::metrics::Setting;
use crate::neural::Activation;
use crate::optim::{Budget, OptimizerKind, OptimizerState};
use crate::shallow::{ForestParams, SvrParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Svr,
    Rf,
    Fnn,
    Rnn,
    Lstm,
    Gru,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Svr,
        ModelKind::Rf,
        ModelKind::Fnn,
        ModelKind::Rnn,
        ModelKind::Lstm,
        ModelKind::Gru,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Svr => "svr",
            ModelKind::Rf => "rf",
            ModelKind::Fnn => "fnn",
            ModelKind::Rnn => "rnn",
            ModelKind::Lstm => "lstm",
            ModelKind::Gru => "gru",
        }
    }

    pub fn is_recurrent(self) -> bool {
        matches!(self, ModelKind::Rnn | ModelKind::Lstm | ModelKind::Gru)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model {s:?} (expected svr, rf, fnn, rnn, lstm or gru)")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    Csv(PathBuf),
    Synthetic,
}

/// Where the lasso settings take their feature sets from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionSource {
    /// Per-target lasso on the training rows.
    Fitted,
    /// The fixed reference coefficient table.
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportSpace {
    Physical,
    Normalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub synthetic_seed: u64,
    pub synthetic_length: usize,
    pub synthetic_features: usize,
    pub synthetic_support: usize,
    pub synthetic_noise_scale: f64,

    pub tau: usize,
    pub train_end: usize,
    pub total: usize,
    pub test_context: bool,
    pub normalization: FitScope,

    pub settings: Vec<Setting>,
    pub models: Vec<ModelKind>,
    pub targets: Vec<Target>,
    pub seed: u64,
    pub out: PathBuf,
    pub plots: bool,
    pub save_models: bool,
    pub report_space: ReportSpace,
    pub workers: usize,

    pub paper_exact: bool,
    pub bias: bool,
    pub hidden: usize,
    pub fnn_optimizer: OptimizerKind,
    pub fnn_learning_rate: f64,
    pub fnn_budget: Budget,
    pub recurrent_optimizer: OptimizerKind,
    pub recurrent_learning_rate: f64,
    pub recurrent_budget: Budget,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
    pub eval_every: usize,
    pub clip: Option<f64>,

    pub svr_c: f64,
    pub svr_epsilon: f64,
    pub svr_gamma: Option<f64>,
    pub svr_tol: f64,
    pub svr_max_iter: usize,

    pub rf_trees: usize,
    pub rf_max_depth: usize,
    pub rf_min_node: usize,
    pub rf_max_features: Option<usize>,

    pub lasso_selection: SelectionSource,
    pub lasso_lambda: Option<f64>,
    pub lasso_rule: LambdaRule,
    pub lasso_grid: usize,
    pub lasso_min_ratio: f64,
    pub lasso_validation: f64,
    pub lasso_threshold: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let search = LambdaSearch::default();
        let svr = SvrParams::default();
        let rf = ForestParams::default();
        Self {
            data: DataSource::Synthetic,
            synthetic_seed: 0,
            synthetic_length: 3000,
            synthetic_features: 44,
            synthetic_support: crate::synthetic::DEFAULT_SUPPORT,
            synthetic_noise_scale: 1.0 / crate::synthetic::DEFAULT_SNR.sqrt(),
            tau: 5,
            train_end: 2500,
            total: 3000,
            test_context: true,
            normalization: FitScope::TrainOnly,
            settings: vec![Setting::SingleWithoutLasso],
            models: vec![ModelKind::Gru],
            targets: Target::ALL.to_vec(),
            seed: 0,
            out: PathBuf::from("results"),
            plots: true,
            save_models: false,
            report_space: ReportSpace::Physical,
            workers: 1,
            paper_exact: false,
            bias: true,
            hidden: 10,
            fnn_optimizer: OptimizerKind::Sgd,
            fnn_learning_rate: 0.01,
            fnn_budget: Budget::Epochs(100),
            recurrent_optimizer: OptimizerKind::RmsProp,
            recurrent_learning_rate: 0.0005,
            recurrent_budget: Budget::Updates(30_000),
            rmsprop_decay: 0.9,
            rmsprop_epsilon: 1e-8,
            eval_every: 1000,
            clip: None,
            svr_c: svr.c,
            svr_epsilon: svr.epsilon,
            svr_gamma: svr.gamma,
            svr_tol: svr.tol,
            svr_max_iter: svr.max_iter,
            rf_trees: rf.trees,
            rf_max_depth: rf.max_depth,
            rf_min_node: rf.min_node_size,
            rf_max_features: rf.max_features,
            lasso_selection: SelectionSource::Fitted,
            lasso_lambda: None,
            lasso_rule: search.rule,
            lasso_grid: search.grid_size,
            lasso_min_ratio: search.min_ratio,
            lasso_validation: search.validation_fraction,
            lasso_threshold: 1e-3,
        }
    }
}

/// Every accepted key with a one-line description.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("data", "input CSV path, or `synthetic` for the generated benchmark"),
    ("synthetic_seed", "seed of the synthetic structure and noise"),
    ("synthetic_length", "rows of the synthetic series"),
    ("synthetic_features", "columns of the synthetic series (44 uses the TBM schema)"),
    ("synthetic_support", "true lagged drivers per target"),
    ("synthetic_noise_scale", "target noise std relative to the noiseless signal std"),
    ("tau", "window width"),
    ("train_end", "first row whose windows are test windows"),
    ("total", "rows used from the start of the series"),
    ("test_context", "test windows may reach back into training rows"),
    ("normalization", "train_only | whole_series"),
    ("setting", "comma list of swol, swl, mwol, mwl, or all"),
    ("model", "comma list of svr, rf, fnn, rnn, lstm, gru, or all"),
    ("target", "comma list of torque, advance_rate, thrust, or all (single-output settings)"),
    ("seed", "seed for initialization, sampling and forests"),
    ("out", "output directory"),
    ("plots", "write actual-vs-predicted SVG plots"),
    ("save_models", "write a JSON checkpoint per cell"),
    ("report_space", "physical | normalized units for metrics and predictions"),
    ("workers", "cells run concurrently"),
    ("paper_exact", "whole-series normalization, no biases, sigmoid activations everywhere"),
    ("bias", "bias terms in every network layer"),
    ("hidden", "recurrent units and width of each hidden/head layer"),
    ("fnn_optimizer", "sgd | rmsprop"),
    ("fnn_learning_rate", "FNN step size"),
    ("fnn_budget", "FNN training length, `<n> epochs` or `<n> updates`"),
    ("recurrent_optimizer", "sgd | rmsprop"),
    ("recurrent_learning_rate", "RNN/LSTM/GRU step size"),
    ("recurrent_budget", "recurrent training length, `<n> epochs` or `<n> updates`"),
    ("rmsprop_decay", "RMSprop decay rate"),
    ("rmsprop_epsilon", "RMSprop denominator offset"),
    ("eval_every", "updates between loss-history entries"),
    ("clip", "global gradient-norm cap, or none"),
    ("svr_c", "SVR box constraint"),
    ("svr_epsilon", "SVR tube half-width"),
    ("svr_gamma", "RBF width, or scale for 1/(d*Var(X))"),
    ("svr_tol", "SMO stopping tolerance on the KKT gap"),
    ("svr_max_iter", "SMO iteration cap"),
    ("rf_trees", "trees per forest"),
    ("rf_max_depth", "maximum tree depth"),
    ("rf_min_node", "nodes smaller than this become leaves"),
    ("rf_max_features", "features tried per split, or auto for ceil(d/3)"),
    ("lasso_selection", "fitted | reference"),
    ("lasso_lambda", "fixed lambda, or auto for validation"),
    ("lasso_rule", "one_se | min (validation-curve rule)"),
    ("lasso_grid", "lambda grid size"),
    ("lasso_min_ratio", "smallest grid lambda as a fraction of lambda_max"),
    ("lasso_validation", "trailing fraction of training rows held out for lambda"),
    ("lasso_threshold", "standardized |coefficient| needed to keep a feature"),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid value {value:?} for {key}; expected true or false"))),
    }
}

fn parse_optional<T: FromStr>(key: &str, value: &str, none: &str) -> Result<Option<T>> {
    if value == none {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_list<T: FromStr<Err = Error> + Copy>(value: &str, all: &[T]) -> Result<Vec<T>> {
    if value == "all" {
        return Ok(all.to_vec());
    }
    let mut out: Vec<T> = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        out.push(part.parse()?);
    }
    if out.is_empty() {
        return Err(Error::Config("empty list".into()));
    }
    Ok(out)
}

fn parse_optimizer(key: &str, value: &str) -> Result<OptimizerKind> {
    match value {
        "sgd" => Ok(OptimizerKind::Sgd),
        "rmsprop" => Ok(OptimizerKind::RmsProp),
        _ => Err(Error::Config(format!("invalid value {value:?} for {key}; expected sgd or rmsprop"))),
    }
}

fn render_budget(b: Budget) -> String {
    match b {
        Budget::Epochs(n) => format!("{n} epochs"),
        Budget::Updates(n) => format!("{n} updates"),
    }
}

fn render_list<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn render_optional<T: fmt::Display>(v: &Option<T>, none: &str) -> String {
    v.as_ref().map_or_else(|| none.to_string(), ToString::to_string)
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "data" => {
                self.data = if value == "synthetic" {
                    DataSource::Synthetic
                } else {
                    DataSource::Csv(PathBuf::from(value))
                }
            }
            "synthetic_seed" => self.synthetic_seed = parse(key, value)?,
            "synthetic_length" => self.synthetic_length = parse(key, value)?,
            "synthetic_features" => self.synthetic_features = parse(key, value)?,
            "synthetic_support" => self.synthetic_support = parse(key, value)?,
            "synthetic_noise_scale" => self.synthetic_noise_scale = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "train_end" => self.train_end = parse(key, value)?,
            "total" => self.total = parse(key, value)?,
            "test_context" => self.test_context = parse_bool(key, value)?,
            "normalization" => self.normalization = value.parse()?,
            "setting" => self.settings = parse_list(value, &Setting::ALL)?,
            "model" => self.models = parse_list(value, &ModelKind::ALL)?,
            "target" => self.targets = parse_list(value, &Target::ALL)?,
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "plots" => self.plots = parse_bool(key, value)?,
            "save_models" => self.save_models = parse_bool(key, value)?,
            "report_space" => {
                self.report_space = match value {
                    "physical" => ReportSpace::Physical,
                    "normalized" => ReportSpace::Normalized,
                    _ => return Err(Error::Config(format!("invalid value {value:?} for {key}"))),
                }
            }
            "workers" => self.workers = parse(key, value)?,
            "paper_exact" => self.paper_exact = parse_bool(key, value)?,
            "bias" => self.bias = parse_bool(key, value)?,
            "hidden" => self.hidden = parse(key, value)?,
            "fnn_optimizer" => self.fnn_optimizer = parse_optimizer(key, value)?,
            "fnn_learning_rate" => self.fnn_learning_rate = parse(key, value)?,
            "fnn_budget" => self.fnn_budget = value.parse()?,
            "recurrent_optimizer" => self.recurrent_optimizer = parse_optimizer(key, value)?,
            "recurrent_learning_rate" => self.recurrent_learning_rate = parse(key, value)?,
            "recurrent_budget" => self.recurrent_budget = value.parse()?,
            "rmsprop_decay" => self.rmsprop_decay = parse(key, value)?,
            "rmsprop_epsilon" => self.rmsprop_epsilon = parse(key, value)?,
            "eval_every" => self.eval_every = parse(key, value)?,
            "clip" => self.clip = parse_optional(key, value, "none")?,
            "svr_c" => self.svr_c = parse(key, value)?,
            "svr_epsilon" => self.svr_epsilon = parse(key, value)?,
            "svr_gamma" => self.svr_gamma = parse_optional(key, value, "scale")?,
            "svr_tol" => self.svr_tol = parse(key, value)?,
            "svr_max_iter" => self.svr_max_iter = parse(key, value)?,
            "rf_trees" => self.rf_trees = parse(key, value)?,
            "rf_max_depth" => self.rf_max_depth = parse(key, value)?,
            "rf_min_node" => self.rf_min_node = parse(key, value)?,
            "rf_max_features" => self.rf_max_features = parse_optional(key, value, "auto")?,
            "lasso_selection" => {
                self.lasso_selection = match value {
                    "fitted" => SelectionSource::Fitted,
                    "reference" => SelectionSource::Reference,
                    _ => return Err(Error::Config(format!("invalid value {value:?} for {key}"))),
                }
            }
            "lasso_lambda" => self.lasso_lambda = parse_optional(key, value, "auto")?,
            "lasso_rule" => {
                self.lasso_rule = match value {
                    "one_se" => LambdaRule::OneStandardError,
                    "min" => LambdaRule::MinValidation,
                    _ => return Err(Error::Config(format!("invalid value {value:?} for {key}"))),
                }
            }
            "lasso_grid" => self.lasso_grid = parse(key, value)?,
            "lasso_min_ratio" => self.lasso_min_ratio = parse(key, value)?,
            "lasso_validation" => self.lasso_validation = parse(key, value)?,
            "lasso_threshold" => self.lasso_threshold = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Every key with its current value, in [`CONFIG_KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        CONFIG_KEYS
            .iter()
            .map(|&(key, _)| {
                let value = match key {
                    "data" => match &self.data {
                        DataSource::Synthetic => "synthetic".to_string(),
                        DataSource::Csv(p) => p.display().to_string(),
                    },
                    "synthetic_seed" => self.synthetic_seed.to_string(),
                    "synthetic_length" => self.synthetic_length.to_string(),
                    "synthetic_features" => self.synthetic_features.to_string(),
                    "synthetic_support" => self.synthetic_support.to_string(),
                    "synthetic_noise_scale" => self.synthetic_noise_scale.to_string(),
                    "tau" => self.tau.to_string(),
                    "train_end" => self.train_end.to_string(),
                    "total" => self.total.to_string(),
                    "test_context" => self.test_context.to_string(),
                    "normalization" => match self.normalization {
                        FitScope::TrainOnly => "train_only".to_string(),
                        FitScope::WholeSeries => "whole_series".to_string(),
                    },
                    "setting" => render_list(&self.settings),
                    "model" => render_list(&self.models),
                    "target" => render_list(&self.targets),
                    "seed" => self.seed.to_string(),
                    "out" => self.out.display().to_string(),
                    "plots" => self.plots.to_string(),
                    "save_models" => self.save_models.to_string(),
                    "report_space" => match self.report_space {
                        ReportSpace::Physical => "physical".to_string(),
                        ReportSpace::Normalized => "normalized".to_string(),
                    },
                    "workers" => self.workers.to_string(),
                    "paper_exact" => self.paper_exact.to_string(),
                    "bias" => self.bias.to_string(),
                    "hidden" => self.hidden.to_string(),
                    "fnn_optimizer" => self.fnn_optimizer.to_string(),
                    "fnn_learning_rate" => self.fnn_learning_rate.to_string(),
                    "fnn_budget" => render_budget(self.fnn_budget),
                    "recurrent_optimizer" => self.recurrent_optimizer.to_string(),
                    "recurrent_learning_rate" => self.recurrent_learning_rate.to_string(),
                    "recurrent_budget" => render_budget(self.recurrent_budget),
                    "rmsprop_decay" => self.rmsprop_decay.to_string(),
                    "rmsprop_epsilon" => self.rmsprop_epsilon.to_string(),
                    "eval_every" => self.eval_every.to_string(),
                    "clip" => render_optional(&self.clip, "none"),
                    "svr_c" => self.svr_c.to_string(),
                    "svr_epsilon" => self.svr_epsilon.to_string(),
                    "svr_gamma" => render_optional(&self.svr_gamma, "scale"),
                    "svr_tol" => self.svr_tol.to_string(),
                    "svr_max_iter" => self.svr_max_iter.to_string(),
                    "rf_trees" => self.rf_trees.to_string(),
                    "rf_max_depth" => self.rf_max_depth.to_string(),
                    "rf_min_node" => self.rf_min_node.to_string(),
                    "rf_max_features" => render_optional(&self.rf_max_features, "auto"),
                    "lasso_selection" => match self.lasso_selection {
                        SelectionSource::Fitted => "fitted".to_string(),
                        SelectionSource::Reference => "reference".to_string(),
                    },
                    "lasso_lambda" => render_optional(&self.lasso_lambda, "auto"),
                    "lasso_rule" => match self.lasso_rule {
                        LambdaRule::OneStandardError => "one_se".to_string(),
                        LambdaRule::MinValidation => "min".to_string(),
                    },
                    "lasso_grid" => self.lasso_grid.to_string(),
                    "lasso_min_ratio" => self.lasso_min_ratio.to_string(),
                    "lasso_validation" => self.lasso_validation.to_string(),
                    "lasso_threshold" => self.lasso_threshold.to_string(),
                    other => unreachable!("key {other} missing from entries"),
                };
                (key, value)
            })
            .collect()
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment;
    /// unknown or repeated keys are errors.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut config = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(Error::Config(format!("line {}: {key} given twice", n + 1)));
            }
            config
                .set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip_prefix(&e))))?;
            seen.push(key.to_string());
        }
        Ok(config)
    }

    /// Reads a config file; a relative `data` path is taken relative to the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse_str(&text)?;
        // relative paths written in the file are relative to the file
        let Some(dir) = path.parent() else {
            return Ok(config);
        };
        if let DataSource::Csv(p) = &config.data {
            if p.is_relative() {
                config.data = DataSource::Csv(dir.join(p));
            }
        }
        let sets_out = text.lines().any(|l| {
            l.split('#')
                .next()
                .and_then(|l| l.split_once('='))
                .is_some_and(|(k, _)| k.trim() == "out")
        });
        if sets_out && config.out.is_relative() {
            config.out = dir.join(&config.out);
        }
        Ok(config)
    }

    /// The config as a file that [`ExperimentConfig::parse_str`] reads back
    /// unchanged.
    pub fn render(&self) -> String {
        let width = CONFIG_KEYS.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for ((key, value), (_, doc)) in self.entries().into_iter().zip(CONFIG_KEYS) {
            out.push_str(&format!("# {doc}\n{key:width$} = {value}\n"));
        }
        out
    }

    pub fn split(&self) -> SplitSpec {
        SplitSpec {
            train_end: self.train_end,
            total: self.total,
            context_across_boundary: self.test_context,
        }
    }

    pub fn effective_normalization(&self) -> FitScope {
        if self.paper_exact {
            FitScope::WholeSeries
        } else {
            self.normalization
        }
    }

    pub fn effective_bias(&self) -> bool {
        self.bias && !self.paper_exact
    }

    /// Activations of the recurrent models' head layers and output.
    pub fn recurrent_activations(&self) -> (Activation, Activation) {
        if self.paper_exact {
            (Activation::Sigmoid, Activation::Sigmoid)
        } else {
            (Activation::Tanh, Activation::Identity)
        }
    }

    pub fn svr_params(&self) -> SvrParams {
        SvrParams {
            c: self.svr_c,
            epsilon: self.svr_epsilon,
            gamma: self.svr_gamma,
            tol: self.svr_tol,
            max_iter: self.svr_max_iter,
        }
    }

    pub fn forest_params(&self) -> ForestParams {
        ForestParams {
            trees: self.rf_trees,
            max_depth: self.rf_max_depth,
            min_node_size: self.rf_min_node,
            max_features: self.rf_max_features,
            seed: self.seed,
        }
    }

    pub fn lambda_setting(&self) -> LambdaSetting {
        match self.lasso_lambda {
            Some(l) => LambdaSetting::Fixed(l),
            None => LambdaSetting::Validated(LambdaSearch {
                grid_size: self.lasso_grid,
                min_ratio: self.lasso_min_ratio,
                validation_fraction: self.lasso_validation,
                rule: self.lasso_rule,
                ..LambdaSearch::default()
            }),
        }
    }

    pub fn optimizer(&self, model: ModelKind) -> OptimizerState {
        let (kind, lr) = if model.is_recurrent() {
            (self.recurrent_optimizer, self.recurrent_learning_rate)
        } else {
            (self.fnn_optimizer, self.fnn_learning_rate)
        };
        let mut state = match kind {
            OptimizerKind::Sgd => OptimizerState::sgd(lr),
            OptimizerKind::RmsProp => OptimizerState::rmsprop(lr),
        };
        state.decay = self.rmsprop_decay;
        state.epsilon = self.rmsprop_epsilon;
        state
    }

    /// Checks everything that can be checked without reading data.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.tau == 0 {
            return fail("tau must be at least 1".into());
        }
        if self.train_end == 0 || self.train_end >= self.total {
            return fail(format!(
                "split requires 0 < train_end ({}) < total ({})",
                self.train_end, self.total
            ));
        }
        if self.total < self.tau + 1 {
            return fail(format!("total ({}) leaves no window of width {}", self.total, self.tau));
        }
        if self.settings.is_empty() || self.models.is_empty() {
            return fail("at least one setting and one model are required".into());
        }
        if self.targets.is_empty() && self.settings.iter().any(|s| !s.is_multi_output()) {
            return fail("single-output settings need at least one target".into());
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if self.hidden == 0 {
            return fail("hidden must be at least 1".into());
        }
        if self.eval_every == 0 {
            return fail("eval_every must be at least 1".into());
        }
        if let Some(c) = self.clip {
            if !(c > 0.0) {
                return fail(format!("clip {c} must be > 0"));
            }
        }
        for m in [ModelKind::Fnn, ModelKind::Gru] {
            self.optimizer(m).validate()?;
        }
        if !(self.svr_c > 0.0) || !(self.svr_epsilon >= 0.0) || !(self.svr_tol > 0.0) {
            return fail("SVR needs svr_c > 0, svr_epsilon >= 0 and svr_tol > 0".into());
        }
        if let Some(g) = self.svr_gamma {
            if !(g > 0.0) {
                return fail(format!("svr_gamma {g} must be > 0"));
            }
        }
        if self.rf_trees == 0 {
            return fail("rf_trees must be at least 1".into());
        }
        if self.rf_max_features == Some(0) {
            return fail("rf_max_features must be at least 1".into());
        }
        if !(self.lasso_threshold >= 0.0) {
            return fail("lasso_threshold must be >= 0".into());
        }
        if let Some(l) = self.lasso_lambda {
            if !(l >= 0.0) {
                return fail(format!("lasso_lambda {l} must be >= 0"));
            }
        }
        if self.lasso_grid == 0 || !(self.lasso_min_ratio > 0.0 && self.lasso_min_ratio <= 1.0) {
            return fail("lasso_grid must be >= 1 and lasso_min_ratio in (0, 1]".into());
        }
        if !(self.lasso_validation > 0.0 && self.lasso_validation < 1.0) {
            return fail("lasso_validation must lie in (0, 1)".into());
        }
        if let DataSource::Synthetic = self.data {
            if self.synthetic_length < self.total {
                return fail(format!(
                    "synthetic_length ({}) is shorter than total ({})",
                    self.synthetic_length, self.total
                ));
            }
            if !(self.synthetic_noise_scale >= 0.0) {
                return fail("synthetic_noise_scale must be >= 0".into());
            }
        }
        Ok(())
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}
